// Fits a GP to 20 noisy CLRGB readings from the simulator and asks for the
// LED setting that gives 10000 counts on 630, 515 and 445 nm.

#include <cstdio>
#include <random>

#include "helios/learn/inverse_design.hpp"
#include "helios/learn/metrics.hpp"
#include "helios/sim/calibration.hpp"

using namespace helios;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 42;
  const ResponseModel m = default_model();
  NoiseStream noise(seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 0.8);
  const Channel out[3] = {Channel::W630, Channel::W515, Channel::W445};

  Eigen::MatrixXd X(20, 3), Y(20, 3);
  for (int i = 0; i < 20; ++i) {
    for (int k = 0; k < 3; ++k) X(i, k) = u(rng);
    const Reading r = measure(m, RgbSetting(X(i, 0), X(i, 1), X(i, 2)), Instant{}, noise);
    for (int k = 0; k < 3; ++k) Y(i, k) = r[out[k]];
  }
  const auto split = learn::train_test_split(X, Y, 0.2, seed);
  const auto scored = learn::GpModel::fit(split.X_train, split.Y_train);
  std::printf("held-out R^2 %.6f\n", learn::r2_score(split.Y_test, scored.predict_mean(split.X_test)));

  const auto gp = learn::GpModel::fit(X, Y);
  const auto res = learn::inverse_design(gp, Eigen::Vector3d(10000, 10000, 10000));
  const auto v = res.setting.values();
  std::printf("setting R=%.4f G=%.4f B=%.4f (%d iterations)\n", v[0], v[1], v[2], res.iterations);
  std::printf("predicted %.0f / %.0f / %.0f  +- %.0f / %.0f / %.0f\n", res.predicted(0), res.predicted(1), res.predicted(2),
              res.predicted_std(0), res.predicted_std(1), res.predicted_std(2));
  std::printf("repeats:\n");
  for (int i = 0; i < 5; ++i) {
    const Reading r = measure(m, res.setting, Instant{}, noise);
    std::printf("  %d %d %d\n", r[out[0]], r[out[1]], r[out[2]]);
  }
}
