#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "helios/learn/gp.hpp"
#include "helios/learn/nelder_mead.hpp"
#include "helios/sim/rgb_setting.hpp"

namespace helios::learn {

struct InverseDesignResult {
  RgbSetting setting;               // optimizer result clamped into [0,1]^3
  std::array<double, 3> unclamped{};
  Eigen::VectorXd predicted;        // model mean at the clamped setting
  Eigen::VectorXd predicted_std;
  double objective = 0.0;           // at the clamped setting
  int iterations = 0;
  bool converged = false;
  bool clamped = false;             // optimizer left the unit cube
};

// Minimizes Σ (predicted mean − target)² over the three LED inputs.
inline InverseDesignResult inverse_design(const GpModel& model, const Eigen::VectorXd& target,
                                          std::array<double, 3> x0 = {0.3, 0.3, 0.3},
                                          const NelderMeadOptions& options = {}) {
  if (model.input_dim() != 3) throw std::invalid_argument("inverse_design: model must take 3 inputs");
  if (target.size() != model.output_dim()) throw std::invalid_argument("inverse_design: target size != model outputs");

  auto loss_at = [&](const Eigen::Vector3d& x) { return (model.predict(x).mean - target).squaredNorm(); };
  const NelderMeadResult r = nelder_mead(
      [&](const std::vector<double>& x) { return loss_at(Eigen::Vector3d(x[0], x[1], x[2])); },
      std::vector<double>(x0.begin(), x0.end()), options);

  InverseDesignResult out;
  out.unclamped = {r.x[0], r.x[1], r.x[2]};
  out.setting = RgbSetting(r.x[0], r.x[1], r.x[2]);
  const auto v = out.setting.values();
  out.clamped = v != out.unclamped;
  const Eigen::Vector3d xc(v[0], v[1], v[2]);
  const GpPrediction p = model.predict(xc);
  out.predicted = p.mean;
  out.predicted_std = p.std;
  out.objective = (p.mean - target).squaredNorm();
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

}  // namespace helios::learn
