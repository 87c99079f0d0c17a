#include <gtest/gtest.h>

#include <random>

#include "helios/doe/anova.hpp"
#include "helios/doe/sweep.hpp"
#include "helios/sim/calibration.hpp"
#include "test_support.hpp"

using namespace helios;
using namespace helios::doe;

namespace {

LatinSquareDesign standard_design(std::optional<std::uint64_t> seed = std::nullopt) {
  return latin_square({{"R", {0.0, 0.5, 1.0}}, {"G", {0.0, 0.5, 1.0}}, {"B", {0.0, 0.5, 1.0}}}, seed);
}

// Per-factor SS by projecting the centered response onto the span of the
// factor's centered level indicators (least squares), plus the residual of
// the full additive model. Independent of the level-mean formula.
struct OracleAnova {
  std::array<double, 3> ss{};
  double ss_res = 0.0;
};

OracleAnova oracle_anova(const LatinSquareDesign& d, const std::vector<double>& y) {
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), 9);
  const Eigen::VectorXd yc = yv.array() - yv.mean();
  OracleAnova o;
  Eigen::MatrixXd full(9, 7);
  full.col(0).setOnes();
  for (std::size_t f = 0; f < 3; ++f) {
    Eigen::MatrixXd ind(9, 2);
    for (int r = 0; r < 9; ++r) {
      for (int l = 0; l < 2; ++l) ind(r, l) = d.runs[static_cast<std::size_t>(r)][f] == static_cast<std::size_t>(l) ? 1.0 : 0.0;
    }
    const Eigen::MatrixXd centered = ind.rowwise() - ind.colwise().mean();
    const Eigen::VectorXd beta = centered.colPivHouseholderQr().solve(yc);
    o.ss[f] = (centered * beta).squaredNorm();
    full.block(0, 1 + 2 * static_cast<Eigen::Index>(f), 9, 2) = ind;
  }
  const Eigen::VectorXd coef = full.colPivHouseholderQr().solve(yv);
  o.ss_res = (yv - full * coef).squaredNorm();
  return o;
}

std::vector<double> red_channel_response(const LatinSquareDesign& d, std::uint64_t seed, bool noisy = true) {
  ResponseModel m = noisy ? default_model() : noiseless(default_model());
  NoiseStream s(seed);
  std::vector<double> y;
  for (std::size_t r = 0; r < 9; ++r) {
    const auto v = d.values(r);
    y.push_back(measure(m, RgbSetting(v[0], v[1], v[2]), Instant{}, s)[Channel::W630]);
  }
  return y;
}

}  // namespace

TEST(Linspace, Examples) {
  EXPECT_EQ(linspace(0, 1, 5), (std::vector<double>{0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(linspace(2, 2, 3), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(linspace(0, 1, 2), (std::vector<double>{0, 1}));
  EXPECT_THROW(linspace(0, 1, 1), std::invalid_argument);
  EXPECT_THROW(linspace(0, 1, 0), std::invalid_argument);
  const auto v = linspace(-3.7, 11.3, 17);
  EXPECT_EQ(v.front(), -3.7);
  EXPECT_EQ(v.back(), 11.3);
}

TEST(FitLine, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
}

TEST(FitLine, ConstantResponse) {
  const std::vector<double> x{0, 0.3, 0.9}, y{4.5, 4.5, 4.5};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 0.0, 1e-12);
  EXPECT_NEAR(f.intercept, 4.5, 1e-12);
}

TEST(FitLine, Errors) {
  const std::vector<double> x{2, 2, 2}, y{1, 2, 3};
  EXPECT_THROW(fit_line(x, y), SingularFitError);
  const std::vector<double> one{1}, two{1, 2};
  EXPECT_THROW(fit_line(one, one), std::invalid_argument);
  EXPECT_THROW(fit_line(two, one), std::invalid_argument);
}

TEST(FitLine, MatchesNormalEquationsAndResidualsAreOrthogonal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 20);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = nd(rng) * 10;
      y[i] = 3 * x[i] - 7 + nd(rng) * 1000;
    }
    const auto f = fit_line(x, y);
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      A(i, 0) = x[i];
      A(i, 1) = 1;
      b(i) = y[i];
    }
    const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(b);
    EXPECT_NEAR(f.slope, sol(0), 1e-8 * (1 + std::abs(sol(0))));
    EXPECT_NEAR(f.intercept, sol(1), 1e-8 * (1 + std::abs(sol(1))));
    double s0 = 0, s1 = 0, scale = 0;
    for (int i = 0; i < n; ++i) {
      const double r = y[i] - (f.slope * x[i] + f.intercept);
      s0 += r;
      s1 += r * x[i];
      scale += std::abs(y[i]) * (1 + std::abs(x[i]));
    }
    EXPECT_LE(std::abs(s0), 1e-9 * scale);
    EXPECT_LE(std::abs(s1), 1e-9 * scale);
  }
}

TEST(Sweep, NoiseFreeSimulatorRecoversTheCalibratedLine) {
  const auto m = default_model();
  std::vector<double> xs, ys;
  for (double g : linspace(0, 1, 5)) {
    const double y = expected_counts(m, RgbSetting(0, g, 0), Instant{})[index_of(Channel::W515)];
    if (y > 65535) continue;  // clamp-aware: the g=1 point saturates
    xs.push_back(g);
    ys.push_back(y);
  }
  ASSERT_EQ(xs.size(), 4u);
  const auto f = fit_line(xs, ys);
  EXPECT_LE(helios::testing::rel_err(f.slope, 62466.40), 1e-6);
  EXPECT_LE(helios::testing::rel_err(f.intercept, 3110.20), 1e-6);
  const auto r = make_sweep_result(xs, ys);
  EXPECT_EQ(r.slope, f.slope);
}

TEST(LatinSquare, StandardLevelsInvariants) {
  const auto d = standard_design();
  ASSERT_EQ(d.runs.size(), 9u);
  for (std::size_t f = 0; f < 3; ++f) {
    std::array<int, 3> count{};
    double sum = 0;
    for (std::size_t r = 0; r < 9; ++r) {
      ++count[d.runs[r][f]];
      sum += d.values(r)[f];
    }
    EXPECT_EQ(count, (std::array<int, 3>{3, 3, 3}));
    EXPECT_DOUBLE_EQ(sum, 3 * (0 + 0.5 + 1.0));
  }
}

TEST(LatinSquare, PairwiseBalanceBruteForce) {
  for (std::optional<std::uint64_t> seed : {std::optional<std::uint64_t>{}, std::optional<std::uint64_t>{1},
                                            std::optional<std::uint64_t>{77}, std::optional<std::uint64_t>{123456}}) {
    const auto d = latin_square({{"A", {1, 2, 3}}, {"B", {-1, 0, 7}}, {"C", {0.1, 0.2, 0.3}}}, seed);
    for (std::size_t f1 = 0; f1 < 3; ++f1) {
      for (std::size_t f2 = f1 + 1; f2 < 3; ++f2) {
        for (std::size_t a = 0; a < 3; ++a) {
          for (std::size_t b = 0; b < 3; ++b) {
            int hits = 0;
            for (const auto& run : d.runs) hits += (run[f1] == a && run[f2] == b) ? 1 : 0;
            EXPECT_EQ(hits, 1) << "factors " << f1 << "," << f2 << " levels " << a << "," << b;
          }
        }
      }
    }
  }
}

TEST(LatinSquare, DeterministicAcrossCalls) {
  const auto a = standard_design(), b = standard_design();
  EXPECT_EQ(a.runs, b.runs);
  EXPECT_EQ(standard_design(5).runs, standard_design(5).runs);
}

TEST(LatinSquare, Errors) {
  EXPECT_THROW(latin_square({{"R", {0, 0.5, 1}}, {"G", {0, 0.5, 1}}}), std::invalid_argument);
  EXPECT_THROW(latin_square({{"R", {0, 0.5, 1}}, {"G", {0, 0.5}}, {"B", {0, 0.5, 1}}}), std::invalid_argument);
  EXPECT_THROW(latin_square({{"R", {0, 0.5, 1}}, {"G", {0, 0.5, 0.5}}, {"B", {0, 0.5, 1}}}), std::invalid_argument);
  EXPECT_THROW(latin_square({{"R", {0, 0.5, 1}}, {"G", {0, 0.5, 1}}, {"B", {0, 0.5, 1}}, {"X", {0, 0.5, 1}}}),
               std::invalid_argument);
}

TEST(Anova, ConstantResponseIsAllZero) {
  const auto d = standard_design();
  const std::vector<double> y(9, 42.0);
  const auto t = anova_effects(d, y);
  for (const auto& e : t.effects) {
    EXPECT_EQ(e.sum_squares, 0.0);
    EXPECT_EQ(e.f_score, 0.0);
    EXPECT_FALSE(e.significant);
  }
  EXPECT_EQ(t.residual_ss, 0.0);
}

TEST(Anova, PureRResponseGivesInfiniteF) {
  const auto d = standard_design();
  std::vector<double> y;
  for (std::size_t r = 0; r < 9; ++r) y.push_back(100.0 + 4000.0 * d.values(r)[0]);
  const auto t = anova_effects(d, y);
  EXPECT_TRUE(std::isinf(t.effects[0].f_score));
  EXPECT_TRUE(t.effects[0].significant);
  EXPECT_EQ(t.effects[1].f_score, 0.0);
  EXPECT_EQ(t.effects[2].f_score, 0.0);
  EXPECT_FALSE(t.effects[1].significant);
  EXPECT_EQ(format_f(t.effects[0].f_score), "inf");
  EXPECT_EQ(to_json(t)["effects"][0]["f_score"], "inf");
}

TEST(Anova, MatchesRegressionOracleAndDecomposes) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = standard_design(trial % 2 ? std::optional<std::uint64_t>(rng()) : std::nullopt);
    std::vector<double> y(9);
    for (auto& v : y) v = nd(rng) * 1000 + 5000;
    const auto t = anova_effects(d, y);
    const auto o = oracle_anova(d, y);
    double ss_sum = t.residual_ss;
    for (std::size_t f = 0; f < 3; ++f) {
      EXPECT_NEAR(t.effects[f].sum_squares, o.ss[f], 1e-7 * (1 + t.ss_total));
      EXPECT_EQ(t.effects[f].df, 2);
      ss_sum += t.effects[f].sum_squares;
      EXPECT_EQ(t.effects[f].significant, t.effects[f].f_score > 19.0);
    }
    EXPECT_NEAR(t.residual_ss, o.ss_res, 1e-7 * (1 + t.ss_total));
    EXPECT_LE(std::abs(ss_sum - t.ss_total), 1e-9 * t.ss_total);
    EXPECT_EQ(t.residual_df, 2);
  }
}

TEST(Anova, ScaleEquivariance) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd(0, 1);
  const auto d = standard_design();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> y(9), z(9);
    const double k = std::exp(nd(rng) * 3);
    for (int i = 0; i < 9; ++i) {
      y[i] = nd(rng);
      z[i] = k * y[i];
    }
    const auto a = anova_effects(d, y), b = anova_effects(d, z);
    for (std::size_t f = 0; f < 3; ++f) {
      EXPECT_NEAR(b.effects[f].sum_squares, k * k * a.effects[f].sum_squares, 1e-9 * k * k * (1 + a.ss_total));
      EXPECT_NEAR(b.effects[f].f_score, a.effects[f].f_score, 1e-6 * (1 + a.effects[f].f_score));
      EXPECT_EQ(b.effects[f].significant, a.effects[f].significant);
    }
  }
}

TEST(Anova, Errors) {
  const auto d = standard_design();
  const std::vector<double> y(8, 1.0);
  EXPECT_THROW(anova_effects(d, y), std::invalid_argument);
}

TEST(Anova, NoisyRedChannelOrdering) {
  const auto d = standard_design();
  const auto t = anova_effects(d, red_channel_response(d, 42));
  EXPECT_GT(t.effects[0].f_score, t.effects[1].f_score);
  EXPECT_GT(t.effects[1].f_score, t.effects[2].f_score);
  EXPECT_GT(t.effects[2].f_score, 19.0);
}

TEST(Anova, NoisyRedChannelOrderingHoldsAcrossSeeds) {
  const auto d = standard_design();
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto t = anova_effects(d, red_channel_response(d, seed));
    ok += (t.effects[0].f_score > t.effects[1].f_score && t.effects[1].f_score > t.effects[2].f_score &&
           t.effects[2].f_score > 19.0)
              ? 1
              : 0;
  }
  EXPECT_EQ(ok, 200);
}

TEST(Anova, ZeroNoiseRedChannelIsDominatedByR) {
  const auto d = standard_design();
  const auto t = anova_effects(d, red_channel_response(d, 0, false));
  EXPECT_TRUE(t.effects[0].significant);
  EXPECT_GT(t.effects[0].sum_squares, 10 * t.effects[1].sum_squares);
  EXPECT_GT(t.effects[1].sum_squares, 0.0);  // cross-talk gain
  EXPECT_GT(t.effects[2].sum_squares, 0.0);
}

TEST(Anova, TextLayoutGolden) {
  const auto d = standard_design();
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 10};
  const auto t = anova_effects(d, y, 19.0, "630nm");
  EXPECT_EQ(to_text(t), helios::testing::golden("anova_table.txt"));
  EXPECT_TRUE(helios::testing::json_near(nlohmann::json::parse(to_json(t).dump()),
                                         nlohmann::json::parse(helios::testing::golden("anova_table.json")), 1e-9));
  EXPECT_EQ(to_text(d), helios::testing::golden("latin_square.txt"));
  EXPECT_TRUE(helios::testing::json_near(nlohmann::json::parse(to_json(d).dump()),
                                         nlohmann::json::parse(helios::testing::golden("latin_square.json")), 0.0));
}
