#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace helios::learn {

class ScoreError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Coefficient of determination per output column, averaged uniformly.
inline double r2_score(const Eigen::MatrixXd& y_true, const Eigen::MatrixXd& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) {
    throw std::invalid_argument("r2_score: shapes differ");
  }
  if (y_true.rows() < 2) throw std::invalid_argument("r2_score: need at least 2 rows");
  double total = 0.0;
  for (Eigen::Index c = 0; c < y_true.cols(); ++c) {
    const double mean = y_true.col(c).mean();
    const double ss_tot = (y_true.col(c).array() - mean).square().sum();
    if (ss_tot == 0.0) throw ScoreError("r2_score: output column has zero variance");
    const double ss_res = (y_true.col(c) - y_pred.col(c)).squaredNorm();
    total += 1.0 - ss_res / ss_tot;
  }
  return total / static_cast<double>(y_true.cols());
}

struct Split {
  Eigen::MatrixXd X_train, X_test, Y_train, Y_test;
  std::vector<std::size_t> train_rows, test_rows;
};

// Seeded shuffle, then the first round(n·test_fraction) rows (at least one,
// leaving at least one) go to the test side.
inline Split train_test_split(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double test_fraction,
                              std::uint64_t seed) {
  if (X.rows() != Y.rows()) throw std::invalid_argument("train_test_split: X and Y row counts differ");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) throw std::invalid_argument("train_test_split: need at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("train_test_split: test_fraction must lie in (0, 1)");
  }
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Split s;
  s.test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  auto gather = [](const Eigen::MatrixXd& M, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(static_cast<Eigen::Index>(rows[i]));
    return out;
  };
  s.X_train = gather(X, s.train_rows);
  s.X_test = gather(X, s.test_rows);
  s.Y_train = gather(Y, s.train_rows);
  s.Y_test = gather(Y, s.test_rows);
  return s;
}

}  // namespace helios::learn
