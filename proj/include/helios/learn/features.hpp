#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace helios::learn {

// Standardize each input column, then expand to the full degree-2 polynomial
// basis [1, z_i, z_i·z_j (i <= j)] in the usual graded-lexicographic order.
class FeaturePipeline {
 public:
  static constexpr int kDegree = 2;

  FeaturePipeline() = default;
  FeaturePipeline(Eigen::VectorXd mean, Eigen::VectorXd std) : mean_(std::move(mean)), std_(std::move(std)) {
    if (mean_.size() != std_.size()) throw std::invalid_argument("FeaturePipeline: mean/std sizes differ");
  }

  // Population statistics (ddof = 0); constant columns keep unit scale.
  static FeaturePipeline fit(const Eigen::MatrixXd& X) {
    if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("FeaturePipeline::fit: empty input");
    Eigen::VectorXd mean = X.colwise().mean().transpose();
    Eigen::VectorXd std(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double var = (X.col(j).array() - mean(j)).square().mean();
      std(j) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return FeaturePipeline(std::move(mean), std::move(std));
  }

  Eigen::Index input_dim() const { return mean_.size(); }
  Eigen::Index feature_dim() const {
    const Eigen::Index d = input_dim();
    return 1 + d + d * (d + 1) / 2;
  }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& std() const { return std_; }

  Eigen::VectorXd standardize(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("FeaturePipeline: input has wrong dimension");
    return ((x - mean_).array() / std_.array()).matrix();
  }

  Eigen::VectorXd features(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = standardize(x);
    const Eigen::Index d = z.size();
    Eigen::VectorXd phi(feature_dim());
    Eigen::Index k = 0;
    phi(k++) = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) phi(k++) = z(i);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i; j < d; ++j) phi(k++) = z(i) * z(j);
    }
    return phi;
  }

  Eigen::MatrixXd feature_matrix(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd phi(X.rows(), feature_dim());
    for (Eigen::Index r = 0; r < X.rows(); ++r) phi.row(r) = features(X.row(r).transpose()).transpose();
    return phi;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
};

}  // namespace helios::learn
