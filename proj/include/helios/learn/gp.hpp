#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helios/learn/features.hpp"
#include "helios/learn/nelder_mead.hpp"

namespace helios::learn {

class GpFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dot-product kernel inhomogeneity and white-noise level, both in units of
// the normalized outputs.
struct GpHyperparams {
  double sigma0_sq = 1.0;
  double noise = 1.0;
};

struct GpFitOptions {
  // (log sigma0_sq, log noise) restart points
  std::vector<std::array<double, 2>> starts{{-2.0, -4.0}, {0.0, -1.0}, {2.0, 1.0}};
  std::array<double, 2> log_sigma0_sq_bounds{std::log(1e-8), std::log(1e5)};
  std::array<double, 2> log_noise_bounds{std::log(1e-10), std::log(1e5)};
  NelderMeadOptions optimizer{};
};

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

// K = Φ Φᵀ + sigma0_sq·11ᵀ + noise·I
inline Eigen::MatrixXd gp_kernel_matrix(const Eigen::MatrixXd& phi, const GpHyperparams& hp) {
  Eigen::MatrixXd K = phi * phi.transpose();
  K.array() += hp.sigma0_sq;
  K.diagonal().array() += hp.noise;
  return K;
}

// Summed over output columns:
//   Σ_k [ −½ y_kᵀ K⁻¹ y_k − ½ log|K| − (n/2) log 2π ]
// Returns −infinity when K is not numerically positive definite.
inline double log_marginal_likelihood(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, const GpHyperparams& hp) {
  const Eigen::LLT<Eigen::MatrixXd> llt(gp_kernel_matrix(phi, hp));
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd alpha = llt.solve(y);
  const Eigen::MatrixXd& L = llt.matrixLLT();
  double log_det_half = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) return -std::numeric_limits<double>::infinity();
    log_det_half += std::log(L(i, i));
  }
  const double n = static_cast<double>(phi.rows());
  const double k = static_cast<double>(y.cols());
  const double value = -0.5 * (y.array() * alpha.array()).sum() - k * log_det_half - 0.5 * k * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
}

// Analytic gradient of the summed LML w.r.t. (log sigma0_sq, log noise):
//   ½ Σ_k tr((α_k α_kᵀ − K⁻¹) ∂K/∂θ)
inline std::array<double, 2> log_marginal_likelihood_gradient(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y,
                                                             const GpHyperparams& hp) {
  const Eigen::Index n = phi.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(gp_kernel_matrix(phi, hp));
  if (llt.info() != Eigen::Success) throw GpFitError("kernel matrix is not positive definite");
  const Eigen::MatrixXd alpha = llt.solve(y);
  const Eigen::MatrixXd K_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const double k = static_cast<double>(y.cols());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  double d_sigma = 0.0;
  double d_noise = 0.0;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double s = ones.dot(alpha.col(c));
    d_sigma += s * s;
    d_noise += alpha.col(c).squaredNorm();
  }
  d_sigma = 0.5 * hp.sigma0_sq * (d_sigma - k * ones.dot(K_inv * ones));
  d_noise = 0.5 * hp.noise * (d_noise - k * K_inv.trace());
  return {d_sigma, d_noise};
}

// Gaussian-process regressor with a dot-product + white-noise kernel over
// degree-2 polynomial features of standardized inputs. Outputs are normalized
// per column and share one set of kernel hyperparameters.
class GpModel {
 public:
  static GpModel fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const GpFitOptions& options = {}) {
    GpModel m = prepare(X, Y);
    const auto& lo_s = options.log_sigma0_sq_bounds;
    const auto& lo_n = options.log_noise_bounds;
    auto clamp_theta = [&](const std::vector<double>& t) {
      return GpHyperparams{std::exp(std::clamp(t[0], lo_s[0], lo_s[1])), std::exp(std::clamp(t[1], lo_n[0], lo_n[1]))};
    };
    auto objective = [&](const std::vector<double>& t) {
      return -learn::log_marginal_likelihood(m.phi_, m.y_norm_, clamp_theta(t));
    };

    double best = std::numeric_limits<double>::infinity();
    GpHyperparams best_hp;
    for (const auto& start : options.starts) {
      const NelderMeadResult r = nelder_mead(objective, {start[0], start[1]}, options.optimizer);
      if (std::isfinite(r.f) && r.f < best) {
        best = r.f;
        best_hp = clamp_theta(r.x);
      }
    }
    if (!std::isfinite(best)) {
      throw GpFitError("kernel factorization failed at every restart; inputs may be degenerate or ill-conditioned");
    }
    m.factorize(best_hp);
    return m;
  }

  static GpModel fit_with_hyperparams(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const GpHyperparams& hp) {
    GpModel m = prepare(X, Y);
    m.factorize(hp);
    return m;
  }

  // Rebuilds a fitted model from its stored parts (see model_io.hpp).
  static GpModel from_parts(FeaturePipeline pipeline, GpHyperparams hp, Eigen::MatrixXd phi, Eigen::VectorXd y_mean,
                            Eigen::VectorXd y_std, Eigen::MatrixXd alpha) {
    GpModel m;
    m.pipeline_ = std::move(pipeline);
    m.phi_ = std::move(phi);
    m.y_mean_ = std::move(y_mean);
    m.y_std_ = std::move(y_std);
    if (m.phi_.cols() != m.pipeline_.feature_dim() || alpha.rows() != m.phi_.rows() || alpha.cols() != m.y_mean_.size() ||
        m.y_std_.size() != m.y_mean_.size()) {
      throw GpFitError("inconsistent GP model parts");
    }
    m.factorize(hp);
    m.alpha_ = std::move(alpha);
    m.y_norm_ = gp_kernel_matrix(m.phi_, hp) * m.alpha_;
    return m;
  }

  GpPrediction predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd phi = pipeline_.features(x);
    const Eigen::VectorXd k_star = (phi_ * phi).array() + hp_.sigma0_sq;
    const Eigen::VectorXd mean_norm = alpha_.transpose() * k_star;
    const Eigen::VectorXd v = factor_.matrixL().solve(k_star);
    const double var = std::max(0.0, phi.squaredNorm() + hp_.sigma0_sq + hp_.noise - v.squaredNorm());
    GpPrediction p;
    p.mean = (mean_norm.array() * y_std_.array() + y_mean_.array()).matrix();
    p.std = (std::sqrt(var) * y_std_.array()).matrix();
    return p;
  }

  Eigen::MatrixXd predict_mean(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd out(X.rows(), output_dim());
    for (Eigen::Index r = 0; r < X.rows(); ++r) out.row(r) = predict(X.row(r).transpose()).mean.transpose();
    return out;
  }

  double log_marginal_likelihood() const { return learn::log_marginal_likelihood(phi_, y_norm_, hp_); }

  const FeaturePipeline& pipeline() const { return pipeline_; }
  const GpHyperparams& hyperparams() const { return hp_; }
  const Eigen::MatrixXd& features() const { return phi_; }
  const Eigen::VectorXd& output_mean() const { return y_mean_; }
  const Eigen::VectorXd& output_std() const { return y_std_; }
  const Eigen::MatrixXd& weights() const { return alpha_; }
  Eigen::Index input_dim() const { return pipeline_.input_dim(); }
  Eigen::Index output_dim() const { return y_mean_.size(); }

 private:
  static GpModel prepare(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows()) throw std::invalid_argument("gp_fit: X and Y row counts differ");
    if (Y.cols() < 1) throw std::invalid_argument("gp_fit: Y needs at least one output column");
    GpModel m;
    m.pipeline_ = FeaturePipeline::fit(X);
    if (X.rows() < m.pipeline_.feature_dim()) {
      throw std::invalid_argument("gp_fit: need at least " + std::to_string(m.pipeline_.feature_dim()) +
                                  " rows for the polynomial features, got " + std::to_string(X.rows()));
    }
    m.phi_ = m.pipeline_.feature_matrix(X);
    m.y_mean_ = Y.colwise().mean().transpose();
    m.y_std_.resize(Y.cols());
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double var = (Y.col(c).array() - m.y_mean_(c)).square().mean();
      m.y_std_(c) = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    m.y_norm_ = (Y.rowwise() - m.y_mean_.transpose()).array().rowwise() / m.y_std_.transpose().array();
    return m;
  }

  void factorize(const GpHyperparams& hp) {
    hp_ = hp;
    factor_.compute(gp_kernel_matrix(phi_, hp_));
    if (factor_.info() != Eigen::Success) {
      throw GpFitError("kernel matrix is not positive definite (sigma0_sq=" + std::to_string(hp.sigma0_sq) +
                       ", noise=" + std::to_string(hp.noise) + ")");
    }
    if (y_norm_.size() > 0) alpha_ = factor_.solve(y_norm_);
  }

  FeaturePipeline pipeline_;
  GpHyperparams hp_;
  Eigen::MatrixXd phi_;
  Eigen::MatrixXd y_norm_;
  Eigen::VectorXd y_mean_;
  Eigen::VectorXd y_std_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::MatrixXd alpha_;
};

}  // namespace helios::learn
