#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace helios::learn {

struct NelderMeadOptions {
  double init_step = 0.05;  // relative to |x0_i|; absolute when x0_i == 0
  double f_tol = 1e-8;
  double x_tol = 1e-8;
  int max_iter = 2000;
  // reflection, expansion, contraction, shrink
  double alpha = 1.0;
  double gamma = 2.0;
  double rho = 0.5;
  double sigma = 0.5;
};

// Vertices sorted ascending by objective; values[0] is the best.
struct SimplexState {
  std::vector<std::vector<double>> vertices;
  std::vector<double> values;
  int iteration = 0;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;
using SimplexObserver = std::function<void(const SimplexState&)>;

namespace detail {

inline void sort_simplex(SimplexState& s) {
  std::vector<std::size_t> order(s.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
  SimplexState sorted;
  sorted.iteration = s.iteration;
  for (std::size_t i : order) {
    sorted.vertices.push_back(std::move(s.vertices[i]));
    sorted.values.push_back(s.values[i]);
  }
  s = std::move(sorted);
}

inline bool simplex_converged(const SimplexState& s, double x_tol, double f_tol) {
  double x_spread = 0.0;
  double f_spread = 0.0;
  for (std::size_t v = 1; v < s.vertices.size(); ++v) {
    for (std::size_t i = 0; i < s.vertices[v].size(); ++i) {
      x_spread = std::max(x_spread, std::abs(s.vertices[v][i] - s.vertices[0][i]));
    }
    f_spread = std::max(f_spread, std::abs(s.values[v] - s.values[0]));
  }
  return x_spread < x_tol && f_spread < f_tol;
}

}  // namespace detail

// Derivative-free simplex minimization (reflect / expand / contract / shrink).
// Reaching max_iter is not an error: the best vertex is returned with
// converged = false.
inline NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opt = {},
                                    const SimplexObserver& observer = {}) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: x0 must have at least one dimension");

  int evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  SimplexState s;
  s.vertices.push_back(x0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v = x0;
    v[i] += x0[i] != 0.0 ? opt.init_step * std::abs(x0[i]) : opt.init_step;
    s.vertices.push_back(std::move(v));
  }
  for (const auto& v : s.vertices) s.values.push_back(eval(v));
  detail::sort_simplex(s);

  auto affine = [n](const std::vector<double>& base, const std::vector<double>& toward, double t) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + t * (toward[i] - base[i]);
    return out;
  };

  bool converged = false;
  while (true) {
    if (detail::simplex_converged(s, opt.x_tol, opt.f_tol)) {
      converged = true;
      break;
    }
    if (s.iteration >= opt.max_iter) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += s.vertices[v][i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto& worst = s.vertices[n];
    const std::vector<double> xr = affine(centroid, worst, -opt.alpha);
    const double fr = eval(xr);

    bool shrink = false;
    if (fr < s.values[0]) {
      const std::vector<double> xe = affine(centroid, xr, opt.gamma);
      const double fe = eval(xe);
      if (fe < fr) {
        s.vertices[n] = xe;
        s.values[n] = fe;
      } else {
        s.vertices[n] = xr;
        s.values[n] = fr;
      }
    } else if (fr < s.values[n - 1]) {
      s.vertices[n] = xr;
      s.values[n] = fr;
    } else if (fr < s.values[n]) {
      const std::vector<double> xc = affine(centroid, xr, opt.rho);
      const double fc = eval(xc);
      if (fc <= fr) {
        s.vertices[n] = xc;
        s.values[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      const std::vector<double> xcc = affine(centroid, worst, opt.rho);
      const double fcc = eval(xcc);
      if (fcc < s.values[n]) {
        s.vertices[n] = xcc;
        s.values[n] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t v = 1; v <= n; ++v) {
        s.vertices[v] = affine(s.vertices[0], s.vertices[v], opt.sigma);
        s.values[v] = eval(s.vertices[v]);
      }
    }
    ++s.iteration;
    detail::sort_simplex(s);
    if (observer) observer(s);
  }

  return NelderMeadResult{s.vertices[0], s.values[0], s.iteration, evaluations, converged};
}

}  // namespace helios::learn
