#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "helios/doe/latin_square.hpp"

namespace helios::doe {

inline constexpr double kDefaultFCritical = 19.0;  // F(2,2) at alpha = 0.05

struct EffectRow {
  std::string name;  // "<factor>_effect"
  double sum_squares = 0.0;
  int df = 2;
  double mean_square = 0.0;
  double f_score = 0.0;  // may be +infinity when the residual vanishes
  bool significant = false;
};

struct AnovaTable {
  std::string response;
  double f_critical = kDefaultFCritical;
  double grand_mean = 0.0;
  double ss_total = 0.0;
  std::vector<EffectRow> effects;
  double residual_ss = 0.0;
  int residual_df = 2;
  double residual_ms = 0.0;
};

// Main-effects ANOVA for a 3x3 Latin square. Each factor contributes
// SS_f = 3·Σ_level (mean_level − grand_mean)²; the residual takes what is left.
inline AnovaTable anova_effects(const LatinSquareDesign& design, std::span<const double> response,
                                double f_critical = kDefaultFCritical, std::string response_name = "y") {
  if (design.runs.size() != 9) throw std::invalid_argument("anova_effects: design must have 9 runs");
  if (response.size() != design.runs.size()) {
    throw std::invalid_argument("anova_effects: response length does not match the design");
  }
  AnovaTable t;
  t.response = std::move(response_name);
  t.f_critical = f_critical;

  double mean = 0.0;
  for (double y : response) mean += y;
  mean /= 9.0;
  t.grand_mean = mean;
  for (double y : response) t.ss_total += (y - mean) * (y - mean);

  double ss_factors = 0.0;
  for (std::size_t f = 0; f < 3; ++f) {
    std::array<double, 3> level_sum{};
    std::array<int, 3> level_n{};
    for (std::size_t r = 0; r < 9; ++r) {
      level_sum[design.runs[r][f]] += response[r];
      ++level_n[design.runs[r][f]];
    }
    EffectRow row;
    row.name = design.factors[f] + "_effect";
    for (std::size_t l = 0; l < 3; ++l) {
      const double dev = level_sum[l] / level_n[l] - mean;
      row.sum_squares += 3.0 * dev * dev;
    }
    row.mean_square = row.sum_squares / row.df;
    ss_factors += row.sum_squares;
    t.effects.push_back(row);
  }
  t.residual_ss = std::max(0.0, t.ss_total - ss_factors);
  t.residual_ms = t.residual_ss / t.residual_df;

  double ms_max = t.residual_ms;
  for (const auto& e : t.effects) ms_max = std::max(ms_max, e.mean_square);
  const double eps = 1e-12 * ms_max;
  for (auto& e : t.effects) {
    if (ms_max == 0.0 || e.mean_square <= eps) {
      e.f_score = 0.0;  // no variation (0/0 reads as 0)
    } else if (t.residual_ms < eps) {
      e.f_score = std::numeric_limits<double>::infinity();
    } else {
      e.f_score = e.mean_square / t.residual_ms;
    }
    e.significant = e.f_score > f_critical;
  }
  return t;
}

inline std::string format_f(double f) {
  if (std::isinf(f)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", f);
  return buf;
}

// Aligned-column text in the layout of a pandas frame printout.
inline std::string to_text(const AnovaTable& t) {
  char fc[32];
  std::snprintf(fc, sizeof fc, "%.1f", t.f_critical);
  const std::string f_header = std::string("F-score (fc=") + fc + ")";
  const std::string resp = t.response;
  std::size_t idx_w = std::max<std::size_t>(resp.size(), 1);
  std::size_t name_w = std::string("residuals").size();
  std::size_t f_w = f_header.size();
  for (const auto& e : t.effects) {
    name_w = std::max(name_w, e.name.size());
    f_w = std::max(f_w, format_f(e.f_score).size());
  }
  const std::size_t sig_w = std::string("Significant").size();

  auto pad_left = [](const std::string& s, std::size_t w) { return std::string(w > s.size() ? w - s.size() : 0, ' ') + s; };
  auto pad_right = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };

  std::string out = pad_right(resp, idx_w) + "  " + pad_right("effect", name_w) + "  " + pad_left(f_header, f_w) +
                    "  " + pad_left("Significant", sig_w) + "\n";
  std::size_t i = 0;
  for (const auto& e : t.effects) {
    out += pad_right(std::to_string(i++), idx_w) + "  " + pad_right(e.name, name_w) + "  " +
           pad_left(format_f(e.f_score), f_w) + "  " + pad_left(e.significant ? "True" : "False", sig_w) + "\n";
  }
  out += pad_right(std::to_string(i), idx_w) + "  " + pad_right("residuals", name_w) + "  " + pad_left("1.0", f_w) +
         "  " + pad_left("False", sig_w) + "\n";
  return out;
}

inline nlohmann::ordered_json to_json(const AnovaTable& t) {
  nlohmann::ordered_json j;
  j["schema"] = "helios-anova/1";
  j["response"] = t.response;
  j["f_critical"] = t.f_critical;
  j["grand_mean"] = t.grand_mean;
  j["ss_total"] = t.ss_total;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : t.effects) {
    nlohmann::ordered_json r;
    r["effect"] = e.name;
    r["sum_squares"] = e.sum_squares;
    r["df"] = e.df;
    r["mean_square"] = e.mean_square;
    // JSON has no infinity; an unbounded F is written as the string "inf"
    if (std::isinf(e.f_score)) {
      r["f_score"] = "inf";
    } else {
      r["f_score"] = e.f_score;
    }
    r["significant"] = e.significant;
    rows.push_back(r);
  }
  j["effects"] = rows;
  j["residual"] = {{"sum_squares", t.residual_ss}, {"df", t.residual_df}, {"mean_square", t.residual_ms}};
  return j;
}

inline nlohmann::ordered_json to_json(const LatinSquareDesign& d) {
  nlohmann::ordered_json j;
  j["schema"] = "helios-design/1";
  j["factors"] = d.factors;
  j["levels"] = d.levels;
  auto runs = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < d.runs.size(); ++r) runs.push_back(d.values(r));
  j["runs"] = runs;
  return j;
}

inline std::string to_text(const LatinSquareDesign& d) {
  std::string out = "run";
  char buf[64];
  for (const auto& f : d.factors) {
    std::snprintf(buf, sizeof buf, " %8s", f.c_str());
    out += buf;
  }
  out += "\n";
  for (std::size_t r = 0; r < d.runs.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%3zu", r);
    out += buf;
    for (double v : d.values(r)) {
      std::snprintf(buf, sizeof buf, " %8.3f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace helios::doe
