#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "helios/learn/gp.hpp"

namespace helios::learn {

inline constexpr const char* kGpSchema = "helios-gp/1";

namespace detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array()) throw GpFitError(std::string(field) + ": expected an array");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array() || j.empty()) throw GpFitError(std::string(field) + ": expected a non-empty array of rows");
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw GpFitError(std::string(field) + ": ragged rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const GpModel& m) {
  nlohmann::ordered_json j;
  j["schema"] = kGpSchema;
  j["pipeline"] = {{"input_mean", detail::vector_to_json(m.pipeline().mean())},
                   {"input_std", detail::vector_to_json(m.pipeline().std())},
                   {"poly_degree", FeaturePipeline::kDegree}};
  j["hyperparams"] = {{"sigma0_sq", m.hyperparams().sigma0_sq}, {"noise", m.hyperparams().noise}};
  j["output_mean"] = detail::vector_to_json(m.output_mean());
  j["output_std"] = detail::vector_to_json(m.output_std());
  j["features"] = detail::matrix_to_json(m.features());
  j["weights"] = detail::matrix_to_json(m.weights());
  return j;
}

inline GpModel gp_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kGpSchema) throw GpFitError(std::string("unsupported schema, expected ") + kGpSchema);
    const auto& p = j.at("pipeline");
    if (p.at("poly_degree").get<int>() != FeaturePipeline::kDegree) throw GpFitError("only degree-2 features are supported");
    FeaturePipeline pipeline(detail::vector_from_json(p.at("input_mean"), "input_mean"),
                             detail::vector_from_json(p.at("input_std"), "input_std"));
    GpHyperparams hp{j.at("hyperparams").at("sigma0_sq").get<double>(), j.at("hyperparams").at("noise").get<double>()};
    return GpModel::from_parts(std::move(pipeline), hp, detail::matrix_from_json(j.at("features"), "features"),
                               detail::vector_from_json(j.at("output_mean"), "output_mean"),
                               detail::vector_from_json(j.at("output_std"), "output_std"),
                               detail::matrix_from_json(j.at("weights"), "weights"));
  } catch (const nlohmann::json::exception& e) {
    throw GpFitError(std::string("malformed GP model document: ") + e.what());
  }
}

inline void save_gp(const GpModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw GpFitError("cannot write " + path);
  out << to_json(m).dump(1) << '\n';
}

inline GpModel load_gp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GpFitError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw GpFitError(std::string("GP model file is not valid JSON: ") + e.what());
  }
  return gp_from_json(j);
}

}  // namespace helios::learn
