#pragma once

#include <Eigen/Core>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "trustmon/error.hpp"

namespace trustmon {

/// Throws ConfigError naming the first key of `object` not in `allowed`.
inline void check_config_keys(const nlohmann::json& object,
                              const std::vector<std::string_view>& allowed,
                              std::string_view where) {
  if (!object.is_object()) {
    throw ConfigError(std::string(where) + " must be a JSON object");
  }
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto name : allowed) known = known || key == name;
    if (!known) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

/// Reads object[key] as T, or returns `fallback` when the key is absent.
template <typename T>
T config_value(const nlohmann::json& object, const char* key, T fallback,
               std::string_view where) {
  auto it = object.find(key);
  if (it == object.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + std::string(where));
  }
}

inline nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline nlohmann::ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& doc) {
  const auto values = doc.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

/// Rows of equal length; `cols` fixes the width for an empty matrix.
inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& doc, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(doc.size()), cols);
  for (std::size_t r = 0; r < doc.size(); ++r) {
    const auto row = doc[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError("matrix row " + std::to_string(r) + " has the wrong width");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

}  // namespace trustmon
