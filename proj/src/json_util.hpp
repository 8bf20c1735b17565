#pragma once

// Strict accessors for configuration documents. Every failure names the
// offending field.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "favard/errors.hpp"
#include "favard/norms.hpp"
#include "json.hpp"

namespace favard::detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& key, const std::string& context = "") {
  if (!obj.is_object()) throw ValidationError(context.empty() ? key : context, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(context.empty() ? key : context + "." + key, "required field is missing");
  }
  return *it;
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& context) {
  if (!obj.is_object()) throw ValidationError(context, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto a : allowed) known = known || a == it.key();
    if (!known) throw ValidationError(context + "." + it.key(), "unknown field");
  }
}

inline double real(const json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ValidationError(field, "expected an integer");
  return j.get<int>();
}

inline std::string string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ValidationError(field, "expected a string");
  return j.get<std::string>();
}

inline std::vector<double> real_list(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(real(e, field));
  return out;
}

inline Vector vector(const json& j, const std::string& field) {
  const auto v = real_list(j, field);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Matrix matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw ValidationError(field, "expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = real_list(j[static_cast<std::size_t>(i)], field);
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(field, "rows have unequal length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace favard::detail
