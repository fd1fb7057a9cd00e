#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace caai {

enum class ParameterKind { Integer, Real, Categorical };

using ParamValue = std::variant<double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

/// One tunable parameter of an algorithm, as stored in the knowledge base.
struct ParameterSpec {
  std::string name;
  ParameterKind kind = ParameterKind::Real;
  double min = 0.0;
  double max = 0.0;
  ParamValue default_value = 0.0;
  std::vector<std::string> categories;

  /// Throws SchemaError when the spec is internally inconsistent.
  void validate() const;
  /// Throws RangeError when `v` does not fit the spec.
  void check(const ParamValue& v) const;

  bool operator==(const ParameterSpec&) const = default;
};

std::string to_string(ParameterKind kind);
ParameterKind parameter_kind_from_string(const std::string& s);
std::string format_param(const ParamValue& v);
/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace caai
