#include "caai/parameters.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "caai/errors.hpp"

namespace caai {

void ParameterSpec::validate() const {
  if (name.empty()) throw SchemaError("parameter without a name");
  if (kind == ParameterKind::Categorical) {
    if (categories.empty()) throw SchemaError("categorical parameter '" + name + "' has no categories");
    const auto* d = std::get_if<std::string>(&default_value);
    if (d == nullptr || std::find(categories.begin(), categories.end(), *d) == categories.end())
      throw SchemaError("default of '" + name + "' is not one of its categories");
    return;
  }
  if (!(min <= max)) throw SchemaError("parameter '" + name + "' has min > max");
  const auto* d = std::get_if<double>(&default_value);
  if (d == nullptr) throw SchemaError("numeric parameter '" + name + "' has a non-numeric default");
  if (*d < min || *d > max) throw SchemaError("default of '" + name + "' lies outside [min, max]");
  if (kind == ParameterKind::Integer && (*d != std::floor(*d) || min != std::floor(min) || max != std::floor(max)))
    throw SchemaError("integer parameter '" + name + "' has fractional bounds or default");
}

void ParameterSpec::check(const ParamValue& v) const {
  if (kind == ParameterKind::Categorical) {
    const auto* s = std::get_if<std::string>(&v);
    if (s == nullptr || std::find(categories.begin(), categories.end(), *s) == categories.end())
      throw RangeError("value for '" + name + "' is not an allowed category");
    return;
  }
  const auto* d = std::get_if<double>(&v);
  if (d == nullptr) throw RangeError("value for '" + name + "' must be numeric");
  if (!(*d >= min && *d <= max)) throw RangeError("value for '" + name + "' outside [" + format_param(min) + ", " +
                                                  format_param(max) + "]");
  if (kind == ParameterKind::Integer && *d != std::floor(*d))
    throw RangeError("value for '" + name + "' must be an integer");
}

std::string to_string(ParameterKind kind) {
  switch (kind) {
    case ParameterKind::Integer: return "int";
    case ParameterKind::Real: return "real";
    case ParameterKind::Categorical: return "categorical";
  }
  return "real";
}

ParameterKind parameter_kind_from_string(const std::string& s) {
  if (s == "int" || s == "integer") return ParameterKind::Integer;
  if (s == "real" || s == "float" || s == "double") return ParameterKind::Real;
  if (s == "categorical" || s == "factor") return ParameterKind::Categorical;
  throw SchemaError("unknown parameter type '" + s + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_param(const ParamValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return format_double(std::get<double>(v));
}

}  // namespace caai
