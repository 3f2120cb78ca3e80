#pragma once

#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <string>

namespace mpopf {

using Json = nlohmann::json;

namespace detail {

inline void emit_string(std::string &out, const std::string &s) {
  // Reuse the library's escaping for strings.
  out += Json(s).dump();
}

inline void emit(std::string &out, const Json &j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char *nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
  case Json::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{";
    out += nl;
    bool first = true;
    // nlohmann objects iterate in key order already.
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) {
        out += ",";
        out += nl;
      }
      first = false;
      out += pad;
      emit_string(out, it.key());
      out += indent > 0 ? ": " : ":";
      emit(out, it.value(), indent, depth + 1);
    }
    out += nl;
    out += close;
    out += "}";
    return;
  }
  case Json::value_t::array: {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[";
    out += nl;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i)
        out += ",";
      if (i)
        out += nl;
      out += pad;
      emit(out, j[i], indent, depth + 1);
    }
    out += nl;
    out += close;
    out += "]";
    return;
  }
  case Json::value_t::number_float: {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      out += "null";
      return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    // Keep floats recognizable as floats on re-read.
    if (s.find_first_of(".eEn") == std::string::npos)
      s += ".0";
    out += s;
    return;
  }
  default:
    out += j.dump();
  }
}

} // namespace detail

// Sorted keys, 17 significant digits, non-finite numbers as null.
inline std::string emit_json(const Json &j, int indent = 1) {
  std::string out;
  detail::emit(out, j, indent, 0);
  out += "\n";
  return out;
}

inline Json complex_json(std::complex<double> z) { return Json::array({z.real(), z.imag()}); }

// Infinite values become null.
inline Json bound_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace mpopf
