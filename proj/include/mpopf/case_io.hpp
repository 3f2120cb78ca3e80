#pragma once

#include "mpopf/json_emit.hpp"
#include "mpopf/opf.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace mpopf {

inline constexpr int kCaseSchemaVersion = 1;

namespace detail {

// JSON-pointer path helpers for error messages.
inline std::string ptr(const std::string &base, const std::string &key) { return base + "/" + key; }
inline std::string ptr(const std::string &base, std::size_t i) { return base + "/" + std::to_string(i); }

inline const Json &member(const Json &obj, const std::string &key, const std::string &path) {
  if (!obj.is_object())
    throw InputError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw InputError(ptr(path, key) + ": missing");
  return *it;
}

inline double number(const Json &j, const std::string &path) {
  if (!j.is_number())
    throw InputError(path + ": expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v))
    throw InputError(path + ": not finite");
  return v;
}

inline cplx complex_value(const Json &j, const std::string &path) {
  if (!j.is_array() || j.size() != 2)
    throw InputError(path + ": expected [re, im]");
  return {number(j[0], ptr(path, 0)), number(j[1], ptr(path, 1))};
}

// Length-m array of numbers; null maps to null_value, or is rejected when not allowed.
inline std::vector<double> phase_array(const Json &obj, const std::string &key, const std::string &path, int m,
                                       bool nullable, double null_value, bool required, double fallback) {
  const std::string p = ptr(path, key);
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required)
      throw InputError(p + ": missing");
    return std::vector<double>(static_cast<std::size_t>(m), fallback);
  }
  if (!it->is_array() || static_cast<int>(it->size()) != m)
    throw InputError(p + ": expected an array with one entry per phase");
  std::vector<double> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const Json &v = (*it)[i];
    if (v.is_null()) {
      if (!nullable)
        throw InputError(ptr(p, i) + ": null not allowed");
      out.push_back(null_value);
    } else {
      out.push_back(number(v, ptr(p, i)));
    }
  }
  return out;
}

} // namespace detail

struct ParsedCase {
  OpfCase data;
  std::vector<std::string> warnings;
};

inline ParsedCase case_from_json(const Json &root) {
  using namespace detail;
  ParsedCase out;
  OpfCase &c = out.data;
  const Json &ver = member(root, "schema_version", "");
  if (!ver.is_number_integer() || ver.get<int>() != kCaseSchemaVersion)
    throw InputError("/schema_version: unsupported schema version");
  const Json &mj = member(root, "phases", "");
  if (!mj.is_number_integer() || mj.get<int>() < 1)
    throw InputError("/phases: expected a positive integer");
  const int m = mj.get<int>();

  bool magnitude = false;
  if (auto it = root.find("voltage_bound_form"); it != root.end()) {
    if (*it == "magnitude")
      magnitude = true;
    else if (*it != "squared")
      throw InputError("/voltage_bound_form: expected \"squared\" or \"magnitude\"");
  }

  const Json &buses = member(root, "buses", "");
  if (!buses.is_array() || buses.empty())
    throw InputError("/buses: expected a non-empty array");
  const int n = static_cast<int>(buses.size());
  std::vector<int> order(n, -1);
  for (int pos = 0; pos < n; ++pos) {
    const std::string p = ptr("/buses", static_cast<std::size_t>(pos));
    int idx = pos;
    if (auto it = buses[pos].find("index"); buses[pos].is_object() && it != buses[pos].end()) {
      if (!it->is_number_integer() || it->get<int>() < 0 || it->get<int>() >= n)
        throw InputError(ptr(p, "index") + ": out of range");
      idx = it->get<int>();
    }
    if (order[idx] != -1)
      throw InputError(ptr(p, "index") + ": duplicate index");
    order[idx] = pos;
  }

  auto &net = c.network;
  net.n = n;
  net.m = m;
  net.names.resize(n);
  const std::size_t N = static_cast<std::size_t>(n * m);
  for (auto *v : {&c.c_re, &c.c_im, &c.v_min, &c.v_max, &c.p_min, &c.p_max, &c.q_min, &c.q_max})
    v->assign(N, 0.0);
  std::map<std::string, int> by_name;
  for (int j = 0; j < n; ++j) {
    const Json &b = buses[order[j]];
    const std::string p = ptr("/buses", static_cast<std::size_t>(order[j]));
    const Json &name = member(b, "name", p);
    if (!name.is_string() || name.get<std::string>().empty())
      throw InputError(ptr(p, "name") + ": expected a non-empty string");
    net.names[j] = name.get<std::string>();
    if (!by_name.emplace(net.names[j], j).second)
      throw InputError(ptr(p, "name") + ": duplicate bus name");
    auto put = [&](std::vector<double> &dst, const std::vector<double> &src) {
      for (int phi = 0; phi < m; ++phi)
        dst[static_cast<std::size_t>(j * m + phi)] = src[phi];
    };
    put(c.c_re, phase_array(b, "c_re", p, m, false, 0, false, 0.0));
    put(c.c_im, phase_array(b, "c_im", p, m, false, 0, false, 0.0));
    auto vmin = phase_array(b, "v_min", p, m, false, 0, true, 0.0);
    auto vmax = phase_array(b, "v_max", p, m, false, 0, true, 0.0);
    for (int phi = 0; phi < m; ++phi) {
      if (vmin[phi] <= 0.0 || vmax[phi] <= 0.0)
        throw InputError(ptr(p, "v_min") + ": voltage bounds must be positive");
      if (vmin[phi] > vmax[phi])
        throw InputError(ptr(ptr(p, "v_min"), static_cast<std::size_t>(phi)) + ": bound order violated (v_min > v_max)");
      if (magnitude) {
        vmin[phi] *= vmin[phi];
        vmax[phi] *= vmax[phi];
      }
    }
    put(c.v_min, vmin);
    put(c.v_max, vmax);
    put(c.p_min, phase_array(b, "p_min", p, m, true, -kInf, false, -kInf));
    put(c.p_max, phase_array(b, "p_max", p, m, true, kInf, false, kInf));
    put(c.q_min, phase_array(b, "q_min", p, m, true, -kInf, false, -kInf));
    put(c.q_max, phase_array(b, "q_max", p, m, true, kInf, false, kInf));
    for (int phi = 0; phi < m; ++phi) {
      const std::size_t i = static_cast<std::size_t>(j * m + phi);
      if (c.p_min[i] > c.p_max[i])
        throw InputError(ptr(ptr(p, "p_min"), static_cast<std::size_t>(phi)) + ": bound order violated (p_min > p_max)");
      if (c.q_min[i] > c.q_max[i])
        throw InputError(ptr(ptr(p, "q_min"), static_cast<std::size_t>(phi)) + ": bound order violated (q_min > q_max)");
    }
  }

  const Json &ref = member(root, "slack_reference", "");
  if (!ref.is_array() || static_cast<int>(ref.size()) != m)
    throw InputError("/slack_reference: expected one [re, im] per phase");
  c.v_ref.resize(m);
  for (int phi = 0; phi < m; ++phi)
    c.v_ref(phi) = complex_value(ref[phi], ptr("/slack_reference", static_cast<std::size_t>(phi)));

  const Json &lines = member(root, "lines", "");
  if (!lines.is_array())
    throw InputError("/lines: expected an array");
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string p = ptr("/lines", li);
    Line l;
    for (auto [key, dst] : {std::pair<const char *, int *>{"from", &l.from}, {"to", &l.to}}) {
      const Json &v = member(lines[li], key, p);
      if (!v.is_string() || !by_name.count(v.get<std::string>()))
        throw InputError(ptr(p, key) + ": unknown bus");
      *dst = by_name[v.get<std::string>()];
    }
    const Json &y = member(lines[li], "y", p);
    const std::string yp = ptr(p, "y");
    if (!y.is_array() || static_cast<int>(y.size()) != m)
      throw InputError(yp + ": expected an m x m block");
    l.y.resize(m, m);
    for (int a = 0; a < m; ++a) {
      if (!y[a].is_array() || static_cast<int>(y[a].size()) != m)
        throw InputError(ptr(yp, static_cast<std::size_t>(a)) + ": expected m entries");
      for (int b = 0; b < m; ++b)
        l.y(a, b) = complex_value(y[a][b], ptr(ptr(yp, static_cast<std::size_t>(a)), static_cast<std::size_t>(b)));
    }
    net.lines.push_back(std::move(l));
  }

  validate_case(c);
  const Topology topo = validate_tree(net);
  if (!topo.is_tree)
    out.warnings.push_back("network is not a tree (" + topo.issue() + ")");
  return out;
}

inline Json case_to_json(const OpfCase &c) {
  const int m = c.m();
  Json root;
  root["schema_version"] = kCaseSchemaVersion;
  root["phases"] = m;
  root["voltage_bound_form"] = "squared";
  Json ref = Json::array();
  for (int phi = 0; phi < m; ++phi)
    ref.push_back(complex_json(c.v_ref(phi)));
  root["slack_reference"] = ref;
  Json buses = Json::array();
  for (int j = 0; j < c.n(); ++j) {
    Json b;
    b["name"] = c.network.names[j];
    b["index"] = j;
    auto arr = [&](const std::vector<double> &v) {
      Json a = Json::array();
      for (int phi = 0; phi < m; ++phi)
        a.push_back(bound_json(v[static_cast<std::size_t>(j * m + phi)]));
      return a;
    };
    b["c_re"] = arr(c.c_re);
    b["c_im"] = arr(c.c_im);
    b["v_min"] = arr(c.v_min);
    b["v_max"] = arr(c.v_max);
    b["p_min"] = arr(c.p_min);
    b["p_max"] = arr(c.p_max);
    b["q_min"] = arr(c.q_min);
    b["q_max"] = arr(c.q_max);
    buses.push_back(b);
  }
  root["buses"] = buses;
  Json lines = Json::array();
  for (const auto &l : c.network.lines) {
    Json y = Json::array();
    for (int a = 0; a < m; ++a) {
      Json row = Json::array();
      for (int b = 0; b < m; ++b)
        row.push_back(complex_json(l.y(a, b)));
      y.push_back(row);
    }
    lines.push_back({{"from", c.network.names[l.from]}, {"to", c.network.names[l.to]}, {"y", y}});
  }
  root["lines"] = lines;
  return root;
}

inline std::string serialize_case(const OpfCase &c) { return emit_json(case_to_json(c)); }

inline ParsedCase parse_case_text(const std::string &text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  return case_from_json(root);
}

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ParsedCase parse_case(const std::string &path) { return parse_case_text(read_file(path)); }

} // namespace mpopf
