#pragma once

#include "mpopf/case_io.hpp"
#include "mpopf/perturbation.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mpopf {

inline constexpr const char *kToolVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

struct SolverStats {
  std::string status;
  int iterations = 0;
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;

  bool operator==(const SolverStats &) const = default;
};

struct RankSummary {
  std::vector<double> top; // leading eigenvalues, descending
  double ratio = 1.0;
  bool pass = false;

  bool operator==(const RankSummary &) const = default;
};

struct ActiveConstraint {
  int bus = 0;
  int phase = 0;
  std::string kind;
  double value = 0.0;
  double bound = 0.0;

  bool operator==(const ActiveConstraint &) const = default;
};

struct VoltageEntry {
  int bus = 0;
  int phase = 0;
  double re = 0.0;
  double im = 0.0;
  double magnitude = 0.0;
  double angle_deg = 0.0;

  bool operator==(const VoltageEntry &) const = default;
};

struct KktSummary {
  double trace_AW = 0.0;
  double trace_W = 0.0;
  double lambda_min_A = 0.0;
  double norm_A = 0.0;
  double lambda_min_W = 0.0;
  double norm_W = 0.0;
  bool pass = false;

  bool operator==(const KktSummary &) const = default;
};

struct RunReport {
  std::string tool_version = kToolVersion;
  std::string command;
  std::string input_digest;
  int phases = 0;
  std::vector<std::string> bus_names;
  std::optional<SolverStats> solver;
  std::optional<RankSummary> rank;
  std::optional<ConditionReport> conditions;
  std::vector<ActiveConstraint> active;
  std::vector<VoltageEntry> voltages;
  std::optional<KktSummary> kkt;
  std::optional<PerturbationReport> perturbation;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
  int exit_code = 0;

  bool operator==(const RunReport &) const = default;
};

inline SolverStats solver_stats(const SdpSolution &s) {
  return {status_name(s.status), s.iterations,          s.objective,          s.dual_objective,
          s.gap,                 s.primal_infeasibility, s.dual_infeasibility, s.complementarity};
}

inline RankSummary rank_summary(const RankCertificate &cert, int keep = 3) {
  RankSummary r;
  for (Eigen::Index k = 0; k < cert.eigenvalues.size() && k < keep; ++k)
    r.top.push_back(cert.eigenvalues(k));
  r.ratio = cert.ratio;
  r.pass = cert.pass;
  return r;
}

inline KktSummary kkt_summary(const KktCheck &k) {
  return {k.trace_AW, k.trace_W, k.lambda_min_A, k.norm_A, k.lambda_min_W, k.norm_W, k.pass};
}

inline const char *kind_name(ConstraintTag::Kind k) {
  using K = ConstraintTag::Kind;
  switch (k) {
  case K::VoltageUpper:
    return "v_max";
  case K::VoltageLower:
    return "v_min";
  case K::PUpper:
    return "p_max";
  case K::PLower:
    return "p_min";
  case K::QUpper:
    return "q_max";
  case K::QLower:
    return "q_min";
  default:
    return "other";
  }
}

// Inequality rows of the relaxation that hold with equality at W.
inline std::vector<ActiveConstraint> active_constraints(const SdpProblem &P, const CMat &W,
                                                        double tol_act = kTolActive) {
  std::vector<ActiveConstraint> out;
  for (const auto &con : P.constraints) {
    if (con.sense == Sense::Eq)
      continue;
    const double v = (con.A * W).trace().real();
    if (near_bound(v, con.b, tol_act))
      out.push_back({con.tag.bus, con.tag.phase, kind_name(con.tag.kind), v, con.b});
  }
  return out;
}

inline std::vector<VoltageEntry> voltage_entries(const CVec &V, int m) {
  std::vector<VoltageEntry> out;
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    const int ii = static_cast<int>(i);
    out.push_back({ii / m, ii % m, V(i).real(), V(i).imag(), std::abs(V(i)),
                   std::arg(V(i)) * 180.0 / std::numbers::pi});
  }
  return out;
}

namespace detail {

inline Json num(double v) { return bound_json(v); }

inline double get_num(const Json &j, const std::string &path) {
  if (j.is_null())
    return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number())
    throw InputError(path + ": expected a number");
  return j.get<double>();
}

inline const Json &field(const Json &j, const std::string &key, const std::string &path) {
  return member(j, key, path);
}

inline Json int_list(const std::vector<int> &v) { return Json(v); }

inline std::vector<int> get_int_list(const Json &j, const std::string &path) {
  if (!j.is_array())
    throw InputError(path + ": expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number_integer())
      throw InputError(ptr(path, i) + ": expected an integer");
    out.push_back(j[i].get<int>());
  }
  return out;
}

inline Verdict parse_verdict(const Json &j, const std::string &path) {
  for (Verdict v : {Verdict::NotRun, Verdict::Pass, Verdict::Fail})
    if (j.is_string() && j.get<std::string>() == verdict_name(v))
      return v;
  throw InputError(path + ": unknown verdict");
}

inline Json condition_json(const ConditionResult &r) {
  Json edges = Json::array();
  for (auto [a, b] : r.edges)
    edges.push_back({a, b});
  return {{"verdict", verdict_name(r.verdict)},
          {"buses", int_list(r.buses)},
          {"edges", edges},
          {"bus_phases", int_list(r.bus_phases)}};
}

inline ConditionResult parse_condition(const Json &j, const std::string &path) {
  ConditionResult r;
  r.verdict = parse_verdict(field(j, "verdict", path), ptr(path, "verdict"));
  r.buses = get_int_list(field(j, "buses", path), ptr(path, "buses"));
  r.bus_phases = get_int_list(field(j, "bus_phases", path), ptr(path, "bus_phases"));
  const Json &e = field(j, "edges", path);
  if (!e.is_array())
    throw InputError(ptr(path, "edges") + ": expected an array");
  for (std::size_t i = 0; i < e.size(); ++i) {
    auto pair = get_int_list(e[i], ptr(ptr(path, "edges"), i));
    if (pair.size() != 2)
      throw InputError(ptr(ptr(path, "edges"), i) + ": expected a pair");
    r.edges.emplace_back(pair[0], pair[1]);
  }
  return r;
}

inline std::optional<double> get_opt_num(const Json &j, const std::string &key, const std::string &path) {
  const Json &v = field(j, key, path);
  if (v.is_null())
    return std::nullopt;
  return get_num(v, ptr(path, key));
}

inline bool get_bool(const Json &j, const std::string &key, const std::string &path) {
  const Json &v = field(j, key, path);
  if (!v.is_boolean())
    throw InputError(ptr(path, key) + ": expected a boolean");
  return v.get<bool>();
}

inline int get_int(const Json &j, const std::string &key, const std::string &path) {
  const Json &v = field(j, key, path);
  if (!v.is_number_integer())
    throw InputError(ptr(path, key) + ": expected an integer");
  return v.get<int>();
}

inline std::string get_str(const Json &j, const std::string &key, const std::string &path) {
  const Json &v = field(j, key, path);
  if (!v.is_string())
    throw InputError(ptr(path, key) + ": expected a string");
  return v.get<std::string>();
}

inline SolveStatus parse_status(const std::string &s, const std::string &path) {
  for (SolveStatus st : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded,
                         SolveStatus::MaxIterations, SolveStatus::NumericalFailure})
    if (s == status_name(st))
      return st;
  throw InputError(path + ": unknown solver status");
}

template <class T, class F> Json opt_json(const std::optional<T> &v, F f) { return v ? f(*v) : Json(nullptr); }

} // namespace detail

inline Json report_to_json(const RunReport &r) {
  using namespace detail;
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool_version"] = r.tool_version;
  j["command"] = r.command;
  j["input_digest"] = r.input_digest;
  j["phases"] = r.phases;
  j["bus_names"] = r.bus_names;
  j["solver"] = opt_json(r.solver, [](const SolverStats &s) {
    return Json{{"status", s.status},
                {"iterations", s.iterations},
                {"objective", num(s.objective)},
                {"dual_objective", num(s.dual_objective)},
                {"gap", num(s.gap)},
                {"primal_infeasibility", num(s.primal_infeasibility)},
                {"dual_infeasibility", num(s.dual_infeasibility)},
                {"complementarity", num(s.complementarity)}};
  });
  j["rank"] = opt_json(r.rank, [](const RankSummary &k) {
    Json top = Json::array();
    for (double v : k.top)
      top.push_back(num(v));
    return Json{{"top_eigenvalues", top}, {"ratio", num(k.ratio)}, {"pass", k.pass}};
  });
  j["conditions"] = opt_json(r.conditions, [](const ConditionReport &c) {
    return Json{{"mode", c.mode == CheckMode::Apriori ? "a-priori" : "a-posteriori"},
                {"a1", condition_json(c.a1)},
                {"a2", condition_json(c.a2)},
                {"a3", condition_json(c.a3)},
                {"a4", condition_json(c.a4)},
                {"a5", condition_json(c.a5)},
                {"corollary", condition_json(c.corollary)},
                {"slater_margin", c.slater_margin ? num(*c.slater_margin) : Json(nullptr)}};
  });
  Json act = Json::array();
  for (const auto &a : r.active)
    act.push_back({{"bus", a.bus}, {"phase", a.phase}, {"kind", a.kind}, {"value", num(a.value)}, {"bound", num(a.bound)}});
  j["active_constraints"] = act;
  Json volts = Json::array();
  for (const auto &v : r.voltages)
    volts.push_back({{"bus", v.bus},
                     {"phase", v.phase},
                     {"re", num(v.re)},
                     {"im", num(v.im)},
                     {"magnitude", num(v.magnitude)},
                     {"angle_deg", num(v.angle_deg)}});
  j["voltages"] = volts;
  j["kkt"] = opt_json(r.kkt, [](const KktSummary &k) {
    return Json{{"trace_AW", num(k.trace_AW)},   {"trace_W", num(k.trace_W)},
                {"lambda_min_A", num(k.lambda_min_A)}, {"norm_A", num(k.norm_A)},
                {"lambda_min_W", num(k.lambda_min_W)}, {"norm_W", num(k.norm_W)},
                {"pass", k.pass}};
  });
  j["perturbation"] = opt_json(r.perturbation, [](const PerturbationReport &p) {
    Json entries = Json::array();
    for (const auto &e : p.entries)
      entries.push_back({{"eps", num(e.eps)},
                         {"status", status_name(e.status)},
                         {"objective", num(e.objective)},
                         {"ratio", e.ratio ? num(*e.ratio) : Json(nullptr)},
                         {"rank_pass", e.rank_pass},
                         {"signs", verdict_name(e.signs)},
                         {"g_invertible", verdict_name(e.g_invertible)},
                         {"null_support_connected", verdict_name(e.null_support_connected)},
                         {"actives_match", e.actives_match},
                         {"distance", num(e.distance)},
                         {"note", e.note}});
    return Json{{"entries", entries},
                {"stability_onset", p.stability_onset ? num(*p.stability_onset) : Json(nullptr)},
                {"converges", p.converges}};
  });
  j["warnings"] = r.warnings;
  j["error"] = r.error ? Json(*r.error) : Json(nullptr);
  j["exit_code"] = r.exit_code;
  return j;
}

inline RunReport report_from_json(const Json &j) {
  using namespace detail;
  RunReport r;
  if (get_int(j, "schema_version", "") != kReportSchemaVersion)
    throw InputError("/schema_version: unsupported report schema version");
  r.tool_version = get_str(j, "tool_version", "");
  r.command = get_str(j, "command", "");
  r.input_digest = get_str(j, "input_digest", "");
  r.phases = get_int(j, "phases", "");
  const Json &names = field(j, "bus_names", "");
  if (!names.is_array())
    throw InputError("/bus_names: expected an array");
  for (const auto &n : names)
    r.bus_names.push_back(n.get<std::string>());

  if (const Json &s = field(j, "solver", ""); !s.is_null()) {
    const std::string p = "/solver";
    SolverStats st;
    st.status = get_str(s, "status", p);
    parse_status(st.status, ptr(p, "status"));
    st.iterations = get_int(s, "iterations", p);
    st.objective = get_num(field(s, "objective", p), ptr(p, "objective"));
    st.dual_objective = get_num(field(s, "dual_objective", p), ptr(p, "dual_objective"));
    st.gap = get_num(field(s, "gap", p), ptr(p, "gap"));
    st.primal_infeasibility = get_num(field(s, "primal_infeasibility", p), ptr(p, "primal_infeasibility"));
    st.dual_infeasibility = get_num(field(s, "dual_infeasibility", p), ptr(p, "dual_infeasibility"));
    st.complementarity = get_num(field(s, "complementarity", p), ptr(p, "complementarity"));
    r.solver = st;
  }
  if (const Json &k = field(j, "rank", ""); !k.is_null()) {
    RankSummary rs;
    const Json &top = field(k, "top_eigenvalues", "/rank");
    for (std::size_t i = 0; i < top.size(); ++i)
      rs.top.push_back(get_num(top[i], ptr("/rank/top_eigenvalues", i)));
    rs.ratio = get_num(field(k, "ratio", "/rank"), "/rank/ratio");
    rs.pass = get_bool(k, "pass", "/rank");
    r.rank = rs;
  }
  if (const Json &c = field(j, "conditions", ""); !c.is_null()) {
    const std::string p = "/conditions";
    ConditionReport cr;
    const std::string mode = get_str(c, "mode", p);
    if (mode != "a-priori" && mode != "a-posteriori")
      throw InputError(p + "/mode: unknown mode");
    cr.mode = mode == "a-priori" ? CheckMode::Apriori : CheckMode::Aposteriori;
    cr.a1 = parse_condition(field(c, "a1", p), ptr(p, "a1"));
    cr.a2 = parse_condition(field(c, "a2", p), ptr(p, "a2"));
    cr.a3 = parse_condition(field(c, "a3", p), ptr(p, "a3"));
    cr.a4 = parse_condition(field(c, "a4", p), ptr(p, "a4"));
    cr.a5 = parse_condition(field(c, "a5", p), ptr(p, "a5"));
    cr.corollary = parse_condition(field(c, "corollary", p), ptr(p, "corollary"));
    cr.slater_margin = get_opt_num(c, "slater_margin", p);
    r.conditions = cr;
  }
  const Json &act = field(j, "active_constraints", "");
  for (std::size_t i = 0; i < act.size(); ++i) {
    const std::string p = ptr("/active_constraints", i);
    r.active.push_back({get_int(act[i], "bus", p), get_int(act[i], "phase", p), get_str(act[i], "kind", p),
                        get_num(field(act[i], "value", p), ptr(p, "value")),
                        get_num(field(act[i], "bound", p), ptr(p, "bound"))});
  }
  const Json &volts = field(j, "voltages", "");
  for (std::size_t i = 0; i < volts.size(); ++i) {
    const std::string p = ptr("/voltages", i);
    const Json &v = volts[i];
    r.voltages.push_back({get_int(v, "bus", p), get_int(v, "phase", p), get_num(field(v, "re", p), ptr(p, "re")),
                          get_num(field(v, "im", p), ptr(p, "im")),
                          get_num(field(v, "magnitude", p), ptr(p, "magnitude")),
                          get_num(field(v, "angle_deg", p), ptr(p, "angle_deg"))});
  }
  if (const Json &k = field(j, "kkt", ""); !k.is_null()) {
    const std::string p = "/kkt";
    KktSummary ks;
    ks.trace_AW = get_num(field(k, "trace_AW", p), p);
    ks.trace_W = get_num(field(k, "trace_W", p), p);
    ks.lambda_min_A = get_num(field(k, "lambda_min_A", p), p);
    ks.norm_A = get_num(field(k, "norm_A", p), p);
    ks.lambda_min_W = get_num(field(k, "lambda_min_W", p), p);
    ks.norm_W = get_num(field(k, "norm_W", p), p);
    ks.pass = get_bool(k, "pass", p);
    r.kkt = ks;
  }
  if (const Json &pj = field(j, "perturbation", ""); !pj.is_null()) {
    PerturbationReport pr;
    const Json &entries = field(pj, "entries", "/perturbation");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const std::string p = ptr("/perturbation/entries", i);
      const Json &e = entries[i];
      PerturbationEntry pe;
      pe.eps = get_num(field(e, "eps", p), ptr(p, "eps"));
      pe.status = parse_status(get_str(e, "status", p), ptr(p, "status"));
      pe.objective = get_num(field(e, "objective", p), ptr(p, "objective"));
      pe.ratio = get_opt_num(e, "ratio", p);
      pe.rank_pass = get_bool(e, "rank_pass", p);
      pe.signs = parse_verdict(field(e, "signs", p), ptr(p, "signs"));
      pe.g_invertible = parse_verdict(field(e, "g_invertible", p), ptr(p, "g_invertible"));
      pe.null_support_connected = parse_verdict(field(e, "null_support_connected", p), ptr(p, "null_support_connected"));
      pe.actives_match = get_bool(e, "actives_match", p);
      pe.distance = get_num(field(e, "distance", p), ptr(p, "distance"));
      pe.note = get_str(e, "note", p);
      pr.entries.push_back(pe);
    }
    pr.stability_onset = get_opt_num(pj, "stability_onset", "/perturbation");
    pr.converges = get_bool(pj, "converges", "/perturbation");
    r.perturbation = pr;
  }
  for (const auto &w : field(j, "warnings", ""))
    r.warnings.push_back(w.get<std::string>());
  if (const Json &e = field(j, "error", ""); !e.is_null())
    r.error = e.get<std::string>();
  r.exit_code = get_int(j, "exit_code", "");
  return r;
}

inline std::string report_json_text(const RunReport &r) { return emit_json(report_to_json(r)); }

inline RunReport parse_report_text(const std::string &text) {
  try {
    return report_from_json(Json::parse(text));
  } catch (const Json::exception &e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

namespace detail {

inline std::string fmt_g(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

inline std::string bus_label(const RunReport &r, int bus) {
  return bus >= 0 && bus < static_cast<int>(r.bus_names.size()) ? r.bus_names[bus] : std::to_string(bus);
}

inline std::string bus_phase_label(const RunReport &r, int bus, int phase) {
  return bus_label(r, bus) + "/" + std::to_string(phase);
}

inline void condition_line(std::ostringstream &os, const RunReport &r, const char *name, const ConditionResult &c,
                           const std::string &extra = "") {
  if (c.verdict == Verdict::NotRun)
    return;
  os << "  " << name << "  " << verdict_name(c.verdict) << extra;
  if (!c.buses.empty()) {
    os << "  buses {";
    for (std::size_t i = 0; i < c.buses.size(); ++i)
      os << (i ? ", " : "") << bus_label(r, c.buses[i]);
    os << "}";
  }
  for (auto [a, b] : c.edges)
    os << "  edge " << bus_label(r, a) << "-" << bus_label(r, b);
  os << "\n";
}

} // namespace detail

inline std::string report_text(const RunReport &r) {
  using namespace detail;
  std::ostringstream os;
  os << "mpopf " << r.tool_version << "  " << r.command << "\n";
  if (!r.input_digest.empty())
    os << "input sha256 " << r.input_digest << "\n";
  if (r.error)
    os << "error: " << *r.error << "\n";
  if (r.solver) {
    const auto &s = *r.solver;
    os << "solver " << s.status << " after " << s.iterations << " iterations, objective " << fmt_g(s.objective, 10)
       << ", gap " << fmt_g(s.gap, 3) << "\n";
  }
  if (r.rank) {
    const auto &k = *r.rank;
    os << "top eigenvalues";
    for (std::size_t i = 0; i < k.top.size() && i < 2; ++i)
      os << "  " << fmt_g(k.top[i], 4);
    os << "  (ratio " << fmt_g(k.ratio, 3) << ", " << (k.pass ? "rank one" : "not rank one") << ")\n";
  }
  if (r.conditions) {
    const auto &c = *r.conditions;
    os << "conditions (" << (c.mode == CheckMode::Apriori ? "a-priori" : "a-posteriori") << ")\n";
    condition_line(os, r, "A1", c.a1, c.slater_margin ? " (Slater margin " + fmt_g(*c.slater_margin, 4) + ")" : "");
    condition_line(os, r, "A2", c.a2);
    condition_line(os, r, "A3", c.a3);
    condition_line(os, r, "A4", c.a4);
    condition_line(os, r, "A5", c.a5);
    condition_line(os, r, "corollary", c.corollary);
  }
  if (r.solver && r.solver->status == "optimal") {
    std::vector<const ActiveConstraint *> inj, volt;
    for (const auto &a : r.active)
      (a.kind[0] == 'v' ? volt : inj).push_back(&a);
    os << "active injection constraints: " << inj.size() << "\n";
    for (const auto *a : inj)
      os << "  " << bus_phase_label(r, a->bus, a->phase) << " " << a->kind << " = " << fmt_g(a->bound, 8) << "\n";
    os << "active voltage bounds: " << volt.size();
    for (std::size_t i = 0; i < volt.size(); ++i)
      os << (i % 6 ? "  " : "\n  ") << bus_phase_label(r, volt[i]->bus, volt[i]->phase) << " " << volt[i]->kind;
    os << "\n";
  }
  if (!r.voltages.empty()) {
    os << "voltages (magnitude, angle deg)\n";
    for (const auto &v : r.voltages)
      os << "  " << bus_phase_label(r, v.bus, v.phase) << "  " << fmt_g(v.magnitude, 6) << "  "
         << fmt_g(v.angle_deg, 6) << "\n";
  }
  if (r.kkt)
    os << "kkt tr(AW) " << fmt_g(r.kkt->trace_AW, 3) << ", tr(W) " << fmt_g(r.kkt->trace_W, 6) << ", min eig A "
       << fmt_g(r.kkt->lambda_min_A, 3) << ", " << (r.kkt->pass ? "pass" : "fail") << "\n";
  if (r.perturbation) {
    os << "perturbation sweep\n";
    for (const auto &e : r.perturbation->entries) {
      os << "  eps " << fmt_g(e.eps, 4) << "  " << status_name(e.status);
      if (e.ratio)
        os << "  ratio " << fmt_g(*e.ratio, 3);
      os << "  signs " << verdict_name(e.signs) << "  G-invertible " << verdict_name(e.g_invertible)
         << "  actives " << (e.actives_match ? "same" : "changed");
      if (!e.note.empty())
        os << "  (" << e.note << ")";
      os << "\n";
    }
    if (r.perturbation->stability_onset)
      os << "  actives stable from eps " << fmt_g(*r.perturbation->stability_onset, 4) << "\n";
  }
  for (const auto &w : r.warnings)
    os << "warning: " << w << "\n";
  os << "exit code " << r.exit_code << "\n";
  return os.str();
}

inline void write_report(const RunReport &r, const std::string &path, const std::string &format) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error("cannot write " + path);
  out << (format == "text" ? report_text(r) : report_json_text(r));
  if (!out)
    throw Error("write failed for " + path);
}

} // namespace mpopf
