#pragma once

#include "mpopf/report.hpp"

#include <string>

namespace mpopf {

enum ExitCode : int { kExitExact = 0, kExitNotRankOne = 2, kExitCheckFailed = 3, kExitSolverFailure = 4, kExitInput = 5 };

struct RunOptions {
  SolverOptions solver;
  double eps0 = 1e-2;
  double ratio = 0.5;
  int steps = 10;
};

namespace detail {

inline RunReport report_header(const ParsedCase &pc, const std::string &command, const std::string &digest) {
  RunReport r;
  r.command = command;
  r.input_digest = digest;
  r.phases = pc.data.m();
  r.bus_names = pc.data.network.names;
  r.warnings = pc.warnings;
  return r;
}

// Fills solver, rank, actives, voltages and KKT from a converged base solve.
inline void fill_solution(RunReport &r, const OpfCase &c, const Relaxation &relax, const SdpSolution &sol) {
  r.solver = solver_stats(sol);
  if (!sol.converged()) {
    r.exit_code = kExitSolverFailure;
    return;
  }
  r.active = active_constraints(relax.problem, sol.X);
  try {
    const RankCertificate cert = certify_rank1(sol.X);
    r.rank = rank_summary(cert);
    r.exit_code = cert.pass ? kExitExact : kExitNotRankOne;
    if (cert.pass) {
      try {
        r.voltages = voltage_entries(recover_voltages(cert, sol.X, c.v_ref), c.m());
      } catch (const RecoveryMismatch &e) {
        r.warnings.push_back(std::string("voltage recovery: ") + e.what());
      }
    }
  } catch (const ZeroMatrix &e) {
    r.warnings.push_back(e.what());
    r.exit_code = kExitNotRankOne;
  }
  const DualMatrixBundle d = assemble_dual_matrix(c, relax, sol.multipliers);
  r.kkt = kkt_summary(kkt_check(d.A, sol.X));
}

inline void add_slater(RunReport &r, ConditionReport &cr, const OpfCase &c, const SolverOptions &opt) {
  try {
    const SlaterResult s = slater_margin(c, opt);
    set_slater(cr, s.margin);
    if (s.lower_bound_only)
      r.warnings.push_back("Slater margin is a lower bound taken from the returned point");
  } catch (const Error &e) {
    r.warnings.push_back(e.what());
  }
}

} // namespace detail

inline RunReport run_solve(const ParsedCase &pc, const std::string &digest, const RunOptions &opt = {}) {
  RunReport r = detail::report_header(pc, "solve", digest);
  const Relaxation relax = build_relaxation(pc.data);
  detail::fill_solution(r, pc.data, relax, solve(relax.problem, opt.solver));
  return r;
}

inline RunReport run_check(const ParsedCase &pc, const std::string &digest, const RunOptions &opt = {}) {
  RunReport r = detail::report_header(pc, "check", digest);
  const OpfCase &c = pc.data;
  const Topology topo = validate_tree(c.network);
  ConditionReport cr = check_conditions(c, critical_sets(c, nullptr), nullptr, topo, CheckMode::Apriori);
  detail::add_slater(r, cr, c, opt.solver);
  if (cr.a1.verdict != Verdict::Pass)
    cr.corollary.verdict = Verdict::Fail;
  r.exit_code = cr.corollary.verdict == Verdict::Pass ? kExitExact : kExitCheckFailed;
  r.conditions = cr;
  return r;
}

inline RunReport run_certify(const ParsedCase &pc, const std::string &digest, const RunOptions &opt = {}) {
  RunReport r = detail::report_header(pc, "certify", digest);
  const OpfCase &c = pc.data;
  const Relaxation relax = build_relaxation(c);
  const SdpSolution sol = solve(relax.problem, opt.solver);
  detail::fill_solution(r, c, relax, sol);
  if (!sol.converged())
    return r;
  const Topology topo = validate_tree(c.network);
  try {
    const ActivityFlags flags = detect_active_sets(sol.X, c, relax.Y);
    ConditionReport cr = check_conditions(c, critical_sets(c, &flags), &flags, topo, CheckMode::Aposteriori);
    detail::add_slater(r, cr, c, opt.solver);
    r.conditions = cr;
  } catch (const DegenerateActivity &e) {
    r.warnings.push_back(std::string("conditions not evaluated: ") + e.what());
  }
  return r;
}

inline RunReport run_perturb(const ParsedCase &pc, const std::string &digest, const RunOptions &opt = {}) {
  RunReport r = detail::report_header(pc, "perturb", digest);
  const OpfCase &c = pc.data;
  BaseSolve base;
  base.relax = build_relaxation(c);
  base.solution = solve(base.relax.problem, opt.solver);
  detail::fill_solution(r, c, base.relax, base.solution);
  if (!base.solution.converged())
    return r;
  try {
    base.flags = detect_active_sets(base.solution.X, c, base.relax.Y);
  } catch (const DegenerateActivity &e) {
    r.error = e.what();
    r.exit_code = kExitSolverFailure;
    return r;
  }
  const Topology topo = validate_tree(c.network);
  PerturbationPlan plan;
  plan.schedule = default_schedule(opt.eps0, opt.ratio, opt.steps);
  try {
    plan.C1 = build_C1(c, base.flags, base.relax.Y, topo);
  } catch (const A3Violation &e) {
    r.error = e.what();
    r.exit_code = kExitCheckFailed;
    return r;
  }
  r.perturbation = run_perturbation_sweep(c, base, plan, topo, opt.solver);
  return r;
}

} // namespace mpopf
