#pragma once

#include "mpopf/exactness.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mpopf {

struct PerturbationPlan {
  CMat C1;
  std::vector<double> schedule; // decreasing, positive
};

inline std::vector<double> default_schedule(double eps0 = 1e-2, double ratio = 0.5, int steps = 10) {
  if (!(eps0 > 0.0) || !(ratio > 0.0 && ratio < 1.0) || steps < 1)
    throw InputError("schedule needs eps0 > 0, 0 < ratio < 1 and at least one step");
  std::vector<double> s;
  double e = eps0;
  for (int k = 0; k < steps; ++k, e *= ratio)
    s.push_back(e);
  return s;
}

// Edge blocks follow Y except that rows (columns) belonging to critical buses are
// rotated by the activity direction. Diagonal and non-edge blocks stay zero.
inline CMat build_C1(const OpfCase &c, const ActivityFlags &flags, const CMat &Y, const Topology &topo) {
  const int m = c.m(), N = c.dim();
  const CriticalSets sets = critical_sets(c, &flags);
  std::set<int> K = sets.objective;
  K.insert(sets.constraint.begin(), sets.constraint.end());
  auto quiet = [&](int i) { return c.c_re[i] == 0.0 && c.c_im[i] == 0.0 && flags.fp[i] == 0 && flags.fq[i] == 0; };
  CMat C1 = CMat::Zero(N, N);
  for (auto [j, k] : topo.edges) {
    const bool cj = K.count(j) > 0, ck = K.count(k) > 0;
    if (cj && ck)
      throw A3Violation("critical buses " + c.network.names[j] + " and " + c.network.names[k] + " are adjacent");
    CMat block = bus_block(Y, j, k, m);
    if (cj) {
      for (int phi = 0; phi < m; ++phi) {
        const int i = j * m + phi;
        if (!quiet(i))
          block.row(phi) *= cplx(flags.fp[i], flags.fq[i]);
      }
    } else if (ck) {
      const CMat Ykj = bus_block(Y, k, j, m);
      for (int phi = 0; phi < m; ++phi) {
        const int i = k * m + phi;
        const cplx f = quiet(i) ? cplx(1.0) : cplx(flags.fp[i], -flags.fq[i]);
        block.col(phi) = f * Ykj.row(phi).adjoint();
      }
    }
    C1.block(j * m, k * m, m, m) = block;
    C1.block(k * m, j * m, m, m) = block.adjoint();
  }
  return C1;
}

struct SignCheck {
  bool pass = true;
  // Flat bus-phase index and the violated rule.
  std::vector<std::pair<int, std::string>> failures;
};

// Inactive injection bounds carry zero multipliers; active ones point the same way
// as the flag.
inline SignCheck check_multiplier_signs(const ActivityFlags &flags, const DualMatrixBundle &d, double tol = 1e-6) {
  SignCheck r;
  const std::size_t N = flags.fp.size();
  double scale = 1.0;
  for (std::size_t i = 0; i < N; ++i)
    scale = std::max({scale, std::abs(d.mu_up[i]), std::abs(d.mu_lo[i]), std::abs(d.eta_up[i]), std::abs(d.eta_lo[i])});
  const double t = tol * scale;
  for (std::size_t i = 0; i < N; ++i) {
    const int ii = static_cast<int>(i);
    if (flags.fp[i] == 0 && (d.mu_up[i] > t || d.mu_lo[i] > t))
      r.failures.emplace_back(ii, "p-inactive-multiplier");
    if (flags.fp[i] != 0 && flags.fp[i] * (d.mu_up[i] - d.mu_lo[i]) < -t)
      r.failures.emplace_back(ii, "p-sign");
    if (flags.fq[i] == 0 && (d.eta_up[i] > t || d.eta_lo[i] > t))
      r.failures.emplace_back(ii, "q-inactive-multiplier");
    if (flags.fq[i] != 0 && flags.fq[i] * (d.eta_up[i] - d.eta_lo[i]) < -t)
      r.failures.emplace_back(ii, "q-sign");
  }
  r.pass = r.failures.empty();
  return r;
}

struct PerturbationEntry {
  double eps = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = 0.0;
  std::optional<double> ratio;
  bool rank_pass = false;
  Verdict signs = Verdict::NotRun;
  Verdict g_invertible = Verdict::NotRun;
  Verdict null_support_connected = Verdict::NotRun;
  bool actives_match = false;
  double distance = 0.0; // max-norm to W*(0)
  std::string note;

  bool operator==(const PerturbationEntry &) const = default;
};

struct PerturbationReport {
  std::vector<PerturbationEntry> entries; // entries[0] is eps = 0
  std::optional<double> stability_onset;
  bool converges = false;

  bool operator==(const PerturbationReport &) const = default;
};

struct BaseSolve {
  Relaxation relax;
  SdpSolution solution;
  ActivityFlags flags;
};

inline BaseSolve solve_base(const OpfCase &c, const SolverOptions &opt = {}) {
  BaseSolve b;
  b.relax = build_relaxation(c);
  b.solution = solve(b.relax.problem, opt);
  if (b.solution.converged())
    b.flags = detect_active_sets(b.solution.X, c, b.relax.Y);
  return b;
}

inline PerturbationEntry evaluate_entry(const OpfCase &c, const Relaxation &relax, const SdpSolution &sol,
                                        double eps, const CMat *C1, const ActivityFlags &base_flags,
                                        const CMat &W0, const Topology &topo) {
  PerturbationEntry e;
  e.eps = eps;
  e.status = sol.status;
  e.objective = sol.objective;
  e.distance = max_abs(sol.X - W0);
  if (!sol.converged()) {
    e.note = std::string("solver: ") + status_name(sol.status);
    return e;
  }
  try {
    const RankCertificate cert = certify_rank1(sol.X);
    e.ratio = cert.ratio;
    e.rank_pass = cert.pass;
  } catch (const ZeroMatrix &ex) {
    e.note = ex.what();
  }
  const DualMatrixBundle d = assemble_dual_matrix(c, relax, sol.multipliers, eps, C1);
  e.signs = verdict_from(check_multiplier_signs(base_flags, d).pass);
  e.g_invertible = verdict_from(check_G_invertibility(d.A, c.m(), topo).pass);
  const MinimalSupport ms = minimal_support_null_vector(d.A, c.m(), topo);
  if (ms.null_dim > 0)
    e.null_support_connected = verdict_from(ms.support.connected);
  try {
    e.actives_match = detect_active_sets(sol.X, c, relax.Y) == base_flags;
  } catch (const DegenerateActivity &ex) {
    e.note = ex.what();
  }
  return e;
}

inline PerturbationReport run_perturbation_sweep(const OpfCase &c, const BaseSolve &base, const PerturbationPlan &plan,
                                                 const Topology &topo, const SolverOptions &opt = {}) {
  if (!base.solution.converged())
    throw Error("perturbation sweep needs a converged unperturbed solve");
  PerturbationReport r;
  r.entries.push_back(evaluate_entry(c, base.relax, base.solution, 0.0, nullptr, base.flags, base.solution.X, topo));
  for (double eps : plan.schedule) {
    const Relaxation relax = build_relaxation(c, &plan.C1, eps);
    const SdpSolution sol = solve(relax.problem, opt);
    r.entries.push_back(evaluate_entry(c, relax, sol, eps, &plan.C1, base.flags, base.solution.X, topo));
  }
  // Largest eps from which every smaller scheduled eps keeps the unperturbed actives.
  for (std::size_t k = r.entries.size(); k-- > 1;) {
    if (!r.entries[k].actives_match)
      break;
    r.stability_onset = r.entries[k].eps;
  }
  const auto &first = r.entries.size() > 1 ? r.entries[1] : r.entries[0];
  const auto &last = r.entries.back();
  r.converges = first.status == SolveStatus::Optimal && last.status == SolveStatus::Optimal &&
                (r.entries.size() <= 2 || last.distance < first.distance || last.distance <= 1e-6);
  return r;
}

} // namespace mpopf
