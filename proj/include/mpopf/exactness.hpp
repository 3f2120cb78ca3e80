#pragma once

#include "mpopf/opf.hpp"

#include <algorithm>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mpopf {

inline constexpr double kTolActive = 1e-6;
inline constexpr double kTolRank = 1e-6;
inline constexpr double kTolInvertible = 1e-7;
inline constexpr double kTolSupport = 1e-7;
inline constexpr double kTolSlater = 1e-6;

// +1 upper bound attained, -1 lower bound attained, 0 neither. Flat bus-phase order.
struct ActivityFlags {
  std::vector<int> fp;
  std::vector<int> fq;

  bool any() const {
    auto nz = [](int f) { return f != 0; };
    return std::any_of(fp.begin(), fp.end(), nz) || std::any_of(fq.begin(), fq.end(), nz);
  }
  bool operator==(const ActivityFlags &) const = default;
};

inline ActivityFlags zero_flags(int N) { return {std::vector<int>(N, 0), std::vector<int>(N, 0)}; }

inline bool near_bound(double value, double bound, double tol) {
  return std::isfinite(bound) && std::abs(value - bound) <= tol * std::max(1.0, std::abs(bound));
}

inline ActivityFlags detect_active_sets(const CMat &W, const OpfCase &c, const CMat &Y, double tol_act = kTolActive) {
  const int N = c.dim();
  if (W.rows() != N || W.cols() != N)
    throw InputError("lifted matrix dimension does not match case");
  const CVec s = injections_from_lifted(W, Y);
  ActivityFlags f = zero_flags(N);
  for (int i = 0; i < N; ++i) {
    auto flag = [&](double v, double lo, double hi, const char *what) {
      const bool up = near_bound(v, hi, tol_act), down = near_bound(v, lo, tol_act);
      if (up && down) {
        const BusPhase bp = BusPhase::from_flat(i, c.m());
        throw DegenerateActivity(std::string("both ") + what + " bounds active at bus " + c.network.names[bp.bus] +
                                 " phase " + std::to_string(bp.phase));
      }
      return up ? 1 : (down ? -1 : 0);
    };
    f.fp[i] = flag(s(i).real(), c.p_min[i], c.p_max[i], "real-power");
    f.fq[i] = flag(s(i).imag(), c.q_min[i], c.q_max[i], "reactive-power");
  }
  return f;
}

struct CriticalSets {
  std::set<int> objective;      // S_o
  std::set<int> constraint;     // S_c
  std::set<int> constraint_all; // S_c with tilde: any finite injection bound

  bool operator==(const CriticalSets &) const = default;
};

inline CriticalSets critical_sets(const OpfCase &c, const ActivityFlags *flags) {
  CriticalSets s;
  const int m = c.m();
  for (int i = 0; i < c.dim(); ++i) {
    const int j = i / m;
    if (c.c_re[i] != 0.0 || c.c_im[i] != 0.0)
      s.objective.insert(j);
    if (std::isfinite(c.p_min[i]) || std::isfinite(c.p_max[i]) || std::isfinite(c.q_min[i]) ||
        std::isfinite(c.q_max[i]))
      s.constraint_all.insert(j);
    if (flags && (flags->fp[i] != 0 || flags->fq[i] != 0))
      s.constraint.insert(j);
  }
  return s;
}

enum class Verdict { NotRun, Pass, Fail };

inline const char *verdict_name(Verdict v) {
  switch (v) {
  case Verdict::Pass:
    return "pass";
  case Verdict::Fail:
    return "fail";
  case Verdict::NotRun:
    break;
  }
  return "not-run";
}

inline Verdict verdict_from(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

struct ConditionResult {
  Verdict verdict = Verdict::NotRun;
  // Witnesses: offending buses, edges or bus-phases (flat index).
  std::vector<int> buses;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> bus_phases;

  bool operator==(const ConditionResult &) const = default;
};

enum class CheckMode { Apriori, Aposteriori };

struct ConditionReport {
  CheckMode mode = CheckMode::Aposteriori;
  ConditionResult a1; // Slater margin > 0
  ConditionResult a2; // tree
  ConditionResult a3; // critical buses pairwise non-adjacent
  ConditionResult a4; // S_o and S_c disjoint
  ConditionResult a5; // sign-semidefinite on the overlap
  ConditionResult corollary;
  std::optional<double> slater_margin;

  bool operator==(const ConditionReport &) const = default;
};

// Edges with both endpoints in K.
inline std::vector<std::pair<int, int>> adjacent_pairs(const Topology &topo, const std::set<int> &K) {
  std::vector<std::pair<int, int>> out;
  for (auto [a, b] : topo.edges)
    if (K.count(a) && K.count(b))
      out.emplace_back(a, b);
  return out;
}

inline void set_slater(ConditionReport &r, double margin, double tol = kTolSlater) {
  r.slater_margin = margin;
  r.a1.verdict = verdict_from(margin > tol);
}

inline ConditionReport check_conditions(const OpfCase &c, const CriticalSets &sets, const ActivityFlags *flags,
                                        const Topology &topo, CheckMode mode) {
  ConditionReport r;
  r.mode = mode;
  r.a2.verdict = verdict_from(topo.is_tree);
  if (mode == CheckMode::Apriori) {
    std::set<int> K = sets.objective;
    K.insert(sets.constraint_all.begin(), sets.constraint_all.end());
    r.corollary.edges = adjacent_pairs(topo, K);
    std::set_intersection(sets.objective.begin(), sets.objective.end(), sets.constraint_all.begin(),
                          sets.constraint_all.end(), std::back_inserter(r.corollary.buses));
    r.corollary.verdict = verdict_from(topo.is_tree && r.corollary.edges.empty() && r.corollary.buses.empty());
    return r;
  }
  if (!flags)
    throw InputError("a-posteriori check needs activity flags");
  std::set<int> K = sets.objective;
  K.insert(sets.constraint.begin(), sets.constraint.end());
  r.a3.edges = adjacent_pairs(topo, K);
  r.a3.verdict = verdict_from(r.a3.edges.empty());
  std::set_intersection(sets.objective.begin(), sets.objective.end(), sets.constraint.begin(), sets.constraint.end(),
                        std::back_inserter(r.a4.buses));
  r.a4.verdict = verdict_from(r.a4.buses.empty());
  const int m = c.m();
  for (int j : r.a4.buses)
    for (int phi = 0; phi < m; ++phi) {
      const int i = j * m + phi;
      if (c.c_re[i] * flags->fp[i] < 0.0 || c.c_im[i] * flags->fq[i] < 0.0)
        r.a5.bus_phases.push_back(i);
    }
  for (int i : r.a5.bus_phases)
    if (r.a5.buses.empty() || r.a5.buses.back() != i / m)
      r.a5.buses.push_back(i / m);
  r.a5.verdict = verdict_from(r.a5.bus_phases.empty());
  return r;
}

struct SlaterResult {
  double margin = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  // Set when the auxiliary solve did not converge and margin is the value attained
  // by the returned feasible point, a lower bound on the true margin.
  bool lower_bound_only = false;
};

// Maximize t with every inequality tightened by t. The lifted variable is
// diag(W, u) with t = u - T0 and u >= 0.
inline SlaterResult slater_margin(const OpfCase &c, const SolverOptions &opt = {}) {
  const Relaxation base = build_relaxation(c);
  const int N = c.dim();
  const int D = N + 1;

  // Margin of the flat profile V_j = V_ref, which carries zero injections.
  CVec flat(N);
  for (int i = 0; i < N; ++i)
    flat(i) = c.v_ref(i % c.m());
  const CMat Wf = flat * flat.adjoint();
  double t_flat = kInf;
  for (const auto &con : base.problem.constraints) {
    if (con.sense == Sense::Eq)
      continue;
    const double v = (con.A * Wf).trace().real();
    t_flat = std::min(t_flat, con.sense == Sense::Le ? con.b - v : v - con.b);
  }
  const double T0 = std::max(1.0, 1.0 - t_flat);

  SdpProblem aux;
  aux.dim = D;
  aux.C = CMat::Zero(D, D);
  aux.C(N, N) = -1.0;
  for (const auto &con : base.problem.constraints) {
    LinearTraceConstraint a;
    a.A = CMat::Zero(D, D);
    a.A.topLeftCorner(N, N) = con.A;
    a.sense = con.sense;
    a.tag = con.tag;
    a.b = con.b;
    // A.W + u <= b + T0 and A.W - u >= b - T0.
    if (con.sense == Sense::Le) {
      a.A(N, N) = 1.0;
      a.b = con.b + T0;
    } else if (con.sense == Sense::Ge) {
      a.A(N, N) = -1.0;
      a.b = con.b - T0;
    }
    aux.constraints.push_back(std::move(a));
  }
  const SdpSolution sol = solve(aux, opt);
  SlaterResult out;
  out.status = sol.status;
  if (sol.converged()) {
    out.margin = sol.X(N, N).real() - T0;
    return out;
  }
  // Fall back to the margin attained by the returned W itself, provided it is PSD and
  // meets the slack equalities.
  const CMat W = sol.X.topLeftCorner(N, N);
  double eq_res = 0.0, t = kInf;
  for (const auto &con : base.problem.constraints) {
    const double v = (con.A * W).trace().real();
    if (con.sense == Sense::Eq)
      eq_res = std::max(eq_res, std::abs(v - con.b));
    else
      t = std::min(t, con.sense == Sense::Le ? con.b - v : v - con.b);
  }
  const RVec ev = hermitian_eigenvalues(W);
  if (eq_res <= 1e-7 && ev(0) >= -1e-9 * std::max(1.0, ev(ev.size() - 1)) && std::isfinite(t)) {
    out.margin = t;
    out.lower_bound_only = true;
    return out;
  }
  throw Error(std::string("Slater margin solve failed: ") + status_name(sol.status));
}

struct RankCertificate {
  RVec eigenvalues; // descending
  double ratio = 1.0;
  bool pass = false;
  CVec u1;

  double rho1() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }
  double rho2() const { return eigenvalues.size() > 1 ? eigenvalues(1) : 0.0; }
};

inline RankCertificate certify_rank1(const CMat &W, double tol_rank = kTolRank) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(W));
  const Eigen::Index N = W.rows();
  RankCertificate r;
  r.eigenvalues = es.eigenvalues().reverse();
  if (N == 0 || r.eigenvalues(0) <= 0.0)
    throw ZeroMatrix("leading eigenvalue is not positive");
  r.u1 = es.eigenvectors().col(N - 1);
  r.ratio = N > 1 ? std::abs(r.eigenvalues(1)) / r.eigenvalues(0) : 0.0;
  r.pass = r.ratio <= tol_rank;
  return r;
}

// V = sqrt(rho1) u1 e^{i theta}, theta maximizing Re <[V]_0, V_ref>.
inline CVec recover_voltages(const RankCertificate &cert, const CMat &W, const CVec &v_ref,
                             double tol_rank = kTolRank, double tol_ref = 1e-5) {
  if (!cert.pass)
    throw RecoveryMismatch("rank certificate did not pass");
  const int m = static_cast<int>(v_ref.size());
  CVec V = std::sqrt(cert.rho1()) * cert.u1;
  const cplx z = V.head(m).dot(v_ref); // sum conj(V_a) Vref_a
  if (std::abs(z) <= 1e-12 * std::max(1.0, v_ref.norm() * V.head(m).norm()))
    throw RecoveryMismatch("slack block orthogonal to the reference, phase undetermined");
  V *= std::polar(1.0, std::arg(z));
  const double ref_err = (V.head(m) - v_ref).norm();
  if (ref_err > tol_ref * std::max(1.0, v_ref.norm()))
    throw RecoveryMismatch("recovered slack voltage misses the reference by " + std::to_string(ref_err));
  const double fit = max_abs(V * V.adjoint() - W);
  if (fit > tol_rank * cert.rho1() * 10.0)
    throw RecoveryMismatch("V V^H differs from W by " + std::to_string(fit));
  return V;
}

struct DualMatrixBundle {
  CMat A;
  // Per bus-phase, zero where the bound was dropped.
  std::vector<double> lambda_up, lambda_lo, mu_up, mu_lo, eta_up, eta_lo;
  CMat kappa;    // m x m Hermitian
  CMat Pi_kappa; // kappa placed in the leading block
  // Max entry gap between the component assembly and C + sum s_i y_i A_i.
  double route_gap = 0.0;
};

// A(eps) from per-component multipliers. Problem and multipliers must come from
// build_relaxation and a solve of that problem.
inline DualMatrixBundle assemble_dual_matrix(const OpfCase &c, const Relaxation &relax,
                                             const std::vector<double> &multipliers, double eps = 0.0,
                                             const CMat *C1 = nullptr) {
  const auto &P = relax.problem;
  if (multipliers.size() != P.constraints.size())
    throw InputError("missing multipliers: expected " + std::to_string(P.constraints.size()) + ", got " +
                     std::to_string(multipliers.size()));
  const int N = c.dim(), m = c.m();
  DualMatrixBundle d;
  for (auto *v : {&d.lambda_up, &d.lambda_lo, &d.mu_up, &d.mu_lo, &d.eta_up, &d.eta_lo})
    v->assign(N, 0.0);
  d.kappa = CMat::Zero(m, m);
  using K = ConstraintTag::Kind;
  for (std::size_t k = 0; k < multipliers.size(); ++k) {
    const auto &t = P.constraints[k].tag;
    const double y = multipliers[k];
    const int i = t.bus * m + t.phase;
    switch (t.kind) {
    case K::VoltageUpper:
      d.lambda_up[i] = y;
      break;
    case K::VoltageLower:
      d.lambda_lo[i] = y;
      break;
    case K::PUpper:
      d.mu_up[i] = y;
      break;
    case K::PLower:
      d.mu_lo[i] = y;
      break;
    case K::QUpper:
      d.eta_up[i] = y;
      break;
    case K::QLower:
      d.eta_lo[i] = y;
      break;
    case K::SlackDiag:
      d.kappa(t.row, t.row) += y;
      break;
    case K::SlackRe:
      d.kappa(t.row, t.col) += 0.5 * y;
      d.kappa(t.col, t.row) += 0.5 * y;
      break;
    case K::SlackIm:
      d.kappa(t.row, t.col) += 0.5 * kI * y;
      d.kappa(t.col, t.row) -= 0.5 * kI * y;
      break;
    case K::Other:
      throw InputError("constraint without a relaxation tag");
    }
  }
  d.A = relax.C0;
  if (C1 && eps != 0.0)
    d.A += eps * *C1;
  for (int i = 0; i < N; ++i) {
    const double lam = d.lambda_up[i] - d.lambda_lo[i];
    const double mu = d.mu_up[i] - d.mu_lo[i];
    const double eta = d.eta_up[i] - d.eta_lo[i];
    d.A(i, i) += lam;
    if (mu != 0.0 || eta != 0.0) {
      auto M = injection_matrices(relax.Y, i);
      d.A += mu * M.Phi + eta * M.Psi;
    }
  }
  d.Pi_kappa = CMat::Zero(N, N);
  d.Pi_kappa.topLeftCorner(m, m) = d.kappa;
  d.A += d.Pi_kappa;
  d.A = hermitian_part(d.A);
  // Second route through the generic dual slack of the solved problem.
  SdpProblem shifted = P;
  shifted.C = relax.C0;
  if (C1 && eps != 0.0)
    shifted.C += eps * *C1;
  d.route_gap = max_abs(dual_slack(shifted, multipliers) - d.A);
  return d;
}

struct GInvertibilityReport {
  bool pass = false;
  bool psd = false;
  double lambda_min = 0.0;
  double norm = 0.0;
  double min_edge_sigma = kInf; // smallest singular value over edge blocks
  double max_nonedge = 0.0;     // largest entry over non-edge off-diagonal blocks
  std::vector<std::pair<int, int>> singular_edges;
  std::vector<std::pair<int, int>> nonzero_nonedges;
};

inline GInvertibilityReport check_G_invertibility(const CMat &X, int m, const Topology &topo,
                                                  double tol_inv = kTolInvertible) {
  const int n = topo.n;
  if (X.rows() != n * m || X.cols() != n * m)
    throw InputError("matrix dimension does not match topology");
  GInvertibilityReport r;
  const RVec ev = hermitian_eigenvalues(X);
  r.lambda_min = ev(0);
  r.norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  const double tol = tol_inv * r.norm;
  r.psd = r.lambda_min >= -tol;
  for (auto [a, b] : topo.edges) {
    Eigen::JacobiSVD<CMat> svd(bus_block(X, a, b, m));
    const double s = svd.singularValues()(m - 1);
    r.min_edge_sigma = std::min(r.min_edge_sigma, s);
    if (!(s > tol))
      r.singular_edges.emplace_back(a, b);
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (topo.adjacent(a, b))
        continue;
      const double v = max_abs(bus_block(X, a, b, m));
      r.max_nonedge = std::max(r.max_nonedge, v);
      if (v > tol)
        r.nonzero_nonedges.emplace_back(a, b);
    }
  r.pass = r.psd && r.singular_edges.empty() && r.nonzero_nonedges.empty();
  return r;
}

struct SupportReport {
  std::set<int> omega;
  bool connected = false;
};

inline SupportReport support_and_connectivity(const CVec &y, int m, const Topology &topo,
                                              double tol_supp = kTolSupport) {
  SupportReport r;
  const double scale = y.norm();
  if (scale == 0.0)
    return r;
  for (int j = 0; j < topo.n; ++j)
    if (y.segment(j * m, m).norm() > tol_supp * scale)
      r.omega.insert(j);
  if (r.omega.empty())
    return r;
  std::set<int> seen{*r.omega.begin()};
  std::deque<int> q{*r.omega.begin()};
  while (!q.empty()) {
    const int j = q.front();
    q.pop_front();
    for (int k : topo.adj[j])
      if (r.omega.count(k) && seen.insert(k).second)
        q.push_back(k);
  }
  r.connected = seen.size() == r.omega.size();
  return r;
}

// Orthonormal basis of eigenvectors with |lambda| <= tol_null * ||X||.
inline CMat null_basis(const CMat &X, double tol_null) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitian_part(X));
  const RVec &ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) <= tol_null * scale)
      keep.push_back(i);
  CMat B(X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    B.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
  return B;
}

struct MinimalSupport {
  CVec y;             // empty when the null space is trivial
  int null_dim = 0;
  SupportReport support;
};

// Inclusion-minimal support search: keep zeroing whole buses while a nonzero null
// vector survives. At the fixed point every nonzero vector left in the subspace has
// the same support, and no null vector has a strictly smaller one.
inline MinimalSupport minimal_support_null_vector(const CMat &X, int m, const Topology &topo, double tol_null = 1e-6,
                                                  double tol_supp = kTolSupport) {
  MinimalSupport out;
  CMat B = null_basis(X, tol_null);
  out.null_dim = static_cast<int>(B.cols());
  if (B.cols() == 0)
    return out;
  bool changed = true;
  std::vector<bool> zeroed(topo.n, false);
  while (changed && B.cols() > 0) {
    changed = false;
    for (int j = 0; j < topo.n; ++j) {
      if (zeroed[j])
        continue;
      const CMat Bj = B.middleRows(j * m, m);
      if (Bj.norm() <= tol_supp) {
        zeroed[j] = true;
        continue;
      }
      Eigen::JacobiSVD<CMat> svd(Bj, Eigen::ComputeFullV);
      const RVec &s = svd.singularValues();
      std::vector<Eigen::Index> free;
      for (Eigen::Index k = 0; k < B.cols(); ++k)
        if (k >= s.size() || s(k) <= tol_supp)
          free.push_back(k);
      if (free.empty())
        continue;
      CMat Vn(B.cols(), static_cast<Eigen::Index>(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k)
        Vn.col(static_cast<Eigen::Index>(k)) = svd.matrixV().col(free[k]);
      B = B * Vn;
      Eigen::HouseholderQR<CMat> qr(B);
      B = qr.householderQ() * CMat::Identity(B.rows(), B.cols());
      zeroed[j] = true;
      changed = true;
    }
  }
  out.y = B.col(0);
  out.support = support_and_connectivity(out.y, m, topo, tol_supp);
  return out;
}

struct KktCheck {
  double trace_AW = 0.0;
  double trace_W = 0.0;
  double lambda_min_A = 0.0;
  double norm_A = 0.0;
  double lambda_min_W = 0.0;
  double norm_W = 0.0;
  bool pass = false;
};

inline KktCheck kkt_check(const CMat &A, const CMat &W, double tol_cs = 1e-6, double tol_psd_A = 1e-6,
                          double tol_psd_W = 1e-8) {
  KktCheck k;
  k.trace_AW = (A * W).trace().real();
  k.trace_W = W.trace().real();
  const RVec ea = hermitian_eigenvalues(A), ew = hermitian_eigenvalues(W);
  k.lambda_min_A = ea(0);
  k.norm_A = std::max(std::abs(ea(0)), std::abs(ea(ea.size() - 1)));
  k.lambda_min_W = ew(0);
  k.norm_W = std::max(std::abs(ew(0)), std::abs(ew(ew.size() - 1)));
  k.pass = k.trace_AW <= tol_cs * k.trace_W && k.lambda_min_A >= -tol_psd_A * k.norm_A &&
           k.lambda_min_W >= -tol_psd_W * k.norm_W;
  return k;
}

} // namespace mpopf
