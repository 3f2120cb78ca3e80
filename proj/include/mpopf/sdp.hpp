#pragma once

#include "mpopf/types.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

namespace mpopf {

enum class Sense { Le, Ge, Eq };

inline const char *sense_name(Sense s) {
  switch (s) {
  case Sense::Le:
    return "<=";
  case Sense::Ge:
    return ">=";
  case Sense::Eq:
    return "=";
  }
  return "?";
}

struct ConstraintTag {
  enum class Kind { VoltageUpper, VoltageLower, PUpper, PLower, QUpper, QLower, SlackDiag, SlackRe, SlackIm, Other };
  Kind kind = Kind::Other;
  int bus = -1;
  int phase = -1;
  // Phase pair of a slack-equality entry.
  int row = -1;
  int col = -1;

  bool operator==(const ConstraintTag &) const = default;

  std::string str() const {
    auto bp = [&](const char *k) { return std::string(k) + "(" + std::to_string(bus) + "," + std::to_string(phase) + ")"; };
    auto rc = [&](const char *part) {
      return "slack-eq(" + std::to_string(row) + "," + std::to_string(col) + "," + part + ")";
    };
    switch (kind) {
    case Kind::VoltageUpper:
      return bp("voltage-upper");
    case Kind::VoltageLower:
      return bp("voltage-lower");
    case Kind::PUpper:
      return bp("p-upper");
    case Kind::PLower:
      return bp("p-lower");
    case Kind::QUpper:
      return bp("q-upper");
    case Kind::QLower:
      return bp("q-lower");
    case Kind::SlackDiag:
      return rc("diag");
    case Kind::SlackRe:
      return rc("re");
    case Kind::SlackIm:
      return rc("im");
    case Kind::Other:
      break;
    }
    return "other";
  }
};

struct LinearTraceConstraint {
  CMat A; // Hermitian
  Sense sense = Sense::Eq;
  double b = 0.0;
  ConstraintTag tag;
};

struct SdpProblem {
  int dim = 0;
  CMat C; // Hermitian
  std::vector<LinearTraceConstraint> constraints;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations, NumericalFailure };

inline const char *status_name(SolveStatus s) {
  switch (s) {
  case SolveStatus::Optimal:
    return "optimal";
  case SolveStatus::Infeasible:
    return "infeasible";
  case SolveStatus::Unbounded:
    return "unbounded";
  case SolveStatus::MaxIterations:
    return "max-iterations";
  case SolveStatus::NumericalFailure:
    return "numerical-failure";
  }
  return "?";
}

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;
  // Extra iterations allowed after tol is met, stopping early at tol * polish_floor.
  int polish_iterations = 8;
  double polish_floor = 1e-3;
  bool verbose = false;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  CMat X;
  // One per constraint, in problem order. Inequality multipliers are >= 0; equality
  // multipliers are signed. The dual slack is C + sum_i s_i * multipliers[i] * A_i
  // with s_i = -1 for >= rows and +1 otherwise.
  std::vector<double> multipliers;
  double objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0; // relative
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0; // tr(A_dual X)
  int iterations = 0;

  bool converged() const { return status == SolveStatus::Optimal; }
};

// Symmetric real embedding [[Re H, -Im H], [Im H, Re H]].
inline RMat real_embedding(const CMat &H) {
  if (H.rows() != H.cols() || !is_hermitian(H, 1e-12 * std::max(1.0, max_abs(H))))
    throw InputError("real_embedding needs a Hermitian matrix");
  const Eigen::Index d = H.rows();
  RMat out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = H.real();
  out.topRightCorner(d, d) = -H.imag();
  out.bottomLeftCorner(d, d) = H.imag();
  out.bottomRightCorner(d, d) = H.real();
  return out;
}

// Inverse of X = emb(W)/2: W = (X11 + X22) + i (X21 - X12).
inline CMat complex_from_half_embedding(const RMat &X) {
  const Eigen::Index d = X.rows() / 2;
  CMat W(d, d);
  W.real() = X.topLeftCorner(d, d) + X.bottomRightCorner(d, d);
  W.imag() = X.bottomLeftCorner(d, d) - X.topRightCorner(d, d);
  return hermitian_part(W);
}

// Sparse symmetric real matrix with both triangles stored.
struct SparseSym {
  std::vector<int> r;
  std::vector<int> c;
  std::vector<double> v;
  std::vector<int> cols;     // distinct column indices, ascending
  std::vector<int> col_slot; // position of c[e] inside cols

  void finalize() {
    cols = c;
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    col_slot.resize(c.size());
    for (std::size_t e = 0; e < c.size(); ++e)
      col_slot[e] = static_cast<int>(std::lower_bound(cols.begin(), cols.end(), c[e]) - cols.begin());
  }

  double squared_norm() const {
    double s = 0.0;
    for (double x : v)
      s += x * x;
    return s;
  }

  double dot(const RMat &X) const {
    double s = 0.0;
    for (std::size_t e = 0; e < v.size(); ++e)
      s += v[e] * X(r[e], c[e]);
    return s;
  }

  void add_to(RMat &M, double alpha) const {
    for (std::size_t e = 0; e < v.size(); ++e)
      M(r[e], c[e]) += alpha * v[e];
  }

  void scale(double s) {
    for (double &x : v)
      x *= s;
  }

  static SparseSym from_complex(const CMat &A) {
    SparseSym S;
    const int d = static_cast<int>(A.rows());
    for (int q = 0; q < d; ++q)
      for (int p = 0; p < d; ++p) {
        const cplx a = A(p, q);
        if (a.real() != 0.0) {
          S.push(p, q, a.real());
          S.push(p + d, q + d, a.real());
        }
        if (a.imag() != 0.0) {
          S.push(p, q + d, -a.imag());
          S.push(p + d, q, a.imag());
        }
      }
    S.finalize();
    return S;
  }

  static SparseSym from_dense(const RMat &A) {
    SparseSym S;
    for (int q = 0; q < A.cols(); ++q)
      for (int p = 0; p < A.rows(); ++p)
        if (A(p, q) != 0.0)
          S.push(p, q, A(p, q));
    S.finalize();
    return S;
  }

private:
  void push(int p, int q, double x) {
    r.push_back(p);
    c.push_back(q);
    v.push_back(x);
  }
};

// min <C,X> + c.x  s.t.  <A_i,X> + G_i.x = b_i,  X psd,  x >= 0.
struct StandardForm {
  int n = 0;
  RMat C;
  std::vector<SparseSym> A;
  RVec b;
  RMat G; // rows = constraints, cols = nonnegative variables
  RVec c;
};

struct StandardResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  RMat X;
  RVec x;
  RVec y;
  RMat Z;
  RVec z;
  int iterations = 0;
  double pobj = 0.0;
  double dobj = 0.0;
  double pinf = 0.0;
  double dinf = 0.0;
  double gap = 0.0;
};

namespace detail {

// Returns a fresh matrix; writing 0.5 * (A + A.transpose()) back into A aliases.
inline RMat symmetrized(const RMat &A) {
  RMat out = A.transpose();
  out += A;
  out *= 0.5;
  return out;
}

// Largest alpha with M + alpha dM psd and m + alpha dm >= 0; 0 when M itself is not pd.
inline double max_step(const RMat &M, const RMat &dM, const RVec &m, const RVec &dm) {
  Eigen::LLT<RMat> llt(M);
  if (llt.info() != Eigen::Success)
    return 0.0;
  RMat L = llt.matrixL();
  RMat T = L.triangularView<Eigen::Lower>().solve(dM);
  RMat Tt = T.transpose();
  T = L.triangularView<Eigen::Lower>().solve(Tt);
  T = symmetrized(T);
  Eigen::SelfAdjointEigenSolver<RMat> es(T, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().size() ? es.eigenvalues()(0) : 0.0;
  double a = lo >= 0.0 ? 1e300 : -1.0 / lo;
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (dm(i) < 0.0)
      a = std::min(a, -m(i) / dm(i));
  return a;
}

inline bool solve_schur(const RMat &M, const RVec &rhs, RVec &out) {
  const double scale = std::max(1.0, rhs.norm());
  Eigen::LLT<RMat> llt(M);
  if (llt.info() == Eigen::Success) {
    out = llt.solve(rhs);
    if (out.allFinite() && (M * out - rhs).norm() <= 1e-8 * scale * std::max(1.0, M.norm()))
      return true;
  }
  Eigen::PartialPivLU<RMat> lu(M);
  out = lu.solve(rhs);
  if (out.allFinite() && (M * out - rhs).norm() <= 1e-6 * scale * std::max(1.0, M.norm()))
    return true;
  Eigen::FullPivLU<RMat> flu(M);
  out = flu.solve(rhs);
  return out.allFinite() && (M * out - rhs).norm() <= 1e-6 * scale * std::max(1.0, M.norm());
}

} // namespace detail

// Infeasible-start primal-dual path following with the HKM direction and a
// Mehrotra predictor-corrector step.
inline StandardResult solve_standard(const StandardForm &P, const SolverOptions &opt) {
  using detail::symmetrized;
  const int n = P.n;
  const int mc = static_cast<int>(P.A.size());
  const int nl = static_cast<int>(P.G.cols());
  if (P.C.rows() != n || P.C.cols() != n || P.b.size() != mc || P.G.rows() != mc || P.c.size() != nl)
    throw InputError("standard form dimensions are inconsistent");

  // Row scaling of constraints and global scaling of the cost.
  std::vector<SparseSym> A = P.A;
  RVec sc(mc);
  for (int i = 0; i < mc; ++i) {
    double s = std::sqrt(A[i].squared_norm());
    sc(i) = s > 1e-300 ? s : 1.0;
    A[i].scale(1.0 / sc(i));
  }
  const RVec b = P.b.cwiseQuotient(sc);
  const RMat G = sc.cwiseInverse().asDiagonal() * P.G;
  const double cs = std::max(1.0, std::sqrt(P.C.squaredNorm() + P.c.squaredNorm()));
  const RMat C = P.C / cs;
  const RVec c = P.c / cs;

  auto op_A = [&](const RMat &X) {
    RVec out(mc);
    for (int i = 0; i < mc; ++i)
      out(i) = A[i].dot(X);
    return out;
  };
  auto op_At = [&](const RVec &y) {
    RMat out = RMat::Zero(n, n);
    for (int i = 0; i < mc; ++i)
      A[i].add_to(out, y(i));
    return out;
  };

  double ratio = 0.0;
  for (int i = 0; i < mc; ++i)
    ratio = std::max(ratio, (1.0 + std::abs(b(i))) / (1.0 + std::sqrt(A[i].squared_norm())));
  const double xi = std::max({10.0, std::sqrt(double(n)), n * ratio});
  const double eta = std::max({10.0, std::sqrt(double(n)), C.norm(), 1.0});

  RMat X = xi * RMat::Identity(n, n);
  RMat Z = eta * RMat::Identity(n, n);
  RVec x = RVec::Constant(nl, xi);
  RVec z = RVec::Constant(nl, eta);
  RVec y = RVec::Zero(mc);
  const double nu = n + nl;
  const double bnorm = b.norm();
  const double cnorm = C.norm() + c.norm();

  struct Snapshot {
    RMat X, Z;
    RVec x, z, y;
    double merit = 1e300, pobj = 0, dobj = 0, pinf = 0, dinf = 0, gap = 0;
    int it = 0;
  } best;

  StandardResult res;
  SolveStatus exit_status = SolveStatus::MaxIterations;
  bool polishing = false;
  int converged_at = 0;
  int it = 0;
  for (; it <= opt.max_iterations; ++it) {
    const RVec rp = b - op_A(X) - G * x;
    const RMat Rd = C - op_At(y) - Z;
    const RVec rl = c - G.transpose() * y - z;
    const double pobj = (C.array() * X.array()).sum() + c.dot(x);
    const double dobj = b.dot(y);
    const double xz = (X.array() * Z.array()).sum() + x.dot(z);
    const double mu = xz / nu;
    const double pinf = rp.norm() / (1.0 + bnorm);
    const double dinf = (Rd.norm() + rl.norm()) / (1.0 + cnorm);
    const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
    const double gap = std::abs(pobj - dobj) / denom;
    const double cgap = std::abs(xz) / denom;
    const double merit = std::max({pinf, dinf, gap, cgap});
    if (!std::isfinite(merit)) {
      exit_status = SolveStatus::NumericalFailure;
      break;
    }
    if (opt.verbose)
      std::fprintf(stderr, "%3d pobj % .10e dobj % .10e pinf %.2e dinf %.2e gap %.2e\n", it, pobj * cs, dobj * cs,
                   pinf, dinf, gap);
    if (merit < best.merit) {
      best = {X, Z, x, z, y, merit, pobj, dobj, pinf, dinf, gap, it};
    }
    if (merit < opt.tol) {
      if (!polishing) {
        polishing = true;
        converged_at = it;
      }
      if (merit < opt.tol * opt.polish_floor || it - converged_at >= opt.polish_iterations) {
        exit_status = SolveStatus::Optimal;
        break;
      }
    }
    if (it == opt.max_iterations)
      break;
    // Divergence of the iterates signals an empty primal or dual feasible set.
    if (y.lpNorm<Eigen::Infinity>() > 1e12 && dobj > 1e10 && dinf < 1e-6) {
      exit_status = SolveStatus::Infeasible;
      break;
    }
    if (X.trace() + x.sum() > 1e12 && pobj < -1e10 && pinf < 1e-6) {
      exit_status = SolveStatus::Unbounded;
      break;
    }

    Eigen::LLT<RMat> zllt(Z);
    if (zllt.info() != Eigen::Success) {
      exit_status = SolveStatus::NumericalFailure;
      break;
    }
    RMat Zi = zllt.solve(RMat::Identity(n, n));
    Zi = symmetrized(Zi);
    const RVec D = x.cwiseQuotient(z);

    // Schur complement M_ij = <A_i, X A_j Z^-1> + (G D G^T)_ij.
    RMat M(mc, mc);
    std::vector<RMat> XAZ(mc);
    for (int j = 0; j < mc; ++j) {
      const auto &Aj = A[j];
      RMat Pm = RMat::Zero(n, Aj.cols.size());
      for (std::size_t e = 0; e < Aj.v.size(); ++e)
        Pm.col(Aj.col_slot[e]) += Aj.v[e] * X.col(Aj.r[e]);
      RMat Zr(Aj.cols.size(), n);
      for (std::size_t s = 0; s < Aj.cols.size(); ++s)
        Zr.row(s) = Zi.row(Aj.cols[s]);
      XAZ[j] = Pm * Zr;
    }
    for (int j = 0; j < mc; ++j)
      for (int i = 0; i <= j; ++i) {
        double s = A[i].dot(XAZ[j]);
        M(i, j) = s;
        M(j, i) = s;
      }
    M += G * D.asDiagonal() * G.transpose();

    auto direction = [&](double sig_mu, const RMat *corrX, const RVec *corrx, RMat &dX, RVec &dy, RMat &dZ, RVec &dx,
                         RVec &dz) {
      RMat RX = sig_mu * Zi - X - X * Rd * Zi;
      if (corrX)
        RX -= *corrX;
      RVec rx = sig_mu * z.cwiseInverse() - x - D.cwiseProduct(rl);
      if (corrx)
        rx -= *corrx;
      RVec rhs = rp - op_A(RX) - G * rx;
      if (!detail::solve_schur(M, rhs, dy))
        return false;
      const RMat Aty = op_At(dy);
      dZ = Rd - Aty;
      dX = RX + X * Aty * Zi;
      dX = symmetrized(dX);
      dz = rl - G.transpose() * dy;
      dx = rx + D.cwiseProduct(G.transpose() * dy);
      return true;
    };

    RMat dX, dZ;
    RVec dy, dx, dz;
    if (!direction(0.0, nullptr, nullptr, dX, dy, dZ, dx, dz)) {
      exit_status = SolveStatus::NumericalFailure;
      break;
    }
    double ap = std::min(1.0, detail::max_step(X, dX, x, dx));
    double ad = std::min(1.0, detail::max_step(Z, dZ, z, dz));
    const double mu_aff =
        (((X + ap * dX).array() * (Z + ad * dZ).array()).sum() + (x + ap * dx).dot(z + ad * dz)) / nu;
    const double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    const RMat corrX = dX * dZ * Zi;
    const RVec corrx = dx.cwiseProduct(dz).cwiseQuotient(z);
    if (!direction(sigma * mu, &corrX, &corrx, dX, dy, dZ, dx, dz)) {
      exit_status = SolveStatus::NumericalFailure;
      break;
    }
    ap = std::min(1.0, opt.step_fraction * detail::max_step(X, dX, x, dx));
    ad = std::min(1.0, opt.step_fraction * detail::max_step(Z, dZ, z, dz));
    if (std::max(ap, ad) < 1e-8) {
      exit_status = SolveStatus::NumericalFailure;
      break;
    }
    if (opt.verbose)
      std::fprintf(stderr, "    steps %.3e %.3e sigma %.3e\n", ap, ad, sigma);
    X += ap * dX;
    X = symmetrized(X);
    x += ap * dx;
    y += ad * dy;
    Z += ad * dZ;
    Z = symmetrized(Z);
    z += ad * dz;
  }

  if (best.merit < opt.tol)
    exit_status = SolveStatus::Optimal;
  else if (exit_status == SolveStatus::Optimal)
    exit_status = SolveStatus::MaxIterations;

  const bool diverged = exit_status == SolveStatus::Infeasible || exit_status == SolveStatus::Unbounded;
  const RVec scale_back = sc.cwiseInverse() * cs;
  if (diverged) {
    res.X = X;
    res.x = x;
    res.y = y.cwiseProduct(scale_back);
    res.Z = Z * cs;
    res.z = z * cs;
  } else {
    res.X = best.X;
    res.x = best.x;
    res.y = best.y.cwiseProduct(scale_back);
    res.Z = best.Z * cs;
    res.z = best.z * cs;
  }
  res.status = exit_status;
  res.iterations = std::min(it, opt.max_iterations);
  res.pobj = best.pobj * cs;
  res.dobj = best.dobj * cs;
  res.pinf = best.pinf;
  res.dinf = best.dinf;
  res.gap = best.gap;
  return res;
}

inline double sense_sign(Sense s) { return s == Sense::Ge ? -1.0 : 1.0; }

// C + sum_i s_i * multiplier_i * A_i.
inline CMat dual_slack(const SdpProblem &problem, const std::vector<double> &multipliers) {
  if (multipliers.size() != problem.constraints.size())
    throw InputError("multiplier count does not match constraint count");
  CMat A = problem.C;
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    const auto &con = problem.constraints[i];
    A += sense_sign(con.sense) * multipliers[i] * con.A;
  }
  return hermitian_part(A);
}

inline double complementarity_residual(const SdpProblem &problem, const CMat &X,
                                       const std::vector<double> &multipliers) {
  if (X.rows() != problem.dim || X.cols() != problem.dim)
    throw InputError("solution dimension does not match problem");
  return (dual_slack(problem, multipliers) * X).trace().real();
}

inline void validate_problem(const SdpProblem &problem) {
  const int d = problem.dim;
  if (problem.C.rows() != d || problem.C.cols() != d)
    throw InputError("cost matrix has the wrong dimension");
  if (!is_hermitian(problem.C, 1e-12 * std::max(1.0, max_abs(problem.C))))
    throw InputError("cost matrix is not Hermitian");
  for (const auto &con : problem.constraints) {
    if (con.A.rows() != d || con.A.cols() != d)
      throw InputError("constraint " + con.tag.str() + " has the wrong dimension");
    if (!is_hermitian(con.A, 1e-12 * std::max(1.0, max_abs(con.A))))
      throw InputError("constraint " + con.tag.str() + " is not Hermitian");
    if (!std::isfinite(con.b))
      throw InputError("constraint " + con.tag.str() + " has a non-finite bound");
  }
}

inline SdpSolution solve(const SdpProblem &problem, const SolverOptions &opt = {}) {
  validate_problem(problem);
  const int d = problem.dim;
  const int mc = static_cast<int>(problem.constraints.size());
  StandardForm sf;
  sf.n = 2 * d;
  sf.C = real_embedding(hermitian_part(problem.C));
  sf.b.resize(mc);
  int nl = 0;
  for (const auto &con : problem.constraints)
    nl += con.sense != Sense::Eq;
  sf.G = RMat::Zero(mc, nl);
  sf.c = RVec::Zero(nl);
  int col = 0;
  for (int i = 0; i < mc; ++i) {
    const auto &con = problem.constraints[i];
    sf.A.push_back(SparseSym::from_complex(hermitian_part(con.A)));
    sf.b(i) = con.b;
    if (con.sense == Sense::Le)
      sf.G(i, col++) = 1.0;
    else if (con.sense == Sense::Ge)
      sf.G(i, col++) = -1.0;
  }
  const StandardResult r = solve_standard(sf, opt);

  SdpSolution sol;
  sol.status = r.status;
  sol.X = complex_from_half_embedding(r.X);
  sol.multipliers.resize(mc);
  for (int i = 0; i < mc; ++i) {
    const Sense s = problem.constraints[i].sense;
    sol.multipliers[i] = s == Sense::Ge ? r.y(i) : -r.y(i);
  }
  sol.objective = (problem.C * sol.X).trace().real();
  sol.dual_objective = r.dobj;
  sol.gap = r.gap;
  sol.primal_infeasibility = r.pinf;
  sol.dual_infeasibility = r.dinf;
  sol.iterations = r.iterations;
  sol.complementarity = complementarity_residual(problem, sol.X, sol.multipliers);
  return sol;
}

} // namespace mpopf
