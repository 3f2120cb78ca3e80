#pragma once

#include "mpopf/network.hpp"
#include "mpopf/sdp.hpp"

#include <string>
#include <tuple>
#include <vector>

namespace mpopf {

// Per bus-phase data, all vectors of length n*m in flat order. Voltage bounds are
// squared magnitudes. Injection bounds may be +-infinity.
struct OpfCase {
  MultiphaseNetwork network;
  std::vector<double> c_re, c_im;
  std::vector<double> v_min, v_max;
  std::vector<double> p_min, p_max;
  std::vector<double> q_min, q_max;
  CVec v_ref;

  int n() const { return network.n; }
  int m() const { return network.m; }
  int dim() const { return network.dim(); }
};

inline void validate_case(const OpfCase &c) {
  validate_network(c.network);
  const std::size_t N = static_cast<std::size_t>(c.dim());
  for (const auto *v : {&c.c_re, &c.c_im, &c.v_min, &c.v_max, &c.p_min, &c.p_max, &c.q_min, &c.q_max})
    if (v->size() != N)
      throw InputError("per bus-phase data must have n*m entries");
  if (c.v_ref.size() != c.m())
    throw InputError("slack reference must have m entries");
  if (!c.v_ref.allFinite())
    throw InputError("slack reference is not finite");
  for (std::size_t i = 0; i < N; ++i) {
    const BusPhase bp = BusPhase::from_flat(static_cast<int>(i), c.m());
    const std::string where = "bus " + c.network.names[bp.bus] + " phase " + std::to_string(bp.phase);
    if (!std::isfinite(c.c_re[i]) || !std::isfinite(c.c_im[i]))
      throw InputError(where + ": cost must be finite");
    if (!std::isfinite(c.v_min[i]) || !std::isfinite(c.v_max[i]) || c.v_min[i] <= 0.0)
      throw InputError(where + ": voltage bounds must be finite and positive");
    if (c.v_min[i] > c.v_max[i])
      throw InputError(where + ": voltage lower bound exceeds upper bound");
    for (auto [lo, hi, name] : {std::tuple{c.p_min[i], c.p_max[i], "p"}, std::tuple{c.q_min[i], c.q_max[i], "q"}}) {
      if (std::isnan(lo) || std::isnan(hi))
        throw InputError(where + ": " + name + " bound is NaN");
      if (lo == kInf || hi == -kInf)
        throw InputError(where + ": " + name + " bound points the wrong way");
      if (lo > hi)
        throw InputError(where + ": " + name + " lower bound exceeds upper bound");
    }
  }
  for (int phi = 0; phi < c.m(); ++phi) {
    const double mag2 = std::norm(c.v_ref(phi));
    const double slack = 1e-9 * std::max(1.0, mag2);
    if (mag2 < c.v_min[phi] - slack || mag2 > c.v_max[phi] + slack)
      throw InputError("slack reference magnitude outside its voltage bounds at phase " + std::to_string(phi));
  }
}

inline CMat build_cost(const OpfCase &c, const CMat &Y) {
  const int N = c.dim();
  CMat C0 = CMat::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    if (c.c_re[i] == 0.0 && c.c_im[i] == 0.0)
      continue;
    auto M = injection_matrices(Y, i);
    C0 += c.c_re[i] * M.Phi + c.c_im[i] * M.Psi;
  }
  return hermitian_part(C0);
}

inline CMat build_cost(const OpfCase &c) { return build_cost(c, assemble_bus_admittance(c.network)); }

// Pins the leading m x m block of W to V_ref V_ref^H through m^2 real equalities.
inline std::vector<LinearTraceConstraint> slack_equality_constraints(const CVec &v_ref, int dim) {
  const int m = static_cast<int>(v_ref.size());
  if (dim < m)
    throw InputError("problem dimension smaller than slack block");
  const CMat vr = v_ref * v_ref.adjoint();
  std::vector<LinearTraceConstraint> out;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      ConstraintTag tag;
      tag.bus = 0;
      tag.row = a;
      tag.col = b;
      if (a == b) {
        CMat E = CMat::Zero(dim, dim);
        E(a, a) = 1.0;
        tag.kind = ConstraintTag::Kind::SlackDiag;
        tag.phase = a;
        out.push_back({E, Sense::Eq, vr(a, a).real(), tag});
        continue;
      }
      CMat Er = CMat::Zero(dim, dim);
      Er(a, b) = 0.5;
      Er(b, a) = 0.5;
      tag.kind = ConstraintTag::Kind::SlackRe;
      out.push_back({Er, Sense::Eq, vr(a, b).real(), tag});
      CMat Ei = CMat::Zero(dim, dim);
      Ei(a, b) = 0.5 * kI;
      Ei(b, a) = -0.5 * kI;
      tag.kind = ConstraintTag::Kind::SlackIm;
      out.push_back({Ei, Sense::Eq, vr(a, b).imag(), tag});
    }
  return out;
}

struct Relaxation {
  SdpProblem problem;
  CMat Y;
  CMat C0;
};

// Lifted relaxation with cost C0 + eps * C1. Infinite bounds produce no row.
inline Relaxation build_relaxation(const OpfCase &c, const CMat *C1 = nullptr, double eps = 0.0) {
  validate_case(c);
  Relaxation r;
  r.Y = assemble_bus_admittance(c.network);
  r.C0 = build_cost(c, r.Y);
  const int N = c.dim();
  auto &P = r.problem;
  P.dim = N;
  P.C = r.C0;
  if (C1 && eps != 0.0) {
    if (C1->rows() != N || C1->cols() != N)
      throw InputError("perturbation matrix has the wrong dimension");
    P.C += eps * *C1;
  }
  using K = ConstraintTag::Kind;
  for (int i = 0; i < N; ++i) {
    const BusPhase bp = BusPhase::from_flat(i, c.m());
    auto tag = [&](K k) {
      ConstraintTag t;
      t.kind = k;
      t.bus = bp.bus;
      t.phase = bp.phase;
      return t;
    };
    auto M = injection_matrices(r.Y, i);
    P.constraints.push_back({M.E, Sense::Le, c.v_max[i], tag(K::VoltageUpper)});
    P.constraints.push_back({M.E, Sense::Ge, c.v_min[i], tag(K::VoltageLower)});
    if (std::isfinite(c.p_max[i]))
      P.constraints.push_back({M.Phi, Sense::Le, c.p_max[i], tag(K::PUpper)});
    if (std::isfinite(c.p_min[i]))
      P.constraints.push_back({M.Phi, Sense::Ge, c.p_min[i], tag(K::PLower)});
    if (std::isfinite(c.q_max[i]))
      P.constraints.push_back({M.Psi, Sense::Le, c.q_max[i], tag(K::QUpper)});
    if (std::isfinite(c.q_min[i]))
      P.constraints.push_back({M.Psi, Sense::Ge, c.q_min[i], tag(K::QLower)});
  }
  for (auto &e : slack_equality_constraints(c.v_ref, N))
    P.constraints.push_back(std::move(e));
  return r;
}

// tr(Phi_i W) + i tr(Psi_i W) for every bus-phase i, i.e. diag(W Y^H).
inline CVec injections_from_lifted(const CMat &W, const CMat &Y) {
  const CMat S = W * Y.adjoint();
  return S.diagonal();
}

// Objective of a voltage profile in the original (unlifted) problem.
inline double voltage_objective(const OpfCase &c, const CVec &V, const CMat &Y) {
  const CVec s = nodal_injections(V, Y);
  double f = 0.0;
  for (int i = 0; i < c.dim(); ++i)
    f += c.c_re[i] * s(i).real() + c.c_im[i] * s(i).imag();
  return f;
}

} // namespace mpopf
