#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mpopf;

namespace {

OpfCase fixture_case() { return parse_case(testutil::fixture("ieee11.json")).data; }

int count_kind(const SdpProblem &P, ConstraintTag::Kind k) {
  return static_cast<int>(std::count_if(P.constraints.begin(), P.constraints.end(),
                                        [&](const LinearTraceConstraint &c) { return c.tag.kind == k; }));
}

} // namespace

TEST(Opf, RelaxationRowCounts) {
  const OpfCase c = fixture_case();
  const Relaxation r = build_relaxation(c);
  using K = ConstraintTag::Kind;
  const int N = c.dim(), m = c.m();
  EXPECT_EQ(count_kind(r.problem, K::VoltageUpper), N);
  EXPECT_EQ(count_kind(r.problem, K::VoltageLower), N);
  int finite_p = 0, finite_q = 0;
  for (int i = 0; i < N; ++i) {
    finite_p += std::isfinite(c.p_max[i]) + std::isfinite(c.p_min[i]);
    finite_q += std::isfinite(c.q_max[i]) + std::isfinite(c.q_min[i]);
  }
  EXPECT_EQ(count_kind(r.problem, K::PUpper) + count_kind(r.problem, K::PLower), finite_p);
  EXPECT_EQ(count_kind(r.problem, K::QUpper) + count_kind(r.problem, K::QLower), finite_q);
  EXPECT_EQ(count_kind(r.problem, K::SlackDiag) + count_kind(r.problem, K::SlackRe) + count_kind(r.problem, K::SlackIm),
            m * m);
}

TEST(Opf, SlackEqualitiesPinReferenceBlock) {
  CVec v(3);
  v << 1.0, std::polar(1.0, -2.0), std::polar(0.9, 2.0);
  const auto rows = slack_equality_constraints(v, 6);
  ASSERT_EQ(rows.size(), 9u);
  CMat W = CMat::Zero(6, 6);
  W.topLeftCorner(3, 3) = v * v.adjoint();
  W(4, 4) = 2.0;
  for (const auto &row : rows) {
    EXPECT_TRUE(is_hermitian(row.A));
    EXPECT_NEAR((row.A * W).trace().real(), row.b, 1e-14) << row.tag.str();
  }
  // Any change in the slack block breaks at least one row.
  W(0, 1) += cplx(0.0, 1e-3);
  W(1, 0) = std::conj(W(0, 1));
  double worst = 0.0;
  for (const auto &row : rows)
    worst = std::max(worst, std::abs((row.A * W).trace().real() - row.b));
  EXPECT_GT(worst, 5e-4);
}

TEST(Opf, CostMatchesVoltageObjective) {
  const OpfCase c = fixture_case();
  const CMat Y = assemble_bus_admittance(c.network);
  const CMat C = build_cost(c, Y);
  EXPECT_TRUE(is_hermitian(C, 1e-12 * max_abs(C)));
  CVec V = CVec::Random(c.dim());
  const double direct = voltage_objective(c, V, Y);
  EXPECT_NEAR((C * (V * V.adjoint())).trace().real(), direct, 1e-9 * std::max(1.0, std::abs(direct)));
}

TEST(Opf, LiftedInjectionsMatchNodal) {
  const OpfCase c = fixture_case();
  const CMat Y = assemble_bus_admittance(c.network);
  const CVec V = CVec::Random(c.dim());
  const CVec a = injections_from_lifted(V * V.adjoint(), Y), b = nodal_injections(V, Y);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
}

TEST(Opf, PerturbedCostAddsScaledMatrix) {
  const OpfCase c = fixture_case();
  CMat C1 = CMat::Zero(c.dim(), c.dim());
  C1(0, 3) = cplx(1.0, 2.0);
  C1(3, 0) = cplx(1.0, -2.0);
  const Relaxation a = build_relaxation(c), b = build_relaxation(c, &C1, 0.25);
  EXPECT_LE(max_abs(b.problem.C - a.problem.C - 0.25 * C1), 1e-15);
  CMat bad = CMat::Zero(2, 2);
  EXPECT_THROW(build_relaxation(c, &bad, 1.0), InputError);
}

TEST(Opf, FixtureSolvesRankOne) {
  const OpfCase c = fixture_case();
  const Relaxation r = build_relaxation(c);
  const SdpSolution s = solve(r.problem);
  ASSERT_TRUE(s.converged());
  const RankCertificate cert = certify_rank1(s.X);
  EXPECT_TRUE(cert.pass);
  EXPECT_LE(cert.ratio, 1e-6);
  const CVec V = recover_voltages(cert, s.X, c.v_ref);
  EXPECT_LE((V.head(c.m()) - c.v_ref).norm(), 1e-5);
  // The recovered voltages reproduce the relaxed objective.
  EXPECT_NEAR(voltage_objective(c, V, r.Y), s.objective, 1e-5 * std::abs(s.objective));
}

// Frozen grid search over |V1| and angle on two-bus single-phase cases.
TEST(Opf, TwoBusAgainstGridOracle) {
  const Json grid = testutil::oracle("two_bus_grid.json");
  int certified = 0;
  for (auto it = grid.begin(); it != grid.end(); ++it) {
    const OpfCase c = parse_case(std::string(MPOPF_ORACLE_DIR) + "/two_bus/" + it.key() + ".json").data;
    const SdpSolution s = solve(build_relaxation(c).problem);
    ASSERT_TRUE(s.converged()) << it.key();
    const double oracle = it.value()["grid_cost"].get<double>();
    const double scale = std::max(1.0, std::abs(oracle));
    EXPECT_LE(s.objective, oracle + 1e-6 * scale) << it.key();
    if (certify_rank1(s.X).pass) {
      ++certified;
      EXPECT_NEAR(s.objective, oracle, 2e-3 * scale) << it.key();
    }
  }
  EXPECT_GE(certified, 4);
}

TEST(Opf, ValidateCaseRejectsBadVectors) {
  OpfCase c = fixture_case();
  c.v_min[3] = c.v_max[3] + 0.1;
  EXPECT_THROW(validate_case(c), InputError);
  c = fixture_case();
  c.c_re.pop_back();
  EXPECT_THROW(validate_case(c), InputError);
  c = fixture_case();
  c.v_ref.resize(2);
  EXPECT_THROW(validate_case(c), InputError);
}
