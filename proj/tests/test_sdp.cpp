#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace mpopf;

namespace {

SdpProblem oracle_problem(const Json &o) {
  SdpProblem P;
  P.C = testutil::cmat(o["C"]);
  P.dim = static_cast<int>(P.C.rows());
  for (const auto &c : o["constraints"]) {
    const std::string s = c["sense"];
    const Sense sense = s == "eq" ? Sense::Eq : s == "le" ? Sense::Le : Sense::Ge;
    P.constraints.push_back({testutil::cmat(c["A"]), sense, c["b"].get<double>(), {}});
  }
  return P;
}

} // namespace

TEST(Sdp, EmbeddingEigenvaluesMatchOracle) {
  const Json o = testutil::oracle("embedding.json");
  const CMat H = testutil::cmat(o["H"]);
  const RVec eh = hermitian_eigenvalues(H);
  Eigen::SelfAdjointEigenSolver<RMat> es(real_embedding(H));
  RVec ee = es.eigenvalues();
  std::sort(ee.data(), ee.data() + ee.size());
  for (std::size_t i = 0; i < o["eig_H"].size(); ++i)
    EXPECT_NEAR(eh(static_cast<Eigen::Index>(i)), o["eig_H"][i].get<double>(), 1e-12);
  for (std::size_t i = 0; i < o["eig_E"].size(); ++i)
    EXPECT_NEAR(ee(static_cast<Eigen::Index>(i)), o["eig_E"][i].get<double>(), 1e-12);
}

TEST(Sdp, HalfEmbeddingRoundTrip) {
  CMat H(2, 2);
  H << 2.0, cplx(0.5, -1.0), cplx(0.5, 1.0), 3.0;
  EXPECT_LE(max_abs(complex_from_half_embedding(0.5 * real_embedding(H)) - H), 1e-15);
}

TEST(Sdp, EmbeddingRejectsNonHermitian) {
  CMat H(2, 2);
  H << 1.0, 2.0, 3.0, 1.0;
  EXPECT_THROW(real_embedding(H), InputError);
}

TEST(Sdp, RandomComplexProblemMatchesOracle) {
  const Json o = testutil::oracle("sdp_3x3.json");
  const SdpProblem P = oracle_problem(o);
  const SdpSolution s = solve(P);
  ASSERT_TRUE(s.converged()) << status_name(s.status);
  const double ref = o["objective"].get<double>();
  EXPECT_NEAR(s.objective, ref, 1e-6 * std::max(1.0, std::abs(ref)));
  EXPECT_LE(s.gap, 1e-7);
  EXPECT_GE(hermitian_eigenvalues(s.X)(0), -1e-8);
  // Dual slack is PSD and complementary to X.
  const CMat Z = dual_slack(P, s.multipliers);
  EXPECT_GE(hermitian_eigenvalues(Z)(0), -1e-6 * std::max(1.0, spectral_norm(Z)));
  EXPECT_LE(std::abs((Z * s.X).trace().real()), 1e-6);
}

TEST(Sdp, InequalityMultipliersNonnegative) {
  const SdpProblem P = oracle_problem(testutil::oracle("sdp_3x3.json"));
  const SdpSolution s = solve(P);
  ASSERT_TRUE(s.converged());
  for (std::size_t i = 0; i < P.constraints.size(); ++i)
    if (P.constraints[i].sense != Sense::Eq)
      EXPECT_GE(s.multipliers[i], -1e-8);
}

TEST(Sdp, TraceMinimizationOnSimplex) {
  // min tr(diag(3,1,2) W) s.t. tr W = 1: optimum puts all mass on the smallest entry.
  SdpProblem P;
  P.dim = 3;
  P.C = CMat::Zero(3, 3);
  P.C.diagonal() << 3.0, 1.0, 2.0;
  P.constraints.push_back({CMat::Identity(3, 3), Sense::Eq, 1.0, {}});
  const SdpSolution s = solve(P);
  ASSERT_TRUE(s.converged());
  EXPECT_NEAR(s.objective, 1.0, 1e-7);
  EXPECT_NEAR(s.X(1, 1).real(), 1.0, 1e-6);
}

TEST(Sdp, InfeasibleDetected) {
  SdpProblem P;
  P.dim = 2;
  P.C = CMat::Identity(2, 2);
  P.constraints.push_back({CMat::Identity(2, 2), Sense::Le, -1.0, {}});
  const SdpSolution s = solve(P);
  EXPECT_FALSE(s.converged());
}

TEST(Sdp, DeterministicTrajectory) {
  const SdpProblem P = oracle_problem(testutil::oracle("sdp_3x3.json"));
  const SdpSolution a = solve(P), b = solve(P);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_TRUE(a.X == b.X);
  EXPECT_EQ(a.multipliers, b.multipliers);
}

TEST(Sdp, ValidateRejectsBadShapes) {
  SdpProblem P;
  P.dim = 2;
  P.C = CMat::Identity(3, 3);
  EXPECT_THROW(solve(P), InputError);
  P.C = CMat::Identity(2, 2);
  CMat A(2, 2);
  A << 0.0, 1.0, 0.0, 0.0;
  P.constraints.push_back({A, Sense::Eq, 0.0, {}});
  EXPECT_THROW(solve(P), InputError);
}

TEST(Sdp, SparseSymMatchesDense) {
  CMat H(3, 3);
  H << 1.0, cplx(0, 2), 0.0, cplx(0, -2), 0.0, 0.5, 0.0, 0.5, -1.0;
  const RMat E = real_embedding(H);
  const SparseSym s = SparseSym::from_complex(H);
  RMat X = RMat::Random(6, 6);
  X = (X + X.transpose()).eval();
  EXPECT_NEAR(s.dot(X), (E * X).trace(), 1e-12);
  EXPECT_NEAR(s.squared_norm(), E.squaredNorm(), 1e-12);
  RMat M = RMat::Zero(6, 6);
  s.add_to(M, 2.0);
  EXPECT_LE((M - 2.0 * E).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((SparseSym::from_dense(E).dot(X) - s.dot(X)), 1e-12);
}
