#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mpopf;

namespace {

struct FixtureRun {
  OpfCase c;
  Topology topo;
  Relaxation relax;
  SdpSolution sol;
  ActivityFlags flags;
};

const FixtureRun &fixture_run() {
  static const FixtureRun run = [] {
    FixtureRun r;
    r.c = parse_case(testutil::fixture("ieee11.json")).data;
    r.topo = validate_tree(r.c.network);
    r.relax = build_relaxation(r.c);
    r.sol = solve(r.relax.problem);
    r.flags = detect_active_sets(r.sol.X, r.c, r.relax.Y);
    return r;
  }();
  return run;
}

int bus_id(const OpfCase &c, const std::string &name) {
  const auto &names = c.network.names;
  return static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
}

std::set<int> ids(const OpfCase &c, std::initializer_list<const char *> names) {
  std::set<int> out;
  for (const char *n : names)
    out.insert(bus_id(c, n));
  return out;
}

Topology path_topology(int n) {
  MultiphaseNetwork net;
  net.n = n;
  net.m = 1;
  for (int j = 0; j < n; ++j)
    net.names.push_back(std::to_string(j));
  for (int j = 0; j + 1 < n; ++j)
    net.lines.push_back({j, j + 1, CMat::Identity(1, 1)});
  return validate_tree(net);
}

} // namespace

TEST(Exactness, FixtureCriticalSetsFollowSignPattern) {
  const auto &r = fixture_run();
  const CriticalSets apriori = critical_sets(r.c, nullptr);
  EXPECT_EQ(apriori.objective, ids(r.c, {"650", "633", "645", "671", "611", "652"}));
  EXPECT_EQ(apriori.constraint_all, ids(r.c, {"650", "633", "645", "671", "611"}));
  const CriticalSets post = critical_sets(r.c, &r.flags);
  EXPECT_EQ(post.constraint, ids(r.c, {"650", "671", "611"}));
}

TEST(Exactness, FixtureConditionVerdicts) {
  const auto &r = fixture_run();
  ASSERT_TRUE(r.sol.converged());
  ConditionReport rep = check_conditions(r.c, critical_sets(r.c, &r.flags), &r.flags, r.topo, CheckMode::Aposteriori);
  EXPECT_EQ(rep.a2.verdict, Verdict::Pass);
  EXPECT_EQ(rep.a3.verdict, Verdict::Pass);
  EXPECT_EQ(rep.a4.verdict, Verdict::Fail);
  for (int j : rep.a4.buses)
    EXPECT_TRUE(ids(r.c, {"650", "671", "611"}).count(j));
  EXPECT_EQ(rep.a5.verdict, Verdict::Pass);
  const SlaterResult s = slater_margin(r.c);
  EXPECT_GT(s.margin, kTolSlater);
}

TEST(Exactness, FixtureNineActiveInjectionBounds) {
  const auto &r = fixture_run();
  int n = 0;
  for (std::size_t i = 0; i < r.flags.fp.size(); ++i)
    n += (r.flags.fp[i] != 0) + (r.flags.fq[i] != 0);
  EXPECT_EQ(n, 9);
}

TEST(Exactness, FixtureAprioriCorollaryFails) {
  const auto &r = fixture_run();
  const ConditionReport rep = check_conditions(r.c, critical_sets(r.c, nullptr), nullptr, r.topo, CheckMode::Apriori);
  EXPECT_EQ(rep.corollary.verdict, Verdict::Fail);
  EXPECT_FALSE(rep.corollary.buses.empty());
}

TEST(Exactness, FixtureKkt) {
  const auto &r = fixture_run();
  const DualMatrixBundle d = assemble_dual_matrix(r.c, r.relax, r.sol.multipliers);
  EXPECT_LE(d.route_gap, 1e-8 * std::max(1.0, max_abs(d.A)));
  const KktCheck k = kkt_check(d.A, r.sol.X);
  EXPECT_TRUE(k.pass) << k.trace_AW << " " << k.lambda_min_A;
  EXPECT_TRUE(check_G_invertibility(d.A, r.c.m(), r.topo).pass);
}

TEST(Exactness, ActivityFlagsFromBounds) {
  // Negative cost on p at the load bus pushes it to its upper bound.
  OpfCase c = parse_case(std::string(MPOPF_ORACLE_DIR) + "/two_bus/tb3.json").data;
  const Relaxation r = build_relaxation(c);
  const SdpSolution s = solve(r.problem);
  ASSERT_TRUE(s.converged());
  const ActivityFlags f = detect_active_sets(s.X, c, r.Y);
  EXPECT_EQ(f.fp[1], 1);
  EXPECT_EQ(f.fq[1], 0);
  c.p_min[1] = c.p_max[1];
  EXPECT_THROW(detect_active_sets(s.X, c, r.Y), DegenerateActivity);
}

TEST(Exactness, RankCertificateOnKnownMatrices) {
  CVec v(3);
  v << 1.0, cplx(0.0, 2.0), -1.0;
  RankCertificate a = certify_rank1(v * v.adjoint());
  EXPECT_TRUE(a.pass);
  EXPECT_NEAR(a.rho1(), 6.0, 1e-12);
  CMat W = v * v.adjoint();
  W(2, 2) += 0.1;
  RankCertificate b = certify_rank1(W);
  EXPECT_FALSE(b.pass);
  EXPECT_THROW(certify_rank1(CMat::Zero(3, 3)), ZeroMatrix);
}

TEST(Exactness, RecoveryAlignsToReference) {
  CVec V(4);
  V << std::polar(1.0, 0.0), std::polar(1.0, -2.0), std::polar(0.97, 0.3), std::polar(1.02, -1.7);
  const CMat W = V * V.adjoint();
  CVec ref = V.head(2);
  const CVec out = recover_voltages(certify_rank1(W), W, ref);
  EXPECT_LE((out - V).norm(), 1e-12);
  ref(0) = std::polar(1.0, 0.5);
  EXPECT_THROW(recover_voltages(certify_rank1(W), W, ref), RecoveryMismatch);
}

TEST(Exactness, GInvertibilityOnPath) {
  const Topology t = path_topology(3);
  CMat A(3, 3);
  A << 2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0;
  EXPECT_TRUE(check_G_invertibility(A, 1, t).pass);
  CMat B = A;
  B(0, 2) = B(2, 0) = 0.5;
  const auto r = check_G_invertibility(B, 1, t);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.nonzero_nonedges.size(), 1u);
  CMat C = A;
  C(0, 1) = C(1, 0) = 0.0;
  EXPECT_FALSE(check_G_invertibility(C, 1, t).pass);
  EXPECT_FALSE(check_G_invertibility(-A, 1, t).pass);
}

TEST(Exactness, MinimalSupportNullVectorIsConnected) {
  // Path Laplacian: the constant vector spans the null space and covers every bus.
  const Topology t = path_topology(4);
  CMat L = CMat::Zero(4, 4);
  for (int j = 0; j < 3; ++j) {
    L(j, j) += 1.0;
    L(j + 1, j + 1) += 1.0;
    L(j, j + 1) = L(j + 1, j) = -1.0;
  }
  const MinimalSupport ms = minimal_support_null_vector(L, 1, t);
  EXPECT_EQ(ms.null_dim, 1);
  EXPECT_TRUE(ms.support.connected);
  EXPECT_EQ(ms.support.omega.size(), 4u);
}

TEST(Exactness, MinimalSupportShrinks) {
  // Two disjoint null directions: the search ends on a single bus.
  const Topology t = path_topology(3);
  CMat D = CMat::Zero(3, 3);
  D(1, 1) = 1.0;
  const MinimalSupport ms = minimal_support_null_vector(D, 1, t);
  EXPECT_EQ(ms.null_dim, 2);
  EXPECT_EQ(ms.support.omega.size(), 1u);
  EXPECT_TRUE(ms.support.connected);
}

TEST(Exactness, SupportDetectsDisconnection) {
  const Topology t = path_topology(3);
  CVec y(3);
  y << 1.0, 0.0, 1.0;
  const SupportReport s = support_and_connectivity(y, 1, t);
  EXPECT_EQ(s.omega, (std::set<int>{0, 2}));
  EXPECT_FALSE(s.connected);
}

TEST(Exactness, AdjacentCriticalBusesFailA3) {
  OpfCase c = generate_random_case(5, 6, 2, Profile::Adversarial);
  const Topology t = validate_tree(c.network);
  const ActivityFlags f = zero_flags(c.dim());
  const ConditionReport rep = check_conditions(c, critical_sets(c, &f), &f, t, CheckMode::Aposteriori);
  EXPECT_EQ(rep.a3.verdict, Verdict::Fail);
  EXPECT_FALSE(rep.a3.edges.empty());
}

TEST(Exactness, A5FlagsOpposingSigns) {
  OpfCase c = generate_random_case(3, 4, 1, Profile::CorollarySafe);
  const Topology t = validate_tree(c.network);
  ActivityFlags f = zero_flags(c.dim());
  int j = -1;
  for (int i = 0; i < c.dim(); ++i)
    if (c.c_re[i] != 0.0) {
      j = i;
      break;
    }
  ASSERT_GE(j, 0);
  f.fp[j] = c.c_re[j] > 0 ? -1 : 1;
  const ConditionReport rep = check_conditions(c, critical_sets(c, &f), &f, t, CheckMode::Aposteriori);
  EXPECT_EQ(rep.a4.verdict, Verdict::Fail);
  EXPECT_EQ(rep.a5.verdict, Verdict::Fail);
  EXPECT_EQ(rep.a5.bus_phases, std::vector<int>{j});
  f.fp[j] = -f.fp[j];
  EXPECT_EQ(check_conditions(c, critical_sets(c, &f), &f, t, CheckMode::Aposteriori).a5.verdict, Verdict::Pass);
}
