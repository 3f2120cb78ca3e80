#pragma once

#include "mpopf/types.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mpopf {

struct Line {
  int from = 0;
  int to = 0;
  // m x m series admittance block, siemens. Not required symmetric.
  CMat y;
};

struct MultiphaseNetwork {
  int n = 0;
  int m = 0;
  // External bus names; position is the internal id and bus 0 is the slack.
  std::vector<std::string> names;
  std::vector<Line> lines;

  int dim() const { return n * m; }
  int flat(int bus, int phase) const { return bus * m + phase; }
};

struct BusPhase {
  int bus = 0;
  int phase = 0;

  int flat(int m) const { return bus * m + phase; }
  static BusPhase from_flat(int idx, int m) { return {idx / m, idx % m}; }
};

struct Topology {
  int n = 0;
  bool connected = false;
  bool acyclic = false;
  bool is_tree = false;
  std::vector<std::vector<int>> adj;
  // Undirected edges with first < second, in line order.
  std::vector<std::pair<int, int>> edges;

  bool adjacent(int a, int b) const {
    if (a < 0 || a >= n)
      return false;
    const auto &row = adj[a];
    return std::find(row.begin(), row.end(), b) != row.end();
  }

  // N(K): union of the neighborhoods of the buses in K.
  std::set<int> neighbors(const std::set<int> &K) const {
    std::set<int> out;
    for (int j : K)
      for (int k : adj[j])
        out.insert(k);
    return out;
  }

  // Empty when the graph is a tree, otherwise "disconnected", "cycle" or both.
  std::string issue() const {
    std::string s;
    if (!connected)
      s = "disconnected";
    if (!acyclic)
      s += s.empty() ? "cycle" : "+cycle";
    return s;
  }
};

inline Topology validate_tree(const MultiphaseNetwork &net) {
  Topology t;
  t.n = net.n;
  t.adj.assign(net.n, {});
  std::vector<int> parent(net.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a)
      a = parent[a] = parent[parent[a]];
    return a;
  };
  t.acyclic = true;
  int components = net.n;
  for (const auto &l : net.lines) {
    int a = std::min(l.from, l.to), b = std::max(l.from, l.to);
    t.edges.emplace_back(a, b);
    t.adj[a].push_back(b);
    t.adj[b].push_back(a);
    int ra = find(a), rb = find(b);
    if (ra == rb)
      t.acyclic = false;
    else {
      parent[ra] = rb;
      --components;
    }
  }
  for (auto &row : t.adj)
    std::sort(row.begin(), row.end());
  t.connected = components <= 1;
  t.is_tree = t.connected && t.acyclic && static_cast<int>(net.lines.size()) == net.n - 1;
  return t;
}

// Smallest/largest singular value ratio gate for line blocks.
inline constexpr double kInvertibilityGate = 1e-9;

inline double singular_ratio(const CMat &y) {
  Eigen::JacobiSVD<CMat> svd(y);
  const auto &s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0)
    return 0.0;
  return s(s.size() - 1) / s(0);
}

// Structural checks; throws InputError. Tree shape is not enforced here.
inline void validate_network(const MultiphaseNetwork &net) {
  if (net.n < 1)
    throw InputError("network needs at least one bus");
  if (net.m < 1)
    throw InputError("phase count must be positive");
  if (static_cast<int>(net.names.size()) != net.n)
    throw InputError("bus name list does not match bus count");
  std::set<std::string> seen(net.names.begin(), net.names.end());
  if (static_cast<int>(seen.size()) != net.n)
    throw InputError("duplicate bus name");
  std::set<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < net.lines.size(); ++i) {
    const auto &l = net.lines[i];
    const std::string where = "line " + std::to_string(i);
    if (l.from < 0 || l.from >= net.n || l.to < 0 || l.to >= net.n)
      throw InputError(where + ": bus index out of range");
    if (l.from == l.to)
      throw InputError(where + ": self-loop");
    if (!pairs.emplace(std::min(l.from, l.to), std::max(l.from, l.to)).second)
      throw InputError(where + ": duplicate line");
    if (l.y.rows() != net.m || l.y.cols() != net.m)
      throw InputError(where + ": admittance block must be m x m");
    if (!l.y.allFinite())
      throw InputError(where + ": non-finite admittance");
    if (singular_ratio(l.y) <= kInvertibilityGate)
      throw InputError(where + ": admittance block is not invertible");
  }
}

inline CMat assemble_bus_admittance(const MultiphaseNetwork &net) {
  const int m = net.m;
  CMat Y = CMat::Zero(net.dim(), net.dim());
  for (const auto &l : net.lines) {
    const int j = l.from, k = l.to;
    Y.block(j * m, j * m, m, m) += l.y;
    Y.block(k * m, k * m, m, m) += l.y;
    Y.block(j * m, k * m, m, m) -= l.y;
    Y.block(k * m, j * m, m, m) -= l.y;
  }
  return Y;
}

struct InjectionMatrices {
  CMat Phi;
  CMat Psi;
  CMat E;
};

// Y_j^phi keeps only row idx of Y; Phi and Psi are its Hermitian and skew parts.
inline InjectionMatrices injection_matrices(const CMat &Y, int idx) {
  const int N = static_cast<int>(Y.rows());
  if (idx < 0 || idx >= N)
    throw InputError("bus-phase index out of range");
  CMat Yj = CMat::Zero(N, N);
  Yj.row(idx) = Y.row(idx);
  InjectionMatrices out;
  out.Phi = 0.5 * (Yj.adjoint() + Yj);
  out.Psi = (Yj.adjoint() - Yj) / (2.0 * kI);
  out.E = CMat::Zero(N, N);
  out.E(idx, idx) = 1.0;
  return out;
}

// Injections through the quadratic forms V^H Phi V and V^H Psi V.
inline CVec evaluate_injections(const CVec &V, const CMat &Y) {
  const int N = static_cast<int>(Y.rows());
  if (V.size() != N)
    throw InputError("voltage vector length does not match admittance matrix");
  CVec s(N);
  for (int i = 0; i < N; ++i) {
    auto M = injection_matrices(Y, i);
    const double p = (V.adjoint() * M.Phi * V)(0, 0).real();
    const double q = (V.adjoint() * M.Psi * V)(0, 0).real();
    s(i) = cplx(p, q);
  }
  return s;
}

// Direct nodal form s = V .* conj(Y V).
inline CVec nodal_injections(const CVec &V, const CMat &Y) {
  if (V.size() != Y.rows())
    throw InputError("voltage vector length does not match admittance matrix");
  CVec I = Y * V;
  return V.cwiseProduct(I.conjugate());
}

} // namespace mpopf
