#pragma once

#include "mpopf/opf.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace mpopf {

enum class Profile { CorollarySafe, A3Safe, Adversarial };

inline const char *profile_name(Profile p) {
  switch (p) {
  case Profile::CorollarySafe:
    return "corollary-safe";
  case Profile::A3Safe:
    return "a3-safe";
  case Profile::Adversarial:
    return "adversarial";
  }
  return "?";
}

inline Profile parse_profile(const std::string &s) {
  if (s == "corollary-safe")
    return Profile::CorollarySafe;
  if (s == "a3-safe")
    return Profile::A3Safe;
  if (s == "adversarial")
    return Profile::Adversarial;
  throw InputError("unknown profile " + s);
}

// The std distributions are implementation-defined, so draws are converted by hand
// to keep generated cases identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int k) { return static_cast<int>(uniform() * k); }
  bool coin() { return (eng_() >> 63) != 0; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = uniform();
    while (u <= 0.0)
      u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * std::numbers::pi * v);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * v);
  }

private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Uniform labelled tree on n nodes by Pruefer decoding.
inline std::vector<std::pair<int, int>> random_tree(Rng &rng, int n) {
  std::vector<std::pair<int, int>> edges;
  if (n < 2)
    return edges;
  std::vector<int> seq(static_cast<std::size_t>(n - 2));
  for (int &s : seq)
    s = rng.below(n);
  std::vector<int> degree(n, 1);
  for (int s : seq)
    ++degree[s];
  std::set<int> leaves;
  for (int j = 0; j < n; ++j)
    if (degree[j] == 1)
      leaves.insert(j);
  for (int s : seq) {
    const int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(std::min(leaf, s), std::max(leaf, s));
    if (--degree[s] == 1)
      leaves.insert(s);
  }
  const int a = *leaves.begin(), b = *std::next(leaves.begin());
  edges.emplace_back(a, b);
  return edges;
}

// Line-like block: inverse of a coupled series impedance with random length and noise.
inline CMat random_admittance(Rng &rng, int m) {
  for (;;) {
    const double len = rng.uniform(0.5, 2.0);
    const cplx base = len * 0.02 * cplx(1.0, 2.0);
    CMat z(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        z(a, b) = (a == b ? 1.0 : 0.4) * base;
    CMat noise(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        noise(a, b) = cplx(rng.normal(), rng.normal());
    CMat sym = 0.5 * (noise + noise.transpose());
    z += 0.05 * len * 0.02 * sym;
    if (singular_ratio(z) <= 1e-6)
      continue;
    CMat y = z.inverse();
    if (y.allFinite() && singular_ratio(y) > kInvertibilityGate)
      return y;
  }
}

// Two-coloring of a tree from bus 0.
inline std::vector<int> tree_coloring(int n, const std::vector<std::pair<int, int>> &edges) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> color(n, -1);
  std::vector<int> stack{0};
  color[0] = 0;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int k : adj[j])
      if (color[k] < 0) {
        color[k] = 1 - color[j];
        stack.push_back(k);
      }
  }
  return color;
}

inline OpfCase generate_random_case(std::uint64_t seed, int n, int m, Profile profile) {
  if (n < 2)
    throw InputError("random cases need at least two buses");
  if (m < 1)
    throw InputError("random cases need at least one phase");
  Rng rng(seed);
  OpfCase c;
  auto &net = c.network;
  net.n = n;
  net.m = m;
  for (int j = 0; j < n; ++j)
    net.names.push_back("b" + std::to_string(j));
  const auto edges = random_tree(rng, n);
  for (auto [a, b] : edges)
    net.lines.push_back({a, b, random_admittance(rng, m)});

  const std::size_t N = static_cast<std::size_t>(n * m);
  c.c_re.assign(N, 0.0);
  c.c_im.assign(N, 0.0);
  c.v_min.assign(N, 0.0);
  c.v_max.assign(N, 0.0);
  c.p_min.assign(N, -kInf);
  c.p_max.assign(N, kInf);
  c.q_min.assign(N, -kInf);
  c.q_max.assign(N, kInf);
  c.v_ref.resize(m);
  for (int phi = 0; phi < m; ++phi)
    c.v_ref(phi) = std::polar(1.0, -2.0 * std::numbers::pi * phi / m);
  for (std::size_t i = 0; i < N; ++i) {
    const double lo = rng.uniform(0.90, 0.93), hi = rng.uniform(1.07, 1.10);
    c.v_min[i] = lo * lo;
    c.v_max[i] = hi * hi;
  }

  auto signed_cost = [&]() { return (rng.coin() ? 1.0 : -1.0) * rng.uniform(0.5, 2.0); };
  auto set_costs = [&](int j) {
    for (int phi = 0; phi < m; ++phi) {
      const std::size_t i = static_cast<std::size_t>(j * m + phi);
      c.c_re[i] = signed_cost();
      c.c_im[i] = signed_cost();
    }
  };
  // Only the bound an A5-compatible activity can point at.
  auto aligned_bounds = [&](int j) {
    for (int phi = 0; phi < m; ++phi) {
      const std::size_t i = static_cast<std::size_t>(j * m + phi);
      if (rng.coin()) {
        const double b = rng.uniform(0.05, 1.0);
        (c.c_re[i] > 0 ? c.p_max[i] : c.p_min[i]) = c.c_re[i] > 0 ? b : -b;
      }
      if (rng.coin()) {
        const double b = rng.uniform(0.05, 1.0);
        (c.c_im[i] > 0 ? c.q_max[i] : c.q_min[i]) = c.c_im[i] > 0 ? b : -b;
      }
    }
  };

  const std::vector<int> color = tree_coloring(n, edges);
  const int cls = rng.below(2);
  std::vector<int> chosen;
  for (int j = 0; j < n; ++j)
    if (color[j] == cls)
      chosen.push_back(j);

  switch (profile) {
  case Profile::CorollarySafe:
    for (int j : chosen)
      set_costs(j);
    break;
  case Profile::A3Safe:
    for (int j : chosen) {
      set_costs(j);
      aligned_bounds(j);
    }
    break;
  case Profile::Adversarial: {
    const auto [a, b] = edges[static_cast<std::size_t>(rng.below(static_cast<int>(edges.size())))];
    std::set<int> S{a, b};
    for (int j = 0; j < n; ++j)
      if (rng.coin())
        S.insert(j);
    for (int j : S)
      set_costs(j);
    for (int j = 0; j < n; ++j) {
      if (!rng.coin())
        continue;
      for (int phi = 0; phi < m; ++phi) {
        const std::size_t i = static_cast<std::size_t>(j * m + phi);
        c.p_min[i] = -rng.uniform(0.05, 1.0);
        c.q_max[i] = rng.uniform(0.05, 1.0);
      }
    }
    break;
  }
  }
  validate_case(c);
  return c;
}

} // namespace mpopf
