#pragma once

#include "sandpile/abelian/partition.hpp"
#include "sandpile/linalg/snf.hpp"
#include "sandpile/models/rng.hpp"

#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sandpile {

/// Simple undirected graph on vertices 0..n-1 with the seed that produced it.
class GraphSample {
public:
  GraphSample() = default;
  explicit GraphSample(std::size_t n) : n_(n), adjacency_(n * n, 0) {}

  std::size_t vertex_count() const noexcept { return n_; }
  bool has_edge(std::size_t i, std::size_t j) const { return adjacency_[i * n_ + j] != 0; }

  void add_edge(std::size_t i, std::size_t j) {
    if (i == j) throw std::invalid_argument("self-loops are not allowed");
    adjacency_[i * n_ + j] = adjacency_[j * n_ + i] = 1;
  }

  std::size_t degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n_; ++j) d += adjacency_[i * n_ + j];
    return d;
  }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (std::size_t i = 0; i < n_; ++i) m += degree(i);
    return m / 2;
  }

  bool connected() const {
    if (n_ == 0) return true;
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n_;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (has_edge(i, j)) {
          std::size_t a = find(i), b = find(j);
          if (a != b) {
            parent[a] = b;
            --components;
          }
        }
    return components == 1;
  }

  /// The same graph with vertex v renamed to perm[v].
  GraphSample relabeled(const std::vector<std::size_t>& perm) const {
    GraphSample g(n_);
    g.master_seed = master_seed;
    g.sample_index = sample_index;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (has_edge(i, j)) g.add_edge(perm[i], perm[j]);
    return g;
  }

  /// Edge list, one "i j" per line with i < j.
  friend std::ostream& operator<<(std::ostream& out, const GraphSample& g) {
    for (std::size_t i = 0; i < g.n_; ++i)
      for (std::size_t j = i + 1; j < g.n_; ++j)
        if (g.has_edge(i, j)) out << i << ' ' << j << '\n';
    return out;
  }

  bool operator==(const GraphSample& other) const { return n_ == other.n_ && adjacency_ == other.adjacency_; }

  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;

private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adjacency_;
};

/// Erdos-Renyi G(n, q): pairs (i, j), i < j, visited in row order, one draw each.
inline GraphSample sample_graph(std::size_t n, double q, std::uint64_t seed, std::uint64_t sample_index = 0) {
  if (n < 2) throw std::invalid_argument("graph needs at least 2 vertices");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("edge probability must lie in (0, 1)");
  GraphSample g(n);
  g.master_seed = seed;
  g.sample_index = sample_index;
  SampleStream stream(seed, StreamTag::graph, sample_index);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (stream.bernoulli(q)) g.add_edge(i, j);
  return g;
}

/// Laplacian with off-diagonal 1 on edges and -deg(i) on the diagonal, with
/// the last vertex's row and column removed.
inline ModMatrix reduced_laplacian(const GraphSample& g) {
  const std::size_t n = g.vertex_count();
  if (n < 2) throw std::invalid_argument("graph needs at least 2 vertices");
  ModMatrix m = ModMatrix::integer(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    m.at(i, i) = -static_cast<long long>(g.degree(i));
    for (std::size_t j = 0; j + 1 < n; ++j)
      if (g.has_edge(i, j)) m.at(i, j) = 1;
  }
  return m;
}

enum class SampleStatus { saturated, unsaturated, disconnected };

inline const char* to_string(SampleStatus s) {
  switch (s) {
  case SampleStatus::saturated: return "saturated";
  case SampleStatus::unsaturated: return "unsaturated";
  case SampleStatus::disconnected: return "disconnected";
  }
  return "?";
}

struct SandpileType {
  Partition type; ///< empty when disconnected
  SampleStatus status = SampleStatus::saturated;
  int exponent = 0;
};

/// Sylow p-type of the sandpile group, with saturation retry from exponent e.
inline SandpileType sandpile_sylow_type(const GraphSample& g, Prime p, int e = 8, int ceiling = 64) {
  if (!g.connected()) return {{}, SampleStatus::disconnected, 0};
  SylowType t = cokernel_sylow_type(reduced_laplacian(g), p, e, ceiling);
  return {std::move(t.type), t.saturated ? SampleStatus::saturated : SampleStatus::unsaturated, t.exponent};
}

} // namespace sandpile
