#pragma once

// Graphs, couplings and exact probabilities of the zero-field Ising model
//   P(x) = exp(sum_{(s,t) in E} theta_st x_s x_t) / Z(theta),  x in {-1,+1}^p.
// Vertex ids are 1-based throughout the public API.

#include "isingsel/error.hpp"
#include "isingsel/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace isingsel {

enum class GraphFamily { grid4, grid8, star, custom };

inline const char *to_string(GraphFamily f) {
  switch (f) {
  case GraphFamily::grid4: return "grid4";
  case GraphFamily::grid8: return "grid8";
  case GraphFamily::star: return "star";
  case GraphFamily::custom: return "custom";
  }
  return "custom";
}

/// Unordered vertex pair stored with s < t.
struct Edge {
  int s = 0;
  int t = 0;

  friend auto operator<=>(const Edge &, const Edge &) = default;
};

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

class GraphTopology {
public:
  GraphTopology() = default;

  /// Validates ids and rejects self-loops and duplicates; edges are stored sorted.
  GraphTopology(int p, std::vector<Edge> edges, GraphFamily family = GraphFamily::custom)
      : p_(p), family_(family) {
    detail::require(p >= 1, "vertex count must be positive");
    for (auto &e : edges) {
      detail::require(e.s != e.t, "self-loop on vertex " + std::to_string(e.s));
      detail::require(e.s >= 1 && e.s <= p && e.t >= 1 && e.t <= p,
                      "vertex id out of range [1, p]");
      e = make_edge(e.s, e.t);
    }
    std::sort(edges.begin(), edges.end());
    detail::require(std::adjacent_find(edges.begin(), edges.end()) == edges.end(),
                    "duplicate edge");
    edges_ = std::move(edges);
    adjacency_.assign(static_cast<std::size_t>(p), {});
    for (const auto &e : edges_) {
      adjacency_[e.s - 1].push_back(e.t);
      adjacency_[e.t - 1].push_back(e.s);
    }
    for (auto &nbrs : adjacency_)
      std::sort(nbrs.begin(), nbrs.end());
  }

  int p() const { return p_; }
  GraphFamily family() const { return family_; }
  std::span<const Edge> edges() const { return edges_; }
  std::size_t num_edges() const { return edges_.size(); }

  /// Sorted neighbor ids of vertex v.
  std::span<const int> neighbors(int v) const { return adjacency_.at(v - 1); }
  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  int max_degree() const {
    int d = 0;
    for (const auto &nbrs : adjacency_)
      d = std::max(d, static_cast<int>(nbrs.size()));
    return d;
  }

  bool has_edge(int a, int b) const {
    return std::binary_search(edges_.begin(), edges_.end(), make_edge(a, b));
  }

  /// Index of (a,b) within edges(), or -1.
  std::ptrdiff_t edge_index(int a, int b) const {
    const Edge e = make_edge(a, b);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
    return (it != edges_.end() && *it == e) ? it - edges_.begin() : -1;
  }

  /// Degree histogram {degree -> vertex count}.
  std::map<int, int> degree_histogram() const {
    std::map<int, int> h;
    for (int v = 1; v <= p_; ++v)
      ++h[degree(v)];
    return h;
  }

  /// True when every edge touches vertex 1 (a star rooted at the first vertex).
  bool is_star_shaped() const {
    return std::all_of(edges_.begin(), edges_.end(), [](const Edge &e) { return e.s == 1; });
  }

  friend bool operator==(const GraphTopology &a, const GraphTopology &b) {
    return a.p_ == b.p_ && a.edges_ == b.edges_;
  }

private:
  int p_ = 0;
  GraphFamily family_ = GraphFamily::custom;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

namespace detail {

inline GraphTopology make_torus(int side, std::span<const std::pair<int, int>> offsets,
                                GraphFamily family) {
  require(side >= 3, "lattice side must be at least 3, got " + std::to_string(side));
  const int p = side * side;
  std::vector<Edge> edges;
  auto id = [side](int row, int col) { return row * side + col + 1; };
  for (int row = 0; row < side; ++row)
    for (int col = 0; col < side; ++col)
      for (auto [dr, dc] : offsets) {
        const int nr = (row + dr + side) % side;
        const int nc = (col + dc + side) % side;
        edges.push_back(make_edge(id(row, col), id(nr, nc)));
      }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return GraphTopology(p, std::move(edges), family);
}

} // namespace detail

/// Toroidal side x side lattice, N/S/E/W neighbors.
inline GraphTopology make_grid4(int side) {
  static constexpr std::pair<int, int> offsets[] = {{0, 1}, {1, 0}};
  return detail::make_torus(side, offsets, GraphFamily::grid4);
}

/// Toroidal lattice with the Moore (king-move) neighborhood. Duplicate pairs
/// that appear for side 3 or 4 are collapsed, so degrees drop below 8 there.
inline GraphTopology make_grid8(int side) {
  static constexpr std::pair<int, int> offsets[] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  return detail::make_torus(side, offsets, GraphFamily::grid8);
}

/// Hub vertex 1 joined to vertices 2..d+1; the rest are isolated.
inline GraphTopology make_star(int p, int d) {
  detail::require(p >= 2, "star needs p >= 2");
  detail::require(d >= 1 && d <= p - 1, "star degree must lie in [1, p-1]");
  std::vector<Edge> edges;
  for (int t = 2; t <= d + 1; ++t)
    edges.push_back({1, t});
  return GraphTopology(p, std::move(edges), GraphFamily::star);
}

enum class CouplingMode { mixed, positive };

inline const char *to_string(CouplingMode m) {
  return m == CouplingMode::mixed ? "mixed" : "positive";
}

class IsingModel {
public:
  IsingModel() = default;

  /// couplings[k] belongs to topology.edges()[k]; every value must be nonzero.
  IsingModel(GraphTopology topology, std::vector<double> couplings)
      : topology_(std::move(topology)), couplings_(std::move(couplings)) {
    detail::require(couplings_.size() == topology_.num_edges(),
                    "one coupling per edge required");
    for (double c : couplings_)
      detail::require(c != 0.0 && std::isfinite(c), "couplings must be finite and nonzero");
    weighted_.assign(static_cast<std::size_t>(topology_.p()), {});
    const auto edges = topology_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      weighted_[edges[k].s - 1].push_back({edges[k].t - 1, couplings_[k]});
      weighted_[edges[k].t - 1].push_back({edges[k].s - 1, couplings_[k]});
    }
  }

  const GraphTopology &topology() const { return topology_; }
  int p() const { return topology_.p(); }
  std::span<const double> couplings() const { return couplings_; }

  /// theta_st, zero for non-edges.
  double coupling(int s, int t) const {
    const auto k = topology_.edge_index(s, t);
    return k < 0 ? 0.0 : couplings_[static_cast<std::size_t>(k)];
  }

  struct WeightedNeighbor {
    int index; // 0-based vertex index
    double theta;
  };

  /// Neighbors of 0-based vertex index v with their couplings.
  std::span<const WeightedNeighbor> weighted_neighbors0(int v) const {
    return weighted_[static_cast<std::size_t>(v)];
  }

  /// sum_t theta_rt x_t for 1-based r, with x indexed 0-based over all p spins.
  template <class Spins> double local_field(int r, const Spins &x) const {
    double a = 0.0;
    for (const auto &nb : weighted_[static_cast<std::size_t>(r - 1)])
      a += nb.theta * static_cast<double>(x[nb.index]);
    return a;
  }

private:
  GraphTopology topology_;
  std::vector<double> couplings_;
  std::vector<std::vector<WeightedNeighbor>> weighted_;
};

/// |theta| = omega on every edge; signs are fair coin flips in mixed mode.
inline IsingModel assign_couplings(const GraphTopology &topology, double omega,
                                   CouplingMode mode, std::uint64_t seed) {
  detail::require(omega > 0.0 && std::isfinite(omega), "omega must be positive");
  std::vector<double> theta(topology.num_edges(), omega);
  if (mode == CouplingMode::mixed) {
    Rng rng(seed);
    for (double &c : theta)
      c = rng.coin() ? omega : -omega;
  }
  return IsingModel(topology, std::move(theta));
}

/// Smallest coupling magnitude over the edge set.
inline double theta_min(const IsingModel &model) {
  const auto c = model.couplings();
  detail::require(!c.empty(), "theta_min is undefined for an edgeless graph");
  double m = std::abs(c[0]);
  for (double v : c)
    m = std::min(m, std::abs(v));
  return m;
}

namespace detail {

inline void require_vertex(const IsingModel &model, int r) {
  require(r >= 1 && r <= model.p(), "vertex " + std::to_string(r) + " out of range");
}

inline void require_spin(int s) { require(s == 1 || s == -1, "spins must be -1 or +1"); }

/// P(x_r = spin | a) written as 1/(1+exp(-2 spin a)) so it never overflows.
inline double conditional_from_field(double a, int spin) {
  return 1.0 / (1.0 + std::exp(-2.0 * spin * a));
}

} // namespace detail

/// P(X_r = x_r | X_rest = x_rest). x_rest has p-1 entries ordered by
/// ascending vertex id with r skipped.
inline double conditional_prob(const IsingModel &model, int r, std::span<const int> x_rest,
                               int x_r) {
  detail::require_vertex(model, r);
  detail::require(static_cast<int>(x_rest.size()) == model.p() - 1,
                  "x_rest must have p-1 entries");
  detail::require_spin(x_r);
  double a = 0.0;
  for (const auto &nb : model.weighted_neighbors0(r - 1)) {
    const int pos = nb.index < r - 1 ? nb.index : nb.index - 1;
    detail::require_spin(x_rest[static_cast<std::size_t>(pos)]);
    a += nb.theta * x_rest[static_cast<std::size_t>(pos)];
  }
  return detail::conditional_from_field(a, x_r);
}

/// Probability table over all 2^p states; bit b of the index is set iff
/// x_{b+1} = +1.
struct JointTable {
  int p = 0;
  std::vector<double> probabilities;

  static int spin(std::uint64_t state, int vertex) {
    return ((state >> (vertex - 1)) & 1U) ? 1 : -1;
  }

  std::size_t size() const { return probabilities.size(); }
};

inline constexpr int kMaxEnumerationVertices = 20;

inline JointTable enumerate_joint(const IsingModel &model) {
  const int p = model.p();
  if (p > kMaxEnumerationVertices)
    throw ResourceLimit("exact enumeration is capped at p <= 20, got p = " +
                        std::to_string(p));
  const std::size_t states = std::size_t{1} << p;
  const auto edges = model.topology().edges();
  const auto theta = model.couplings();

  std::vector<double> log_weight(states);
  double max_lw = -INFINITY;
  for (std::size_t x = 0; x < states; ++x) {
    double e = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const bool same = (((x >> (edges[k].s - 1)) ^ (x >> (edges[k].t - 1))) & 1U) == 0;
      e += same ? theta[k] : -theta[k];
    }
    log_weight[x] = e;
    max_lw = std::max(max_lw, e);
  }
  double total = 0.0;
  for (double &w : log_weight) {
    w = std::exp(w - max_lw);
    total += w;
  }
  for (double &w : log_weight)
    w /= total;
  return JointTable{p, std::move(log_weight)};
}

/// Signed edge set: pairs absent from `entries` carry sign 0.
struct SignedEdgeSet {
  int p = 0;
  std::map<Edge, int> entries;

  int sign(int s, int t) const {
    auto it = entries.find(make_edge(s, t));
    return it == entries.end() ? 0 : it->second;
  }

  friend bool operator==(const SignedEdgeSet &, const SignedEdgeSet &) = default;
};

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

inline SignedEdgeSet signed_edges(const IsingModel &model) {
  SignedEdgeSet out{model.p(), {}};
  const auto edges = model.topology().edges();
  for (std::size_t k = 0; k < edges.size(); ++k)
    out.entries[edges[k]] = sign_of(model.couplings()[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization
//
//   p=<int>
//   s t theta        (one line per edge)

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

inline int parse_header_int(const std::string &token, const std::string &key) {
  const std::string prefix = key + "=";
  if (token.rfind(prefix, 0) != 0)
    throw IoError("expected '" + prefix + "<int>', got '" + token + "'");
  int value = 0;
  const char *first = token.data() + prefix.size();
  const char *last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw IoError("malformed integer in '" + token + "'");
  return value;
}

} // namespace detail

inline void write_model(std::ostream &os, const IsingModel &model) {
  os << "p=" << model.p() << '\n';
  const auto edges = model.topology().edges();
  for (std::size_t k = 0; k < edges.size(); ++k)
    os << edges[k].s << ' ' << edges[k].t << ' ' << detail::format_double(model.couplings()[k])
       << '\n';
}

inline IsingModel read_model(std::istream &is) {
  std::string header;
  if (!(is >> header))
    throw IoError("empty model file");
  const int p = detail::parse_header_int(header, "p");
  std::vector<std::pair<Edge, double>> rows;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    int s = 0, t = 0;
    double theta = 0.0;
    std::string extra;
    if (!(ls >> s >> t >> theta) || (ls >> extra))
      throw IoError("malformed edge line: '" + line + "'");
    rows.push_back({make_edge(s, t), theta});
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  std::vector<Edge> edges;
  std::vector<double> theta;
  for (const auto &[e, c] : rows) {
    edges.push_back(e);
    theta.push_back(c);
  }
  GraphTopology topo(p, std::move(edges));
  const GraphFamily family =
      topo.num_edges() > 0 && topo.is_star_shaped() ? GraphFamily::star : GraphFamily::custom;
  return IsingModel(GraphTopology(p, {topo.edges().begin(), topo.edges().end()}, family),
                    std::move(theta));
}

inline void write_signed_edges(std::ostream &os, const SignedEdgeSet &edges) {
  for (const auto &[e, sign] : edges.entries)
    os << e.s << ' ' << e.t << ' ' << sign << '\n';
}

} // namespace isingsel
