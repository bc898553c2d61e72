#pragma once

// Neighborhood selection: one penalized regression per vertex, signed
// neighborhoods read from the exact zeros of the solution, and scoring
// against a ground-truth model.

#include "isingsel/error.hpp"
#include "isingsel/model.hpp"
#include "isingsel/sampling.hpp"
#include "isingsel/solver.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace isingsel {

struct SignedNeighborhood {
  int r = 0;
  std::map<int, int> signed_members; // vertex -> +1 / -1

  friend bool operator==(const SignedNeighborhood &, const SignedNeighborhood &) = default;
};

struct NodeFitSummary {
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct GraphEstimate {
  int p = 0;
  std::vector<SignedNeighborhood> neighborhoods; // index r-1
  double lambda_used = 0.0;
  std::vector<NodeFitSummary> per_node_results;

  bool all_converged() const {
    for (const auto &s : per_node_results)
      if (!s.converged)
        return false;
    return true;
  }
};

/// factor * sqrt(log p / n), natural log.
inline double lambda_rule(int n, int p, double factor = 2.0) {
  detail::require(n >= 1, "n must be positive");
  detail::require(p >= 2, "lambda rule needs p >= 2");
  detail::require(factor > 0.0, "lambda factor must be positive");
  return factor * std::sqrt(std::log(static_cast<double>(p)) / n);
}

/// True signed neighborhood of r in a model.
inline SignedNeighborhood true_neighborhood(const IsingModel &model, int r) {
  SignedNeighborhood nb{r, {}};
  for (const auto &w : model.weighted_neighbors0(r - 1))
    nb.signed_members[w.index + 1] = sign_of(w.theta);
  return nb;
}

inline std::pair<SignedNeighborhood, SolverResult>
estimate_neighborhood(const SampleSet &samples, int r, double lambda,
                      const SolverConfig &config = {}) {
  detail::require(lambda > 0.0, "lambda must be positive");
  const NodeDesign design = NodeDesign::from_samples(samples, r);
  SolverResult res = fit(design, lambda, config);
  SignedNeighborhood nb{r, {}};
  for (int col = 0; col < design.dim(); ++col)
    if (res.theta_hat[col] != 0.0)
      nb.signed_members[predictor_vertex(r, col)] = sign_of(res.theta_hat[col]);
  return {std::move(nb), std::move(res)};
}

inline GraphEstimate estimate_graph(const SampleSet &samples, double lambda,
                                    const SolverConfig &config = {}) {
  detail::require(samples.n() >= 1, "samples must be nonempty");
  GraphEstimate est;
  est.p = samples.p();
  est.lambda_used = lambda;
  est.neighborhoods.reserve(static_cast<std::size_t>(est.p));
  est.per_node_results.reserve(static_cast<std::size_t>(est.p));
  for (int r = 1; r <= est.p; ++r) {
    auto [nb, res] = estimate_neighborhood(samples, r, lambda, config);
    est.neighborhoods.push_back(std::move(nb));
    est.per_node_results.push_back({res.objective, res.kkt_residual, res.iterations, res.converged});
  }
  return est;
}

enum class EdgeErrorKind { missed, extra, sign_flipped };

inline const char *to_string(EdgeErrorKind k) {
  switch (k) {
  case EdgeErrorKind::missed: return "missed";
  case EdgeErrorKind::extra: return "extra";
  case EdgeErrorKind::sign_flipped: return "sign_flipped";
  }
  return "?";
}

/// A disagreement seen from node r about its neighbor u.
struct EdgeError {
  int r = 0;
  int u = 0;
  EdgeErrorKind kind = EdgeErrorKind::missed;
};

struct SuccessRecord {
  bool overall = false;
  std::vector<bool> per_node; // index r-1
  std::vector<EdgeError> edge_errors;
};

inline SuccessRecord evaluate_success(const GraphEstimate &estimate, const IsingModel &truth) {
  detail::require(estimate.p == truth.p(), "estimate and truth differ in p");
  detail::require(static_cast<int>(estimate.neighborhoods.size()) == estimate.p,
                  "estimate must carry one neighborhood per vertex");
  SuccessRecord rec;
  rec.per_node.assign(static_cast<std::size_t>(estimate.p), true);
  for (int r = 1; r <= estimate.p; ++r) {
    const auto truth_nb = true_neighborhood(truth, r).signed_members;
    const auto &est_nb = estimate.neighborhoods[static_cast<std::size_t>(r - 1)].signed_members;
    for (const auto &[u, s] : truth_nb) {
      auto it = est_nb.find(u);
      if (it == est_nb.end())
        rec.edge_errors.push_back({r, u, EdgeErrorKind::missed});
      else if (it->second != s)
        rec.edge_errors.push_back({r, u, EdgeErrorKind::sign_flipped});
    }
    for (const auto &[u, s] : est_nb)
      if (!truth_nb.contains(u))
        rec.edge_errors.push_back({r, u, EdgeErrorKind::extra});
    rec.per_node[static_cast<std::size_t>(r - 1)] = truth_nb == est_nb;
  }
  rec.overall = rec.edge_errors.empty();
  return rec;
}

enum class SymmetrizationRule { AND, OR };

struct AssembledEdges {
  SignedEdgeSet edges;
  std::vector<Edge> conflicts; // pairs whose two directions disagree in sign (OR rule)
};

inline AssembledEdges assemble_edges(const GraphEstimate &estimate,
                                     SymmetrizationRule rule = SymmetrizationRule::AND) {
  AssembledEdges out;
  out.edges.p = estimate.p;
  auto member_sign = [&](int a, int b) {
    const auto &m = estimate.neighborhoods[static_cast<std::size_t>(a - 1)].signed_members;
    auto it = m.find(b);
    return it == m.end() ? 0 : it->second;
  };
  for (int s = 1; s <= estimate.p; ++s)
    for (int t = s + 1; t <= estimate.p; ++t) {
      const int st = member_sign(s, t);
      const int ts = member_sign(t, s);
      if (rule == SymmetrizationRule::AND) {
        if (st != 0 && st == ts)
          out.edges.entries[{s, t}] = st;
      } else if (st != 0 || ts != 0) {
        if (st != 0 && ts != 0 && st != ts)
          out.conflicts.push_back({s, t});
        else
          out.edges.entries[{s, t}] = st != 0 ? st : ts;
      }
    }
  return out;
}

} // namespace isingsel
