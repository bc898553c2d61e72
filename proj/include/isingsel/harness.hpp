#pragma once

// Success-probability sweeps over graph families: for each (p, beta) draw
// fresh couplings and samples per trial, run neighborhood selection and
// record whether every signed neighborhood was recovered exactly.

#include "isingsel/error.hpp"
#include "isingsel/model.hpp"
#include "isingsel/rng.hpp"
#include "isingsel/sampling.hpp"
#include "isingsel/selection.hpp"
#include "isingsel/solver.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

namespace isingsel {

enum class Family { grid4, grid8, star_linear, star_log };
enum class SamplerKind { gibbs, exact_star, exact_enum };

inline const char *to_string(Family f) {
  switch (f) {
  case Family::grid4: return "grid4";
  case Family::grid8: return "grid8";
  case Family::star_linear: return "star_linear";
  case Family::star_log: return "star_log";
  }
  return "?";
}

inline const char *to_string(SamplerKind s) {
  switch (s) {
  case SamplerKind::gibbs: return "gibbs";
  case SamplerKind::exact_star: return "exact_star";
  case SamplerKind::exact_enum: return "exact_enum";
  }
  return "?";
}

inline Family parse_family(const std::string &s) {
  if (s == "grid4") return Family::grid4;
  if (s == "grid8") return Family::grid8;
  if (s == "star_linear") return Family::star_linear;
  if (s == "star_log") return Family::star_log;
  throw InvalidArgument("unknown family '" + s + "'");
}

inline SamplerKind parse_sampler(const std::string &s) {
  if (s == "gibbs") return SamplerKind::gibbs;
  if (s == "exact_star") return SamplerKind::exact_star;
  if (s == "exact_enum") return SamplerKind::exact_enum;
  throw InvalidArgument("unknown sampler '" + s + "'");
}

inline CouplingMode parse_coupling_mode(const std::string &s) {
  if (s == "mixed") return CouplingMode::mixed;
  if (s == "positive") return CouplingMode::positive;
  throw InvalidArgument("unknown coupling mode '" + s + "'");
}

namespace detail {

inline int exact_sqrt(int p) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(p))));
  return side * side == p ? side : -1;
}

} // namespace detail

/// grid4 -> 4, grid8 -> 8, star_linear -> ceil(0.1 p), star_log -> ceil(ln p).
inline int family_degree(Family family, int p) {
  switch (family) {
  case Family::grid4:
  case Family::grid8:
    detail::require(p >= 9 && detail::exact_sqrt(p) > 0,
                    "grid families need p = side^2 with side >= 3, got " + std::to_string(p));
    return family == Family::grid4 ? 4 : 8;
  case Family::star_linear:
  case Family::star_log: {
    detail::require(p >= 2, "star families need p >= 2");
    const int d = family == Family::star_linear
                      ? static_cast<int>(std::ceil(0.1 * p))
                      : static_cast<int>(std::ceil(std::log(static_cast<double>(p))));
    detail::require(d >= 1 && d <= p - 1, "star degree out of range for p = " + std::to_string(p));
    return d;
  }
  }
  throw InvalidArgument("unknown family");
}

inline GraphTopology make_family_topology(Family family, int p) {
  const int d = family_degree(family, p);
  switch (family) {
  case Family::grid4: return make_grid4(detail::exact_sqrt(p));
  case Family::grid8: return make_grid8(detail::exact_sqrt(p));
  default: return make_star(p, d);
  }
}

/// ceil(10 beta d ln p).
inline int beta_to_n(double beta, int d, int p) {
  detail::require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  detail::require(d >= 1, "degree must be positive");
  detail::require(p >= 2, "p must be at least 2");
  return static_cast<int>(std::ceil(10.0 * beta * d * std::log(static_cast<double>(p))));
}

struct ExperimentConfig {
  Family family = Family::grid4;
  std::vector<int> p_list;
  double omega = 0.5;
  CouplingMode coupling_mode = CouplingMode::mixed;
  std::vector<double> beta_grid;
  int trials = 1;
  double lambda_factor = 2.0;
  SamplerKind sampler = SamplerKind::gibbs;
  GibbsConfig gibbs;
  std::uint64_t master_seed = 0;

  void validate() const {
    detail::require(!p_list.empty(), "p_list must be nonempty");
    detail::require(!beta_grid.empty(), "beta_grid must be nonempty");
    detail::require(std::is_sorted(beta_grid.begin(), beta_grid.end()),
                    "beta_grid must be sorted ascending");
    for (double b : beta_grid)
      detail::require(b > 0.0 && std::isfinite(b), "beta values must be positive");
    detail::require(trials >= 1, "trials must be positive");
    detail::require(omega > 0.0, "omega must be positive");
    detail::require(lambda_factor > 0.0, "lambda_factor must be positive");
    detail::require(gibbs.thinning_sweeps >= 1 && gibbs.burn_in_sweeps >= 0,
                    "invalid Gibbs schedule");
    const bool star = family == Family::star_linear || family == Family::star_log;
    detail::require(sampler != SamplerKind::exact_star || star,
                    "exact_star sampler requires a star family");
    if (star)
      detail::require(sampler != SamplerKind::exact_enum,
                      "star families use the exact_star or gibbs sampler");
    for (int p : p_list) {
      family_degree(family, p);
      if (sampler == SamplerKind::exact_enum && p > kMaxEnumerationVertices)
        throw ResourceLimit("exact_enum sampler is capped at p <= 20");
    }
  }
};

struct CurvePoint {
  Family family = Family::grid4;
  int p = 0;
  int d = 0;
  double beta = 0.0;
  int n = 0;
  int successes = 0;
  int trials = 0;
  double success_rate = 0.0;
  double stderr_ = 0.0;
};

struct TrialOutcome {
  bool success = false;
  bool all_converged = true;
  std::string diagnostic; // empty unless something went wrong
};

struct ExperimentResult {
  std::vector<CurvePoint> points;    // sorted by (p, beta)
  std::vector<std::string> diagnostics;
};

/// Seed for trial k at (p, beta). Depends on the bit pattern of beta.
inline std::uint64_t trial_seed(std::uint64_t master, int p, double beta, int k) {
  return derive_seed(master, {static_cast<std::uint64_t>(p), std::bit_cast<std::uint64_t>(beta),
                              static_cast<std::uint64_t>(k)});
}

inline TrialOutcome run_trial(const ExperimentConfig &config, const GraphTopology &topology, int n,
                              std::uint64_t seed, const SolverConfig &solver = {}) {
  const IsingModel model =
      assign_couplings(topology, config.omega, config.coupling_mode, derive_seed(seed, {1}));
  const std::uint64_t sample_seed = derive_seed(seed, {2});
  SampleSet samples;
  switch (config.sampler) {
  case SamplerKind::gibbs: {
    GibbsConfig g = config.gibbs;
    g.seed = sample_seed;
    samples = gibbs_sample(model, n, g);
    break;
  }
  case SamplerKind::exact_star: samples = exact_star_sample(model, n, sample_seed); break;
  case SamplerKind::exact_enum: samples = exact_enum_sample(model, n, sample_seed); break;
  }
  const double lambda = lambda_rule(n, model.p(), config.lambda_factor);
  const GraphEstimate est = estimate_graph(samples, lambda, solver);
  TrialOutcome out;
  out.all_converged = est.all_converged();
  out.success = out.all_converged && evaluate_success(est, model).overall;
  if (!out.all_converged) {
    out.diagnostic = "solver did not converge at node(s):";
    for (int r = 1; r <= est.p; ++r)
      if (!est.per_node_results[static_cast<std::size_t>(r - 1)].converged)
        out.diagnostic += " " + std::to_string(r);
  }
  return out;
}

/// Output is independent of `workers`: every trial has its own derived seed
/// and results are reduced in job order.
inline ExperimentResult run_experiment(const ExperimentConfig &config, int workers = 1) {
  config.validate();
  struct Job {
    std::size_t point;
    int k;
  };
  std::vector<CurvePoint> points;
  std::vector<GraphTopology> topologies;
  std::vector<Job> jobs;
  std::vector<std::uint64_t> seeds;

  std::vector<int> ps = config.p_list;
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  for (int p : ps) {
    const int d = family_degree(config.family, p);
    for (double beta : config.beta_grid) {
      CurvePoint pt;
      pt.family = config.family;
      pt.p = p;
      pt.d = d;
      pt.beta = beta;
      pt.n = beta_to_n(beta, d, p);
      pt.trials = config.trials;
      for (int k = 0; k < config.trials; ++k) {
        jobs.push_back({points.size(), k});
        seeds.push_back(trial_seed(config.master_seed, p, beta, k));
      }
      points.push_back(pt);
      topologies.push_back(make_family_topology(config.family, p));
    }
  }
  {
    std::unordered_set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    if (uniq.size() != seeds.size())
      throw std::logic_error("per-trial seed collision");
  }

  std::vector<TrialOutcome> outcomes(jobs.size());
  auto run_job = [&](std::size_t j) {
    const CurvePoint &pt = points[jobs[j].point];
    try {
      outcomes[j] = run_trial(config, topologies[jobs[j].point], pt.n, seeds[j]);
    } catch (const std::exception &e) {
      outcomes[j] = {false, false, std::string("trial failed: ") + e.what()};
    }
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (nthreads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j)
      run_job(j);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t j = static_cast<std::size_t>(w); j < jobs.size();
             j += static_cast<std::size_t>(nthreads))
          run_job(j);
      });
    for (auto &t : pool)
      t.join();
  }

  ExperimentResult result;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    CurvePoint &pt = points[jobs[j].point];
    pt.successes += outcomes[j].success ? 1 : 0;
    if (!outcomes[j].diagnostic.empty()) {
      char head[96];
      std::snprintf(head, sizeof head, "p=%d beta=%g trial=%d: ", pt.p, pt.beta, jobs[j].k);
      result.diagnostics.push_back(head + outcomes[j].diagnostic);
    }
  }
  for (auto &pt : points) {
    pt.success_rate = static_cast<double>(pt.successes) / pt.trials;
    pt.stderr_ = std::sqrt(pt.success_rate * (1.0 - pt.success_rate) / pt.trials);
  }
  result.points = std::move(points);
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string shortest_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string fixed6(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

} // namespace detail

inline constexpr const char *kCurveCsvHeader =
    "family,p,d,beta,n,trials,successes,success_rate,stderr";

inline void write_curves_csv(std::ostream &os, std::vector<CurvePoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const CurvePoint &a, const CurvePoint &b) {
    return a.p != b.p ? a.p < b.p : a.beta < b.beta;
  });
  os << kCurveCsvHeader << '\n';
  for (const auto &pt : points)
    os << to_string(pt.family) << ',' << pt.p << ',' << pt.d << ','
       << detail::shortest_double(pt.beta) << ',' << pt.n << ',' << pt.trials << ','
       << pt.successes << ',' << detail::fixed6(pt.success_rate) << ','
       << detail::fixed6(pt.stderr_) << '\n';
}

/// Line chart: beta on x, success rate on y, one polyline per p.
inline void write_curves_svg(std::ostream &os, const std::vector<CurvePoint> &points) {
  constexpr double W = 640, H = 400, M = 50;
  double bmax = 0.0;
  std::map<int, std::vector<const CurvePoint *>> by_p;
  for (const auto &pt : points) {
    bmax = std::max(bmax, pt.beta);
    by_p[pt.p].push_back(&pt);
  }
  if (bmax <= 0.0)
    bmax = 1.0;
  static constexpr const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  auto px = [&](double b) { return M + (W - 2 * M) * b / bmax; };
  auto py = [&](double s) { return H - M - (H - 2 * M) * s; };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << py(0) << "\" x2=\"" << W - M << "\" y2=\"" << py(0)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << M << "\" y1=\"" << py(0) << "\" x2=\"" << M << "\" y2=\"" << py(1)
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">beta</text>\n";
  os << "<text x=\"15\" y=\"" << H / 2 << "\" transform=\"rotate(-90 15 " << H / 2
     << ")\" text-anchor=\"middle\">success probability</text>\n";
  std::size_t c = 0;
  for (auto &[p, pts] : by_p) {
    std::sort(pts.begin(), pts.end(),
              [](const CurvePoint *a, const CurvePoint *b) { return a->beta < b->beta; });
    const char *color = colors[c++ % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      os << (i ? " " : "") << detail::fixed6(px(pts[i]->beta)) << ','
         << detail::fixed6(py(pts[i]->success_rate));
    os << "\"><title>p=" << p << "</title></polyline>\n";
    os << "<text x=\"" << W - M + 5 << "\" y=\"" << M + 15 * static_cast<double>(c)
       << "\" fill=\"" << color << "\">p=" << p << "</text>\n";
  }
  os << "</svg>\n";
}

inline void emit_curves(const std::vector<CurvePoint> &points, const std::string &csv_path,
                        const std::string &svg_path = {}) {
  detail::require(!points.empty(), "no curve points to emit");
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out)
      throw IoError("cannot open '" + csv_path + "' for writing");
    write_curves_csv(out, points);
    if (!out)
      throw IoError("write to '" + csv_path + "' failed");
  }
  if (!svg_path.empty()) {
    std::ofstream out(svg_path, std::ios::binary);
    if (!out)
      throw IoError("cannot open '" + svg_path + "' for writing");
    write_curves_svg(out, points);
  }
}

} // namespace isingsel
