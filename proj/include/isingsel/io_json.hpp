#pragma once

// JSON / CSV encodings of the library's result types. Kept apart from the
// numerical headers so that they do not depend on nlohmann/json.

#include "isingsel/analysis.hpp"
#include "isingsel/harness.hpp"
#include "isingsel/selection.hpp"
#include "isingsel/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <vector>

namespace isingsel {

namespace detail {

inline nlohmann::json vec_json(const Eigen::VectorXd &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// JSON has no infinity or NaN; those become null.
inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

} // namespace detail

inline nlohmann::json to_json(const SolverResult &r) {
  return {{"theta_hat", detail::vec_json(r.theta_hat)},
          {"z_hat", detail::vec_json(r.z_hat)},
          {"objective", r.objective},
          {"kkt_residual", r.kkt_residual},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

inline nlohmann::json to_json(const GraphEstimate &est) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t k = 0; k < est.neighborhoods.size(); ++k) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto &[u, s] : est.neighborhoods[k].signed_members)
      members.push_back({{"u", u}, {"sign", s}});
    const auto &summary = est.per_node_results[k];
    nodes.push_back({{"r", est.neighborhoods[k].r},
                     {"members", members},
                     {"kkt_residual", summary.kkt_residual},
                     {"converged", summary.converged}});
  }
  return {{"p", est.p}, {"lambda", est.lambda_used}, {"nodes", nodes}};
}

inline GraphEstimate graph_estimate_from_json(const nlohmann::json &j) {
  GraphEstimate est;
  est.p = j.at("p").get<int>();
  est.lambda_used = j.at("lambda").get<double>();
  for (const auto &node : j.at("nodes")) {
    SignedNeighborhood nb{node.at("r").get<int>(), {}};
    for (const auto &m : node.at("members"))
      nb.signed_members[m.at("u").get<int>()] = m.at("sign").get<int>();
    est.neighborhoods.push_back(std::move(nb));
    NodeFitSummary s;
    s.kkt_residual = node.at("kkt_residual").get<double>();
    s.converged = node.at("converged").get<bool>();
    est.per_node_results.push_back(s);
  }
  detail::require(static_cast<int>(est.neighborhoods.size()) == est.p,
                  "estimate must list one node per vertex");
  return est;
}

inline nlohmann::json to_json(const ConditionReport &c) {
  nlohmann::json j{{"r", c.r},
                   {"S", c.S},
                   {"a1_applicable", c.a1_applicable},
                   {"a1_violated", c.a1_violated},
                   {"lambda_min_QSS", c.a1_applicable ? detail::finite_or_null(c.lambda_min_QSS)
                                                      : nlohmann::json("not applicable")},
                   {"lambda_max_second_moment", c.lambda_max_second_moment},
                   {"incoherence_computable", c.incoherence_computable},
                   {"incoherence_norm", detail::finite_or_null(c.incoherence_norm)},
                   {"alpha_implied", detail::finite_or_null(c.alpha_implied)}};
  if (c.condition_number)
    j["condition_number"] = *c.condition_number;
  return j;
}

inline nlohmann::json to_json(const WitnessReport &w) {
  return {{"r", w.r},
          {"S", w.S},
          {"theta_restricted", detail::vec_json(w.theta_restricted)},
          {"z", detail::vec_json(w.z)},
          {"z_S", detail::vec_json(w.z_S)},
          {"z_Sc_max_abs", w.z_Sc_max_abs},
          {"strict_feasible", w.strict_feasible},
          {"z_sign_consistent", w.z_sign_consistent},
          {"sign_correct", w.sign_correct},
          {"W_inf_norm", w.W_inf_norm},
          {"R_inf_norm", w.R_inf_norm},
          {"R_bound", w.R_bound},
          {"l2_error_S", w.l2_error_S},
          {"hessian_min_eig_SS", detail::finite_or_null(w.hessian_min_eig_SS)},
          {"restricted_converged", w.restricted_converged},
          {"restricted_kkt_residual", w.restricted_kkt_residual}};
}

inline nlohmann::json to_json(const ConcentrationRow &row) {
  return {{"n", row.n},
          {"trial", row.trial},
          {"entrywise_dev", row.entrywise_dev},
          {"eig_min_dev", row.eig_min_dev},
          {"offblock_dev", row.offblock_dev},
          {"inverse_dev", row.inverse_dev},
          {"sample_incoherence", row.sample_incoherence},
          {"population_incoherence", row.population_incoherence}};
}

inline nlohmann::json to_json(const ConcentrationTable &t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &row : t.rows)
    rows.push_back(to_json(row));
  return {{"r", t.r}, {"p", t.p}, {"rows", rows}};
}

inline void write_concentration_csv(std::ostream &os, const ConcentrationTable &t) {
  os << "n,trial,entrywise_dev,eig_min_dev,offblock_dev,inverse_dev,sample_incoherence,"
        "population_incoherence\n";
  for (const auto &row : t.rows)
    os << row.n << ',' << row.trial << ',' << detail::format_double(row.entrywise_dev) << ','
       << detail::format_double(row.eig_min_dev) << ','
       << detail::format_double(row.offblock_dev) << ','
       << detail::format_double(row.inverse_dev) << ','
       << detail::format_double(row.sample_incoherence) << ','
       << detail::format_double(row.population_incoherence) << '\n';
}

inline nlohmann::json to_json(const ExperimentConfig &c) {
  return {{"family", to_string(c.family)},
          {"p_list", c.p_list},
          {"omega", c.omega},
          {"coupling_mode", to_string(c.coupling_mode)},
          {"beta_grid", c.beta_grid},
          {"trials", c.trials},
          {"lambda_factor", c.lambda_factor},
          {"sampler", to_string(c.sampler)},
          {"gibbs",
           {{"burn_in_sweeps", c.gibbs.burn_in_sweeps},
            {"thinning_sweeps", c.gibbs.thinning_sweeps}}},
          {"master_seed", c.master_seed}};
}

/// Missing optional fields take their defaults: lambda_factor 2, Gibbs
/// burn-in 200 / thinning 5, beta grid 0.1..2.0, sampler gibbs (exact_star
/// for star families).
inline ExperimentConfig experiment_config_from_json(const nlohmann::json &j) {
  ExperimentConfig c;
  try {
    c.family = parse_family(j.at("family").get<std::string>());
    c.p_list = j.at("p_list").get<std::vector<int>>();
    c.omega = j.at("omega").get<double>();
    c.coupling_mode = parse_coupling_mode(j.value("coupling_mode", std::string("mixed")));
    if (j.contains("beta_grid")) {
      c.beta_grid = j.at("beta_grid").get<std::vector<double>>();
    } else {
      for (int k = 1; k <= 20; ++k)
        c.beta_grid.push_back(k / 10.0);
    }
    c.trials = j.at("trials").get<int>();
    c.lambda_factor = j.value("lambda_factor", 2.0);
    const bool star = c.family == Family::star_linear || c.family == Family::star_log;
    c.sampler = parse_sampler(j.value("sampler", std::string(star ? "exact_star" : "gibbs")));
    if (j.contains("gibbs")) {
      const auto &g = j.at("gibbs");
      c.gibbs.burn_in_sweeps = g.value("burn_in_sweeps", 200);
      c.gibbs.thinning_sweeps = g.value("thinning_sweeps", 5);
    }
    c.master_seed = j.value("master_seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw InvalidArgument(std::string("bad experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

} // namespace isingsel
