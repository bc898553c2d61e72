// Command-line front end: model generation, sampling, neighborhood selection,
// diagnostics and success-curve experiments.
//
// Exit codes: 0 success, 2 invalid arguments, 3 resource limit, 4 I/O error.

#include "isingsel/io_json.hpp"
#include "isingsel/isingsel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace isingsel;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitResource = 3;
constexpr int kExitIo = 4;

IsingModel load_model(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open model file '" + path + "'");
  return read_model(in);
}

SampleSet load_samples(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open sample file '" + path + "'");
  return read_samples(in);
}

/// Runs fn with a stream bound to `path`, or stdout when path is empty.
template <class Fn> void with_output(const std::string &path, Fn &&fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open '" + path + "' for writing");
  fn(out);
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

void write_json(const std::string &path, const nlohmann::json &j) {
  with_output(path, [&](std::ostream &os) { os << j.dump(2) << '\n'; });
}

std::vector<int> parse_int_list(const std::string &s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size())
        throw std::invalid_argument(tok);
    } catch (const std::exception &) {
      throw InvalidArgument("bad integer list entry '" + tok + "'");
    }
  }
  detail::require(!out.empty(), "empty integer list");
  return out;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Signed structure learning for Ising models via l1-regularized "
               "logistic regression"};
  app.require_subcommand(1);

  // generate
  auto *gen = app.add_subcommand("generate", "build a graph and assign couplings");
  std::string g_family = "grid4", g_mode = "mixed", g_out;
  int g_side = 0, g_p = 0, g_degree = 0;
  double g_omega = 0.5;
  std::uint64_t g_seed = 0;
  gen->add_option("--family", g_family, "grid4 | grid8 | star | star_linear | star_log")
      ->check(CLI::IsMember({"grid4", "grid8", "star", "star_linear", "star_log"}));
  gen->add_option("--side", g_side, "lattice side (grid families)");
  gen->add_option("--p", g_p, "vertex count (star families)");
  gen->add_option("--degree", g_degree, "hub degree (family star)");
  gen->add_option("--omega", g_omega, "coupling magnitude");
  gen->add_option("--mode", g_mode, "mixed | positive")
      ->check(CLI::IsMember({"mixed", "positive"}));
  gen->add_option("--seed", g_seed, "seed for mixed signs");
  gen->add_option("--out", g_out, "output model file (default stdout)");

  // sample
  auto *smp = app.add_subcommand("sample", "draw samples from a model");
  std::string s_model, s_sampler = "gibbs", s_out;
  int s_n = 0;
  GibbsConfig s_gibbs;
  smp->add_option("--model", s_model, "model file")->required();
  smp->add_option("--n", s_n, "number of samples")->required();
  smp->add_option("--sampler", s_sampler, "gibbs | exact_star | exact_enum")
      ->check(CLI::IsMember({"gibbs", "exact_star", "exact_enum"}));
  smp->add_option("--burn-in", s_gibbs.burn_in_sweeps, "Gibbs burn-in sweeps");
  smp->add_option("--thin", s_gibbs.thinning_sweeps, "Gibbs sweeps between retained samples");
  smp->add_option("--seed", s_gibbs.seed, "random seed");
  smp->add_option("--out", s_out, "output sample file (default stdout)");

  // select
  auto *sel = app.add_subcommand("select", "estimate signed neighborhoods");
  std::string sel_samples, sel_out, sel_edges, sel_rule = "AND", sel_truth;
  double sel_factor = 2.0;
  std::optional<double> sel_lambda;
  sel->add_option("--samples", sel_samples, "sample file")->required();
  sel->add_option("--lambda-factor", sel_factor, "lambda = factor * sqrt(log p / n)");
  sel->add_option("--lambda", sel_lambda, "explicit lambda (overrides the rule)");
  sel->add_option("--out", sel_out, "estimate JSON (default stdout)");
  sel->add_option("--edges", sel_edges, "also write the symmetrized edge list here");
  sel->add_option("--rule", sel_rule, "AND | OR symmetrization")
      ->check(CLI::IsMember({"AND", "OR"}));
  sel->add_option("--truth", sel_truth, "model file to score the estimate against");

  // conditions
  auto *cond = app.add_subcommand("conditions", "dependency and incoherence diagnostics");
  std::string c_model, c_samples, c_out;
  int c_node = 1;
  cond->add_option("--model", c_model, "model file")->required();
  cond->add_option("--node", c_node, "reference vertex (1-based)")->required();
  cond->add_option("--samples", c_samples, "use the sample Fisher matrix from these samples");
  cond->add_option("--out", c_out, "report JSON (default stdout)");

  // witness
  auto *wit = app.add_subcommand("witness", "primal-dual witness for one vertex");
  std::string w_model, w_samples, w_out;
  int w_node = 1;
  double w_factor = 2.0;
  std::optional<double> w_lambda;
  wit->add_option("--model", w_model, "true model file")->required();
  wit->add_option("--samples", w_samples, "sample file")->required();
  wit->add_option("--node", w_node, "vertex (1-based)")->required();
  wit->add_option("--lambda-factor", w_factor, "lambda = factor * sqrt(log p / n)");
  wit->add_option("--lambda", w_lambda, "explicit lambda");
  wit->add_option("--out", w_out, "report JSON (default stdout)");

  // concentration
  auto *conc = app.add_subcommand("concentration", "sample vs population Fisher deviations");
  std::string k_model, k_grid = "1000,10000,100000", k_out, k_json;
  int k_node = 1, k_trials = 20, k_workers = 1;
  std::uint64_t k_seed = 0;
  conc->add_option("--model", k_model, "model file (p <= 12)")->required();
  conc->add_option("--node", k_node, "reference vertex")->required();
  conc->add_option("--n-grid", k_grid, "comma-separated sample sizes");
  conc->add_option("--trials", k_trials, "trials per sample size");
  conc->add_option("--seed", k_seed, "master seed");
  conc->add_option("--workers", k_workers, "worker threads");
  conc->add_option("--out", k_out, "CSV output (default stdout)");
  conc->add_option("--json", k_json, "also write the table as JSON");

  // experiment
  auto *exp = app.add_subcommand("experiment", "success probability versus beta");
  std::string e_config, e_out, e_svg;
  int e_workers = 1;
  exp->add_option("--config", e_config, "experiment JSON")->required();
  exp->add_option("--out", e_out, "curve CSV")->required();
  exp->add_option("--svg", e_svg, "optional SVG chart");
  exp->add_option("--workers", e_workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*gen) {
      GraphTopology topo;
      if (g_family == "grid4" || g_family == "grid8") {
        detail::require(g_side > 0, "--side is required for grid families");
        topo = g_family == "grid4" ? make_grid4(g_side) : make_grid8(g_side);
      } else if (g_family == "star") {
        detail::require(g_p > 0 && g_degree > 0, "--p and --degree are required for star");
        topo = make_star(g_p, g_degree);
      } else {
        detail::require(g_p > 0, "--p is required for star families");
        topo = make_family_topology(parse_family(g_family), g_p);
      }
      const IsingModel model = assign_couplings(topo, g_omega, parse_coupling_mode(g_mode), g_seed);
      with_output(g_out, [&](std::ostream &os) { write_model(os, model); });
    } else if (*smp) {
      const IsingModel model = load_model(s_model);
      SampleSet samples;
      switch (parse_sampler(s_sampler)) {
      case SamplerKind::gibbs: samples = gibbs_sample(model, s_n, s_gibbs); break;
      case SamplerKind::exact_star: samples = exact_star_sample(model, s_n, s_gibbs.seed); break;
      case SamplerKind::exact_enum: samples = exact_enum_sample(model, s_n, s_gibbs.seed); break;
      }
      with_output(s_out, [&](std::ostream &os) { write_samples(os, samples); });
    } else if (*sel) {
      const SampleSet samples = load_samples(sel_samples);
      const double lambda =
          sel_lambda ? *sel_lambda : lambda_rule(samples.n(), samples.p(), sel_factor);
      const GraphEstimate est = estimate_graph(samples, lambda);
      nlohmann::json j = to_json(est);
      if (!sel_truth.empty()) {
        const IsingModel truth = load_model(sel_truth);
        const SuccessRecord rec = evaluate_success(est, truth);
        nlohmann::json errors = nlohmann::json::array();
        for (const auto &e : rec.edge_errors)
          errors.push_back({{"r", e.r}, {"u", e.u}, {"kind", to_string(e.kind)}});
        j["evaluation"] = {{"overall", rec.overall}, {"per_node", rec.per_node},
                           {"edge_errors", errors}};
      }
      write_json(sel_out, j);
      if (!sel_edges.empty()) {
        const auto rule = sel_rule == "OR" ? SymmetrizationRule::OR : SymmetrizationRule::AND;
        const AssembledEdges edges = assemble_edges(est, rule);
        with_output(sel_edges, [&](std::ostream &os) { write_signed_edges(os, edges.edges); });
        for (const auto &e : edges.conflicts)
          std::cerr << "sign conflict on edge " << e.s << ' ' << e.t << '\n';
      }
    } else if (*cond) {
      const IsingModel model = load_model(c_model);
      ConditionReport rep;
      if (!c_samples.empty()) {
        const SampleSet samples = load_samples(c_samples);
        rep = check_conditions(sample_fisher(samples, model, c_node), model, &samples);
      } else {
        rep = check_conditions(population_fisher(model, c_node), model);
      }
      write_json(c_out, to_json(rep));
    } else if (*wit) {
      const IsingModel model = load_model(w_model);
      const SampleSet samples = load_samples(w_samples);
      const double lambda =
          w_lambda ? *w_lambda : lambda_rule(samples.n(), samples.p(), w_factor);
      const WitnessReport rep = construct_witness(samples, model, w_node, lambda);
      nlohmann::json j = to_json(rep);
      j["lambda"] = lambda;
      write_json(w_out, j);
    } else if (*conc) {
      const IsingModel model = load_model(k_model);
      const std::vector<int> grid = parse_int_list(k_grid);
      const ConcentrationTable table =
          concentration_report(model, k_node, grid, k_trials, k_seed, k_workers);
      with_output(k_out, [&](std::ostream &os) { write_concentration_csv(os, table); });
      if (!k_json.empty())
        write_json(k_json, to_json(table));
    } else if (*exp) {
      std::ifstream in(e_config);
      if (!in)
        throw IoError("cannot open config '" + e_config + "'");
      nlohmann::json cfg_json;
      try {
        in >> cfg_json;
      } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
      }
      const ExperimentConfig cfg = experiment_config_from_json(cfg_json);
      const ExperimentResult result = run_experiment(cfg, e_workers);
      for (const auto &d : result.diagnostics)
        std::cerr << d << '\n';
      emit_curves(result.points, e_out, e_svg);
      nlohmann::json meta = {{"config", to_json(cfg)},
                             {"rng", kRngAlgorithm},
                             {"sampler", to_string(cfg.sampler)},
                             {"diagnostics", result.diagnostics}};
      write_json(e_out + ".meta.json", meta);
    }
  } catch (const InvalidArgument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ResourceLimit &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitResource;
  } catch (const IoError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
