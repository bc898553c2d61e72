#pragma once

// Fisher-information diagnostics, dependency/incoherence checks, the
// primal-dual witness, and the score/remainder quantities that govern
// support recovery, all as computable numbers.
//
// Population quantities come from exact enumeration (p <= 20) only.

#include "isingsel/error.hpp"
#include "isingsel/model.hpp"
#include "isingsel/rng.hpp"
#include "isingsel/sampling.hpp"
#include "isingsel/selection.hpp"
#include "isingsel/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace isingsel {

/// sech^2(x_r * sum_t theta_rt x_t). x holds all p spins, 0-based.
inline double variance_weight(std::span<const int> x, const IsingModel &model, int r) {
  detail::require_vertex(model, r);
  detail::require(static_cast<int>(x.size()) == model.p(), "spin vector must have p entries");
  const double a = x[static_cast<std::size_t>(r - 1)] * model.local_field(r, x);
  const double c = std::cosh(a);
  return 1.0 / (c * c);
}

/// theta*_{r,.} in predictor-column order (vertex r skipped).
inline Eigen::VectorXd coupling_row(const IsingModel &model, int r) {
  detail::require_vertex(model, r);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(model.p() - 1);
  for (const auto &nb : model.weighted_neighbors0(r - 1))
    v[predictor_column(r, nb.index + 1)] = nb.theta;
  return v;
}

/// Predictor columns of the true neighbors of r, ascending.
inline std::vector<int> support_columns(const IsingModel &model, int r) {
  std::vector<int> cols;
  for (int v : model.topology().neighbors(r))
    cols.push_back(predictor_column(r, v));
  return cols;
}

inline std::vector<int> complement_columns(int dim, std::span<const int> support) {
  std::vector<int> out;
  for (int c = 0; c < dim; ++c)
    if (std::find(support.begin(), support.end(), c) == support.end())
      out.push_back(c);
  return out;
}

enum class FisherKind { population, sample };

struct FisherMatrix {
  int r = 0;
  FisherKind kind = FisherKind::population;
  Eigen::MatrixXd Q;
  Eigen::VectorXd theta_ref;
};

namespace detail {

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd &m, std::span<const int> rows,
                                 std::span<const int> cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
  return out;
}

inline Eigen::VectorXd subvector(const Eigen::VectorXd &v, std::span<const int> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  return out;
}

/// l_inf -> l_inf operator norm: max absolute row sum. Zero for empty matrices.
inline double inf_operator_norm(const Eigen::MatrixXd &m) {
  if (m.rows() == 0 || m.cols() == 0)
    return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double min_eigenvalue(const Eigen::MatrixXd &m) {
  if (m.rows() == 0)
    return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Eigen::MatrixXd &m) {
  if (m.rows() == 0)
    return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Calls fn(prob, x_rest_vector, x_r) for every state of the joint table.
template <class Fn> void for_each_state(const IsingModel &model, int r, Fn &&fn) {
  const JointTable table = enumerate_joint(model);
  const int p = model.p();
  Eigen::VectorXd rest(p - 1);
  std::vector<int> x(static_cast<std::size_t>(p));
  for (std::uint64_t s = 0; s < table.size(); ++s) {
    for (int v = 1; v <= p; ++v)
      x[static_cast<std::size_t>(v - 1)] = JointTable::spin(s, v);
    for (int col = 0; col < p - 1; ++col)
      rest[col] = x[static_cast<std::size_t>(predictor_vertex(r, col) - 1)];
    fn(table.probabilities[s], rest, x);
  }
}

} // namespace detail

/// Q* = E[eta(X; theta*) X_{\r} X_{\r}^T] by exact enumeration.
inline FisherMatrix population_fisher(const IsingModel &model, int r) {
  detail::require_vertex(model, r);
  const int dim = model.p() - 1;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(dim, dim);
  detail::for_each_state(model, r, [&](double prob, const Eigen::VectorXd &rest,
                                       const std::vector<int> &x) {
    const double w = prob * variance_weight(x, model, r);
    Q.selfadjointView<Eigen::Lower>().rankUpdate(rest, w);
  });
  Q.triangularView<Eigen::StrictlyUpper>() = Q.transpose();
  return {r, FisherKind::population, std::move(Q), coupling_row(model, r)};
}

/// E[X_{\r} X_{\r}^T] by exact enumeration.
inline Eigen::MatrixXd population_second_moment(const IsingModel &model, int r) {
  detail::require_vertex(model, r);
  const int dim = model.p() - 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  detail::for_each_state(model, r, [&](double prob, const Eigen::VectorXd &rest,
                                       const std::vector<int> &) {
    M.selfadjointView<Eigen::Lower>().rankUpdate(rest, prob);
  });
  M.triangularView<Eigen::StrictlyUpper>() = M.transpose();
  return M;
}

/// Q^n = (1/n) sum_i eta(x^(i); theta*) x_{\r} x_{\r}^T with eta at the model's couplings.
inline FisherMatrix sample_fisher(const SampleSet &samples, const IsingModel &model, int r) {
  detail::require(samples.p() == model.p(), "samples and model differ in p");
  detail::require_vertex(model, r);
  const NodeDesign design = NodeDesign::from_samples(samples, r);
  Eigen::VectorXd theta = coupling_row(model, r);
  return {r, FisherKind::sample, hessian(theta, design), std::move(theta)};
}

inline Eigen::MatrixXd sample_second_moment(const SampleSet &samples, int r) {
  const NodeDesign design = NodeDesign::from_samples(samples, r);
  return design.predictors.transpose() * design.predictors / static_cast<double>(design.n());
}

struct ConditionReport {
  int r = 0;
  std::vector<int> S; // true neighbor vertex ids
  /// Lambda_min(Q_SS); +inf when S is empty (condition not applicable).
  double lambda_min_QSS = std::numeric_limits<double>::infinity();
  bool a1_applicable = false;
  bool a1_violated = false;
  double lambda_max_second_moment = 0.0;
  /// ||Q_{S^c S} Q_SS^{-1}||_inf; NaN when Q_SS is numerically singular.
  double incoherence_norm = 0.0;
  bool incoherence_computable = true;
  double alpha_implied = 1.0;
  /// Condition number of Q_SS, recorded only when it exceeds 1e8.
  std::optional<double> condition_number;
};

namespace detail {

/// Q_{S^c S} Q_SS^{-1} through a symmetric factorization of Q_SS.
inline Eigen::MatrixXd incoherence_matrix(const Eigen::MatrixXd &Q, std::span<const int> S,
                                          std::span<const int> Sc) {
  const Eigen::MatrixXd QSS = submatrix(Q, S, S);
  const Eigen::MatrixXd QSSc = submatrix(Q, S, Sc);
  return QSS.ldlt().solve(QSSc).transpose();
}

} // namespace detail

/// Dependency (A1) and incoherence (A2) quantities for the reference vertex
/// of Q. The second-moment bound uses `samples` when given, otherwise exact
/// enumeration.
inline ConditionReport check_conditions(const FisherMatrix &fisher, const IsingModel &model,
                                        const SampleSet *samples = nullptr) {
  const int r = fisher.r;
  detail::require_vertex(model, r);
  detail::require(fisher.Q.rows() == model.p() - 1, "Fisher matrix size does not match model");
  ConditionReport rep;
  rep.r = r;
  for (int v : model.topology().neighbors(r))
    rep.S.push_back(v);
  const std::vector<int> S = support_columns(model, r);
  const std::vector<int> Sc = complement_columns(model.p() - 1, S);

  const Eigen::MatrixXd second = samples ? sample_second_moment(*samples, r)
                                         : population_second_moment(model, r);
  rep.lambda_max_second_moment = detail::max_eigenvalue(second);

  if (S.empty()) {
    rep.a1_applicable = false;
    rep.incoherence_norm = 0.0;
    rep.alpha_implied = 1.0;
    return rep;
  }
  rep.a1_applicable = true;
  const Eigen::MatrixXd QSS = detail::submatrix(fisher.Q, S, S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(QSS, Eigen::EigenvaluesOnly);
  rep.lambda_min_QSS = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (rep.lambda_min_QSS <= 1e-12) {
    rep.a1_violated = true;
    rep.incoherence_computable = false;
    rep.incoherence_norm = std::numeric_limits<double>::quiet_NaN();
    rep.alpha_implied = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  if (lmax / rep.lambda_min_QSS > 1e8)
    rep.condition_number = lmax / rep.lambda_min_QSS;
  rep.incoherence_norm = detail::inf_operator_norm(detail::incoherence_matrix(fisher.Q, S, Sc));
  rep.alpha_implied = 1.0 - rep.incoherence_norm;
  return rep;
}

/// W^n = -grad l(theta*): the score of the local conditional likelihood.
inline Eigen::VectorXd score_vector(const SampleSet &samples, const IsingModel &truth, int r) {
  detail::require(samples.p() == truth.p(), "samples and model differ in p");
  const NodeDesign design = NodeDesign::from_samples(samples, r);
  return -gradient(coupling_row(truth, r), design);
}

/// E[W] under the model itself, by enumeration; zero up to rounding.
inline Eigen::VectorXd population_score(const IsingModel &truth, int r) {
  detail::require_vertex(truth, r);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(truth.p() - 1);
  detail::for_each_state(truth, r, [&](double prob, const Eigen::VectorXd &rest,
                                       const std::vector<int> &x) {
    const double a = truth.local_field(r, x);
    w += prob * (x[static_cast<std::size_t>(r - 1)] - std::tanh(a)) * rest;
  });
  return w;
}

/// Tail level for ||W^n||_inf: P[|W_u| > t] <= 2 exp(-n t^2 / 8), union over
/// p-1 coordinates at total failure probability delta.
inline double score_tail_bound(int n, int p, double delta) {
  return std::sqrt(8.0 * std::log(2.0 * (p - 1) / delta) / n);
}

/// Whether (2 - alpha)/lambda * ||W||_inf < alpha/4.
inline bool score_condition_holds(double w_inf, double alpha, double lambda) {
  return (2.0 - alpha) / lambda * w_inf < alpha / 4.0;
}

/// Exact Taylor remainder of the gradient map between theta* and theta_hat:
/// R = H(theta*)(theta_hat - theta*) - (grad(theta_hat) - grad(theta*)).
inline Eigen::VectorXd remainder_vector(const NodeDesign &design, const Eigen::VectorXd &theta_star,
                                        const Eigen::VectorXd &theta_hat) {
  const Eigen::VectorXd delta = theta_hat - theta_star;
  return hessian(theta_star, design) * delta -
         (gradient(theta_hat, design) - gradient(theta_star, design));
}

inline Eigen::VectorXd remainder_vector(const SampleSet &samples, const IsingModel &truth, int r,
                                        const Eigen::VectorXd &theta_hat) {
  detail::require(samples.p() == truth.p(), "samples and model differ in p");
  return remainder_vector(NodeDesign::from_samples(samples, r), coupling_row(truth, r), theta_hat);
}

/// Lambda_max((1/n) sum x_S x_S^T) * ||theta_hat_S - theta*_S||_2^2, the
/// deterministic bound on ||R||_inf when theta_hat is supported on S.
inline double remainder_bound(const NodeDesign &design, std::span<const int> S,
                              const Eigen::VectorXd &theta_star, const Eigen::VectorXd &theta_hat) {
  if (S.empty())
    return 0.0;
  Eigen::MatrixXd xs(design.n(), static_cast<Eigen::Index>(S.size()));
  for (std::size_t k = 0; k < S.size(); ++k)
    xs.col(static_cast<Eigen::Index>(k)) = design.predictors.col(S[k]);
  const double lmax = detail::max_eigenvalue(xs.transpose() * xs / static_cast<double>(design.n()));
  const Eigen::VectorXd err = detail::subvector(theta_hat - theta_star, S);
  return lmax * err.squaredNorm();
}

struct L2ErrorReport {
  double err = 0.0;
  double bound = 0.0;
  double side_threshold = 0.0; // C_min^2 / (10 D_max)
  bool side_condition_ok = false;
  bool within_bound = false;
};

/// Compares ||theta_hat_S - theta*_S||_2 with (5/C_min) sqrt(d) lambda; the
/// side condition is lambda d <= C_min^2 / (10 D_max).
inline L2ErrorReport l2_error_report(const Eigen::VectorXd &theta_hat_S,
                                     const Eigen::VectorXd &theta_star_S, double lambda, int d,
                                     double c_min, double d_max) {
  detail::require(theta_hat_S.size() == theta_star_S.size(), "subvectors differ in length");
  detail::require(c_min > 0.0 && d_max > 0.0, "C_min and D_max must be positive");
  L2ErrorReport rep;
  rep.err = (theta_hat_S - theta_star_S).norm();
  rep.bound = (5.0 / c_min) * std::sqrt(static_cast<double>(d)) * lambda;
  rep.side_threshold = c_min * c_min / (10.0 * d_max);
  rep.side_condition_ok = lambda * d <= rep.side_threshold;
  rep.within_bound = rep.err <= rep.bound;
  return rep;
}

struct WitnessReport {
  int r = 0;
  std::vector<int> S;               // true neighbor vertex ids
  Eigen::VectorXd theta_restricted; // full length p-1, zero off S
  Eigen::VectorXd z;                // -grad l(theta_restricted) / lambda, full length
  Eigen::VectorXd z_S;
  double z_Sc_max_abs = 0.0;
  bool strict_feasible = false;
  bool z_sign_consistent = false; // z_u = sign(theta_u) on the nonzero part of S
  bool sign_correct = false;      // sign(theta_restricted_S) == sign(theta*_S)
  double W_inf_norm = 0.0;
  double R_inf_norm = 0.0;
  double R_bound = 0.0;
  double l2_error_S = 0.0;
  /// Lambda_min of the Hessian at theta_restricted on S x S; +inf for empty S.
  double hessian_min_eig_SS = std::numeric_limits<double>::infinity();
  bool restricted_converged = false;
  double restricted_kkt_residual = 0.0;
};

/// Primal-dual witness for vertex r: solve the penalized problem with
/// coordinates outside the true support pinned to zero, then set the dual
/// vector from the full gradient and check strict feasibility off the support.
inline WitnessReport construct_witness(const SampleSet &samples, const IsingModel &truth, int r,
                                       double lambda, const SolverConfig &config = {}) {
  detail::require(lambda > 0.0, "lambda must be positive");
  detail::require(samples.p() == truth.p(), "samples and model differ in p");
  detail::require_vertex(truth, r);
  const NodeDesign design = NodeDesign::from_samples(samples, r);
  const std::vector<int> S = support_columns(truth, r);
  const std::vector<int> Sc = complement_columns(design.dim(), S);
  const Eigen::VectorXd theta_star = coupling_row(truth, r);

  WitnessReport rep;
  rep.r = r;
  for (int v : truth.topology().neighbors(r))
    rep.S.push_back(v);

  rep.theta_restricted = Eigen::VectorXd::Zero(design.dim());
  if (!S.empty()) {
    const SolverResult sub = fit(design.restricted(S), lambda, config);
    for (std::size_t k = 0; k < S.size(); ++k)
      rep.theta_restricted[S[k]] = sub.theta_hat[static_cast<Eigen::Index>(k)];
    rep.restricted_converged = sub.converged;
    rep.restricted_kkt_residual = sub.kkt_residual;
  } else {
    rep.restricted_converged = true;
  }

  const Eigen::VectorXd grad = gradient(rep.theta_restricted, design);
  rep.z = -grad / lambda;
  rep.z_S = detail::subvector(rep.z, S);
  for (int c : Sc)
    rep.z_Sc_max_abs = std::max(rep.z_Sc_max_abs, std::abs(rep.z[c]));
  rep.strict_feasible = rep.z_Sc_max_abs < 1.0;

  const double sign_tol = std::max(1e-6, 10.0 * config.tol / lambda);
  rep.z_sign_consistent = true;
  rep.sign_correct = true;
  for (int c : S) {
    const double th = rep.theta_restricted[c];
    if (th != 0.0 && std::abs(rep.z[c] - sign_of(th)) > sign_tol)
      rep.z_sign_consistent = false;
    if (sign_of(th) != sign_of(theta_star[c]))
      rep.sign_correct = false;
  }

  rep.W_inf_norm = (-gradient(theta_star, design)).lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd R = remainder_vector(design, theta_star, rep.theta_restricted);
  rep.R_inf_norm = R.size() ? R.lpNorm<Eigen::Infinity>() : 0.0;
  rep.R_bound = remainder_bound(design, S, theta_star, rep.theta_restricted);
  rep.l2_error_S =
      detail::subvector(rep.theta_restricted - theta_star, S).norm();
  rep.hessian_min_eig_SS =
      detail::min_eigenvalue(detail::submatrix(hessian(rep.theta_restricted, design), S, S));
  return rep;
}

// ---------------------------------------------------------------------------
// Concentration of the sample Fisher matrix around its population value.

/// sqrt(32 ln(2 (p-1)^2 / delta) / n): the entrywise deviation level that
/// holds for all (p-1)^2 entries with probability at least 1 - delta.
inline double entrywise_deviation_bound(int n, int p, double delta) {
  const double m = static_cast<double>(p - 1);
  return std::sqrt(32.0 * std::log(2.0 * m * m / delta) / n);
}

struct ConcentrationRow {
  int n = 0;
  int trial = 0;
  double entrywise_dev = 0.0;      // max_jk |Q^n - Q*|
  double eig_min_dev = 0.0;        // |Lambda_min(Q^n_SS) - Lambda_min(Q*_SS)|
  double offblock_dev = 0.0;       // ||Q^n_{S^c S} - Q*_{S^c S}||_inf
  double inverse_dev = 0.0;        // ||(Q^n_SS)^{-1} - (Q*_SS)^{-1}||_inf
  double sample_incoherence = 0.0;
  double population_incoherence = 0.0;
};

struct ConcentrationTable {
  int r = 0;
  int p = 0;
  std::vector<ConcentrationRow> rows; // ordered by (n, trial)

  std::vector<double> column(int n, double ConcentrationRow::*field) const {
    std::vector<double> out;
    for (const auto &row : rows)
      if (row.n == n)
        out.push_back(row.*field);
    return out;
  }
};

inline constexpr int kMaxConcentrationVertices = 12;

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// For every n in n_grid and every trial, draws n exact samples (seed derived
/// from master seed, n and trial index) and compares Q^n with Q*.
inline ConcentrationTable concentration_report(const IsingModel &truth, int r,
                                               std::span<const int> n_grid, int trials,
                                               std::uint64_t seed, int workers = 1) {
  if (truth.p() > kMaxConcentrationVertices)
    throw ResourceLimit("concentration report needs p <= 12 for the population oracle");
  detail::require_vertex(truth, r);
  detail::require(trials >= 1, "trials must be positive");
  for (int n : n_grid)
    detail::require(n >= 1, "sample sizes must be positive");

  const FisherMatrix pop = population_fisher(truth, r);
  const std::vector<int> S = support_columns(truth, r);
  const std::vector<int> Sc = complement_columns(truth.p() - 1, S);
  const Eigen::MatrixXd popSS = detail::submatrix(pop.Q, S, S);
  const double pop_eig = S.empty() ? 0.0 : detail::min_eigenvalue(popSS);
  const Eigen::MatrixXd pop_inv = S.empty() ? Eigen::MatrixXd() : Eigen::MatrixXd(popSS.inverse());
  const Eigen::MatrixXd pop_off = detail::submatrix(pop.Q, Sc, S);
  const double pop_inc =
      S.empty() ? 0.0 : detail::inf_operator_norm(detail::incoherence_matrix(pop.Q, S, Sc));

  ConcentrationTable table;
  table.r = r;
  table.p = truth.p();
  table.rows.resize(n_grid.size() * static_cast<std::size_t>(trials));

  auto run_one = [&](std::size_t job) {
    const int n = n_grid[job / static_cast<std::size_t>(trials)];
    const int trial = static_cast<int>(job % static_cast<std::size_t>(trials));
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(n),
                                               static_cast<std::uint64_t>(trial)});
    const SampleSet samples = exact_enum_sample(truth, n, s);
    const FisherMatrix qn = sample_fisher(samples, truth, r);
    ConcentrationRow row;
    row.n = n;
    row.trial = trial;
    row.entrywise_dev = (qn.Q - pop.Q).cwiseAbs().maxCoeff();
    row.population_incoherence = pop_inc;
    if (!S.empty()) {
      const Eigen::MatrixXd qSS = detail::submatrix(qn.Q, S, S);
      row.eig_min_dev = std::abs(detail::min_eigenvalue(qSS) - pop_eig);
      row.offblock_dev = detail::inf_operator_norm(detail::submatrix(qn.Q, Sc, S) - pop_off);
      row.inverse_dev = detail::inf_operator_norm(Eigen::MatrixXd(qSS.inverse()) - pop_inv);
      row.sample_incoherence =
          detail::inf_operator_norm(detail::incoherence_matrix(qn.Q, S, Sc));
    }
    table.rows[job] = row;
  };

  const std::size_t jobs = table.rows.size();
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(jobs)));
  if (nthreads == 1) {
    for (std::size_t j = 0; j < jobs; ++j)
      run_one(j);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t j = static_cast<std::size_t>(w); j < jobs;
             j += static_cast<std::size_t>(nthreads))
          run_one(j);
      });
    for (auto &t : pool)
      t.join();
  }
  return table;
}

} // namespace isingsel
