#pragma once

// Per-node l1-regularized logistic regression
//
//   minimize  l(theta) + lambda ||theta||_1,
//   l(theta) = (1/n) sum_i log(exp(a_i) + exp(-a_i)) - <theta, mu_r>,
//   a_i      = sum_{t != r} theta_t x_t^(i),
//
// solved by accelerated proximal gradient with backtracking and adaptive
// restart. Termination is on the KKT residual so every returned solution
// carries a checkable optimality certificate.

#include "isingsel/error.hpp"
#include "isingsel/sampling.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace isingsel {

/// Regression design for target vertex r: predictors are the other p-1
/// columns in ascending vertex order, response is column r.
struct NodeDesign {
  int r = 0;
  Eigen::MatrixXd predictors;     // n x (p-1)
  Eigen::VectorXd response;       // n
  Eigen::VectorXd response_moments; // (1/n) predictors^T response

  int n() const { return static_cast<int>(predictors.rows()); }
  int dim() const { return static_cast<int>(predictors.cols()); }

  static NodeDesign from_columns(int r, Eigen::MatrixXd predictors, Eigen::VectorXd response) {
    detail::require(predictors.rows() == response.size(), "predictor/response row mismatch");
    detail::require(predictors.rows() >= 1, "design needs at least one row");
    NodeDesign d;
    d.r = r;
    d.response_moments = predictors.transpose() * response / static_cast<double>(response.size());
    d.predictors = std::move(predictors);
    d.response = std::move(response);
    return d;
  }

  static NodeDesign from_samples(const SampleSet &samples, int r) {
    detail::require(samples.n() >= 1, "samples must be nonempty");
    detail::require(r >= 1 && r <= samples.p(), "vertex out of range");
    const int p = samples.p();
    Eigen::MatrixXd x(samples.n(), p - 1);
    for (int v = 1, col = 0; v <= p; ++v)
      if (v != r)
        x.col(col++) = samples.data().col(v - 1);
    return from_columns(r, std::move(x), samples.data().col(r - 1));
  }

  /// Design that keeps only the given predictor columns (0-based).
  NodeDesign restricted(std::span<const int> columns) const {
    Eigen::MatrixXd x(n(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k)
      x.col(static_cast<Eigen::Index>(k)) = predictors.col(columns[k]);
    return from_columns(r, std::move(x), response);
  }
};

/// Predictor column (0-based) holding vertex v in the design for vertex r.
inline int predictor_column(int r, int v) { return v < r ? v - 1 : v - 2; }

/// Vertex id held by predictor column col in the design for vertex r.
inline int predictor_vertex(int r, int col) { return col + 1 < r ? col + 1 : col + 2; }

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 100000;
  double initial_step = 1.0;  // multiple of 1/L0
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
};

struct SolverResult {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd z_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// log(e^a + e^-a) without overflow.
inline double log_two_cosh(double a) {
  const double m = std::abs(a);
  return m + std::log1p(std::exp(-2.0 * m));
}

inline void require_dim(const Eigen::VectorXd &theta, const NodeDesign &design) {
  require(theta.size() == design.dim(), "parameter length does not match design");
}

inline double smooth_loss_from_margins(const Eigen::VectorXd &theta, const Eigen::VectorXd &a,
                                       const NodeDesign &design) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    s += log_two_cosh(a[i]);
  return s / static_cast<double>(a.size()) - theta.dot(design.response_moments);
}

inline Eigen::VectorXd gradient_from_margins(const Eigen::VectorXd &a, const NodeDesign &design) {
  const Eigen::VectorXd t = a.array().tanh().matrix();
  return design.predictors.transpose() * t / static_cast<double>(a.size()) -
         design.response_moments;
}

inline double kkt_from_gradient(const Eigen::VectorXd &theta, const Eigen::VectorXd &grad,
                                double lambda) {
  double worst = 0.0;
  for (Eigen::Index u = 0; u < theta.size(); ++u) {
    const double r = theta[u] != 0.0 ? std::abs(grad[u] + lambda * (theta[u] > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad[u]) - lambda);
    worst = std::max(worst, r);
  }
  return worst;
}

inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd &v, double kappa) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index u = 0; u < v.size(); ++u) {
    const double m = std::abs(v[u]) - kappa;
    out[u] = m > 0.0 ? (v[u] > 0 ? m : -m) : 0.0;
  }
  return out;
}

} // namespace detail

/// Unpenalized part l(theta).
inline double smooth_loss(const Eigen::VectorXd &theta, const NodeDesign &design) {
  detail::require_dim(theta, design);
  return detail::smooth_loss_from_margins(theta, design.predictors * theta, design);
}

inline double objective(const Eigen::VectorXd &theta, const NodeDesign &design, double lambda) {
  detail::require(lambda >= 0.0, "lambda must be nonnegative");
  return smooth_loss(theta, design) + lambda * theta.lpNorm<1>();
}

/// grad_u = (1/n) sum_i tanh(a_i) x_u^(i) - mu_u.
inline Eigen::VectorXd gradient(const Eigen::VectorXd &theta, const NodeDesign &design) {
  detail::require_dim(theta, design);
  return detail::gradient_from_margins(design.predictors * theta, design);
}

/// (1/n) sum_i sech^2(a_i) x^(i) x^(i)^T, the Hessian of l.
inline Eigen::MatrixXd hessian(const Eigen::VectorXd &theta, const NodeDesign &design) {
  detail::require_dim(theta, design);
  const Eigen::ArrayXd t = (design.predictors * theta).array().tanh();
  const Eigen::VectorXd w = (1.0 - t * t).matrix();
  return design.predictors.transpose() * w.asDiagonal() * design.predictors /
         static_cast<double>(design.n());
}

inline double kkt_residual(const Eigen::VectorXd &theta, const NodeDesign &design,
                           double lambda) {
  detail::require(lambda >= 0.0, "lambda must be nonnegative");
  return detail::kkt_from_gradient(theta, gradient(theta, design), lambda);
}

/// Largest eigenvalue of (1/n) X^T X; bounds the Hessian of l because sech^2 <= 1.
inline double lipschitz_bound(const NodeDesign &design) {
  if (design.dim() == 0)
    return 1.0;
  const Eigen::MatrixXd gram =
      design.predictors.transpose() * design.predictors / static_cast<double>(design.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 1e-12);
}

inline SolverResult fit(const NodeDesign &design, double lambda, const SolverConfig &config = {},
                        const std::optional<Eigen::VectorXd> &warm_start = std::nullopt) {
  detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative");
  detail::require(config.tol > 0.0, "tolerance must be positive");
  detail::require(config.max_iter >= 1, "max_iter must be positive");
  detail::require(config.shrink > 0.0 && config.shrink < 1.0, "shrink factor must lie in (0,1)");
  const int dim = design.dim();

  Eigen::VectorXd x = warm_start ? *warm_start : Eigen::VectorXd::Zero(dim);
  detail::require_dim(x, design);

  // L0 is a global bound; past it a failed decrease test is rounding noise.
  const double L_global = lipschitz_bound(design);
  double L = L_global / config.initial_step;
  Eigen::VectorXd ax = design.predictors * x;
  double fx = detail::smooth_loss_from_margins(x, ax, design);
  double Fx = fx + lambda * x.lpNorm<1>();
  Eigen::VectorXd gx = detail::gradient_from_margins(ax, design);

  Eigen::VectorXd y = x;
  double t = 1.0;
  bool fresh_restart = true;
  int iter = 0;
  double residual = detail::kkt_from_gradient(x, gx, lambda);

  while (residual > config.tol && iter < config.max_iter) {
    ++iter;
    const Eigen::VectorXd ay = design.predictors * y;
    const double fy = detail::smooth_loss_from_margins(y, ay, design);
    const Eigen::VectorXd gy = detail::gradient_from_margins(ay, design);

    Eigen::VectorXd xn, axn;
    double fxn = 0.0;
    for (;;) {
      xn = detail::soft_threshold(y - gy / L, lambda / L);
      axn = design.predictors * xn;
      fxn = detail::smooth_loss_from_margins(xn, axn, design);
      const Eigen::VectorXd d = xn - y;
      const double model = fy + gy.dot(d) + 0.5 * L * d.squaredNorm();
      if (fxn <= model + 1e-13 * (1.0 + std::abs(fy)) || L >= L_global)
        break;
      L = std::min(L / config.shrink, L_global);
    }
    const double Fxn = fxn + lambda * xn.lpNorm<1>();

    if (Fxn > Fx && !fresh_restart) {
      // Momentum overshot: restart from the last iterate.
      y = x;
      t = 1.0;
      fresh_restart = true;
      continue;
    }
    fresh_restart = false;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    t = tn;
    x = std::move(xn);
    fx = fxn;
    Fx = Fxn;
    gx = detail::gradient_from_margins(axn, design);
    residual = detail::kkt_from_gradient(x, gx, lambda);
  }

  SolverResult res;
  res.objective = Fx;
  res.kkt_residual = residual;
  res.iterations = iter;
  res.converged = residual <= config.tol;
  res.z_hat = lambda > 0.0 ? Eigen::VectorXd(-gx / lambda) : Eigen::VectorXd::Zero(dim);
  res.theta_hat = std::move(x);
  return res;
}

} // namespace isingsel
