#include "isingsel/solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace isingsel;

namespace {

NodeDesign random_design(Rng &rng, int n, int p) {
  Eigen::MatrixXd data(n, p);
  for (int i = 0; i < n; ++i)
    for (int v = 0; v < p; ++v)
      data(i, v) = rng.spin();
  return NodeDesign::from_samples(SampleSet(data), 1 + static_cast<int>(rng.next_u64() % p));
}

Eigen::VectorXd random_vector(Rng &rng, int dim, double scale) {
  Eigen::VectorXd v(dim);
  for (int k = 0; k < dim; ++k)
    v[k] = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

NodeDesign pair_design(double theta, int n, std::uint64_t seed) {
  IsingModel m(GraphTopology(2, {{1, 2}}), {theta});
  return NodeDesign::from_samples(exact_enum_sample(m, n, seed), 1);
}

} // namespace

TEST(Design, ColumnMapping) {
  EXPECT_EQ(predictor_column(3, 1), 0);
  EXPECT_EQ(predictor_column(3, 4), 2);
  for (int r = 1; r <= 5; ++r)
    for (int v = 1; v <= 5; ++v)
      if (v != r)
        EXPECT_EQ(predictor_vertex(r, predictor_column(r, v)), v);
}

TEST(Objective, AtZero) {
  Rng rng(1);
  auto d = random_design(rng, 30, 5);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(d.dim());
  EXPECT_NEAR(objective(zero, d, 0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(objective(zero, d, 0.3), 0.693147, 1e-6);
}

TEST(Objective, SingleRowValue) {
  Eigen::MatrixXd row(1, 2);
  row << 1, 1;
  auto d = NodeDesign::from_samples(SampleSet(row), 1);
  Eigen::VectorXd th(1);
  th << 0.5;
  EXPECT_NEAR(objective(th, d, 0.0), 0.313262, 1e-6);
  EXPECT_NEAR(objective(th, d, 0.0), oracle::naive_loss(th, d), 1e-14);
}

TEST(Objective, OverflowSafe) {
  Eigen::MatrixXd row(1, 2);
  row << 1, 1;
  auto d = NodeDesign::from_samples(SampleSet(row), 1);
  Eigen::VectorXd th(1);
  th << 1000.0;
  // log(2 cosh 1000) - 1000 = log1p(e^-2000) ~ 0
  EXPECT_NEAR(objective(th, d, 0.0), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(objective(-th, d, 0.0)));
  EXPECT_NEAR(objective(-th, d, 0.0), 2000.0, 1e-9);
}

TEST(Objective, DimensionMismatch) {
  Rng rng(1);
  auto d = random_design(rng, 10, 4);
  EXPECT_THROW(objective(Eigen::VectorXd::Zero(2), d, 0.1), InvalidArgument);
  EXPECT_THROW(gradient(Eigen::VectorXd::Zero(5), d), InvalidArgument);
}

TEST(Gradient, AtZeroIsMinusMoments) {
  Rng rng(2);
  auto d = random_design(rng, 40, 6);
  EXPECT_EQ(gradient(Eigen::VectorXd::Zero(d.dim()), d), -d.response_moments);
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    auto d = random_design(rng, 50, 8);
    Eigen::VectorXd th = random_vector(rng, d.dim(), 1.0);
    auto f = [&](const Eigen::VectorXd &t) { return objective(t, d, 0.0); };
    const Eigen::VectorXd fd = oracle::fd_gradient(f, th);
    const Eigen::VectorXd g = gradient(th, d);
    EXPECT_LE((g - fd).norm() / std::max(fd.norm(), 1e-12), 1e-6) << inst;
  }
}

TEST(Gradient, SaturatesBounded) {
  Eigen::MatrixXd rows(4, 3);
  rows << 1, 1, -1, 1, 1, -1, 1, 1, -1, 1, 1, -1;
  auto d = NodeDesign::from_samples(SampleSet(rows), 1);
  Eigen::VectorXd th(2);
  th << 500.0, -500.0; // a_i = +1000 on every row
  const Eigen::VectorXd g = gradient(th, d);
  // tanh -> 1, so grad_u -> mean(x_u) - mu_u = 0 here since x_r = +1
  EXPECT_TRUE(g.allFinite());
  EXPECT_NEAR(g.cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Hessian, MatchesFiniteDifferencesOfGradient) {
  Rng rng(4);
  auto d = random_design(rng, 60, 5);
  Eigen::VectorXd th = random_vector(rng, d.dim(), 0.8);
  const Eigen::MatrixXd h = hessian(th, d);
  for (int k = 0; k < d.dim(); ++k) {
    auto gk = [&](const Eigen::VectorXd &t) { return gradient(t, d)[k]; };
    const Eigen::VectorXd row = oracle::fd_gradient(gk, th);
    EXPECT_LE((h.row(k).transpose() - row).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Objective, ConvexitySurrogate) {
  Rng rng(5);
  for (int inst = 0; inst < 50; ++inst) {
    auto d = random_design(rng, 40, 6);
    const double lam = 0.1 * (inst % 4);
    Eigen::VectorXd a = random_vector(rng, d.dim(), 2.0);
    Eigen::VectorXd b = random_vector(rng, d.dim(), 2.0);
    const double t = rng.uniform();
    EXPECT_LE(objective(t * a + (1 - t) * b, d, lam),
              t * objective(a, d, lam) + (1 - t) * objective(b, d, lam) + 1e-12);
  }
}

TEST(Kkt, Arithmetic) {
  Eigen::MatrixXd pred(10, 1);
  pred << 1, 1, 1, 1, 1, 1, 1, -1, -1, -1;
  auto d = NodeDesign::from_columns(1, pred, Eigen::VectorXd::Ones(10)); // mu = 0.4
  ASSERT_NEAR(d.response_moments[0], 0.4, 1e-15);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  EXPECT_EQ(kkt_residual(zero, d, 0.4 + 0.1), 0.0);
  EXPECT_NEAR(kkt_residual(zero, d, 0.2), 0.2, 1e-15);
  EXPECT_THROW(kkt_residual(zero, d, -0.1), InvalidArgument);
}

TEST(Fit, LargeLambdaGivesZero) {
  Rng rng(6);
  auto d = random_design(rng, 80, 7);
  const double lam = d.response_moments.cwiseAbs().maxCoeff();
  auto res = fit(d, lam);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.theta_hat.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(res.iterations, 0);
}

TEST(Fit, PairSign) {
  auto d = pair_design(0.5, 10000, 1);
  auto res = fit(d, 0.05);
  ASSERT_TRUE(res.converged);
  EXPECT_GT(res.theta_hat[0], 0.0);
  auto neg = fit(pair_design(-0.5, 10000, 1), 0.05);
  EXPECT_LT(neg.theta_hat[0], 0.0);
}

TEST(Fit, RejectsNegativeLambda) {
  Rng rng(7);
  auto d = random_design(rng, 10, 3);
  EXPECT_THROW(fit(d, -1e-3), InvalidArgument);
}

TEST(Fit, MaxIterExhaustedIsNotAnException) {
  auto m = assign_couplings(make_grid4(3), 0.5, CouplingMode::mixed, 2);
  auto d = NodeDesign::from_samples(exact_enum_sample(m, 500, 3), 1);
  SolverConfig c;
  c.max_iter = 1;
  c.tol = 1e-14;
  auto res = fit(d, 0.01, c);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 1);
}

TEST(Fit, KktCertificateAndLocalMinimality) {
  Rng rng(8);
  for (int inst = 0; inst < 20; ++inst) {
    const int p = 3 + inst % 8;
    auto m = assign_couplings(make_star(p, p - 1), 0.4, CouplingMode::mixed, inst);
    auto d = NodeDesign::from_samples(exact_star_sample(m, 200 + 50 * inst, inst), 1 + inst % p);
    const double lam = std::array{0.01, 0.1, 0.3}[inst % 3];
    auto res = fit(d, lam);
    ASSERT_TRUE(res.converged);
    EXPECT_LE(kkt_residual(res.theta_hat, d, lam), 1e-8);
    EXPECT_NEAR(res.objective, objective(res.theta_hat, d, lam), 1e-14);
    const double base = objective(res.theta_hat, d, lam);
    for (int k = 0; k < 200; ++k) {
      Eigen::VectorXd delta = random_vector(rng, d.dim(), 1.0);
      delta *= 0.01 / delta.norm();
      EXPECT_LE(base, objective(res.theta_hat + delta, d, lam));
    }
  }
}

TEST(Fit, DualVectorMatchesGradient) {
  auto d = pair_design(0.5, 3000, 4);
  auto res = fit(d, 0.05);
  EXPECT_LE((res.z_hat + gradient(res.theta_hat, d) / 0.05).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(res.z_hat.cwiseAbs().maxCoeff(), 1.0 + 1e-6);
}

TEST(Fit, MonotoneShrinkage) {
  auto m = assign_couplings(make_grid4(3), 0.5, CouplingMode::mixed, 5);
  auto d = NodeDesign::from_samples(exact_enum_sample(m, 400, 5), 2);
  double prev = std::numeric_limits<double>::infinity();
  for (double lam : {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    auto res = fit(d, lam);
    ASSERT_TRUE(res.converged);
    const double l1 = res.theta_hat.lpNorm<1>();
    EXPECT_LE(l1, prev + 1e-6) << lam;
    prev = l1;
  }
}

TEST(Fit, WarmStartUniqueness) {
  Rng rng(9);
  auto m = assign_couplings(make_grid4(3), 0.5, CouplingMode::mixed, 6);
  int certified = 0;
  for (int inst = 0; inst < 6; ++inst) {
    auto d = NodeDesign::from_samples(exact_enum_sample(m, 500, 40 + inst), 1 + inst);
    const double lam = 0.08;
    auto res = fit(d, lam);
    ASSERT_TRUE(res.converged);
    std::vector<int> support, zeros;
    for (int u = 0; u < d.dim(); ++u)
      (res.theta_hat[u] != 0.0 ? support : zeros).push_back(u);
    double zmax = 0.0;
    for (int u : zeros)
      zmax = std::max(zmax, std::abs(res.z_hat[u]));
    double min_eig = std::numeric_limits<double>::infinity();
    if (!support.empty()) {
      const Eigen::MatrixXd h = hessian(res.theta_hat, d);
      Eigen::MatrixXd hs(support.size(), support.size());
      for (std::size_t a = 0; a < support.size(); ++a)
        for (std::size_t b = 0; b < support.size(); ++b)
          hs(a, b) = h(support[a], support[b]);
      min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hs).eigenvalues().minCoeff();
    }
    if (!(zmax < 1 - 1e-6 && min_eig > 1e-8))
      continue;
    ++certified;
    SolverConfig tight;
    tight.tol = 1e-10;
    for (int w = 0; w < 5; ++w) {
      auto again = fit(d, lam, tight, random_vector(rng, d.dim(), 1.5));
      ASSERT_TRUE(again.converged);
      EXPECT_LE((again.theta_hat - res.theta_hat).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
  EXPECT_GT(certified, 0);
}

TEST(Fit, RandomCertificateSweep) {
  Rng rng(10);
  for (int inst = 0; inst < 100; ++inst) {
    const int p = 2 + static_cast<int>(rng.next_u64() % 11);
    const int n = 20 + static_cast<int>(rng.next_u64() % 1981);
    auto d = random_design(rng, n, p);
    const double lam = std::array{0.01, 0.1, 0.3}[inst % 3];
    auto res = fit(d, lam);
    EXPECT_TRUE(res.converged) << inst;
    EXPECT_LE(res.kkt_residual, 1e-8);
  }
}
