#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixkrig/likelihood.hpp"
#include "mixkrig/rng.hpp"

using namespace mixkrig;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Dataset quant_dataset(const std::vector<double>& u, const std::vector<double>& y) {
  Dataset d;
  d.y.resize(static_cast<int>(y.size()));
  for (std::size_t i = 0; i < u.size(); ++i) {
    MixedInput x;
    x.u.resize(1);
    x.u << u[i];
    d.inputs.push_back(x);
    d.y[static_cast<int>(i)] = y[i];
  }
  return d;
}

FullParams quant_params(double phi) {
  FullParams p;
  p.phi.resize(1);
  p.phi << phi;
  return p;
}

/// Random SPD correlation-like matrix with unit diagonal.
Eigen::MatrixXd random_correlation(int n, Rng& rng, double jitter = 0.3) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian();
  Eigen::MatrixXd s = g * g.transpose() + jitter * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * s * d.asDiagonal();
}

CorrelationSystem system_from(const Eigen::MatrixXd& r, double delta) {
  CorrelationSystem sys;
  sys.r = r;
  sys.delta = delta;
  Eigen::MatrixXd a = r;
  a.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  REQUIRE(llt.info() == Eigen::Success);
  sys.chol = llt.matrixL();
  sys.logdet = 2.0 * sys.chol.diagonal().array().log().sum();
  return sys;
}

/// Grid oracle: full eigendecomposition NLL per candidate threshold.
std::pair<double, double> nugget_oracle(const Eigen::MatrixXd& r, const std::vector<double>& grid,
                                        const Eigen::VectorXd& y) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  const double lmin = eig.eigenvalues().minCoeff();
  std::vector<double> ordered = grid;
  std::sort(ordered.begin(), ordered.end());
  double best_nll = std::numeric_limits<double>::infinity();
  double best_eps = 0.0, best_delta = 0.0;
  const int n = static_cast<int>(y.size());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  for (double eps : ordered) {
    const double delta = std::max(0.0, eps - lmin);
    const Eigen::VectorXd lam = eig.eigenvalues().array() + delta;
    const Eigen::MatrixXd q = eig.eigenvectors();
    const Eigen::MatrixXd m = q * lam.cwiseInverse().asDiagonal() * q.transpose();
    const double mu = ones.dot(m * y) / ones.dot(m * ones);
    const Eigen::VectorXd resid = y - mu * ones;
    const double sigma2 = resid.dot(m * resid) / n;
    const double logdet = lam.array().log().sum();
    const double nll = 0.5 * (n * std::log(sigma2) + logdet);
    if (nll < best_nll) {
      best_nll = nll;
      best_eps = eps;
      best_delta = delta;
    }
  }
  return {best_eps, best_delta};
}

}  // namespace

TEST_CASE("build_correlation basic structure") {
  // single point
  {
    Dataset d = quant_dataset({0.5}, {1.0});
    const Eigen::MatrixXd r = build_correlation(d, ModelConfig{}, quant_params(1.0));
    REQUIRE(r.rows() == 1);
    CHECK(r(0, 0) == 1.0);
  }
  // two identical inputs
  {
    Dataset d = quant_dataset({0.5, 0.5}, {1.0, 2.0});
    const Eigen::MatrixXd r = build_correlation(d, ModelConfig{}, quant_params(1.0));
    CHECK(r(0, 1) == 1.0);
    CHECK(r(1, 0) == 1.0);
  }
  // unit separation with phi = 1
  {
    Dataset d = quant_dataset({0.0, 1.0}, {1.0, 2.0});
    const Eigen::MatrixXd r = build_correlation(d, ModelConfig{}, quant_params(1.0));
    CHECK(r(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }
}

TEST_CASE("condition_nugget: well-conditioned matrices take the smallest threshold with zero nugget") {
  // eigenvalues 0.5 and 1.5
  Eigen::MatrixXd r(2, 2);
  r << 1.0, 0.5, 0.5, 1.0;
  Eigen::VectorXd y(2);
  y << 0.3, -1.2;
  const CorrelationSystem sys = condition_nugget(r, ModelConfig::default_nugget_grid(), y);
  CHECK(sys.delta == 0.0);
  CHECK(sys.epsilon_star == 1e-8);
  CHECK(sys.lambda_min == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("condition_nugget lifts a singular matrix to the winning threshold") {
  const Eigen::MatrixXd r = Eigen::MatrixXd::Ones(3, 3);
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  const CorrelationSystem sys = condition_nugget(r, {1e-2}, y);
  CHECK(sys.delta == doctest::Approx(1e-2).epsilon(1e-12));
  CHECK(sys.epsilon_star == 1e-2);
}

TEST_CASE("condition_nugget matches the full-grid eigendecomposition oracle") {
  Rng rng(911);
  const std::vector<double> grid = ModelConfig::default_nugget_grid();
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 10;
    // mix of healthy and near-singular matrices
    Eigen::MatrixXd r = random_correlation(n, rng, trial % 2 ? 1e-9 : 0.5);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.gaussian();
    const CorrelationSystem sys = condition_nugget(r, grid, y);
    const auto [eps, delta] = nugget_oracle(r, grid, y);
    CHECK(sys.epsilon_star == eps);
    CHECK(sys.delta == doctest::Approx(delta).epsilon(1e-9));
    // nugget contract
    Eigen::MatrixXd lifted = r;
    lifted.diagonal().array() += sys.delta;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lifted, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= sys.epsilon_star - 1e-12);
  }
}

TEST_CASE("profile_mean_var closed forms") {
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  const CorrelationSystem sys = system_from(r, 0.0);
  const auto [mu, sigma2] = profile_mean_var(y, sys);
  CHECK(mu == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sigma2 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(3, 4.2);
  const auto [mu_c, sigma2_c] = profile_mean_var(constant, sys);
  CHECK(mu_c == doctest::Approx(4.2).epsilon(1e-14));
  CHECK(sigma2_c == doctest::Approx(0.0));
}

TEST_CASE("profile_mean_var matches the explicit-inverse oracle") {
  Rng rng(912);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8;
    const Eigen::MatrixXd r = random_correlation(n, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.gaussian() * 3 + 1;
    const CorrelationSystem sys = system_from(r, 0.0);
    const auto [mu, sigma2] = profile_mean_var(y, sys);

    const Eigen::MatrixXd m = r.inverse();  // oracle only
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const double mu_ref = ones.dot(m * y) / ones.dot(m * ones);
    const Eigen::VectorXd resid = y - mu_ref * ones;
    const double sigma2_ref = resid.dot(m * resid) / n;
    CHECK(mu == doctest::Approx(mu_ref).epsilon(1e-10));
    CHECK(sigma2 == doctest::Approx(sigma2_ref).epsilon(1e-10));
  }
}

TEST_CASE("profile_nll hand case and scale equivariance") {
  Dataset d = quant_dataset({0.0, 1000.0}, {0.0, 2.0});
  d.y << 0.0, 2.0;
  const FullParams p = quant_params(1.0);
  CorrelationSystem sys;
  const double nll = profile_nll(d, ModelConfig{}, p, &sys);
  // R is numerically the identity at that separation: sigma2 = 1, logdet = 0
  CHECK(nll == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sys.delta == 0.0);

  // scaling y by c shifts the profile objective by n log c
  Dataset d2 = d;
  d2.y *= 7.0;
  const double nll2 = profile_nll(d2, ModelConfig{}, p);
  CHECK(nll2 - nll == doctest::Approx(2.0 * std::log(7.0)).epsilon(1e-10));
}

TEST_CASE("profile_nll equals the explicit log-likelihood at the profile estimates") {
  Rng rng(913);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 12;
    Dataset d;
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
      MixedInput x;
      x.u.resize(2);
      x.u << rng.uniform(), rng.uniform();
      d.inputs.push_back(x);
      d.y[i] = rng.gaussian();
    }
    FullParams p;
    p.phi.resize(2);
    p.phi << std::exp(rng.gaussian()), std::exp(rng.gaussian());

    CorrelationSystem sys;
    const double nll = profile_nll(d, ModelConfig{}, p, &sys);
    const auto [mu, sigma2] = profile_mean_var(d.y, sys);
    // -loglik at the estimates minus the n/2 from the quadratic form
    const double check = -loglik_at(d.y, sys, mu, sigma2) - 0.5 * n;
    CHECK(nll == doctest::Approx(check).epsilon(1e-10));
  }
}

TEST_CASE("profile estimates minimize the explicit likelihood on a perturbation grid") {
  Rng rng(914);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 9;
    const Eigen::MatrixXd r = random_correlation(n, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.gaussian() + 0.5;
    const CorrelationSystem sys = system_from(r, 0.0);
    const auto [mu, sigma2] = profile_mean_var(y, sys);
    const double best = -loglik_at(y, sys, mu, sigma2);
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) {
        const double mu_p = mu == 0.0 ? 0.05 * a : mu * (1.0 + 0.05 * a);
        const double sigma2_p = sigma2 * (1.0 + 0.05 * b);
        CHECK(-loglik_at(y, sys, mu_p, sigma2_p) >= best - 1e-10);
      }
  }
}

TEST_CASE("cholesky and eigendecomposition logdets agree") {
  Rng rng(915);
  for (int n : {5, 20, 50}) {
    const Eigen::MatrixXd r = random_correlation(n, rng);
    const CorrelationSystem sys = system_from(r, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
    const double logdet_eig = eig.eigenvalues().array().log().sum();
    CHECK(sys.logdet == doctest::Approx(logdet_eig).epsilon(1e-8));
  }
}

TEST_CASE("full log-likelihood constant bookkeeping") {
  // n = 2, R = I, y = (0, 2): sigma2_hat = 1, so
  // -2 loglik_full = n log 2pi + 2 nll + n
  Dataset d = quant_dataset({0.0, 1000.0}, {0.0, 2.0});
  CorrelationSystem sys;
  const double nll = profile_nll(d, ModelConfig{}, quant_params(1.0), &sys);
  const auto [mu, sigma2] = profile_mean_var(d.y, sys);
  const double minus2l = -2.0 * (loglik_at(d.y, sys, mu, sigma2) - 0.5 * 2 * kLog2Pi);
  CHECK(minus2l == doctest::Approx(2 * kLog2Pi + 2 * nll + 2).epsilon(1e-12));
}
