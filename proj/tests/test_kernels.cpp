#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixkrig/identify.hpp"
#include "mixkrig/kernels.hpp"
#include "mixkrig/rng.hpp"

using namespace mixkrig;

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("embed: linear nominal with zero angle gives identical unit rows") {
  QualFactorParams qp{QualKind::LinNominal, vec({0.0})};
  const LatentEmbedding z = embed(qp, 2, 2);
  CHECK(z(0, 0) == doctest::Approx(1.0));
  CHECK(z(0, 1) == doctest::Approx(0.0));
  CHECK(z(1, 0) == doctest::Approx(1.0));
  CHECK(z(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("embed: linear ordinal evaluates the angle chain") {
  QualFactorParams qp{QualKind::LinOrdinal, vec({kPi / 3, kPi / 6})};
  const LatentEmbedding z = embed(qp, 3, 2);
  CHECK(z(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(z(1, 1) == doctest::Approx(0.8660254037844386).epsilon(1e-12));
  // third level sits at pi/2
  CHECK(z(2, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(z(2, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("embed: isotropic ordinal is the cumulative sum") {
  QualFactorParams qp{QualKind::IsoOrdinal, vec({1.0, 1.0})};
  const LatentEmbedding z = embed(qp, 3, 1);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(1, 0) == 1.0);
  CHECK(z(2, 0) == 2.0);
}

TEST_CASE("embed rejects infeasible parameters") {
  QualFactorParams neg{QualKind::IsoOrdinal, vec({-0.5, 1.0})};
  CHECK_THROWS_WITH_AS(embed(neg, 3, 1), doctest::Contains("ConstraintViolation"), Error);
  QualFactorParams oversum{QualKind::LinOrdinal, vec({2.0, 2.0})};
  CHECK_THROWS_WITH_AS(embed(oversum, 3, 2), doctest::Contains("ConstraintViolation"), Error);
}

TEST_CASE("quant_kernel closed-form values") {
  CHECK(quant_kernel(vec({0.3, -2.0}), vec({0.3, -2.0}), vec({1.0, 2.0})) == 1.0);
  CHECK(quant_kernel(vec({0.0}), vec({1.0}), vec({1.0})) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(quant_kernel(vec({0.0, 0.0}), vec({1.0, 2.0}), vec({0.5, 0.25})) ==
        doctest::Approx(0.22313016014842982).epsilon(1e-15));
  CHECK_THROWS_AS(quant_kernel(vec({0.0}), vec({1.0, 2.0}), vec({1.0})), Error);
}

TEST_CASE("qual_factor_kernel closed-form values") {
  CHECK(qual_factor_kernel(QualKernel::Gaussian, vec({0.7}), vec({0.7})) == 1.0);
  CHECK(qual_factor_kernel(QualKernel::Exponential, vec({0.7, 0.1}), vec({0.7, 0.1})) == 1.0);
  CHECK(qual_factor_kernel(QualKernel::Linear, vec({1.0, 0.0}), vec({1.0, 0.0})) == 1.0);
  CHECK(qual_factor_kernel(QualKernel::Gaussian, vec({0.0}), vec({2.0})) ==
        doctest::Approx(0.01831563888873418).epsilon(1e-15));
  CHECK(qual_factor_kernel(QualKernel::Linear, vec({1.0, 0.0}), vec({0.5, 0.8660254037844386})) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(qual_factor_kernel(QualKernel::Linear, vec({2.0, 0.0}), vec({1.0, 0.0})),
                       doctest::Contains("NonUnitNorm"), Error);
}

TEST_CASE("qual_kernel combines factors multiplicatively and additively") {
  // two 2-level factors embedded so that K_1 = 0.5, K_2 = 0.4 across levels
  std::vector<LatentEmbedding> z(2);
  z[0].resize(2, 1);
  z[0] << 0.0, std::sqrt(-std::log(0.5));
  z[1].resize(2, 1);
  z[1] << 0.0, std::sqrt(-std::log(0.4));

  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {false, false};
  cfg.latent_dims = {1, 1};

  const std::vector<int> v1 = {1, 1}, v2 = {2, 2};
  CHECK(qual_kernel(cfg, z, {}, v1, v1) == 1.0);
  CHECK(qual_kernel(cfg, z, {}, v1, v2) == doctest::Approx(0.2).epsilon(1e-12));

  cfg.structure = Structure::Additive;
  Eigen::VectorXd psi = vec({0.25, 0.75});
  CHECK(qual_kernel(cfg, z, psi, v1, v1) == 1.0);
  CHECK(qual_kernel(cfg, z, psi, v1, v2) == doctest::Approx(0.425).epsilon(1e-12));

  Eigen::VectorXd bad = vec({0.5, 0.6});
  CHECK_THROWS_WITH_AS(qual_kernel(cfg, z, bad, v1, v2), doctest::Contains("WeightError"), Error);
}

TEST_CASE("ordinal chain: closed-form examples") {
  const double c = std::cos(kPi / 4);
  CHECK(ordinal_chain_check(QualKernel::Linear, c, c) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ordinal_chain_check(QualKernel::Gaussian, std::exp(-1.0), std::exp(-1.0)) ==
        doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(ordinal_chain_check(QualKernel::Linear, 0.35, 1.0) == doctest::Approx(0.35).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(ordinal_chain_check(QualKernel::Gaussian, -0.1, 0.5), doctest::Contains("RangeError"), Error);
}

TEST_CASE("ordinal chain agrees with direct embedded evaluation (resolution oracle)") {
  Rng rng(5150);
  for (int trial = 0; trial < 1000; ++trial) {
    // linear: angle increments with feasible sum
    {
      const double d2 = rng.uniform(0.0, kPi / 2);
      const double d3 = rng.uniform(0.0, kPi - d2 - 1e-9);
      QualFactorParams qp{QualKind::LinOrdinal, vec({d2, d3})};
      const LatentEmbedding z = embed(qp, 3, 2);
      const double t12 = qual_factor_kernel(QualKernel::Linear, z.row(0), z.row(1));
      const double t23 = qual_factor_kernel(QualKernel::Linear, z.row(1), z.row(2));
      const double t13 = qual_factor_kernel(QualKernel::Linear, z.row(0), z.row(2));
      CHECK(ordinal_chain_check(QualKernel::Linear, t12, t23) == doctest::Approx(t13).epsilon(1e-12));
    }
    // gaussian: distance increments
    {
      const double d2 = rng.uniform(1e-3, 2.0);
      const double d3 = rng.uniform(1e-3, 2.0);
      QualFactorParams qp{QualKind::IsoOrdinal, vec({d2, d3})};
      const LatentEmbedding z = embed(qp, 3, 1);
      const double t12 = qual_factor_kernel(QualKernel::Gaussian, z.row(0), z.row(1));
      const double t23 = qual_factor_kernel(QualKernel::Gaussian, z.row(1), z.row(2));
      const double t13 = qual_factor_kernel(QualKernel::Gaussian, z.row(0), z.row(2));
      CHECK(ordinal_chain_check(QualKernel::Gaussian, t12, t23) == doctest::Approx(t13).epsilon(1e-12));
    }
  }
}

TEST_CASE("assembled correlation matrices are symmetric PSD with unit diagonal") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 25;
    Dataset d;
    d.level_counts = {3, 4};
    d.ordinal_flags = {true, true};
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
      MixedInput x;
      x.u = Eigen::VectorXd::NullaryExpr(2, [&](int) { return rng.uniform(); });
      x.v = {rng.uniform_int(1, 3), rng.uniform_int(1, 4)};
      d.inputs.push_back(x);
      d.y[i] = rng.gaussian();
    }
    ModelConfig cfg;
    cfg.structure = trial % 2 ? Structure::Additive : Structure::Multiplicative;
    cfg.qual_kernel = trial % 3 == 0   ? QualKernel::Gaussian
                      : trial % 3 == 1 ? QualKernel::Exponential
                                       : QualKernel::Linear;
    cfg.ordinal_mode = {true, true};
    const ModelConfig vcfg = cfg.validated(d.level_counts);

    FullParams p;
    p.phi = vec({std::exp(rng.gaussian()), std::exp(rng.gaussian())});
    for (int j = 0; j < 2; ++j) {
      QualFactorParams qp;
      qp.kind = vcfg.kind(j);
      qp.values.resize(d.level_counts[j] - 1);
      for (int i = 0; i < qp.values.size(); ++i)
        qp.values[i] = qp.kind == QualKind::LinOrdinal ? rng.uniform(0.0, kPi / d.level_counts[j])
                                                       : rng.uniform(0.0, 1.0);
      p.qual.push_back(qp);
    }
    if (vcfg.structure == Structure::Additive) {
      p.psi.resize(2);
      const double w = rng.uniform(0.05, 0.95);
      p.psi << w, 1.0 - w;
    }

    const Eigen::MatrixXd r = build_correlation(d, vcfg, p);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < n; ++i) CHECK(r(i, i) == 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("kernel values are symmetric in their arguments") {
  Rng rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd a = Eigen::VectorXd::NullaryExpr(3, [&](int) { return rng.gaussian(); });
    Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(3, [&](int) { return rng.gaussian(); });
    for (QualKernel k : {QualKernel::Gaussian, QualKernel::Exponential})
      CHECK(qual_factor_kernel(k, a, b) == qual_factor_kernel(k, b, a));
    a /= a.norm();
    b /= b.norm();
    CHECK(qual_factor_kernel(QualKernel::Linear, a, b) == qual_factor_kernel(QualKernel::Linear, b, a));
  }
}

TEST_CASE("embed followed by canonicalization is idempotent on canonical parameters") {
  Rng rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    // isotropic nominal parameters are canonical by construction
    const int a = rng.uniform_int(3, 6);
    const int l = rng.uniform_int(1, a - 1);
    QualFactorParams qp;
    qp.kind = QualKind::IsoNominal;
    qp.values.resize(qual_free_count(qp.kind, a, l));
    int idx = 0;
    for (int v = 2; v <= a; ++v) {
      const int nc = std::min(v - 1, l);
      for (int c = 1; c <= nc; ++c, ++idx) {
        const double g = rng.gaussian();
        qp.values[idx] = (c == v - 1 && v <= l + 1) ? std::abs(g) + 0.05 : g;
      }
    }
    const LatentEmbedding z = embed(qp, a, l);
    const CanonicalEmbedding w = canon_isotropic(z);
    CHECK((w - z).cwiseAbs().maxCoeff() < 1e-9);
  }
}
