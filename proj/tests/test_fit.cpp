#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "mixkrig/bench.hpp"
#include "mixkrig/fit.hpp"
#include "mixkrig/io.hpp"
#include "mixkrig/lbfgsb.hpp"

using namespace mixkrig;

namespace {

constexpr double kPi = 3.14159265358979323846;

OptProblem scalar_problem(std::function<double(double)> f, double lo, double hi) {
  OptProblem prob;
  prob.layout.total = 1;
  prob.lower = Eigen::VectorXd::Constant(1, lo);
  prob.upper = Eigen::VectorXd::Constant(1, hi);
  prob.objective = [f = std::move(f)](const Eigen::VectorXd& x) { return f(x[0]); };
  return prob;
}

Dataset small_mixed_dataset(int n, Rng& rng, bool two_factors = true) {
  Dataset d;
  d.level_counts = two_factors ? std::vector<int>{3, 4} : std::vector<int>{3};
  d.ordinal_flags.assign(d.level_counts.size(), true);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    MixedInput x;
    x.u.resize(2);
    x.u << rng.uniform(), rng.uniform(2.0, 5.0);
    x.v.clear();
    for (int a : d.level_counts) x.v.push_back(rng.uniform_int(1, a));
    d.inputs.push_back(x);
    d.y[i] = std::sin(3 * x.u[0]) + 0.2 * x.v[0] + 0.1 * x.u[1] + 0.05 * rng.gaussian();
  }
  return d;
}

}  // namespace

TEST_CASE("optimize: interior quadratic minimum") {
  OptProblem prob = scalar_problem([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0);
  const OptimizeResult res = optimize(prob, Eigen::VectorXd::Constant(1, 0.9));
  CHECK(res.x[0] == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("optimize: active bound") {
  OptProblem prob = scalar_problem([](double x) { return (x - 2.0) * (x - 2.0); }, 0.0, 1.0);
  const OptimizeResult res = optimize(prob, Eigen::VectorXd::Constant(1, 0.5));
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("optimize rejects infeasible starts") {
  OptProblem prob = scalar_problem([](double x) { return x * x; }, 0.0, 1.0);
  CHECK_THROWS_WITH_AS(optimize(prob, Eigen::VectorXd::Constant(1, 1.5)), doctest::Contains("InfeasibleStart"),
                       Error);
}

TEST_CASE("optimize: barrier schedule approaches the angle-sum wall") {
  // objective pushes the increment sum toward pi; the barrier holds it off
  OptProblem prob;
  prob.layout.total = 2;
  prob.lower = Eigen::VectorXd::Constant(2, 0.0);
  prob.upper = Eigen::VectorXd::Constant(2, kPi);
  ParamLayout::Block block;
  block.kind = QualKind::LinOrdinal;
  block.a = 3;
  block.offset = 0;
  block.count = 2;
  prob.barrier_blocks.push_back(block);
  prob.objective = [](const Eigen::VectorXd& x) { return -(x[0] + x[1]); };

  Eigen::VectorXd start(2);
  start << 0.5, 0.5;
  const OptimizeResult res = optimize(prob, start);
  const double sum = res.x.sum();
  CHECK(sum <= kPi - 1e-6);
  CHECK(sum >= kPi - 1e-3);
}

TEST_CASE("numeric gradient is self-consistent with an independent central difference") {
  Rng rng(2024);
  Dataset d = small_mixed_dataset(14, rng);
  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {true, true};
  const ModelConfig vcfg = cfg.validated(d.level_counts);
  NllEvaluator eval(d, vcfg);
  const ParamLayout layout = ParamLayout::from(vcfg, d.level_counts, 2);
  const Objective f = [&](const Eigen::VectorXd& x) { return eval(layout.unpack(x)); };

  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rs = Rng::split(99, trial);
    Eigen::VectorXd x = random_start(layout, rs);
    const double fx = f(x);
    const Eigen::VectorXd g = numeric_gradient(f, x, fx);
    // independent central difference at step 1e-5
    for (int i = 0; i < x.size(); ++i) {
      Eigen::VectorXd p = x;
      const double h = 1e-5;
      p[i] = x[i] + h;
      const double fp = f(p);
      p[i] = x[i] - h;
      const double fm = f(p);
      const double ref = (fp - fm) / (2 * h);
      if (std::abs(ref) < 1e-4) continue;  // relative comparison needs signal
      CHECK(std::abs(g[i] - ref) <= 1e-3 * std::abs(ref) + 1e-8);
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("optimize output stays feasible and improves the objective") {
  Rng rng(2025);
  Dataset d = small_mixed_dataset(12, rng);
  for (QualKernel kernel : {QualKernel::Gaussian, QualKernel::Linear}) {
    ModelConfig cfg;
    cfg.qual_kernel = kernel;
    cfg.ordinal_mode = {true, true};
    const ModelConfig vcfg = cfg.validated(d.level_counts);
    NllEvaluator eval(d, vcfg);
    const ParamLayout layout = ParamLayout::from(vcfg, d.level_counts, 2);
    OptProblem prob = OptProblem::from(vcfg, d.level_counts, 2,
                                       [&](const Eigen::VectorXd& x) { return eval(layout.unpack(x)); });
    Rng rs = Rng::split(7, kernel == QualKernel::Linear ? 1 : 0);
    const Eigen::VectorXd start = random_start(layout, rs);
    const double f0 = prob.objective(start);
    const OptimizeResult res = optimize(prob, start);
    CHECK(res.nll <= f0);
    for (int i = 0; i < res.x.size(); ++i) {
      CHECK(res.x[i] >= prob.lower[i]);
      CHECK(res.x[i] <= prob.upper[i]);
    }
    for (const auto& b : prob.barrier_blocks) {
      double sum = 0.0;
      for (int i = 0; i < b.count; ++i) sum += res.x[b.offset + i];
      CHECK(sum <= kPi - 1e-6);
    }
  }
}

TEST_CASE("random_start respects the feasible region") {
  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Linear;
  cfg.ordinal_mode = {true};
  const std::vector<int> levels = {4};
  const ModelConfig vcfg = cfg.validated(levels);
  const ParamLayout layout = ParamLayout::from(vcfg, levels, 1);
  for (int trial = 0; trial < 300; ++trial) {
    Rng rng = Rng::split(5, trial);
    const Eigen::VectorXd x = random_start(layout, rng);
    double sum = 0.0;
    for (int i = 1; i < x.size(); ++i) sum += x[i];  // slot 0 is log phi
    CHECK(sum < kPi);
  }
}

TEST_CASE("random_start produces the isotropic zero/positivity pattern") {
  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {false};
  cfg.latent_dims = {2};
  const std::vector<int> levels = {3};
  const ModelConfig vcfg = cfg.validated(levels);
  const ParamLayout layout = ParamLayout::from(vcfg, levels, 0);
  Rng rng(11);
  const Eigen::VectorXd x = random_start(layout, rng);
  const FullParams p = layout.unpack(x);
  const LatentEmbedding z = embed(p.qual[0], 3, 2);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(1, 1) == 0.0);   // zero pattern above the subdiagonal
  CHECK(z(1, 0) > 0.0);    // subdiagonal positivity
  CHECK(z(2, 1) > 0.0);

  Rng rng2(11);
  const Eigen::VectorXd x2 = random_start(layout, rng2);
  CHECK(x == x2);  // identical stream, identical start
}

TEST_CASE("fit_model is deterministic given the seed") {
  Rng rng(2026);
  Dataset d = small_mixed_dataset(12, rng, /*two_factors=*/false);
  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {true};
  cfg.restarts = 3;
  const FittedModel m1 = fit_model(d, cfg, 123);
  const FittedModel m2 = fit_model(d, cfg, 123);
  CHECK(model_to_json(m1).dump() == model_to_json(m2).dump());
  const FittedModel m3 = fit_model(d, cfg, 124);
  CHECK(model_to_json(m1).dump() != model_to_json(m3).dump());
}

TEST_CASE("more restarts never worsen the kept objective") {
  BenchmarkSpec spec = BenchmarkSpec::borehole_discretized(3, 4);
  Rng rng(31);
  const Design design = maximin_lhd(60, spec, rng);
  const Dataset d = dataset_from_design(spec, design);
  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {true, true};
  cfg.restarts = 1;
  const FittedModel one = fit_model(d, cfg, 77);
  cfg.restarts = 15;
  const FittedModel many = fit_model(d, cfg, 77);
  CHECK(many.neg_loglik <= one.neg_loglik + 1e-9);
}

TEST_CASE("fit recovers a known ordinal latent structure (simulate and recover)") {
  // ground truth: 3-level isotropic ordinal chain with increments (1, 1)
  QualFactorParams truth;
  truth.kind = QualKind::IsoOrdinal;
  truth.values = Eigen::Vector2d(1.0, 1.0);
  const LatentEmbedding z_true = embed(truth, 3, 1);
  Eigen::MatrixXd tab_true = level_kernel_table(QualKernel::Gaussian, z_true);

  ModelConfig cfg;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {true};
  cfg.restarts = 8;

  int successes = 0;
  const int n = 20;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng = Rng::split(40, seed);
    Dataset d;
    d.level_counts = {3};
    d.ordinal_flags = {true};
    for (int i = 0; i < n; ++i) {
      MixedInput x;
      x.u.resize(1);
      x.u << rng.uniform();
      x.v = {1 + i % 3};
      d.inputs.push_back(x);
    }
    // exact draw from the generating process
    FullParams gen;
    gen.phi = Eigen::VectorXd::Constant(1, 4.0);
    gen.qual.push_back(truth);
    const Eigen::MatrixXd r = build_correlation(d, cfg.validated(d.level_counts), gen);
    Eigen::LLT<Eigen::MatrixXd> llt(r + 1e-10 * Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd noise(n);
    for (int i = 0; i < n; ++i) noise[i] = rng.gaussian();
    d.y = Eigen::MatrixXd(llt.matrixL()) * noise;
    if (d.y.maxCoeff() - d.y.minCoeff() <= 0) continue;

    const FittedModel m = fit_model(d, cfg, 1000 + seed);
    const LatentEmbedding z_hat = embed_unchecked(m.params.qual[0], 3, 1);
    const Eigen::MatrixXd tab_hat = level_kernel_table(QualKernel::Gaussian, z_hat);
    if ((tab_hat - tab_true).cwiseAbs().maxCoeff() < 0.2) ++successes;
  }
  CHECK(successes >= 16);
}

TEST_CASE("additive weights come back on the simplex") {
  Rng rng(2027);
  Dataset d = small_mixed_dataset(14, rng);
  ModelConfig cfg;
  cfg.structure = Structure::Additive;
  cfg.qual_kernel = QualKernel::Gaussian;
  cfg.ordinal_mode = {true, true};
  cfg.restarts = 2;
  const FittedModel m = fit_model(d, cfg, 5);
  REQUIRE(m.params.psi.size() == 2);
  CHECK(m.params.psi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.params.psi.minCoeff() >= 0.0);
}

TEST_CASE("fitted parameters satisfy their feasible regions with nonnegative slack") {
  Rng rng(2028);
  Dataset d = small_mixed_dataset(12, rng);
  for (QualKernel kernel : {QualKernel::Gaussian, QualKernel::Linear}) {
    ModelConfig cfg;
    cfg.qual_kernel = kernel;
    cfg.ordinal_mode = {true, true};
    cfg.restarts = 2;
    const FittedModel m = fit_model(d, cfg, 9);
    for (std::size_t j = 0; j < m.params.qual.size(); ++j) {
      const auto& qp = m.params.qual[j];
      CHECK(qp.values.minCoeff() >= 0.0);
      if (qp.kind == QualKind::LinOrdinal) CHECK(qp.values.sum() <= kPi - 1e-6 + 1e-12);
      // embeds without a constraint violation
      CHECK_NOTHROW(embed(qp, d.level_counts[j], m.config.latent_dims[j]));
    }
  }
}
