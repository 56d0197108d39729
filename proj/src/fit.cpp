#include "mixkrig/fit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mixkrig/identify.hpp"
#include "mixkrig/lbfgsb.hpp"

namespace mixkrig {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogPhiLo = -13.815510557964274;  // log 1e-6
constexpr double kLogPhiHi = 13.815510557964274;   // log 1e6

double barrier_sum(const Eigen::VectorXd& x, const ParamLayout::Block& block) {
  double s = 0.0;
  for (int i = 0; i < block.count; ++i) s += x[block.offset + i];
  return s;
}

/// Inverse hyperspherical map for one canonical unit row: returns the l-1
/// angles; the last one lands in [0, 2pi), the others in [0, pi].
std::vector<double> spherical_angles(const Eigen::VectorXd& w) {
  const int l = static_cast<int>(w.size());
  std::vector<double> theta(static_cast<std::size_t>(std::max(l - 1, 0)), 0.0);
  for (int c = 0; c + 2 < l; ++c) {
    const double tail = w.tail(l - c - 1).norm();
    theta[c] = std::atan2(tail, w[c]);
  }
  if (l >= 2) {
    double last = std::atan2(w[l - 1], w[l - 2]);
    if (last < 0.0) last += 2.0 * kPi;
    theta[l - 2] = last;
  }
  return theta;
}

/// Rewrites the stored factor parameters in canonical form.  The embed map
/// already lands in the canonical pattern, so this only changes anything at
/// degenerate boundary points; canonicalization failures (rank-deficient
/// optima) keep the raw parameters, which induce the same kernel.
void canonicalize_params(const ModelConfig& config, const std::vector<int>& level_counts, FullParams& params) {
  for (std::size_t j = 0; j < params.qual.size(); ++j) {
    QualFactorParams& qp = params.qual[j];
    const int a = level_counts[j];
    const int l = config.latent_dims[j];
    if (qp.kind == QualKind::IsoOrdinal || qp.kind == QualKind::LinOrdinal) continue;
    const LatentEmbedding z = embed_unchecked(qp, a, l);
    try {
      if (qp.kind == QualKind::IsoNominal) {
        const CanonicalEmbedding w = canon_isotropic(z);
        int idx = 0;
        for (int v = 2; v <= a; ++v) {
          const int nc = std::min(v - 1, l);
          for (int c = 0; c < nc; ++c, ++idx) qp.values[idx] = w(v - 1, c);
        }
      } else {  // LinNominal
        const CanonicalEmbedding w = canon_linear(z);
        int idx = 0;
        for (int v = 2; v <= a; ++v) {
          const std::vector<double> theta = spherical_angles(w.row(v - 1));
          const int na = std::min(v - 1, l - 1);
          for (int c = 0; c < na; ++c, ++idx) qp.values[idx] = theta[c];
        }
      }
    } catch (const Error&) {
      // degenerate embedding; keep the optimizer's parameters
    }
  }
}

}  // namespace

ParamLayout ParamLayout::from(const ModelConfig& config, const std::vector<int>& level_counts, int quant_dim) {
  const ModelConfig cfg = config.validated(level_counts);
  ParamLayout layout;
  layout.quant_dim = quant_dim;
  int offset = quant_dim;
  for (std::size_t j = 0; j < level_counts.size(); ++j) {
    Block b;
    b.kind = cfg.kind(static_cast<int>(j));
    b.a = level_counts[j];
    b.l = cfg.latent_dims[j];
    b.offset = offset;
    b.count = qual_free_count(b.kind, b.a, b.l);
    offset += b.count;
    layout.factors.push_back(b);
  }
  if (cfg.structure == Structure::Additive) {
    layout.psi_offset = offset;
    layout.psi_count = static_cast<int>(level_counts.size()) - 1;
    offset += layout.psi_count;
  }
  layout.total = offset;
  return layout;
}

Eigen::VectorXd ParamLayout::pack(const FullParams& params) const {
  Eigen::VectorXd x(total);
  for (int i = 0; i < quant_dim; ++i) x[i] = std::log(params.phi[i]);
  for (std::size_t j = 0; j < factors.size(); ++j)
    x.segment(factors[j].offset, factors[j].count) = params.qual[j].values;
  if (psi_offset >= 0) {
    const double ref = params.psi[psi_count];  // last weight pinned at logit 0
    for (int j = 0; j < psi_count; ++j) x[psi_offset + j] = std::log(params.psi[j] / ref);
  }
  return x;
}

FullParams ParamLayout::unpack(const Eigen::VectorXd& x) const {
  FullParams params;
  params.phi.resize(quant_dim);
  for (int i = 0; i < quant_dim; ++i) params.phi[i] = std::exp(x[i]);
  params.qual.resize(factors.size());
  for (std::size_t j = 0; j < factors.size(); ++j) {
    params.qual[j].kind = factors[j].kind;
    params.qual[j].values = x.segment(factors[j].offset, factors[j].count);
  }
  if (psi_offset >= 0) {
    const int J = psi_count + 1;
    params.psi.resize(J);
    double mx = 0.0;  // logit of the pinned last weight
    for (int j = 0; j < psi_count; ++j) mx = std::max(mx, x[psi_offset + j]);
    double sum = std::exp(0.0 - mx);
    params.psi[J - 1] = sum;
    for (int j = 0; j < psi_count; ++j) {
      params.psi[j] = std::exp(x[psi_offset + j] - mx);
      sum += params.psi[j];
    }
    params.psi /= sum;
  }
  return params;
}

OptProblem OptProblem::from(const ModelConfig& config, const std::vector<int>& level_counts, int quant_dim,
                            std::function<double(const Eigen::VectorXd&)> objective) {
  OptProblem prob;
  prob.layout = ParamLayout::from(config, level_counts, quant_dim);
  prob.objective = std::move(objective);
  prob.lower = Eigen::VectorXd::Constant(prob.layout.total, -kInf);
  prob.upper = Eigen::VectorXd::Constant(prob.layout.total, kInf);
  for (int i = 0; i < quant_dim; ++i) {
    prob.lower[i] = kLogPhiLo;
    prob.upper[i] = kLogPhiHi;
  }
  for (const auto& b : prob.layout.factors) {
    switch (b.kind) {
      case QualKind::IsoOrdinal:
        for (int i = 0; i < b.count; ++i) prob.lower[b.offset + i] = 0.0;
        break;
      case QualKind::LinOrdinal:
        for (int i = 0; i < b.count; ++i) {
          prob.lower[b.offset + i] = 0.0;
          prob.upper[b.offset + i] = kPi;
        }
        prob.barrier_blocks.push_back(b);
        break;
      case QualKind::LinNominal: {
        int idx = b.offset;
        for (int v = 2; v <= b.a; ++v) {
          const int na = std::min(v - 1, b.l - 1);
          for (int c = 1; c <= na; ++c, ++idx) {
            prob.lower[idx] = 0.0;
            // the final angle of rows past the leading block may wrap
            prob.upper[idx] = (c == b.l - 1 && v > b.l) ? 2.0 * kPi : kPi;
          }
        }
        break;
      }
      case QualKind::IsoNominal: {
        int idx = b.offset;
        for (int v = 2; v <= b.a; ++v) {
          const int nc = std::min(v - 1, b.l);
          for (int c = 1; c <= nc; ++c, ++idx)
            if (c == v - 1 && v <= b.l + 1) prob.lower[idx] = 0.0;  // subdiagonal, relaxed to >= 0
        }
        break;
      }
    }
  }
  return prob;
}

Eigen::VectorXd random_start(const ParamLayout& layout, Rng& rng) {
  Eigen::VectorXd x(layout.total);
  for (int i = 0; i < layout.quant_dim; ++i) x[i] = rng.uniform(std::log(0.01), std::log(10.0));
  for (const auto& b : layout.factors) {
    switch (b.kind) {
      case QualKind::IsoOrdinal:
        for (int i = 0; i < b.count; ++i) x[b.offset + i] = rng.uniform(0.0, 1.0);
        break;
      case QualKind::LinOrdinal:
        // sum stays below (a-1) pi / a < pi by construction
        for (int i = 0; i < b.count; ++i) x[b.offset + i] = rng.uniform(0.0, kPi / b.a);
        break;
      case QualKind::LinNominal: {
        int idx = b.offset;
        for (int v = 2; v <= b.a; ++v) {
          const int na = std::min(v - 1, b.l - 1);
          for (int c = 1; c <= na; ++c, ++idx)
            x[idx] = rng.uniform(0.0, (c == b.l - 1 && v > b.l) ? 2.0 * kPi : kPi);
        }
        break;
      }
      case QualKind::IsoNominal: {
        int idx = b.offset;
        for (int v = 2; v <= b.a; ++v) {
          const int nc = std::min(v - 1, b.l);
          for (int c = 1; c <= nc; ++c, ++idx) {
            const double g = rng.gaussian();
            x[idx] = (c == v - 1 && v <= b.l + 1) ? std::abs(g) : g;
          }
        }
        break;
      }
    }
  }
  for (int j = 0; j < layout.psi_count; ++j) x[layout.psi_offset + j] = rng.gaussian();
  return x;
}

OptimizeResult optimize(const OptProblem& problem, const Eigen::VectorXd& start) {
  if (start.size() != problem.layout.total)
    fail(ErrorCode::DimensionMismatch, "start vector does not match the parameter layout");
  for (int i = 0; i < start.size(); ++i)
    if (start[i] < problem.lower[i] || start[i] > problem.upper[i])
      fail(ErrorCode::InfeasibleStart, "coordinate " + std::to_string(i) + " outside its box");
  for (const auto& b : problem.barrier_blocks)
    if (!(barrier_sum(start, b) < kPi)) fail(ErrorCode::InfeasibleStart, "angle increments start at sum >= pi");

  const auto& f = problem.objective;
  LbfgsbOptions options;

  OptimizeResult out;
  Eigen::VectorXd x = start;

  auto run_stage = [&](const Objective& stage_obj) {
    const Gradient grad = [&stage_obj](const Eigen::VectorXd& p, double fp) {
      return numeric_gradient(stage_obj, p, fp);
    };
    LbfgsbResult res = minimize_box(stage_obj, grad, x, problem.lower, problem.upper, options);
    out.iterations += res.iterations;
    out.evaluations += res.evaluations;
    if (std::isfinite(res.f)) x = res.x;
  };

  if (problem.barrier_blocks.empty()) {
    run_stage(f);
  } else {
    for (double mu : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
      const Objective stage_obj = [&, mu](const Eigen::VectorXd& p) {
        double value = f(p);
        if (!std::isfinite(value)) return value;
        for (const auto& b : problem.barrier_blocks) {
          const double slack = kPi - barrier_sum(p, b);
          if (!(slack > 0.0)) return kInf;
          value -= mu * std::log(slack);
        }
        return value;
      };
      run_stage(stage_obj);
    }
    // keep the mandated slack from the constraint wall
    for (const auto& b : problem.barrier_blocks) {
      const double sum = barrier_sum(x, b);
      if (sum > kPi - 1e-6 && sum > 0.0) {
        const double scale = (kPi - 1e-6) / sum;
        for (int i = 0; i < b.count; ++i) x[b.offset + i] *= scale;
      }
    }
  }

  out.x = x;
  out.nll = f(x);
  if (!std::isfinite(out.nll)) fail(ErrorCode::NonFiniteObjective, "objective non-finite at the returned point");
  return out;
}

FittedModel finalize_model(const Dataset& standardized, const ModelConfig& config, const FullParams& params,
                           double y_mean, double y_scale, const Eigen::VectorXd& u_lo,
                           const Eigen::VectorXd& u_scale) {
  const ModelConfig cfg = config.validated(standardized.level_counts);
  FittedModel model;
  model.config = cfg;
  model.params = params;
  model.y_mean = y_mean;
  model.y_scale = y_scale;
  model.u_lo = u_lo;
  model.u_scale = u_scale;
  model.train = standardized;

  NllEvaluator eval(standardized, cfg);
  CorrelationSystem system;
  model.neg_loglik = eval.evaluate(params, &system);
  if (!std::isfinite(model.neg_loglik))
    fail(ErrorCode::NonFiniteObjective, "likelihood non-finite at the supplied parameters");
  const auto [mu, sigma2] = profile_mean_var(standardized.y, system);
  model.params.mu = mu;
  model.params.sigma2 = sigma2;
  model.delta = system.delta;
  model.epsilon_star = system.epsilon_star;
  model.chol = system.chol;

  const int n = standardized.n();
  const Eigen::VectorXd resid = standardized.y - mu * Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd half = model.chol.triangularView<Eigen::Lower>().solve(resid);
  model.alpha = model.chol.transpose().triangularView<Eigen::Upper>().solve(half);
  model.chol_inv_one = model.chol.triangularView<Eigen::Lower>().solve(Eigen::VectorXd::Ones(n));
  model.one_m_one = model.chol_inv_one.squaredNorm();
  return model;
}

FittedModel fit_model(const Dataset& data, const ModelConfig& config, std::uint64_t seed, int threads) {
  validate_dataset(data);
  const ModelConfig cfg = config.validated(data.level_counts);
  for (std::size_t j = 0; j < cfg.ordinal_mode.size(); ++j)
    if (cfg.ordinal_mode[j] && !data.ordinal_flags[j])
      fail(ErrorCode::InvalidConfig, "factor " + std::to_string(j + 1) + " is not ordinal in the dataset");

  // standardize responses and normalize inputs to the unit box, both
  // undone transparently at prediction; gives the log-phi box and the
  // random-start ranges a consistent scale
  Dataset std_data = data;
  const double y_mean = data.y.mean();
  const double y_scale = std::sqrt((data.y.array() - y_mean).square().sum() / data.n());
  std_data.y = (data.y.array() - y_mean) / y_scale;
  const int quant_dim = data.quant_dim();
  Eigen::VectorXd u_lo(quant_dim), u_scale(quant_dim);
  for (int i = 0; i < quant_dim; ++i) {
    double lo = data.inputs[0].u[i], hi = lo;
    for (const auto& x : data.inputs) {
      lo = std::min(lo, x.u[i]);
      hi = std::max(hi, x.u[i]);
    }
    u_lo[i] = lo;
    u_scale[i] = hi > lo ? hi - lo : 1.0;
  }
  for (auto& x : std_data.inputs) x.u = (x.u - u_lo).cwiseQuotient(u_scale);

  const int restarts = cfg.restarts;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, restarts));

  struct RestartResult {
    Eigen::VectorXd x;
    double nll = kInf;
  };
  std::vector<RestartResult> results(restarts);

  auto worker_body = [&](int r) {
    NllEvaluator eval(std_data, cfg);
    const ParamLayout layout = ParamLayout::from(cfg, std_data.level_counts, std_data.quant_dim());
    OptProblem prob =
        OptProblem::from(cfg, std_data.level_counts, std_data.quant_dim(),
                         [&eval, layout](const Eigen::VectorXd& x) { return eval(layout.unpack(x)); });
    Rng rng = Rng::split(seed, static_cast<std::uint64_t>(r));
    const Eigen::VectorXd start = random_start(layout, rng);
    try {
      OptimizeResult res = optimize(prob, start);
      results[r].x = res.x;
      results[r].nll = res.nll;
    } catch (const Error&) {
      results[r].nll = kInf;  // this restart is discarded
    }
  };

  if (threads == 1) {
    for (int r = 0; r < restarts; ++r) worker_body(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < restarts; r = next.fetch_add(1)) worker_body(r);
      });
    for (auto& th : pool) th.join();
  }

  int best = -1;
  for (int r = 0; r < restarts; ++r)
    if (std::isfinite(results[r].nll) && (best < 0 || results[r].nll < results[best].nll)) best = r;
  if (best < 0) fail(ErrorCode::AllRestartsFailed, "every restart produced a non-finite objective");

  const ParamLayout layout = ParamLayout::from(cfg, std_data.level_counts, std_data.quant_dim());
  FullParams params = layout.unpack(results[best].x);
  canonicalize_params(cfg, std_data.level_counts, params);
  return finalize_model(std_data, cfg, params, y_mean, y_scale, u_lo, u_scale);
}

}  // namespace mixkrig
