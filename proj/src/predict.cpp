#include "mixkrig/predict.hpp"

#include <cmath>

#include "mixkrig/kernels.hpp"

namespace mixkrig {
namespace {

struct PredictContext {
  KernelWorkspace ws;
  KernelState state;
};

PredictContext make_context(const FittedModel& model) {
  return {KernelWorkspace::from(model.train),
          make_kernel_state(model.config, model.params, model.train.level_counts, /*checked=*/false)};
}

Prediction predict_one(const FittedModel& model, const PredictContext& ctx, const MixedInput& x,
                       std::vector<double>& acc, std::vector<double>& q, std::vector<double>& r) {
  const int n = model.train.n();
  if (static_cast<int>(x.u.size()) != model.train.quant_dim() ||
      static_cast<int>(x.v.size()) != model.train.qual_dim())
    fail(ErrorCode::DimensionMismatch, "query point does not match the training dimensions");

  std::vector<int> codes(x.v.size());
  for (std::size_t j = 0; j < x.v.size(); ++j) {
    if (x.v[j] < 1 || x.v[j] > model.train.level_counts[j])
      fail(ErrorCode::LevelOutOfRange, "query level " + std::to_string(x.v[j]) + " outside 1.." +
                                           std::to_string(model.train.level_counts[j]));
    codes[j] = x.v[j] - 1;
  }

  // queries arrive in problem units; the model stores normalized inputs
  Eigen::VectorXd u_query = x.u;
  if (model.u_lo.size() == u_query.size() && model.u_scale.size() == u_query.size())
    u_query = (u_query - model.u_lo).cwiseQuotient(model.u_scale);

  correlation_row(ctx.ws, ctx.state, u_query.data(), codes.data(), static_cast<std::size_t>(n), acc.data(),
                  q.data(), r.data());
  if (model.delta > 0.0) {
    for (int i = 0; i < n; ++i) {
      const MixedInput& t = model.train.inputs[i];
      if (t.v == x.v && t.u == u_query) r[i] = 1.0 + model.delta;
    }
  }

  const Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
  const double mean_std = model.params.mu + rv.dot(model.alpha);

  const Eigen::VectorXd w = model.chol.triangularView<Eigen::Lower>().solve(rv);
  const double rmr = w.squaredNorm();
  const double rm1 = w.dot(model.chol_inv_one);
  double variance = model.params.sigma2 * (1.0 - rmr + (rm1 - 1.0) * (rm1 - 1.0) / model.one_m_one);
  if (variance < 0.0) variance = 0.0;

  Prediction out;
  out.mean = model.y_mean + model.y_scale * mean_std;
  out.sd = model.y_scale * std::sqrt(variance);
  return out;
}

}  // namespace

Prediction predict_point(const FittedModel& model, const MixedInput& x) {
  PredictContext ctx = make_context(model);
  const int n = model.train.n();
  std::vector<double> acc(n), q(n), r(n);
  return predict_one(model, ctx, x, acc, q, r);
}

std::vector<Prediction> predict_batch(const FittedModel& model, const std::vector<MixedInput>& points) {
  PredictContext ctx = make_context(model);
  const int n = model.train.n();
  std::vector<double> acc(n), q(n), r(n);
  std::vector<Prediction> out;
  out.reserve(points.size());
  for (const MixedInput& x : points) out.push_back(predict_one(model, ctx, x, acc, q, r));
  return out;
}

double rrmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
  if (truth.size() == 0 || truth.size() != pred.size())
    fail(ErrorCode::DimensionMismatch, "truth and prediction lengths differ or are empty");
  const double mean = truth.mean();
  const double denom = (truth.array() - mean).square().sum();
  if (!(denom > 0.0)) fail(ErrorCode::DegenerateTruth, "truth vector is constant");
  const double num = (pred - truth).squaredNorm();
  return std::sqrt(num / denom);
}

}  // namespace mixkrig
