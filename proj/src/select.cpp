#include "mixkrig/select.hpp"

#include <cmath>

namespace mixkrig {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

/// diag((R + delta I)^{-1}) via one triangular solve per unit vector.
Eigen::VectorXd inverse_diagonal(const Eigen::MatrixXd& chol_l) {
  const int n = static_cast<int>(chol_l.rows());
  Eigen::VectorXd diag(n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  const auto lower = chol_l.triangularView<Eigen::Lower>();
  for (int i = 0; i < n; ++i) {
    e[i] = 1.0;
    diag[i] = lower.solve(e).squaredNorm();
    e[i] = 0.0;
  }
  return diag;
}

}  // namespace

double loocv_score(const FittedModel& model, LoocvLoss loss, LoocvForm form) {
  const int n = model.train.n();
  const Eigen::VectorXd& y = model.train.y;
  const Eigen::VectorXd m_diag = inverse_diagonal(model.chol);

  Eigen::VectorXd m_resid;  // M (y - mu 1), or M y for the literal form
  double var_scale;
  if (form == LoocvForm::Centered) {
    m_resid = model.alpha;
    var_scale = model.params.sigma2;
  } else {
    const Eigen::VectorXd half = model.chol.triangularView<Eigen::Lower>().solve(y);
    m_resid = model.chol.transpose().triangularView<Eigen::Upper>().solve(half);
    var_scale = 1.0;
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(m_diag[i] > 0.0)) fail(ErrorCode::SingularSystem, "non-positive inverse diagonal entry");
    const double mu_i = y[i] - m_resid[i] / m_diag[i];
    const double s2_i = var_scale / m_diag[i];
    const double err = y[i] - mu_i;
    if (loss == LoocvLoss::L2)
      total += err * err;
    else
      total += 0.5 * (kLog2Pi + std::log(s2_i)) + err * err / (2.0 * s2_i);
  }
  return total / n;
}

double bic(const FittedModel& model) {
  const int n = model.train.n();
  const int p = param_count(model.config, model.train.level_counts, model.train.quant_dim());
  // -2 l(mu, sigma2, ...) with the quadratic form equal to n at the profile
  // estimates and the (n/2) log 2pi constant restored.
  const double minus_2_loglik = n * kLog2Pi + 2.0 * model.neg_loglik + n;
  return minus_2_loglik + p * std::log(static_cast<double>(n));
}

std::vector<double> bic_average_weights(const std::vector<double>& bics) {
  if (bics.empty()) fail(ErrorCode::EmptyCandidates, "no candidate models");
  const double lo = *std::min_element(bics.begin(), bics.end());
  std::vector<double> w(bics.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < bics.size(); ++k) {
    w[k] = std::exp(-(bics[k] - lo) / 2.0);
    sum += w[k];
  }
  for (double& x : w) x /= sum;
  return w;
}

std::vector<ModelScore> score_models(const std::vector<FittedModel>& models) {
  if (models.empty()) fail(ErrorCode::EmptyCandidates, "no candidate models");
  std::vector<ModelScore> scores(models.size());
  std::vector<double> bics(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    scores[k].bic = bic(models[k]);
    scores[k].loocv_loglik = loocv_score(models[k], LoocvLoss::LogLik);
    scores[k].loocv_l2 = loocv_score(models[k], LoocvLoss::L2);
    bics[k] = scores[k].bic;
  }
  const std::vector<double> w = bic_average_weights(bics);
  for (std::size_t k = 0; k < models.size(); ++k) scores[k].avg_weight = w[k];
  return scores;
}

int bic_select(const std::vector<double>& bics) {
  if (bics.empty()) fail(ErrorCode::EmptyCandidates, "no candidate models");
  int best = 0;
  for (std::size_t k = 1; k < bics.size(); ++k)
    if (bics[k] < bics[best]) best = static_cast<int>(k);
  return best;
}

int loocv_select(const std::vector<FittedModel>& models, LoocvLoss loss) {
  if (models.empty()) fail(ErrorCode::EmptyCandidates, "no candidate models");
  int best = 0;
  double best_score = loocv_score(models[0], loss);
  for (std::size_t k = 1; k < models.size(); ++k) {
    const double s = loocv_score(models[k], loss);
    if (s < best_score) {
      best_score = s;
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::vector<Prediction> combine_bic_average(const std::vector<double>& bics,
                                            const std::vector<std::vector<Prediction>>& per_model) {
  const std::vector<double> w = bic_average_weights(bics);
  if (per_model.size() != bics.size()) fail(ErrorCode::DimensionMismatch, "predictions do not match candidates");
  const std::size_t n = per_model.front().size();
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) mean += w[k] * per_model[k][i].mean;
    double spread = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double dev = mean - per_model[k][i].mean;
      spread += w[k] * std::sqrt(per_model[k][i].sd * per_model[k][i].sd + dev * dev);
    }
    out[i] = {mean, spread};
  }
  return out;
}

Prediction bic_average(const std::vector<FittedModel>& models, const MixedInput& x) {
  if (models.empty()) fail(ErrorCode::EmptyCandidates, "no candidate models");
  std::vector<double> bics(models.size());
  std::vector<std::vector<Prediction>> per_model(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) {
    bics[k] = bic(models[k]);
    per_model[k] = {predict_point(models[k], x)};
  }
  return combine_bic_average(bics, per_model).front();
}

}  // namespace mixkrig
