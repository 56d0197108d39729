#ifndef MIXKRIG_SELECT_HPP
#define MIXKRIG_SELECT_HPP

#include <vector>

#include "mixkrig/predict.hpp"
#include "mixkrig/types.hpp"

namespace mixkrig {

enum class LoocvLoss { LogLik, L2 };

/// Closed-form variant: Centered scales and centers by the profile
/// estimates (mu_(i) = y_i - (M(y - mu 1))_i / M_ii, s2_(i) = sigma2 / M_ii);
/// Literal reproduces the uncentered/unscaled textbook expressions.
enum class LoocvForm { Centered, Literal };

/// Mean leave-one-out loss over the training points, from the cached
/// factorization (no refitting).
double loocv_score(const FittedModel& model, LoocvLoss loss, LoocvForm form = LoocvForm::Centered);

/// -2 log-likelihood at the estimates (additive constant restored) plus
/// param_count * log n.
double bic(const FittedModel& model);

struct ModelScore {
  double bic = 0.0;
  double loocv_loglik = 0.0;
  double loocv_l2 = 0.0;
  double avg_weight = 0.0;
};

/// Scores every candidate and fills the BIC averaging weights
/// (min-shifted exp(-BIC/2), normalized).
std::vector<ModelScore> score_models(const std::vector<FittedModel>& models);

/// Argmin selections; ties break to the lowest index.  0-based indices.
int bic_select(const std::vector<double>& bics);
int loocv_select(const std::vector<FittedModel>& models, LoocvLoss loss);

/// BIC-weighted prediction: mean = sum w_k mean_k and the combined spread
/// sum w_k sqrt(sd_k^2 + (mean - mean_k)^2), reported as sd.
Prediction bic_average(const std::vector<FittedModel>& models, const MixedInput& x);

/// Same combination applied to per-model batch predictions (column k holds
/// model k's means/sds).
std::vector<Prediction> combine_bic_average(const std::vector<double>& bics,
                                            const std::vector<std::vector<Prediction>>& per_model);

std::vector<double> bic_average_weights(const std::vector<double>& bics);

}  // namespace mixkrig

#endif  // MIXKRIG_SELECT_HPP
