#ifndef MIXKRIG_PREDICT_HPP
#define MIXKRIG_PREDICT_HPP

#include <Eigen/Dense>
#include <vector>

#include "mixkrig/types.hpp"

namespace mixkrig {

/// Kriging prediction in response units.
struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

/// Posterior mean and standard deviation at a new mixed input:
///   mean = mu + r' M (y - mu 1)
///   var  = sigma2 { 1 - r' M r + (r' M 1 - 1)^2 / (1' M 1) }
/// with M = (R + delta I)^{-1}.  A query coinciding exactly with a training
/// input uses the nugget-inflated self-correlation 1 + delta so that
/// interpolation is preserved when delta > 0; roundoff-negative variances
/// clamp to zero.
Prediction predict_point(const FittedModel& model, const MixedInput& x);

std::vector<Prediction> predict_batch(const FittedModel& model, const std::vector<MixedInput>& points);

/// Relative root-mean-squared error:
/// sqrt( sum (pred - truth)^2 / sum (truth - mean(truth))^2 ).
double rrmse(const Eigen::VectorXd& truth, const Eigen::VectorXd& pred);

}  // namespace mixkrig

#endif  // MIXKRIG_PREDICT_HPP
