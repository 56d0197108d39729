#ifndef MIXKRIG_LIKELIHOOD_HPP
#define MIXKRIG_LIKELIHOOD_HPP

#include <Eigen/Dense>
#include <vector>

#include "mixkrig/kernels.hpp"
#include "mixkrig/types.hpp"

namespace mixkrig {

/// Training correlation system: R with nugget delta chosen on the threshold
/// grid, its Cholesky factor and log-determinant.
struct CorrelationSystem {
  Eigen::MatrixXd r;       // original correlation matrix (unit diagonal)
  double delta = 0.0;      // max(0, epsilon_star - lambda_min(R))
  double epsilon_star = 0.0;
  double lambda_min = 0.0;
  Eigen::MatrixXd chol;    // lower factor of R + delta I
  double logdet = 0.0;     // log |R + delta I|
};

/// Profile estimates given a factorized system:
///   mu_hat = (1' M 1)^{-1} 1' M y,  sigma2_hat = (y - mu 1)' M (y - mu 1) / n
/// with M = (R + delta I)^{-1}, both via triangular solves.
std::pair<double, double> profile_mean_var(const Eigen::VectorXd& y, const CorrelationSystem& system);

/// Nugget selection: lambda_min via a symmetric eigensolve, then for every
/// grid threshold epsilon the candidate delta = max(0, epsilon - lambda_min)
/// is scored by the profile NLL of R + delta I; the winner is returned with
/// ties broken toward the smallest epsilon.
CorrelationSystem condition_nugget(const Eigen::MatrixXd& r, const std::vector<double>& grid,
                                   const Eigen::VectorXd& y);

/// Profile negative log-likelihood 0.5 { n log sigma2_hat + log |R + delta I| }
/// with mu and sigma2 profiled out and the nugget chosen as above.
double profile_nll(const Dataset& data, const ModelConfig& config, const FullParams& params,
                   CorrelationSystem* system_out = nullptr);

/// Reusable evaluator for the optimizer's hot path: owns all working
/// buffers, so independent instances may run in parallel.
class NllEvaluator {
 public:
  NllEvaluator(Dataset data, ModelConfig config);

  int n() const { return data_.n(); }
  const Dataset& data() const { return data_; }
  const ModelConfig& config() const { return config_; }

  /// NLL for the given kernel parameters; +inf when the evaluation fails
  /// numerically (callers treat non-finite as a rejected point).
  double operator()(const FullParams& params);

  /// As above but also captures the winning system.
  double evaluate(const FullParams& params, CorrelationSystem* system_out);

 private:
  Dataset data_;
  ModelConfig config_;
  KernelWorkspace ws_;
  double grid_max_ = 0.0;
  Eigen::MatrixXd r_, work_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  std::vector<double> acc_, q_, row_, u_buf_;
  std::vector<int> v_buf_;
};

/// Full log-likelihood with explicit mean and variance (test oracle for the
/// profile identities): -0.5 { n log sigma2 + log|R+dI| + (y-mu)'M(y-mu)/sigma2 },
/// without the -(n/2) log 2pi constant.
double loglik_at(const Eigen::VectorXd& y, const CorrelationSystem& system, double mu, double sigma2);

}  // namespace mixkrig

#endif  // MIXKRIG_LIKELIHOOD_HPP
