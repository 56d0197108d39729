#include "mixkrig/likelihood.hpp"

#include <cmath>
#include <limits>

namespace mixkrig {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lower_logdet(const Eigen::MatrixXd& chol) {
  double s = 0.0;
  for (int i = 0; i < chol.rows(); ++i) s += std::log(chol(i, i));
  return 2.0 * s;
}

/// Profile NLL of a factorized system; L is the lower Cholesky factor.
double profile_nll_from_chol(const Eigen::MatrixXd& chol_l, const Eigen::VectorXd& y, double* mu_out = nullptr,
                             double* sigma2_out = nullptr) {
  const int n = static_cast<int>(y.size());
  const auto lower = chol_l.triangularView<Eigen::Lower>();
  Eigen::VectorXd wy = lower.solve(y);
  Eigen::VectorXd w1 = lower.solve(Eigen::VectorXd::Ones(n));
  const double denom = w1.squaredNorm();  // 1' M 1
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    if (mu_out) *mu_out = std::numeric_limits<double>::quiet_NaN();
    if (sigma2_out) *sigma2_out = std::numeric_limits<double>::quiet_NaN();
    return kInf;
  }
  const double mu = w1.dot(wy) / denom;
  const double quad = (wy - mu * w1).squaredNorm();
  const double sigma2 = quad / n;
  if (mu_out) *mu_out = mu;
  if (sigma2_out) *sigma2_out = sigma2;
  if (!(sigma2 > 0.0)) return kInf;
  return 0.5 * (n * std::log(sigma2) + lower_logdet(chol_l));
}

}  // namespace

std::pair<double, double> profile_mean_var(const Eigen::VectorXd& y, const CorrelationSystem& system) {
  if (system.chol.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "system size does not match responses");
  double mu = 0.0, sigma2 = 0.0;
  const double nll = profile_nll_from_chol(system.chol, y, &mu, &sigma2);
  if (!std::isfinite(mu) || !std::isfinite(sigma2)) fail(ErrorCode::SingularSystem, "profile estimates diverged");
  (void)nll;  // sigma2 == 0 is legitimate here (constant response)
  return {mu, sigma2};
}

CorrelationSystem condition_nugget(const Eigen::MatrixXd& r, const std::vector<double>& grid,
                                   const Eigen::VectorXd& y) {
  if (r.rows() != r.cols() || r.rows() != y.size())
    fail(ErrorCode::DimensionMismatch, "correlation matrix and responses disagree");
  if (grid.empty()) fail(ErrorCode::InvalidConfig, "nugget grid must be nonempty");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) fail(ErrorCode::EigenFailure, "eigensolve of the correlation matrix failed");
  const double lambda_min = eig.eigenvalues().minCoeff();

  // Ascending sweep so that equal-NLL candidates resolve to the smallest
  // epsilon; identical deltas share one factorization.
  std::vector<double> ordered = grid;
  std::sort(ordered.begin(), ordered.end());

  CorrelationSystem best;
  best.r = r;
  best.lambda_min = lambda_min;
  double best_nll = kInf;
  bool found = false;
  double last_delta = -1.0, last_nll = kInf;
  Eigen::MatrixXd last_chol;

  Eigen::MatrixXd work(r.rows(), r.cols());
  for (double eps : ordered) {
    const double delta = std::max(0.0, eps - lambda_min);
    double nll;
    Eigen::MatrixXd* chol_src = nullptr;
    if (delta == last_delta) {
      nll = last_nll;
      chol_src = &last_chol;
    } else {
      work = r;
      work.diagonal().array() += delta;
      Eigen::LLT<Eigen::MatrixXd> llt(work);
      if (llt.info() != Eigen::Success) {
        last_delta = delta;
        last_nll = kInf;
        continue;
      }
      last_chol = llt.matrixL();
      nll = profile_nll_from_chol(last_chol, y);
      last_delta = delta;
      last_nll = nll;
      chol_src = &last_chol;
    }
    if (nll < best_nll) {
      best_nll = nll;
      best.delta = delta;
      best.epsilon_star = eps;
      best.chol = *chol_src;
      found = true;
    }
  }
  if (!found) fail(ErrorCode::EigenFailure, "no nugget candidate produced a positive definite system");
  best.logdet = lower_logdet(best.chol);
  return best;
}

double profile_nll(const Dataset& data, const ModelConfig& config, const FullParams& params,
                   CorrelationSystem* system_out) {
  NllEvaluator eval(data, config);
  return eval.evaluate(params, system_out);
}

NllEvaluator::NllEvaluator(Dataset data, ModelConfig config)
    : data_(std::move(data)), config_(config.validated(data_.level_counts)), ws_(KernelWorkspace::from(data_)) {
  const int n = data_.n();
  grid_max_ = *std::max_element(config_.nugget_grid.begin(), config_.nugget_grid.end());
  r_.resize(n, n);
  work_.resize(n, n);
  acc_.resize(n);
  q_.resize(n);
  row_.resize(n);
  u_buf_.resize(ws_.u_cols.size());
  v_buf_.resize(ws_.v_cols.size());
}

double NllEvaluator::operator()(const FullParams& params) { return evaluate(params, nullptr); }

double NllEvaluator::evaluate(const FullParams& params, CorrelationSystem* system_out) {
  KernelState state;
  try {
    state = make_kernel_state(config_, params, data_.level_counts, /*checked=*/false);
  } catch (const Error&) {
    return kInf;
  }

  const int n = data_.n();
  for (int i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < u_buf_.size(); ++d) u_buf_[d] = ws_.u_cols[d][i];
    for (std::size_t d = 0; d < v_buf_.size(); ++d) v_buf_[d] = ws_.v_cols[d][i];
    correlation_row(ws_, state, u_buf_.data(), v_buf_.data(), static_cast<std::size_t>(i), acc_.data(), q_.data(),
                    row_.data());
    for (int k = 0; k < i; ++k) {
      r_(i, k) = row_[k];
      r_(k, i) = row_[k];
    }
    r_(i, i) = 1.0;
  }
  if (!r_.allFinite()) return kInf;

  double best_nll = kInf;
  double best_delta = 0.0, best_eps = 0.0;
  double lambda_min = std::numeric_limits<double>::quiet_NaN();

  // Cheap certificate first: if R - gmax I factors, every threshold in the
  // grid yields a zero nugget and the same system, so the tie rule picks the
  // smallest epsilon without an eigensolve.  Otherwise fall back to the
  // lambda_min-based grid sweep.
  bool shortcut = false;
  if (!system_out) {
    work_ = r_;
    work_.diagonal().array() -= grid_max_;
    llt_.compute(work_);
    if (llt_.info() == Eigen::Success) {
      llt_.compute(r_);
      if (llt_.info() == Eigen::Success) {
        best_nll = profile_nll_from_chol(llt_.matrixLLT(), data_.y);
        best_delta = 0.0;
        best_eps = *std::min_element(config_.nugget_grid.begin(), config_.nugget_grid.end());
        shortcut = true;
      }
    }
  }

  if (!shortcut) {
    eig_.compute(r_, Eigen::EigenvaluesOnly);
    if (eig_.info() != Eigen::Success) return kInf;
    lambda_min = eig_.eigenvalues().minCoeff();

    std::vector<double> ordered = config_.nugget_grid;
    std::sort(ordered.begin(), ordered.end());

    double last_delta = -1.0, last_nll = kInf;
    for (double eps : ordered) {
      const double delta = std::max(0.0, eps - lambda_min);
      double nll;
      if (delta == last_delta) {
        nll = last_nll;
      } else {
        work_ = r_;
        work_.diagonal().array() += delta;
        llt_.compute(work_);
        nll = llt_.info() == Eigen::Success ? profile_nll_from_chol(llt_.matrixLLT(), data_.y) : kInf;
        last_delta = delta;
        last_nll = nll;
      }
      if (nll < best_nll) {
        best_nll = nll;
        best_delta = delta;
        best_eps = eps;
      }
    }
  }
  if (!std::isfinite(best_nll)) return kInf;

  if (system_out) {
    system_out->r = r_;
    system_out->lambda_min = lambda_min;  // the capture path always ran the eigensolve
    system_out->delta = best_delta;
    system_out->epsilon_star = best_eps;
    work_ = r_;
    work_.diagonal().array() += best_delta;
    llt_.compute(work_);
    if (llt_.info() != Eigen::Success) fail(ErrorCode::EigenFailure, "refactorization of the winning system failed");
    system_out->chol = llt_.matrixL();
    system_out->logdet = lower_logdet(system_out->chol);
  }
  return best_nll;
}

double loglik_at(const Eigen::VectorXd& y, const CorrelationSystem& system, double mu, double sigma2) {
  const int n = static_cast<int>(y.size());
  const Eigen::VectorXd w = system.chol.triangularView<Eigen::Lower>().solve(y - mu * Eigen::VectorXd::Ones(n));
  return -0.5 * (n * std::log(sigma2) + system.logdet + w.squaredNorm() / sigma2);
}

}  // namespace mixkrig
