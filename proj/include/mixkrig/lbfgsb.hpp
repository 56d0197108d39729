#ifndef MIXKRIG_LBFGSB_HPP
#define MIXKRIG_LBFGSB_HPP

#include <Eigen/Dense>
#include <functional>

namespace mixkrig {

/// Box-constrained quasi-Newton minimization: limited-memory BFGS directions
/// restricted to the free variables, backtracking line search along the
/// projected path.  Bounds may be +-inf.
struct LbfgsbOptions {
  int max_iterations = 500;
  double pg_tolerance = 1e-5;  // stop when ||P(x - g) - x||_inf falls below
  int history = 8;
  int max_backtracks = 40;
  double armijo_c1 = 1e-4;
  // Secondary stall stop: finite-difference gradients bottom out near the
  // objective's noise floor, where Armijo keeps accepting meaningless steps;
  // stop after `stall_limit` consecutive improvements below
  // stall_tolerance * max(1, |f|).
  double stall_tolerance = 1e-9;
  int stall_limit = 3;
};

struct LbfgsbResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;  // projected-gradient test met (vs. stall / budget)
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double f_at_x)>;

LbfgsbResult minimize_box(const Objective& f, const Gradient& grad, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const LbfgsbOptions& options = {});

/// Central finite-difference gradient with per-coordinate step
/// h_i = base_step * max(1, |x_i|); falls back to a one-sided difference
/// when one probe is non-finite (e.g. across a barrier wall).
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double f_at_x,
                                 double base_step = 1e-6);

}  // namespace mixkrig

#endif  // MIXKRIG_LBFGSB_HPP
