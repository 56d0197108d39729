#include "mixkrig/lbfgsb.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace mixkrig {
namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x, double f_at_x, double base_step) {
  const int p = static_cast<int>(x.size());
  Eigen::VectorXd g(p);
  Eigen::VectorXd probe = x;
  for (int i = 0; i < p; ++i) {
    const double h = base_step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (std::isfinite(fp) && std::isfinite(fm))
      g[i] = (fp - fm) / (2.0 * h);
    else if (std::isfinite(fp))
      g[i] = (fp - f_at_x) / h;
    else if (std::isfinite(fm))
      g[i] = (f_at_x - fm) / h;
    else
      g[i] = 0.0;
  }
  return g;
}

LbfgsbResult minimize_box(const Objective& f, const Gradient& grad, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, const LbfgsbOptions& options) {
  const int p = static_cast<int>(x0.size());
  LbfgsbResult res;
  res.x = clamp_box(x0, lower, upper);
  res.f = f(res.x);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) return res;

  Eigen::VectorXd g = grad(res.x, res.f);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
  int stalled = 0;

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const Eigen::VectorXd pg = res.x - clamp_box(res.x - g, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < options.pg_tolerance) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for -H g.
    Eigen::VectorXd d = -g;
    if (!pairs.empty()) {
      std::vector<double> alpha(pairs.size());
      for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
        const auto& [s, y] = pairs[i];
        alpha[i] = s.dot(d) / s.dot(y);
        d -= alpha[i] * y;
      }
      const auto& [s_last, y_last] = pairs.back();
      d *= s_last.dot(y_last) / y_last.squaredNorm();
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& [s, y] = pairs[i];
        const double beta = y.dot(d) / s.dot(y);
        d += (alpha[i] - beta) * s;
      }
    }

    // Zero the direction on coordinates pinned at a bound and pushing out.
    for (int i = 0; i < p; ++i) {
      const bool at_lo = res.x[i] <= lower[i] && d[i] < 0.0;
      const bool at_hi = res.x[i] >= upper[i] && d[i] > 0.0;
      if (at_lo || at_hi) d[i] = 0.0;
    }
    if (d.dot(g) >= -1e-14 * std::max(1.0, g.norm() * d.norm())) {
      d = -pg;  // quasi-Newton direction unusable; steepest projected descent
      pairs.clear();
    }

    // Backtracking Armijo search along the projected path.
    double t = 1.0;
    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::quiet_NaN();
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      x_new = clamp_box(res.x + t * d, lower, upper);
      const Eigen::VectorXd step = x_new - res.x;
      if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.f + options.armijo_c1 * g.dot(step)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no acceptable step; FD-gradient noise floor reached

    if (res.f - f_new < options.stall_tolerance * std::max(1.0, std::abs(res.f))) {
      if (++stalled >= options.stall_limit) {
        res.x = x_new;
        res.f = f_new;
        break;
      }
    } else {
      stalled = 0;
    }

    Eigen::VectorXd g_new = grad(x_new, f_new);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > options.history) pairs.pop_front();
    }
    res.x = x_new;
    res.f = f_new;
    g = std::move(g_new);
  }
  return res;
}

}  // namespace mixkrig
