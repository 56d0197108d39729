#ifndef MIXKRIG_FIT_HPP
#define MIXKRIG_FIT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "mixkrig/likelihood.hpp"
#include "mixkrig/rng.hpp"
#include "mixkrig/types.hpp"

namespace mixkrig {

/// Free-parameter vector layout: (log phi | factor blocks | psi logits).
/// phi lives on the log scale with box [log 1e-6, log 1e6]; additive weights
/// are softmax logits (last weight pinned at logit 0, hence J-1 entries).
struct ParamLayout {
  struct Block {
    QualKind kind;
    int a = 0, l = 0;
    int offset = 0, count = 0;
  };
  int quant_dim = 0;
  std::vector<Block> factors;
  int psi_offset = -1;
  int psi_count = 0;
  int total = 0;

  static ParamLayout from(const ModelConfig& config, const std::vector<int>& level_counts, int quant_dim);

  Eigen::VectorXd pack(const FullParams& params) const;

  /// Inverse of pack; mu/sigma2 are left at their defaults (profiled later).
  FullParams unpack(const Eigen::VectorXd& x) const;
};

/// Box-constrained problem: per-coordinate bounds matching the
/// identifiability regions, the LinOrdinal sum-below-pi constraints handled
/// by an adaptive log barrier, and the objective handle.
struct OptProblem {
  ParamLayout layout;
  Eigen::VectorXd lower, upper;
  std::vector<ParamLayout::Block> barrier_blocks;  // LinOrdinal blocks
  std::function<double(const Eigen::VectorXd&)> objective;

  static OptProblem from(const ModelConfig& config, const std::vector<int>& level_counts, int quant_dim,
                         std::function<double(const Eigen::VectorXd&)> objective);
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double nll = 0.0;
  int iterations = 0;
  int evaluations = 0;
};

/// Quasi-Newton minimization from a strictly feasible start; LinOrdinal sum
/// constraints are enforced with a decreasing barrier schedule
/// mu in {1e-1 ... 1e-5}, each stage warm-starting the next.  The returned
/// point satisfies every sum constraint with slack >= 1e-6.
OptimizeResult optimize(const OptProblem& problem, const Eigen::VectorXd& start);

/// Uniform draw inside the feasible region (see random_start in the docs):
/// angles uniform on their boxes, LinOrdinal increments uniform on
/// [0, pi/a_j], IsoOrdinal increments uniform on [0, 1], IsoNominal
/// coordinates standard normal with |.| on the subdiagonal, log phi uniform
/// on [log 0.01, log 10], psi logits standard normal.
Eigen::VectorXd random_start(const ParamLayout& layout, Rng& rng);

/// Maximum-likelihood fit with config.restarts independent multistarts;
/// deterministic given (dataset, config, seed).  threads caps restart
/// parallelism (0 = hardware concurrency).
FittedModel fit_model(const Dataset& data, const ModelConfig& config, std::uint64_t seed, int threads = 0);

/// Builds a FittedModel around externally supplied parameters (no
/// optimization); shared by fit_model's finalization and tests.  The
/// dataset is expected in internal coordinates (standardized responses,
/// normalized inputs); empty u transforms mean identity.
FittedModel finalize_model(const Dataset& standardized, const ModelConfig& config, const FullParams& params,
                           double y_mean, double y_scale, const Eigen::VectorXd& u_lo = {},
                           const Eigen::VectorXd& u_scale = {});

}  // namespace mixkrig

#endif  // MIXKRIG_FIT_HPP
