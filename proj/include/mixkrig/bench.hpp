#ifndef MIXKRIG_BENCH_HPP
#define MIXKRIG_BENCH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mixkrig/rng.hpp"
#include "mixkrig/types.hpp"

namespace mixkrig {

enum class Benchmark { Beam, Borehole, OTL, Piston };

Benchmark benchmark_from_string(const std::string& s);
std::string to_string(Benchmark b);

// ---------------------------------------------------------------------------
// Analytic simulators.  All are deterministic and pure; inputs are checked
// against their source ranges.

/// Tip deflection of a cantilever beam; v in 1..6 selects the cross-section
/// (normalized moments of inertia 0.0491, 0.0833, 0.0449, 0.0633, 0.0373,
/// 0.0167).
double eval_beam(double length, double height, int v);

/// Water flow rate through a borehole.
double eval_borehole(double r_w, double r, double t_u, double h_u, double t_l, double h_l, double length,
                     double k_w);

/// Midpoint voltage of an output transformerless push-pull circuit.
double eval_otl(double r_b1, double r_b2, double r_f, double r_c1, double r_c2, double beta);

/// Cycle time of a piston within a cylinder.
double eval_piston(double mass, double area, double v0, double k, double p0, double t_a, double t0);

// ---------------------------------------------------------------------------
// Benchmark description

/// One input factor: a continuous range, or a discretized ordinal factor
/// with explicit level values.
struct BenchFactor {
  std::string name;
  double lo = 0.0, hi = 1.0;          // continuous range (quantitative)
  std::vector<double> levels;         // nonempty marks a qualitative factor
};

struct BenchmarkSpec {
  Benchmark name = Benchmark::OTL;
  std::vector<BenchFactor> quant;
  std::vector<BenchFactor> qual;      // level values strictly increasing

  int quant_dim() const { return static_cast<int>(quant.size()); }
  int qual_dim() const { return static_cast<int>(qual.size()); }
  std::vector<int> level_counts() const;

  /// Simulator value at quantitative coordinates + 1-based level indices.
  double evaluate(const Eigen::VectorXd& u, const std::vector<int>& v) const;

  static BenchmarkSpec make(Benchmark name);
  /// Borehole with configurable discretization degrees q1 (radius) and
  /// q2 (lower head), levels equally spaced over the source ranges.
  static BenchmarkSpec borehole_discretized(int q1, int q2);
};

// ---------------------------------------------------------------------------
// Designs

enum class DesignProvenance { MaximinLHD, Random, External };

struct Design {
  Eigen::MatrixXd quant;            // n x I, problem units
  std::vector<std::vector<int>> qual;  // n rows of 1-based level indices
  DesignProvenance provenance = DesignProvenance::External;
};

/// Latin hypercube at stratum centers, improved by random coordinate swaps
/// that never decrease the minimum pairwise distance (budget
/// 10 n (I+J) proposals), then mapped to problem units with qualitative
/// columns snapped to the equally spaced level grid.
Design maximin_lhd(int n, const BenchmarkSpec& spec, Rng& rng);

/// Same construction over an abstract unit cube (used by the design CLI):
/// returns the n x dims matrix of stratum centers after the swap search.
Eigen::MatrixXd maximin_lhd_unit(int n, int dims, Rng& rng);

Dataset dataset_from_design(const BenchmarkSpec& spec, const Design& design);

/// Uniform test inputs: quantitative uniform in range, levels uniform.
std::vector<MixedInput> uniform_test_points(const BenchmarkSpec& spec, int count, Rng& rng);

// ---------------------------------------------------------------------------
// Experiment pipeline

struct ExperimentOptions {
  int n_train = 80;
  int n_test = 2000;
  int replications = 10;
  std::uint64_t seed = 0;
  int restarts_override = 0;  // > 0 replaces each config's restart count
  int threads = 0;
};

struct ExperimentRow {
  std::string benchmark;
  int replication = 0;
  std::string method;
  std::string structure;  // empty for averaging rows
  std::string kernel;
  std::string latent;
  int ordinal = 0;
  double rrmse = 0.0;
  double bic = 0.0;
  double loocv_loglik = 0.0;
  double loocv_l2 = 0.0;
  double fit_seconds = 0.0;
  bool has_scores = true;
};

/// Default 18-method candidate grid: {Gau, Exp} x {1, 2, ord} and
/// Linear x {2, 3, ord}, each multiplicative and additive.  Ordinal
/// variants appear only when every factor is ordinal-flagged.
std::vector<ModelConfig> default_config_grid(const std::vector<int>& level_counts,
                                             const std::vector<bool>& ordinal_flags);

/// Per replication: maximin LHD training design, simulator responses, one
/// fit per config, RRMSE on a shared uniform test set, scores, plus the
/// four selection/averaging methods.  Deterministic given the seed.
std::vector<ExperimentRow> run_experiment(const BenchmarkSpec& spec, const std::vector<ModelConfig>& configs,
                                          const ExperimentOptions& options);

std::string experiment_csv(const std::vector<ExperimentRow>& rows);

}  // namespace mixkrig

#endif  // MIXKRIG_BENCH_HPP
