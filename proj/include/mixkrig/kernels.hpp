#ifndef MIXKRIG_KERNELS_HPP
#define MIXKRIG_KERNELS_HPP

#include <Eigen/Dense>
#include <vector>

#include "mixkrig/types.hpp"

namespace mixkrig {

/// Latent embedding of one qualitative factor: row v (0-based storage for
/// level v+1) is the latent vector of level v+1, an a x l matrix.
using LatentEmbedding = Eigen::MatrixXd;

/// Maps free factor parameters to latent vectors (Lin* rows are unit norm).
/// Validates the feasible region first; throws ConstraintViolation.
LatentEmbedding embed(const QualFactorParams& qp, int a, int l);

/// Same map without feasibility checks; used inside the optimizer where
/// finite-difference probes may sit marginally outside the region.
LatentEmbedding embed_unchecked(const QualFactorParams& qp, int a, int l);

/// exp(-sum_i phi_i (u_i - u2_i)^2)
double quant_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& u2, const Eigen::VectorXd& phi);

/// Linear: z . z2 (unit-norm inputs required); Gaussian: exp(-|z-z2|^2);
/// Exponential: exp(-|z-z2|).  Coincident inputs give exactly 1.
double qual_factor_kernel(QualKernel kernel, const Eigen::VectorXd& z, const Eigen::VectorXd& z2);

/// Combined qualitative kernel over all factors at level tuples v, v2
/// (1-based levels).  psi is used only for additive structures.
double qual_kernel(const ModelConfig& config, const std::vector<LatentEmbedding>& embeddings,
                   const Eigen::VectorXd& psi, const std::vector<int>& v, const std::vector<int>& v2);

/// Implied tau_13 of a 3-level ordinal chain from tau_12 and tau_23.
/// The Gaussian branch follows the embedding identity
///   tau_13 = tau_12 tau_23 exp(-2 sqrt(-log tau_12) sqrt(-log tau_23)).
double ordinal_chain_check(QualKernel kernel, double tau12, double tau23);

/// Level-correlation table for one factor: a x a with exact unit diagonal.
Eigen::MatrixXd level_kernel_table(QualKernel kernel, const LatentEmbedding& z);

// ---------------------------------------------------------------------------
// Batched correlation assembly (the SIMD-dispatched hot path).

/// Column-major view of a dataset's inputs for row-at-a-time assembly.
struct KernelWorkspace {
  int n = 0;
  std::vector<std::vector<double>> u_cols;  // I columns of length n
  std::vector<std::vector<int>> v_cols;     // J columns, 0-based level codes

  static KernelWorkspace from(const Dataset& data);
  static KernelWorkspace from(const std::vector<MixedInput>& inputs);
};

/// Per-evaluation kernel state: phi plus one level table per factor.
struct KernelState {
  Structure structure = Structure::Multiplicative;
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;
  std::vector<Eigen::MatrixXd> tables;
};

KernelState make_kernel_state(const ModelConfig& config, const FullParams& params,
                              const std::vector<int>& level_counts, bool checked = true);

/// out[k] = K((u, v), point k of ws) for k in [0, count).  `u` holds the
/// query's quantitative coordinates, `v` its 0-based level codes.
/// acc/q are caller-provided scratch of length >= count.
void correlation_row(const KernelWorkspace& ws, const KernelState& state, const double* u, const int* v,
                     std::size_t count, double* acc, double* q, double* out);

/// Builds the n x n training correlation matrix (exact unit diagonal,
/// exactly symmetric by construction).
Eigen::MatrixXd build_correlation(const Dataset& data, const ModelConfig& config, const FullParams& params);

Eigen::MatrixXd build_correlation(const KernelWorkspace& ws, const KernelState& state);

}  // namespace mixkrig

#endif  // MIXKRIG_KERNELS_HPP
