#ifndef MIXKRIG_IDENTIFY_HPP
#define MIXKRIG_IDENTIFY_HPP

#include <Eigen/Dense>

#include "mixkrig/types.hpp"

namespace mixkrig {

/// Canonical latent form: under the linear kernel, upper-left-triangular
/// zero pattern with positive diagonal on the first rows; under isotropic
/// kernels, first row at the origin with the shifted pattern.
using CanonicalEmbedding = Eigen::MatrixXd;

/// Universal linear-kernel reparameterization: latent vectors in R^a whose
/// linear Gram matrix reproduces the given PSD unit-diagonal kernel matrix.
/// Eigenvalues in [-1e-8, 0) are clipped; below -1e-8 raises NotPSD.
CanonicalEmbedding to_linear_latents(const Eigen::MatrixXd& kernel_matrix);

/// Canonical form of a unit-row embedding under the linear kernel (QR with
/// positive-diagonal convention on the first l rows).  Requires the first
/// l rows to be full rank.
CanonicalEmbedding canon_linear(const Eigen::MatrixXd& z);

/// Canonical form under isotropic kernels: translate row 1 to the origin,
/// then rotate so the leading difference block is upper triangular with a
/// positive diagonal.  Requires (z_2 - z_1, ..., z_{l+1} - z_1) full rank.
CanonicalEmbedding canon_isotropic(const Eigen::MatrixXd& z);

/// True iff the two embeddings induce the same a x a kernel matrix within
/// 1e-9 (elementwise).
bool equivalent(QualKernel kernel, const Eigen::MatrixXd& z, const Eigen::MatrixXd& z2);

}  // namespace mixkrig

#endif  // MIXKRIG_IDENTIFY_HPP
