#include "mixkrig/identify.hpp"

#include <cmath>

#include "mixkrig/kernels.hpp"

namespace mixkrig {
namespace {

/// Cholesky of a PSD matrix that may be rank deficient: a zero pivot zeroes
/// its column (valid for PSD inputs, where the residual column vanishes with
/// the pivot).
Eigen::MatrixXd semidefinite_cholesky_lower(const Eigen::MatrixXd& k, double pivot_tol) {
  const int a = static_cast<int>(k.rows());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(a, a);
  for (int j = 0; j < a; ++j) {
    double d = k(j, j);
    for (int m = 0; m < j; ++m) d -= l(j, m) * l(j, m);
    if (d <= pivot_tol) continue;  // column stays zero
    const double root = std::sqrt(d);
    l(j, j) = root;
    for (int i = j + 1; i < a; ++i) {
      double s = k(i, j);
      for (int m = 0; m < j; ++m) s -= l(i, m) * l(j, m);
      l(i, j) = s / root;
    }
  }
  return l;
}

/// QR with the positive-diagonal convention: negative R diagonal entries
/// flip the corresponding row of R and column of Q; a vanishing diagonal
/// means the input was rank deficient.
void positive_qr(const Eigen::MatrixXd& a, Eigen::MatrixXd& q, Eigen::MatrixXd& r) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  q = qr.householderQ();
  r = qr.matrixQR().triangularView<Eigen::Upper>();
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < r.rows(); ++i) {
    if (std::abs(r(i, i)) < 1e-10 * scale)
      fail(ErrorCode::RankDeficient, "leading block is rank deficient");
    if (r(i, i) < 0.0) {
      r.row(i) = -r.row(i);
      q.col(i) = -q.col(i);
    }
  }
}

}  // namespace

CanonicalEmbedding to_linear_latents(const Eigen::MatrixXd& kernel_matrix) {
  const int a = static_cast<int>(kernel_matrix.rows());
  if (kernel_matrix.cols() != a) fail(ErrorCode::DimensionMismatch, "kernel matrix must be square");
  if ((kernel_matrix - kernel_matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    fail(ErrorCode::NotPSD, "kernel matrix must be symmetric");

  // Fast path: strictly positive definite inputs factor directly.
  Eigen::LLT<Eigen::MatrixXd> llt(kernel_matrix);
  if (llt.info() == Eigen::Success) return Eigen::MatrixXd(llt.matrixL());

  // Fallback: clip the tiny negative eigenvalues roundoff produces, then
  // run the semidefinite factorization.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel_matrix);
  if (eig.info() != Eigen::Success) fail(ErrorCode::EigenFailure, "eigendecomposition failed");
  const double lambda_min = eig.eigenvalues().minCoeff();
  if (lambda_min < -1e-8) fail(ErrorCode::NotPSD, "smallest eigenvalue " + std::to_string(lambda_min));
  Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd rebuilt =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return semidefinite_cholesky_lower(rebuilt, 4e-15 * a);
}

CanonicalEmbedding canon_linear(const Eigen::MatrixXd& z) {
  const int a = static_cast<int>(z.rows());
  const int l = static_cast<int>(z.cols());
  if (a < l) fail(ErrorCode::DimensionMismatch, "need at least l rows");
  for (int v = 0; v < a; ++v)
    if (std::abs(z.row(v).norm() - 1.0) > 1e-8)
      fail(ErrorCode::NonUnitNorm, "row " + std::to_string(v + 1) + " is not unit norm");

  Eigen::MatrixXd q, r;
  positive_qr(z.topRows(l).transpose(), q, r);
  CanonicalEmbedding w(a, l);
  w.topRows(l) = r.transpose();
  if (a > l) w.bottomRows(a - l) = z.bottomRows(a - l) * q;
  return w;
}

CanonicalEmbedding canon_isotropic(const Eigen::MatrixXd& z) {
  const int a = static_cast<int>(z.rows());
  const int l = static_cast<int>(z.cols());
  if (a < l + 1) fail(ErrorCode::DimensionMismatch, "need at least l + 1 rows");

  Eigen::MatrixXd diffs(l, l);
  for (int v = 0; v < l; ++v) diffs.col(v) = (z.row(v + 1) - z.row(0)).transpose();
  Eigen::MatrixXd q, r;
  positive_qr(diffs, q, r);
  CanonicalEmbedding w = CanonicalEmbedding::Zero(a, l);
  w.block(1, 0, l, l) = r.transpose();
  for (int v = l + 1; v < a; ++v) w.row(v) = (z.row(v) - z.row(0)) * q;
  return w;
}

bool equivalent(QualKernel kernel, const Eigen::MatrixXd& z, const Eigen::MatrixXd& z2) {
  if (z.rows() != z2.rows()) fail(ErrorCode::DimensionMismatch, "embeddings must share the level count");
  const int a = static_cast<int>(z.rows());
  // Latent dimensions may differ between the two parameterizations; pad the
  // narrower one with zero coordinates, which changes no kernel value.
  const int l = static_cast<int>(std::max(z.cols(), z2.cols()));
  Eigen::MatrixXd za = Eigen::MatrixXd::Zero(a, l);
  Eigen::MatrixXd zb = Eigen::MatrixXd::Zero(a, l);
  za.leftCols(z.cols()) = z;
  zb.leftCols(z2.cols()) = z2;
  // linear values are raw inner products here (no unit-norm requirement:
  // the comparison covers general latent parameterizations)
  auto value = [kernel](const Eigen::RowVectorXd& p, const Eigen::RowVectorXd& q) {
    switch (kernel) {
      case QualKernel::Linear: return p.dot(q);
      case QualKernel::Gaussian: return std::exp(-(p - q).squaredNorm());
      case QualKernel::Exponential: return std::exp(-(p - q).norm());
    }
    return 0.0;
  };
  for (int v = 0; v < a; ++v)
    for (int w = 0; w < a; ++w)
      if (std::abs(value(za.row(v), za.row(w)) - value(zb.row(v), zb.row(w))) > 1e-9) return false;
  return true;
}

}  // namespace mixkrig
