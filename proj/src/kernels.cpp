#include "mixkrig/kernels.hpp"

#include <cmath>

#include "mixkrig/simd.hpp"

namespace mixkrig {
namespace {

constexpr double kPi = 3.14159265358979323846;

void check_feasible(const QualFactorParams& qp, int a, int l) {
  const int expected = qual_free_count(qp.kind, a, l);
  if (qp.values.size() != expected)
    fail(ErrorCode::DimensionMismatch, "factor parameter vector has length " + std::to_string(qp.values.size()) +
                                           ", expected " + std::to_string(expected));
  switch (qp.kind) {
    case QualKind::IsoOrdinal:
      for (int i = 0; i < qp.values.size(); ++i)
        if (qp.values[i] < 0.0) fail(ErrorCode::ConstraintViolation, "ordinal increments must be non-negative");
      break;
    case QualKind::LinOrdinal: {
      double sum = 0.0;
      for (int i = 0; i < qp.values.size(); ++i) {
        if (qp.values[i] < 0.0) fail(ErrorCode::ConstraintViolation, "ordinal increments must be non-negative");
        sum += qp.values[i];
      }
      if (!(sum < kPi)) fail(ErrorCode::ConstraintViolation, "angle increments must sum below pi");
      break;
    }
    case QualKind::LinNominal: {
      int idx = 0;
      for (int v = 2; v <= a; ++v) {
        const int na = std::min(v - 1, l - 1);
        for (int c = 1; c <= na; ++c, ++idx) {
          const double hi = (c == l - 1 && v > l) ? 2.0 * kPi : kPi;
          const double th = qp.values[idx];
          if (th < 0.0 || th > hi) fail(ErrorCode::ConstraintViolation, "angle outside its identifiability box");
        }
      }
      break;
    }
    case QualKind::IsoNominal: {
      // subdiagonal entries (relaxed to >= 0)
      int idx = 0;
      for (int v = 2; v <= a; ++v) {
        const int nc = std::min(v - 1, l);
        for (int c = 1; c <= nc; ++c, ++idx)
          if (c == v - 1 && v <= l + 1 && qp.values[idx] < 0.0)
            fail(ErrorCode::ConstraintViolation, "subdiagonal latent coordinate must be non-negative");
      }
      break;
    }
  }
}

// Hyperspherical map for one row given its l-1 angles (absent angles are 0):
// z_c = cos(theta_c) prod_{i<c} sin(theta_i) for c < l, z_l = prod sin(theta_i).
void spherical_row(const double* theta, int n_theta, int l, double* z) {
  double sin_prod = 1.0;
  for (int c = 0; c < l - 1; ++c) {
    const double th = c < n_theta ? theta[c] : 0.0;
    z[c] = std::cos(th) * sin_prod;
    sin_prod *= std::sin(th);
  }
  z[l - 1] = sin_prod;
}

}  // namespace

LatentEmbedding embed_unchecked(const QualFactorParams& qp, int a, int l) {
  LatentEmbedding z = LatentEmbedding::Zero(a, l);
  switch (qp.kind) {
    case QualKind::IsoOrdinal: {
      double cum = 0.0;
      z(0, 0) = 0.0;
      for (int v = 2; v <= a; ++v) {
        cum += qp.values[v - 2];
        z(v - 1, 0) = cum;
      }
      break;
    }
    case QualKind::LinOrdinal: {
      double angle = 0.0;
      z(0, 0) = 1.0;
      z(0, 1) = 0.0;
      for (int v = 2; v <= a; ++v) {
        angle += qp.values[v - 2];
        z(v - 1, 0) = std::cos(angle);
        z(v - 1, 1) = std::sin(angle);
      }
      break;
    }
    case QualKind::LinNominal: {
      std::vector<double> theta(static_cast<std::size_t>(std::max(l - 1, 1)), 0.0);
      std::vector<double> row(static_cast<std::size_t>(l));
      int idx = 0;
      for (int v = 1; v <= a; ++v) {
        const int na = v == 1 ? 0 : std::min(v - 1, l - 1);
        for (int c = 0; c < na; ++c, ++idx) theta[c] = qp.values[idx];
        spherical_row(theta.data(), na, l, row.data());
        for (int c = 0; c < l; ++c) z(v - 1, c) = row[c];
      }
      break;
    }
    case QualKind::IsoNominal: {
      int idx = 0;
      for (int v = 2; v <= a; ++v) {
        const int nc = std::min(v - 1, l);
        for (int c = 0; c < nc; ++c, ++idx) z(v - 1, c) = qp.values[idx];
      }
      break;
    }
  }
  return z;
}

LatentEmbedding embed(const QualFactorParams& qp, int a, int l) {
  check_feasible(qp, a, l);
  return embed_unchecked(qp, a, l);
}

double quant_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& u2, const Eigen::VectorXd& phi) {
  if (u.size() != u2.size() || u.size() != phi.size())
    fail(ErrorCode::DimensionMismatch, "quantitative kernel inputs have mismatched lengths");
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double d = u[i] - u2[i];
    s += phi[i] * d * d;
  }
  return simd::exp_neg_scalar(s);
}

double qual_factor_kernel(QualKernel kernel, const Eigen::VectorXd& z, const Eigen::VectorXd& z2) {
  if (z.size() != z2.size()) fail(ErrorCode::DimensionMismatch, "latent vectors have mismatched lengths");
  switch (kernel) {
    case QualKernel::Linear: {
      if (std::abs(z.norm() - 1.0) > 1e-8 || std::abs(z2.norm() - 1.0) > 1e-8)
        fail(ErrorCode::NonUnitNorm, "linear kernel requires unit-norm latent vectors");
      return z.dot(z2);
    }
    case QualKernel::Gaussian: {
      const double d2 = (z - z2).squaredNorm();
      return d2 == 0.0 ? 1.0 : simd::exp_neg_scalar(d2);
    }
    case QualKernel::Exponential: {
      const double d = (z - z2).norm();
      return d == 0.0 ? 1.0 : simd::exp_neg_scalar(d);
    }
  }
  return 0.0;
}

double qual_kernel(const ModelConfig& config, const std::vector<LatentEmbedding>& embeddings,
                   const Eigen::VectorXd& psi, const std::vector<int>& v, const std::vector<int>& v2) {
  const std::size_t J = embeddings.size();
  if (v.size() != J || v2.size() != J)
    fail(ErrorCode::DimensionMismatch, "level tuples do not match the number of factors");
  if (config.structure == Structure::Additive) {
    if (static_cast<std::size_t>(psi.size()) != J) fail(ErrorCode::WeightError, "psi length must equal J");
    double sum = 0.0;
    for (int j = 0; j < psi.size(); ++j) {
      if (psi[j] < -1e-10) fail(ErrorCode::WeightError, "negative additive weight");
      sum += psi[j];
    }
    if (std::abs(sum - 1.0) > 1e-10) fail(ErrorCode::WeightError, "additive weights must sum to 1");
  }
  double prod = 1.0, acc = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double kj =
        qual_factor_kernel(config.qual_kernel, embeddings[j].row(v[j] - 1), embeddings[j].row(v2[j] - 1));
    if (config.structure == Structure::Multiplicative)
      prod *= kj;
    else
      acc += psi[static_cast<int>(j)] * kj;
  }
  if (v == v2) return 1.0;
  return config.structure == Structure::Multiplicative ? prod : acc;
}

double ordinal_chain_check(QualKernel kernel, double tau12, double tau23) {
  switch (kernel) {
    case QualKernel::Linear: {
      if (std::abs(tau12) > 1.0 || std::abs(tau23) > 1.0)
        fail(ErrorCode::RangeError, "linear chain correlations must lie in [-1, 1]");
      return tau12 * tau23 - std::sqrt(1.0 - tau12 * tau12) * std::sqrt(1.0 - tau23 * tau23);
    }
    case QualKernel::Gaussian: {
      if (!(tau12 > 0.0 && tau12 <= 1.0 && tau23 > 0.0 && tau23 <= 1.0))
        fail(ErrorCode::RangeError, "gaussian chain correlations must lie in (0, 1]");
      return tau12 * tau23 * std::exp(-2.0 * std::sqrt(-std::log(tau12)) * std::sqrt(-std::log(tau23)));
    }
    case QualKernel::Exponential:
      fail(ErrorCode::RangeError, "chain relation is defined for the linear and gaussian kernels");
  }
  return 0.0;
}

Eigen::MatrixXd level_kernel_table(QualKernel kernel, const LatentEmbedding& z) {
  const int a = static_cast<int>(z.rows());
  Eigen::MatrixXd tab(a, a);
  for (int v = 0; v < a; ++v) {
    tab(v, v) = 1.0;
    for (int w = 0; w < v; ++w) {
      const double k = qual_factor_kernel(kernel, z.row(v), z.row(w));
      tab(v, w) = k;
      tab(w, v) = k;
    }
  }
  return tab;
}

KernelWorkspace KernelWorkspace::from(const std::vector<MixedInput>& inputs) {
  KernelWorkspace ws;
  ws.n = static_cast<int>(inputs.size());
  if (ws.n == 0) return ws;
  const int I = static_cast<int>(inputs.front().u.size());
  const int J = static_cast<int>(inputs.front().v.size());
  ws.u_cols.assign(I, std::vector<double>(ws.n));
  ws.v_cols.assign(J, std::vector<int>(ws.n));
  for (int k = 0; k < ws.n; ++k) {
    for (int i = 0; i < I; ++i) ws.u_cols[i][k] = inputs[k].u[i];
    for (int j = 0; j < J; ++j) ws.v_cols[j][k] = inputs[k].v[j] - 1;
  }
  return ws;
}

KernelWorkspace KernelWorkspace::from(const Dataset& data) { return from(data.inputs); }

KernelState make_kernel_state(const ModelConfig& config, const FullParams& params,
                              const std::vector<int>& level_counts, bool checked) {
  KernelState st;
  st.structure = config.structure;
  st.phi = params.phi;
  st.psi = params.psi;
  st.tables.reserve(level_counts.size());
  for (std::size_t j = 0; j < level_counts.size(); ++j) {
    const int a = level_counts[j];
    const int l = config.latent_dims[j];
    const LatentEmbedding z = checked ? embed(params.qual[j], a, l) : embed_unchecked(params.qual[j], a, l);
    st.tables.push_back(level_kernel_table(config.qual_kernel, z));
  }
  return st;
}

void correlation_row(const KernelWorkspace& ws, const KernelState& state, const double* u, const int* v,
                     std::size_t count, double* acc, double* q, double* out) {
  const auto& ops = simd::ops();
  for (std::size_t k = 0; k < count; ++k) acc[k] = 0.0;
  for (std::size_t i = 0; i < ws.u_cols.size(); ++i)
    ops.sqdist_accum(acc, ws.u_cols[i].data(), u[i], state.phi[static_cast<int>(i)], count);

  const std::size_t J = ws.v_cols.size();
  if (J == 0) {
    for (std::size_t k = 0; k < count; ++k) q[k] = 1.0;
  } else if (state.structure == Structure::Multiplicative) {
    {
      const Eigen::MatrixXd& tab = state.tables[0];
      const double* row = tab.data() + static_cast<std::ptrdiff_t>(v[0]) * tab.rows();
      const int* codes = ws.v_cols[0].data();
      for (std::size_t k = 0; k < count; ++k) q[k] = row[codes[k]];
    }
    for (std::size_t j = 1; j < J; ++j) {
      const Eigen::MatrixXd& tab = state.tables[j];
      const double* row = tab.data() + static_cast<std::ptrdiff_t>(v[j]) * tab.rows();
      const int* codes = ws.v_cols[j].data();
      for (std::size_t k = 0; k < count; ++k) q[k] *= row[codes[k]];
    }
  } else {
    for (std::size_t k = 0; k < count; ++k) q[k] = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const Eigen::MatrixXd& tab = state.tables[j];
      const double* row = tab.data() + static_cast<std::ptrdiff_t>(v[j]) * tab.rows();
      const int* codes = ws.v_cols[j].data();
      const double w = state.psi[static_cast<int>(j)];
      for (std::size_t k = 0; k < count; ++k) q[k] += w * row[codes[k]];
    }
  }
  ops.mul_exp_neg(out, q, acc, count);
}

Eigen::MatrixXd build_correlation(const KernelWorkspace& ws, const KernelState& state) {
  const int n = ws.n;
  Eigen::MatrixXd r(n, n);
  std::vector<double> acc(n), q(n), row(n);
  std::vector<double> u(ws.u_cols.size());
  std::vector<int> v(ws.v_cols.size());
  for (int i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < u.size(); ++d) u[d] = ws.u_cols[d][i];
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = ws.v_cols[d][i];
    correlation_row(ws, state, u.data(), v.data(), static_cast<std::size_t>(i), acc.data(), q.data(), row.data());
    for (int k = 0; k < i; ++k) {
      r(i, k) = row[k];
      r(k, i) = row[k];
    }
    r(i, i) = 1.0;
  }
  return r;
}

Eigen::MatrixXd build_correlation(const Dataset& data, const ModelConfig& config, const FullParams& params) {
  const ModelConfig cfg = config.validated(data.level_counts);
  const KernelWorkspace ws = KernelWorkspace::from(data);
  const KernelState state = make_kernel_state(cfg, params, data.level_counts);
  return build_correlation(ws, state);
}

}  // namespace mixkrig
