#include "mixkrig/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mixkrig {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::DegenerateResponse: return "DegenerateResponse";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::NonUnitNorm: return "NonUnitNorm";
    case ErrorCode::WeightError: return "WeightError";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::AllRestartsFailed: return "AllRestartsFailed";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::DegenerateTruth: return "DegenerateTruth";
    case ErrorCode::NegativeDiscriminant: return "NegativeDiscriminant";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "UnknownError";
}

bool Error::is_input_error() const {
  switch (code_) {
    case ErrorCode::EigenFailure:
    case ErrorCode::SingularSystem:
    case ErrorCode::NonFiniteObjective:
    case ErrorCode::AllRestartsFailed:
    case ErrorCode::NegativeDiscriminant:
      return false;
    default:
      return true;
  }
}

std::string to_string(Structure s) {
  return s == Structure::Multiplicative ? "multiplicative" : "additive";
}

std::string to_string(QualKernel k) {
  switch (k) {
    case QualKernel::Gaussian: return "gaussian";
    case QualKernel::Exponential: return "exponential";
    case QualKernel::Linear: return "linear";
  }
  return "?";
}

std::string to_string(QualKind k) {
  switch (k) {
    case QualKind::IsoNominal: return "iso_nominal";
    case QualKind::IsoOrdinal: return "iso_ordinal";
    case QualKind::LinNominal: return "lin_nominal";
    case QualKind::LinOrdinal: return "lin_ordinal";
  }
  return "?";
}

Structure structure_from_string(const std::string& s) {
  if (s == "multiplicative" || s == "multi") return Structure::Multiplicative;
  if (s == "additive" || s == "add") return Structure::Additive;
  fail(ErrorCode::ParseError, "unknown structure '" + s + "'");
}

QualKernel qual_kernel_from_string(const std::string& s) {
  if (s == "gaussian" || s == "gau") return QualKernel::Gaussian;
  if (s == "exponential" || s == "exp") return QualKernel::Exponential;
  if (s == "linear") return QualKernel::Linear;
  fail(ErrorCode::ParseError, "unknown qualitative kernel '" + s + "'");
}

QualKind qual_kind_from_string(const std::string& s) {
  if (s == "iso_nominal") return QualKind::IsoNominal;
  if (s == "iso_ordinal") return QualKind::IsoOrdinal;
  if (s == "lin_nominal") return QualKind::LinNominal;
  if (s == "lin_ordinal") return QualKind::LinOrdinal;
  fail(ErrorCode::ParseError, "unknown factor kind '" + s + "'");
}

QualKind qual_kind_for(QualKernel kernel, bool ordinal) {
  if (kernel == QualKernel::Linear) return ordinal ? QualKind::LinOrdinal : QualKind::LinNominal;
  return ordinal ? QualKind::IsoOrdinal : QualKind::IsoNominal;
}

void validate_dataset(const Dataset& d) {
  const int n = d.n();
  if (n < 2) fail(ErrorCode::DimensionMismatch, "need at least 2 observations, got " + std::to_string(n));
  if (d.y.size() != n)
    fail(ErrorCode::DimensionMismatch,
         "responses (" + std::to_string(d.y.size()) + ") do not match inputs (" + std::to_string(n) + ")");
  const int I = d.quant_dim();
  const int J = d.qual_dim();
  if (static_cast<int>(d.ordinal_flags.size()) != J)
    fail(ErrorCode::DimensionMismatch, "ordinal_flags length does not match level_counts");
  for (int j = 0; j < J; ++j)
    if (d.level_counts[j] < 2)
      fail(ErrorCode::InvalidConfig, "factor " + std::to_string(j + 1) + " needs at least 2 levels");
  for (int i = 0; i < n; ++i) {
    const MixedInput& x = d.inputs[i];
    if (static_cast<int>(x.u.size()) != I || static_cast<int>(x.v.size()) != J)
      fail(ErrorCode::DimensionMismatch, "point " + std::to_string(i + 1) + " has inconsistent dimensions");
    for (int j = 0; j < J; ++j)
      if (x.v[j] < 1 || x.v[j] > d.level_counts[j])
        fail(ErrorCode::LevelOutOfRange, "point " + std::to_string(i + 1) + ", factor " + std::to_string(j + 1) +
                                             ": level " + std::to_string(x.v[j]) + " outside 1.." +
                                             std::to_string(d.level_counts[j]));
  }
  const double spread = d.y.maxCoeff() - d.y.minCoeff();
  if (!(spread > 0.0)) fail(ErrorCode::DegenerateResponse, "all responses are equal");
}

std::vector<double> ModelConfig::default_nugget_grid() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
}

ModelConfig ModelConfig::validated(const std::vector<int>& level_counts) const {
  ModelConfig out = *this;
  const int J = static_cast<int>(level_counts.size());
  if (out.ordinal_mode.empty()) out.ordinal_mode.assign(J, false);
  if (static_cast<int>(out.ordinal_mode.size()) != J)
    fail(ErrorCode::InvalidConfig, "ordinal_mode length does not match the number of factors");
  if (out.latent_dims.empty())
    out.latent_dims.assign(J, out.qual_kernel == QualKernel::Linear ? 2 : 1);
  if (static_cast<int>(out.latent_dims.size()) != J)
    fail(ErrorCode::InvalidConfig, "latent_dims length does not match the number of factors");
  for (int j = 0; j < J; ++j) {
    if (out.ordinal_mode[j]) {
      // ordinal rows have a fixed latent dimension
      out.latent_dims[j] = out.qual_kernel == QualKernel::Linear ? 2 : 1;
    }
    const int a = level_counts[j];
    const int l = out.latent_dims[j];
    if (l < 1 || l > a)
      fail(ErrorCode::InvalidConfig, "factor " + std::to_string(j + 1) + ": latent dim " + std::to_string(l) +
                                         " outside 1.." + std::to_string(a));
    if (out.qual_kernel == QualKernel::Linear && !out.ordinal_mode[j] && l < 2)
      fail(ErrorCode::InvalidConfig, "linear nominal factors need latent dim >= 2");
  }
  if (out.nugget_grid.empty()) fail(ErrorCode::InvalidConfig, "nugget grid must be nonempty");
  for (double eps : out.nugget_grid)
    if (!(eps > 0.0)) fail(ErrorCode::InvalidConfig, "nugget thresholds must be positive");
  if (out.restarts < 1) fail(ErrorCode::InvalidConfig, "restarts must be >= 1");
  return out;
}

std::string ModelConfig::method_name() const {
  std::string kernel;
  switch (qual_kernel) {
    case QualKernel::Gaussian: kernel = "Gau"; break;
    case QualKernel::Exponential: kernel = "Exp"; break;
    case QualKernel::Linear: kernel = "Linear"; break;
  }
  const bool all_ord = !ordinal_mode.empty() &&
                       std::all_of(ordinal_mode.begin(), ordinal_mode.end(), [](bool b) { return b; });
  std::string dim;
  if (all_ord) {
    dim = "ord";
  } else if (!latent_dims.empty()) {
    const bool uniform = std::all_of(latent_dims.begin(), latent_dims.end(),
                                     [&](int l) { return l == latent_dims.front(); });
    if (uniform) {
      dim = std::to_string(latent_dims.front());
    } else {
      std::ostringstream os;
      for (std::size_t j = 0; j < latent_dims.size(); ++j) os << (j ? "|" : "") << latent_dims[j];
      dim = os.str();
    }
  }
  const std::string suffix = structure == Structure::Multiplicative ? "multi" : "add";
  return kernel + "_" + dim + "_" + suffix;
}

int qual_free_count(QualKind kind, int a, int l) {
  switch (kind) {
    case QualKind::IsoOrdinal:
    case QualKind::LinOrdinal:
      return a - 1;
    case QualKind::IsoNominal: {
      int c = 0;
      for (int v = 2; v <= a; ++v) c += std::min(v - 1, l);
      return c;
    }
    case QualKind::LinNominal: {
      int c = 0;
      for (int v = 2; v <= a; ++v) c += std::min(v - 1, l - 1);
      return c;
    }
  }
  return 0;
}

int qual_param_count(QualKind kind, int a, int l) {
  switch (kind) {
    case QualKind::IsoOrdinal:
    case QualKind::LinOrdinal:
      return a - 1;
    case QualKind::IsoNominal:
      return (2 * a - l - 1) * l / 2;
    case QualKind::LinNominal:
      return (a - 1) * (l - 1);
  }
  return 0;
}

int param_count(const ModelConfig& config, const std::vector<int>& level_counts, int quant_dim) {
  const ModelConfig cfg = config.validated(level_counts);
  int total = 2 + quant_dim;  // mean, variance, one scale per quantitative dim
  for (std::size_t j = 0; j < level_counts.size(); ++j)
    total += qual_param_count(cfg.kind(static_cast<int>(j)), level_counts[j], cfg.latent_dims[j]);
  if (cfg.structure == Structure::Additive) total += static_cast<int>(level_counts.size()) - 1;
  return total;
}

}  // namespace mixkrig
