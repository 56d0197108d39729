#ifndef MIXKRIG_TYPES_HPP
#define MIXKRIG_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixkrig {

enum class ErrorCode {
  DimensionMismatch,
  LevelOutOfRange,
  DegenerateResponse,
  InvalidConfig,
  ConstraintViolation,
  NonUnitNorm,
  WeightError,
  RangeError,
  EigenFailure,
  SingularSystem,
  NonFiniteObjective,
  InfeasibleStart,
  AllRestartsFailed,
  NotPSD,
  RankDeficient,
  EmptyCandidates,
  DegenerateTruth,
  NegativeDiscriminant,
  ParseError,
};

const char* error_code_name(ErrorCode code);

/// Library error; message always starts with the code name so callers
/// (and CLI exit paths) can match on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

  /// true for malformed-input errors (CLI exit 2), false for numerical
  /// failures discovered mid-computation (CLI exit 3).
  bool is_input_error() const;

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

// ---------------------------------------------------------------------------
// Model structure enums

enum class Structure { Multiplicative, Additive };
enum class QualKernel { Gaussian, Exponential, Linear };

/// Per-factor parameterization kind, determined by kernel family and the
/// ordinal flag.  Iso* use raw latent coordinates / distance increments,
/// Lin* use hyperspherical angles / angle increments.
enum class QualKind { IsoNominal, IsoOrdinal, LinNominal, LinOrdinal };

std::string to_string(Structure s);
std::string to_string(QualKernel k);
std::string to_string(QualKind k);
Structure structure_from_string(const std::string& s);
QualKernel qual_kernel_from_string(const std::string& s);
QualKind qual_kind_from_string(const std::string& s);

QualKind qual_kind_for(QualKernel kernel, bool ordinal);

// ---------------------------------------------------------------------------
// Data model

/// One design point: I real coordinates plus J qualitative level indices.
/// Level indices are 1-based everywhere (storage included).
struct MixedInput {
  Eigen::VectorXd u;
  std::vector<int> v;
};

struct Dataset {
  std::vector<MixedInput> inputs;
  Eigen::VectorXd y;
  std::vector<int> level_counts;   // a_j per qualitative factor
  std::vector<bool> ordinal_flags;

  int n() const { return static_cast<int>(inputs.size()); }
  int quant_dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().u.size()); }
  int qual_dim() const { return static_cast<int>(level_counts.size()); }
};

void validate_dataset(const Dataset& d);

struct ModelConfig {
  Structure structure = Structure::Multiplicative;
  QualKernel qual_kernel = QualKernel::Gaussian;
  std::vector<int> latent_dims;     // l_j per factor
  std::vector<bool> ordinal_mode;   // per factor
  std::vector<double> nugget_grid = default_nugget_grid();
  int restarts = 15;

  static std::vector<double> default_nugget_grid();

  /// Returns a copy with latent dims normalized (ordinal factors forced to
  /// their fixed dimension) and all invariants checked against level_counts.
  ModelConfig validated(const std::vector<int>& level_counts) const;

  QualKind kind(int j) const { return qual_kind_for(qual_kernel, ordinal_mode.at(j)); }

  /// Short method label, e.g. "Gau_ord_multi" or "Linear_2_add".
  std::string method_name() const;
};

/// Free parameters of one qualitative factor, laid out row-major over the
/// free (level, coordinate) entries; fixed zeros are not stored.
struct QualFactorParams {
  QualKind kind = QualKind::IsoOrdinal;
  Eigen::VectorXd values;
};

/// Number of stored free parameters for one factor.
int qual_free_count(QualKind kind, int a, int l);

/// Bookkeeping parameter count used by the BIC penalty:
/// 2 + I + sum_j P_j + (J-1 for additive structures).
int param_count(const ModelConfig& config, const std::vector<int>& level_counts, int quant_dim);

/// P_j for a single factor as tabulated: (a-1)(l-1) linear nominal,
/// (2a-l-1)l/2 isotropic nominal, a-1 for both ordinal rows.
int qual_param_count(QualKind kind, int a, int l);

struct FullParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  Eigen::VectorXd phi;                  // positive, one per quantitative dim
  std::vector<QualFactorParams> qual;   // one per qualitative factor
  Eigen::VectorXd psi;                  // additive weights on the simplex; empty otherwise
};

/// Fitted surrogate: estimated parameters plus the cached training
/// factorization needed for prediction.  Immutable after construction.
struct FittedModel {
  ModelConfig config;
  FullParams params;
  double delta = 0.0;
  double epsilon_star = 0.0;
  double neg_loglik = 0.0;

  // Internal response standardization (y_std = (y - y_mean) / y_scale).
  double y_mean = 0.0;
  double y_scale = 1.0;
  // Internal per-dimension input normalization to the unit interval
  // (u_norm = (u - u_lo) / u_scale); empty means identity.
  Eigen::VectorXd u_lo, u_scale;

  Dataset train;                 // standardized responses, normalized inputs
  Eigen::MatrixXd chol;          // lower factor of R_hat + delta I
  Eigen::VectorXd alpha;         // (R_hat + delta I)^{-1} (y_std - mu 1)
  Eigen::VectorXd chol_inv_one;  // L^{-1} 1, cached for the variance formula
  double one_m_one = 0.0;        // 1^T (R_hat + delta I)^{-1} 1
};

}  // namespace mixkrig

#endif  // MIXKRIG_TYPES_HPP
