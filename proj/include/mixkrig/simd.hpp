#ifndef MIXKRIG_SIMD_HPP
#define MIXKRIG_SIMD_HPP

#include <cmath>
#include <cstddef>
#include <string>

namespace mixkrig::simd {

/// Inner-loop kernels used by correlation-matrix assembly.  Each operation
/// has a scalar reference implementation and (where the host CPU supports
/// it) an AVX2+FMA variant; the active backend is chosen once at load time.
/// Variants are equivalence-tested against the reference in tests/.
///
/// exp_neg semantics: out[k] = exp(-t[k]) for t in [0, 700), exactly 0 for
/// t >= 700 (values below ~1e-304 are flushed; kernel weights that small are
/// indistinguishable from zero downstream).
struct Ops {
  // acc[k] += w * (col[k] - center)^2
  void (*sqdist_accum)(double* acc, const double* col, double center, double w, std::size_t n);
  // out[k] = q[k] * exp(-acc[k])
  void (*mul_exp_neg)(double* out, const double* q, const double* acc, std::size_t n);
  // out[k] = exp(-t[k])
  void (*exp_neg)(double* out, const double* t, std::size_t n);
};

/// Active backend, selected at startup from CPU features.  The environment
/// variable MIXKRIG_SIMD=scalar|avx2 overrides detection (unsupported
/// requests fall back to scalar).
const Ops& ops();
std::string backend_name();

/// Named backends for equivalence tests; avx2() is null when the build or
/// host lacks AVX2+FMA.
const Ops& scalar_ops();
const Ops* avx2_ops();

/// Scalar reference for a single value (shared by the table builders).
inline double exp_neg_scalar(double t) { return t >= 700.0 ? 0.0 : std::exp(-t); }

}  // namespace mixkrig::simd

#endif  // MIXKRIG_SIMD_HPP
