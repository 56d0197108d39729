#include "mixkrig/simd.hpp"

namespace mixkrig::simd {
namespace {

void sqdist_accum_scalar(double* acc, const double* col, double center, double w, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double d = col[k] - center;
    acc[k] += w * d * d;
  }
}

void mul_exp_neg_scalar(double* out, const double* q, const double* acc, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = q[k] * exp_neg_scalar(acc[k]);
}

void exp_neg_scalar_n(double* out, const double* t, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = exp_neg_scalar(t[k]);
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table{&sqdist_accum_scalar, &mul_exp_neg_scalar, &exp_neg_scalar_n};
  return table;
}

}  // namespace mixkrig::simd
