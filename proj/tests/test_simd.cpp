#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixkrig/rng.hpp"
#include "mixkrig/simd.hpp"

using namespace mixkrig;

namespace {

// Relative agreement between backends; exp variants differ by a few ulp.
constexpr double kRelTol = 1e-14;

bool close_rel(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= kRelTol * std::max(std::abs(a), std::abs(b));
}

std::vector<double> exp_args(int count, Rng& rng) {
  std::vector<double> t = {0.0, 1e-300, 1e-18, 1e-9, 0.5, 1.0, 2.0, 10.0, 100.0, 690.0, 699.9999, 700.0, 701.0, 5000.0};
  for (int i = 0; i < count; ++i) t.push_back(std::exp(rng.uniform(std::log(1e-12), std::log(750.0))));
  return t;
}

}  // namespace

TEST_CASE("active backend reports a known name") {
  const std::string name = simd::backend_name();
  CHECK((name == "scalar" || name == "avx2"));
}

TEST_CASE("avx2 exp_neg matches the scalar reference") {
  const simd::Ops* avx2 = simd::avx2_ops();
  if (!avx2) return;  // host or build without AVX2
  Rng rng(31);
  const std::vector<double> t = exp_args(4096, rng);
  std::vector<double> a(t.size()), b(t.size());
  simd::scalar_ops().exp_neg(a.data(), t.data(), t.size());
  avx2->exp_neg(b.data(), t.data(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    INFO("t = ", t[i]);
    CHECK(close_rel(a[i], b[i]));
  }
  // hard zero beyond the flush threshold on both paths
  CHECK(a[11] == 0.0);
  CHECK(b[11] == 0.0);
}

TEST_CASE("avx2 squared-distance accumulation matches scalar") {
  const simd::Ops* avx2 = simd::avx2_ops();
  if (!avx2) return;
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(0, 130);
    std::vector<double> col(n), acc_a(n), acc_b(n);
    for (auto& x : col) x = rng.gaussian() * 3;
    for (std::size_t i = 0; i < n; ++i) acc_a[i] = acc_b[i] = rng.uniform();
    const double center = rng.gaussian();
    const double w = std::exp(rng.gaussian());
    simd::scalar_ops().sqdist_accum(acc_a.data(), col.data(), center, w, n);
    avx2->sqdist_accum(acc_b.data(), col.data(), center, w, n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(acc_a[i], acc_b[i]));
  }
}

TEST_CASE("avx2 mul_exp_neg matches scalar") {
  const simd::Ops* avx2 = simd::avx2_ops();
  if (!avx2) return;
  Rng rng(33);
  const std::size_t n = 517;
  std::vector<double> q(n), acc(n), out_a(n), out_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = rng.uniform(-1.0, 1.0);
    acc[i] = rng.uniform(0.0, 30.0);
  }
  simd::scalar_ops().mul_exp_neg(out_a.data(), q.data(), acc.data(), n);
  avx2->mul_exp_neg(out_b.data(), q.data(), acc.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(out_a[i], out_b[i]));
}

TEST_CASE("vector exp stays within a strict tolerance of std::exp") {
  const simd::Ops& ops = simd::ops();
  Rng rng(34);
  const std::vector<double> t = exp_args(2000, rng);
  std::vector<double> out(t.size());
  ops.exp_neg(out.data(), t.data(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ref = t[i] >= 700.0 ? 0.0 : std::exp(-t[i]);
    CHECK(close_rel(out[i], ref));
  }
}
