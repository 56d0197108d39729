#include "mixkrig/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace mixkrig::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Selection {
  const Ops* ops;
  const char* name;
};

Selection select_backend() {
  const char* req = std::getenv("MIXKRIG_SIMD");
  const bool want_scalar = req && std::strcmp(req, "scalar") == 0;
  const Ops* avx2 = avx2_ops();
  if (!want_scalar && avx2 && cpu_has_avx2_fma()) return {avx2, "avx2"};
  return {&scalar_ops(), "scalar"};
}

const Selection& selection() {
  static const Selection sel = select_backend();
  return sel;
}

}  // namespace

const Ops& ops() { return *selection().ops; }
std::string backend_name() { return selection().name; }

}  // namespace mixkrig::simd
