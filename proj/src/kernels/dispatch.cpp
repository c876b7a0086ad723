#include <atomic>
#include <cstdlib>
#include <string>

#include "prunemip/kernels.hpp"

namespace prunemip::kernels {

#if defined(PRUNEMIP_HAVE_AVX2)
const KernelTable& avx2TableImpl();
#endif

namespace {

bool cpuHasAvx2() {
#if defined(PRUNEMIP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initialTable() {
  if (const char* env = std::getenv("PRUNEMIP_KERNELS")) {
    if (std::string(env) == "scalar") return &scalarTable();
  }
  if (const KernelTable* t = avx2Table()) return t;
  return &scalarTable();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initialTable()};
  return table;
}

}  // namespace

const KernelTable* avx2Table() {
#if defined(PRUNEMIP_HAVE_AVX2)
  static const bool supported = cpuHasAvx2();
  return supported ? &avx2TableImpl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(Variant variant) {
  const KernelTable* table = variant == Variant::Scalar ? &scalarTable() : avx2Table();
  if (!table) return false;
  current().store(table, std::memory_order_relaxed);
  return true;
}

std::string_view activeName() { return active().name; }

}  // namespace prunemip::kernels
