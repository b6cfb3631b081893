#include "splatfuse/kernels/cpu_features.hpp"

#include <atomic>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#define SPLATFUSE_X86 1
#endif

namespace splatfuse::kernels {

namespace {

bool detect_avx2() {
#ifdef SPLATFUSE_X86
  unsigned int eax = 0, ebx = 0, ecx = 0, edx = 0;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  const bool avx2 = (ebx & bit_AVX2) != 0;
  __get_cpuid(1, &eax, &ebx, &ecx, &edx);
  const bool fma = (ecx & bit_FMA) != 0;
  const bool osxsave = (ecx & bit_OSXSAVE) != 0;
  if (!osxsave) return false;
  // XCR0: XMM and YMM state must be OS-enabled.
  unsigned int xcr0_lo, xcr0_hi;
  __asm__("xgetbv" : "=a"(xcr0_lo), "=d"(xcr0_hi) : "c"(0));
  const bool ymm = (xcr0_lo & 0x6) == 0x6;
  return avx2 && fma && ymm;
#else
  return false;
#endif
}

std::atomic<Isa> g_isa{Isa::Scalar};
std::atomic<bool> g_initialized{false};

Isa best_isa() { return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar; }

}  // namespace

bool cpu_has_avx2() {
  static const bool has = detect_avx2();
  return has;
}

void set_isa(Isa isa) {
  if (isa == Isa::Avx2 && !cpu_has_avx2()) isa = Isa::Scalar;
  g_isa.store(isa, std::memory_order_relaxed);
  g_initialized.store(true, std::memory_order_relaxed);
}

void set_isa_auto() {
  g_isa.store(best_isa(), std::memory_order_relaxed);
  g_initialized.store(true, std::memory_order_relaxed);
}

Isa active_isa() {
  if (!g_initialized.load(std::memory_order_relaxed)) set_isa_auto();
  return g_isa.load(std::memory_order_relaxed);
}

}  // namespace splatfuse::kernels
