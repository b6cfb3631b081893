#pragma once

namespace splatfuse::kernels {

// Instruction sets the pixel kernels can dispatch to. Scalar is always
// available; Avx2 requires both AVX2 and FMA at runtime.
enum class Isa {
  Scalar,
  Avx2,
};

// Queries the host CPU once and caches the result.
bool cpu_has_avx2();

// Dispatch control. Auto picks the best supported ISA; forcing an
// unsupported ISA falls back to Scalar.
void set_isa(Isa isa);
void set_isa_auto();
Isa active_isa();

}  // namespace splatfuse::kernels
