#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse::kernels {

#define SPLATFUSE_DISPATCH(call) \
  (active_isa() == Isa::Avx2 ? avx2::call : scalar::call)

double sum(const double* a, std::size_t n) {
  return SPLATFUSE_DISPATCH(sum(a, n));
}

double dot(const double* a, const double* b, std::size_t n) {
  return SPLATFUSE_DISPATCH(dot(a, b, n));
}

double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  return SPLATFUSE_DISPATCH(abs_diff_sum(a, b, n));
}

double squared_diff_sum(const double* a, const double* b, std::size_t n) {
  return SPLATFUSE_DISPATCH(squared_diff_sum(a, b, n));
}

MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n) {
  return SPLATFUSE_DISPATCH(masked_abs_diff_sum(a, b, mask, n));
}

double flow_mean_magnitude(const double* uv, std::size_t n) {
  return SPLATFUSE_DISPATCH(flow_mean_magnitude(uv, n));
}

void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n) {
  SPLATFUSE_DISPATCH(blend(dst, w, a, b, n));
}

void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n) {
  SPLATFUSE_DISPATCH(weights_from_counts(w_mv, w_mono, counts, inv_nkey, n));
}

void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n) {
  SPLATFUSE_DISPATCH(scaled_prior_depth(dst, valid, mono, theta, gamma, n));
}

AffineFitSums affine_fit_sums(const double* x, const double* y,
                              std::size_t n) {
  return SPLATFUSE_DISPATCH(affine_fit_sums(x, y, n));
}

#undef SPLATFUSE_DISPATCH

}  // namespace splatfuse::kernels
