#pragma once

#include <cstddef>
#include <cstdint>

#include "splatfuse/kernels/cpu_features.hpp"

// Data-parallel pixel kernels used by the fusion, metric, and tracking hot
// loops. Every kernel exists in a scalar reference form and an AVX2 form;
// the unqualified entry points dispatch on the active ISA. Element-wise
// kernels are bit-identical across ISAs; reductions may differ in the last
// ulps because the vector forms reassociate sums.

namespace splatfuse::kernels {

struct MaskedSum {
  double sum = 0.0;
  std::size_t count = 0;
};

// Accumulated moments for fitting y ~ theta*x + gamma by least squares.
struct AffineFitSums {
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double sxy = 0.0;
};

namespace scalar {

double sum(const double* a, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double abs_diff_sum(const double* a, const double* b, std::size_t n);
double squared_diff_sum(const double* a, const double* b, std::size_t n);
MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n);
// Mean L2 magnitude of an interleaved (u,v) field.
double flow_mean_magnitude(const double* uv, std::size_t n);
// dst[i] = w[i]*a[i] + (1-w[i])*b[i]
void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n);
// w_mv = min(counts*inv_nkey, 1), w_mono = 1 - w_mv
void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n);
// Aligned prior conversion: inverse depth theta/mono[i] + gamma, inverted
// back to depth. Non-positive aligned inverse depth marks valid[i] = 0 and
// leaves dst[i] = 0.
void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n);
AffineFitSums affine_fit_sums(const double* x, const double* y, std::size_t n);

}  // namespace scalar

namespace avx2 {

double sum(const double* a, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double abs_diff_sum(const double* a, const double* b, std::size_t n);
double squared_diff_sum(const double* a, const double* b, std::size_t n);
MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n);
double flow_mean_magnitude(const double* uv, std::size_t n);
void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n);
void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n);
void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n);
AffineFitSums affine_fit_sums(const double* x, const double* y, std::size_t n);

}  // namespace avx2

double sum(const double* a, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double abs_diff_sum(const double* a, const double* b, std::size_t n);
double squared_diff_sum(const double* a, const double* b, std::size_t n);
MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n);
double flow_mean_magnitude(const double* uv, std::size_t n);
void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n);
void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n);
void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n);
AffineFitSums affine_fit_sums(const double* x, const double* y, std::size_t n);

}  // namespace splatfuse::kernels
