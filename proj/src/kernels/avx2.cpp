// AVX2 variants of the pixel kernels. Compiled with -mavx2 -mfma; callers
// must gate on cpu_has_avx2(). Element-wise kernels replicate the scalar
// operation order so results are bit-identical; reductions use four-lane
// accumulators and therefore reassociate.

#include <cmath>
#include <cstring>

#include "splatfuse/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace splatfuse::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline __m256d abs_pd(__m256d v) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign, v);
}

}  // namespace

double sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, abs_pd(d));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double squared_diff_sum(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::uint32_t m4;
    std::memcpy(&m4, mask + i, 4);
    if (m4 == 0) continue;
    __m128i mb = _mm_cvtsi32_si128(static_cast<int>(m4));
    __m256i m64 = _mm256_cvtepu8_epi64(mb);
    __m256d keep = _mm256_castsi256_pd(
        _mm256_cmpgt_epi64(m64, _mm256_setzero_si256()));
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_and_pd(keep, abs_pd(d)));
    count += static_cast<std::size_t>(
        _mm_popcnt_u32(static_cast<unsigned>(_mm256_movemask_pd(keep))));
  }
  MaskedSum out;
  out.sum = hsum(acc);
  out.count = count;
  for (; i < n; ++i) {
    if (mask[i]) {
      out.sum += std::abs(a[i] - b[i]);
      ++out.count;
    }
  }
  return out;
}

double flow_mean_magnitude(const double* uv, std::size_t n) {
  if (n == 0) return 0.0;
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v0 = _mm256_loadu_pd(uv + 2 * i);      // u0 v0 u1 v1
    __m256d v1 = _mm256_loadu_pd(uv + 2 * i + 4);  // u2 v2 u3 v3
    __m256d sq = _mm256_hadd_pd(_mm256_mul_pd(v0, v0), _mm256_mul_pd(v1, v1));
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(sq));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double u = uv[2 * i];
    const double v = uv[2 * i + 1];
    s += std::sqrt(u * u + v * v);
  }
  return s / static_cast<double>(n);
}

void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wv = _mm256_loadu_pd(w + i);
    __m256d wa = _mm256_mul_pd(wv, _mm256_loadu_pd(a + i));
    __m256d wb =
        _mm256_mul_pd(_mm256_sub_pd(one, wv), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(wa, wb));
  }
  for (; i < n; ++i) dst[i] = w[i] * a[i] + (1.0 - w[i]) * b[i];
}

void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d scale = _mm256_set1_pd(inv_nkey);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i ci =
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(counts + i));
    __m256d c = _mm256_cvtepi32_pd(ci);
    __m256d w = _mm256_min_pd(_mm256_mul_pd(c, scale), one);
    _mm256_storeu_pd(w_mv + i, w);
    _mm256_storeu_pd(w_mono + i, _mm256_sub_pd(one, w));
  }
  for (; i < n; ++i) {
    const double w = std::min(static_cast<double>(counts[i]) * inv_nkey, 1.0);
    w_mv[i] = w;
    w_mono[i] = 1.0 - w;
  }
}

void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n) {
  const __m256d th = _mm256_set1_pd(theta);
  const __m256d ga = _mm256_set1_pd(gamma);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d inv =
        _mm256_add_pd(_mm256_div_pd(th, _mm256_loadu_pd(mono + i)), ga);
    __m256d pos = _mm256_cmp_pd(inv, zero, _CMP_GT_OQ);
    __m256d depth = _mm256_div_pd(one, inv);
    _mm256_storeu_pd(dst + i, _mm256_and_pd(pos, depth));
    const int bits = _mm256_movemask_pd(pos);
    valid[i + 0] = static_cast<std::uint8_t>(bits & 1);
    valid[i + 1] = static_cast<std::uint8_t>((bits >> 1) & 1);
    valid[i + 2] = static_cast<std::uint8_t>((bits >> 2) & 1);
    valid[i + 3] = static_cast<std::uint8_t>((bits >> 3) & 1);
  }
  for (; i < n; ++i) {
    const double inv = theta / mono[i] + gamma;
    if (inv > 0.0) {
      dst[i] = 1.0 / inv;
      valid[i] = 1;
    } else {
      dst[i] = 0.0;
      valid[i] = 0;
    }
  }
}

AffineFitSums affine_fit_sums(const double* x, const double* y,
                              std::size_t n) {
  __m256d sx = _mm256_setzero_pd();
  __m256d sy = _mm256_setzero_pd();
  __m256d sxx = _mm256_setzero_pd();
  __m256d sxy = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    sx = _mm256_add_pd(sx, xv);
    sy = _mm256_add_pd(sy, yv);
    sxx = _mm256_fmadd_pd(xv, xv, sxx);
    sxy = _mm256_fmadd_pd(xv, yv, sxy);
  }
  AffineFitSums s;
  s.sx = hsum(sx);
  s.sy = hsum(sy);
  s.sxx = hsum(sxx);
  s.sxy = hsum(sxy);
  for (; i < n; ++i) {
    s.sx += x[i];
    s.sy += y[i];
    s.sxx += x[i] * x[i];
    s.sxy += x[i] * y[i];
  }
  return s;
}

}  // namespace splatfuse::kernels::avx2

#else  // non-x86: AVX2 entry points fall back to scalar.

namespace splatfuse::kernels::avx2 {

double sum(const double* a, std::size_t n) { return scalar::sum(a, n); }
double dot(const double* a, const double* b, std::size_t n) {
  return scalar::dot(a, b, n);
}
double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  return scalar::abs_diff_sum(a, b, n);
}
double squared_diff_sum(const double* a, const double* b, std::size_t n) {
  return scalar::squared_diff_sum(a, b, n);
}
MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n) {
  return scalar::masked_abs_diff_sum(a, b, mask, n);
}
double flow_mean_magnitude(const double* uv, std::size_t n) {
  return scalar::flow_mean_magnitude(uv, n);
}
void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n) {
  scalar::blend(dst, w, a, b, n);
}
void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n) {
  scalar::weights_from_counts(w_mv, w_mono, counts, inv_nkey, n);
}
void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n) {
  scalar::scaled_prior_depth(dst, valid, mono, theta, gamma, n);
}
AffineFitSums affine_fit_sums(const double* x, const double* y,
                              std::size_t n) {
  return scalar::affine_fit_sums(x, y, n);
}

}  // namespace splatfuse::kernels::avx2

#endif
