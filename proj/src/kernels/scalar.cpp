#include <cmath>

#include "splatfuse/kernels/kernels.hpp"

namespace splatfuse::kernels::scalar {

double sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double abs_diff_sum(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double squared_diff_sum(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

MaskedSum masked_abs_diff_sum(const double* a, const double* b,
                              const std::uint8_t* mask, std::size_t n) {
  MaskedSum out;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      out.sum += std::abs(a[i] - b[i]);
      ++out.count;
    }
  }
  return out;
}

double flow_mean_magnitude(const double* uv, std::size_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uv[2 * i];
    const double v = uv[2 * i + 1];
    s += std::sqrt(u * u + v * v);
  }
  return s / static_cast<double>(n);
}

void blend(double* dst, const double* w, const double* a, const double* b,
           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    dst[i] = w[i] * a[i] + (1.0 - w[i]) * b[i];
}

void weights_from_counts(double* w_mv, double* w_mono,
                         const std::int32_t* counts, double inv_nkey,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::min(static_cast<double>(counts[i]) * inv_nkey, 1.0);
    w_mv[i] = w;
    w_mono[i] = 1.0 - w;
  }
}

void scaled_prior_depth(double* dst, std::uint8_t* valid, const double* mono,
                        double theta, double gamma, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
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
  AffineFitSums s;
  for (std::size_t i = 0; i < n; ++i) {
    s.sx += x[i];
    s.sy += y[i];
    s.sxx += x[i] * x[i];
    s.sxy += x[i] * y[i];
  }
  return s;
}

}  // namespace splatfuse::kernels::scalar
