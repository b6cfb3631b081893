#include "splatfuse/core/ssim.hpp"

#include <cmath>
#include <vector>

namespace splatfuse {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_kernel(int window, double sigma = 1.5) {
  std::vector<double> k(window);
  const double c = (window - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < window; ++i) {
    k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

// Valid-region separable correlation: output (W-win+1) x (H-win+1).
GridD conv_valid(const GridD& in, const std::vector<double>& k) {
  const int win = static_cast<int>(k.size());
  const int w = static_cast<int>(in.width());
  const int h = static_cast<int>(in.height());
  GridD rows(w - win + 1, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x + win <= w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < win; ++i) acc += k[i] * in.at(x + i, y);
      rows.at(x, y) = acc;
    }
  GridD out(w - win + 1, h - win + 1);
  for (int y = 0; y + win <= h; ++y)
    for (int x = 0; x < out.width(); ++x) {
      double acc = 0.0;
      for (int i = 0; i < win; ++i) acc += k[i] * rows.at(x, y + i);
      out.at(x, y) = acc;
    }
  return out;
}

// Adjoint of conv_valid: scatters a valid-grid field back onto the full
// image grid.
GridD conv_valid_adjoint(const GridD& g, const std::vector<double>& k, int w,
                         int h) {
  const int win = static_cast<int>(k.size());
  GridD cols(g.width(), h);
  cols.fill(0.0);
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) {
      const double v = g.at(x, y);
      for (int i = 0; i < win; ++i) cols.at(x, y + i) += k[i] * v;
    }
  GridD out(w, h);
  out.fill(0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < cols.width(); ++x) {
      const double v = cols.at(x, y);
      for (int i = 0; i < win; ++i) out.at(x + i, y) += k[i] * v;
    }
  return out;
}

struct SsimFields {
  GridD ux, uy, vxx, vyy, vxy;  // windowed first/second moments
  double value = 0.0;
};

SsimFields ssim_fields(const GridD& x, const GridD& y, int window) {
  if (x.width() != y.width() || x.height() != y.height())
    throw DomainError("ssim: image size mismatch");
  if (window < 3 || window % 2 == 0)
    throw DomainError("ssim: window must be odd and >= 3");
  if (x.width() < window || x.height() < window)
    throw DomainError("ssim: image smaller than window");
  const std::vector<double> k = gaussian_kernel(window);

  GridD xx(x.width(), x.height()), yy(x.width(), x.height()),
      xy(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }

  SsimFields f;
  f.ux = conv_valid(x, k);
  f.uy = conv_valid(y, k);
  f.vxx = conv_valid(xx, k);
  f.vyy = conv_valid(yy, k);
  f.vxy = conv_valid(xy, k);

  double total = 0.0;
  for (std::size_t i = 0; i < f.ux.size(); ++i) {
    const double mx = f.ux[i], my = f.uy[i];
    const double sxx = f.vxx[i] - mx * mx;
    const double syy = f.vyy[i] - my * my;
    const double sxy = f.vxy[i] - mx * my;
    const double a1 = 2.0 * mx * my + kC1;
    const double a2 = 2.0 * sxy + kC2;
    const double b1 = mx * mx + my * my + kC1;
    const double b2 = sxx + syy + kC2;
    total += (a1 * a2) / (b1 * b2);
  }
  f.value = total / static_cast<double>(f.ux.size());
  return f;
}

}  // namespace

double ssim_mean(const GridD& a, const GridD& b, int window) {
  return ssim_fields(a, b, window).value;
}

double ssim_mean(const GridV3& a, const GridV3& b, int window) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DomainError("ssim: image size mismatch");
  double acc = 0.0;
  GridD ca(a.width(), a.height()), cb(a.width(), a.height());
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      ca[i] = a[i](c);
      cb[i] = b[i](c);
    }
    acc += ssim_mean(ca, cb, window);
  }
  return acc / 3.0;
}

double ssim_with_gradient(const GridD& x, const GridD& y, GridD& dx,
                          int window) {
  const SsimFields f = ssim_fields(x, y, window);
  const std::vector<double> k = gaussian_kernel(window);
  const double inv_n = 1.0 / static_cast<double>(f.ux.size());

  // d(mean ssim)/d of the windowed fields u = w*x, v = w*(x^2), s = w*(x y).
  GridD gu(f.ux.width(), f.ux.height());
  GridD gv(f.ux.width(), f.ux.height());
  GridD gs(f.ux.width(), f.ux.height());
  for (std::size_t i = 0; i < f.ux.size(); ++i) {
    const double mx = f.ux[i], my = f.uy[i];
    const double sxx = f.vxx[i] - mx * mx;
    const double syy = f.vyy[i] - my * my;
    const double sxy = f.vxy[i] - mx * my;
    const double a1 = 2.0 * mx * my + kC1;
    const double a2 = 2.0 * sxy + kC2;
    const double b1 = mx * mx + my * my + kC1;
    const double b2 = sxx + syy + kC2;
    const double d_a1 = a2 / (b1 * b2) * inv_n;
    const double d_a2 = a1 / (b1 * b2) * inv_n;
    const double d_b1 = -a1 * a2 / (b1 * b1 * b2) * inv_n;
    const double d_b2 = -a1 * a2 / (b1 * b2 * b2) * inv_n;
    const double d_mx = d_a1 * 2.0 * my + d_b1 * 2.0 * mx;
    const double d_sxx = d_b2;
    const double d_sxy = d_a2 * 2.0;
    gu[i] = d_mx - 2.0 * mx * d_sxx - my * d_sxy;
    gv[i] = d_sxx;
    gs[i] = d_sxy;
  }

  const int w = x.width();
  const int h = x.height();
  const GridD au = conv_valid_adjoint(gu, k, w, h);
  const GridD av = conv_valid_adjoint(gv, k, w, h);
  const GridD as = conv_valid_adjoint(gs, k, w, h);
  dx = GridD(x.width(), x.height());
  for (std::size_t i = 0; i < x.size(); ++i)
    dx[i] = au[i] + 2.0 * x[i] * av[i] + y[i] * as[i];
  return f.value;
}

double ssim_with_gradient(const GridV3& x, const GridV3& y, GridV3& dx,
                          int window) {
  if (x.width() != y.width() || x.height() != y.height())
    throw DomainError("ssim: image size mismatch");
  dx = GridV3(x.width(), x.height());
  dx.fill(Eigen::Vector3d::Zero());
  double acc = 0.0;
  GridD cx(x.width(), x.height()), cy(x.width(), x.height()), cd;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      cx[i] = x[i](c);
      cy[i] = y[i](c);
    }
    acc += ssim_with_gradient(cx, cy, cd, window);
    for (std::size_t i = 0; i < x.size(); ++i) dx[i](c) = cd[i] / 3.0;
  }
  return acc / 3.0;
}

}  // namespace splatfuse
