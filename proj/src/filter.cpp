#include "tep/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "tep/errors.hpp"

namespace tep {

namespace {

using cplx = std::complex<double>;

// Polynomial with given roots, leading coefficient 1. Roots come in conjugate
// pairs so the imaginary parts cancel; we keep the real part.
std::vector<double> poly_from_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> p{1.0};
  for (const cplx& r : roots) {
    std::vector<cplx> q(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] += p[i];
      q[i + 1] -= p[i] * r;
    }
    p = std::move(q);
  }
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i].real();
  return out;
}

}  // namespace

FilterCoeffs butterworth_bandpass(int order, double low_hz, double high_hz,
                                  double rate_hz) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(rate_hz > 0.0)) throw ConfigError("sampling rate must be > 0");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < rate_hz / 2.0))
    throw ConfigError("band edges invalid for sampling rate");

  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * rate_hz;
  // Pre-warped analog edges.
  const double w1 = fs2 * std::tan(pi * low_hz / rate_hz);
  const double w2 = fs2 * std::tan(pi * high_hz / rate_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Unit Butterworth lowpass prototype poles.
  std::vector<cplx> proto(order);
  for (int k = 0; k < order; ++k) {
    double theta = pi * (2.0 * k + order + 1.0) / (2.0 * order);
    proto[k] = std::polar(1.0, theta);
  }

  // Lowpass -> bandpass: each prototype pole splits into two.
  std::vector<cplx> poles;
  poles.reserve(2 * static_cast<std::size_t>(order));
  for (const cplx& p : proto) {
    cplx half = p * (bw / 2.0);
    cplx root = std::sqrt(half * half - w0sq);
    poles.push_back(half + root);
    poles.push_back(half - root);
  }
  // Analog zeros: `order` zeros at s = 0; gain bw^order.
  double k_analog = std::pow(bw, order);

  // Bilinear transform. Zeros at s=0 -> z=1; zeros at infinity -> z=-1.
  std::vector<cplx> zpoles;
  cplx denom_prod = 1.0;
  for (const cplx& p : poles) {
    zpoles.push_back((fs2 + p) / (fs2 - p));
    denom_prod *= (fs2 - p);
  }
  double k_digital =
      k_analog * (std::pow(fs2, order) / denom_prod).real();

  std::vector<cplx> zzeros;
  for (int k = 0; k < order; ++k) zzeros.push_back(1.0);
  for (int k = 0; k < order; ++k) zzeros.push_back(-1.0);

  FilterCoeffs f;
  f.b = poly_from_roots(zzeros);
  for (double& c : f.b) c *= k_digital;
  f.a = poly_from_roots(zpoles);
  return f;
}

std::vector<double> lfilter(const FilterCoeffs& f, std::span<const double> x,
                            std::span<const double> zi) {
  const std::size_t n = std::max(f.a.size(), f.b.size());
  std::vector<double> b(f.b.begin(), f.b.end());
  std::vector<double> a(f.a.begin(), f.a.end());
  b.resize(n, 0.0);
  a.resize(n, 0.0);
  // Extended-precision state: the feedback recursion with poles near the unit
  // circle amplifies rounding error over long signals otherwise.
  std::vector<long double> z(n - 1, 0.0L);
  for (std::size_t i = 0; i < z.size() && i < zi.size(); ++i) z[i] = zi[i];

  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double xi = x[i];
    const long double yi = b[0] * xi + (z.empty() ? 0.0L : z[0]);
    for (std::size_t k = 0; k + 1 < z.size(); ++k)
      z[k] = b[k + 1] * xi + z[k + 1] - a[k + 1] * yi;
    if (!z.empty()) z.back() = b[n - 1] * xi - a[n - 1] * yi;
    y[i] = static_cast<double>(yi);
  }
  return y;
}

std::vector<double> lfilter_zi(const FilterCoeffs& f) {
  const std::size_t n = std::max(f.a.size(), f.b.size());
  std::vector<double> b(f.b.begin(), f.b.end());
  std::vector<double> a(f.a.begin(), f.a.end());
  b.resize(n, 0.0);
  a.resize(n, 0.0);

  std::vector<double> zi(n - 1, 0.0);
  double bsum = 0.0, asum_all = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    bsum += b[k] - a[k] * b[0];
    asum_all += a[k];
  }
  zi[0] = bsum / asum_all;
  double asum = 1.0, csum = 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    asum += a[k];
    csum += b[k] - a[k] * b[0];
    zi[k] = asum * zi[0] - csum;
  }
  return zi;
}

std::vector<double> filtfilt(const FilterCoeffs& f, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw DataError("filtfilt needs at least 2 samples");
  const std::size_t flen = std::max(f.a.size(), f.b.size());
  const std::size_t padlen = std::min(3 * flen, n - 1);

  // Odd reflection at both ends.
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i)
    ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  std::vector<double> zi = lfilter_zi(f);
  std::vector<double> z0(zi.size());

  for (std::size_t i = 0; i < zi.size(); ++i) z0[i] = zi[i] * ext.front();
  std::vector<double> y = lfilter(f, ext, z0);
  std::reverse(y.begin(), y.end());
  for (std::size_t i = 0; i < zi.size(); ++i) z0[i] = zi[i] * y.front();
  y = lfilter(f, y, z0);
  std::reverse(y.begin(), y.end());

  return {y.begin() + static_cast<std::ptrdiff_t>(padlen),
          y.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

}  // namespace tep
