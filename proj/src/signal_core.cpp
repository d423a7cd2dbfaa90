#include "tep/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tep/errors.hpp"

namespace tep {

namespace {
// Tolerance for snapping times to the sample grid.
constexpr double kTimeEps = 1e-9;
}  // namespace

std::size_t TimeAxis::first_at_or_after(double t) const {
  double pos = (t - t_start) * sampling_rate;
  long long i = static_cast<long long>(std::ceil(pos - kTimeEps * sampling_rate));
  if (i < 0) i = 0;
  if (i > static_cast<long long>(n_samples)) i = static_cast<long long>(n_samples);
  return static_cast<std::size_t>(i);
}

long long TimeAxis::last_at_or_before(double t) const {
  double pos = (t - t_start) * sampling_rate;
  long long i = static_cast<long long>(std::floor(pos + kTimeEps * sampling_rate));
  if (i < -1) i = -1;
  if (i >= static_cast<long long>(n_samples)) i = static_cast<long long>(n_samples) - 1;
  return i;
}

void TimeAxis::validate() const {
  if (!(sampling_rate > 0.0)) throw ConfigError("sampling_rate must be > 0");
  if (n_samples < 2) throw ConfigError("time axis needs at least 2 samples");
}

void TimeWindow::validate() const {
  if (!(start < end)) throw ConfigError("time window start must be < end");
}

void Epoch::validate() const {
  time.validate();
  if (channels.size() != data.size())
    throw DataError("channel label/data count mismatch");
  for (const auto& ch : data) {
    if (ch.size() != time.n_samples)
      throw DataError("channel length does not match time axis");
    for (double v : ch)
      if (!std::isfinite(v)) throw DataError("non-finite sample value");
  }
  if (excised) {
    excised->validate();
    if (!excised->contains(0.0))
      throw DataError("excised window must contain t=0");
  }
}

std::vector<double> rectify_normalize(std::span<const double> x,
                                      const std::optional<TimeWindow>& excised,
                                      const TimeAxis& time) {
  if (x.size() != time.n_samples)
    throw DataError("sample count does not match time axis");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (excised && excised->contains(time.time_at(i))) continue;
    m = std::max(m, std::abs(x[i]));
  }
  if (m == 0.0) throw DegenerateError("degenerate flat trial");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::abs(x[i]) / m;
  return out;
}

namespace {

// Linear interpolation of x at time t (t inside the sampled span).
double value_at(std::span<const double> x, const TimeAxis& time, double t) {
  double pos = (t - time.t_start) * time.sampling_rate;
  long long lo = static_cast<long long>(std::floor(pos));
  if (lo < 0) lo = 0;
  if (lo >= static_cast<long long>(x.size()) - 1) lo = static_cast<long long>(x.size()) - 2;
  double frac = pos - static_cast<double>(lo);
  if (frac < 0.0) frac = 0.0;
  if (frac > 1.0) frac = 1.0;
  return x[static_cast<std::size_t>(lo)] * (1.0 - frac) +
         x[static_cast<std::size_t>(lo) + 1] * frac;
}

}  // namespace

double trapezoid_auc(std::span<const double> x, const TimeAxis& time,
                     const TimeWindow& window) {
  window.validate();
  if (x.size() != time.n_samples)
    throw DataError("sample count does not match time axis");
  const double eps = kTimeEps;
  if (window.start < time.t_start - eps || window.end > time.t_end() + eps)
    throw DataError("AUC window outside epoch span");

  std::size_t i0 = time.first_at_or_after(window.start);
  long long i1 = time.last_at_or_before(window.end);

  double vs = value_at(x, time, window.start);
  double ve = value_at(x, time, window.end);

  // Whole window inside one inter-sample gap.
  if (static_cast<long long>(i0) > i1)
    return 0.5 * (vs + ve) * window.length();

  double area = 0.0;
  double t0 = time.time_at(i0);
  if (t0 > window.start + eps) area += 0.5 * (vs + x[i0]) * (t0 - window.start);
  const double dt = time.dt();
  for (std::size_t i = i0; static_cast<long long>(i) < i1; ++i)
    area += 0.5 * (x[i] + x[i + 1]) * dt;
  double t1 = time.time_at(static_cast<std::size_t>(i1));
  if (t1 < window.end - eps)
    area += 0.5 * (x[static_cast<std::size_t>(i1)] + ve) * (window.end - t1);
  return area;
}

MeanStd mean_std(std::span<const double> x) {
  if (x.size() < 2) throw DataError("mean_std needs at least 2 samples");
  double sum = 0.0;
  for (double v : x) sum += v;
  double mean = sum / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(x.size()))};
}

}  // namespace tep
