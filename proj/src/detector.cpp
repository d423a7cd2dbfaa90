#include "tep/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tep/errors.hpp"

namespace tep {

void DetectorConfig::validate() const {
  if (!(window_len_s > 0.0)) throw ConfigError("window_len must be > 0");
  baseline.validate();
  if (!(baseline.end < 0.0)) throw ConfigError("baseline must end before the pulse");
  if (!(0.0 < search_lo_s && search_lo_s < search_hi_s))
    throw ConfigError("need 0 < search_lo < search_hi");
  if (min_supra_samples < 1) throw ConfigError("min_supra_samples must be >= 1");
  if (!(gap_fraction > 0.0 && gap_fraction < 1.0))
    throw ConfigError("gap_fraction must be in (0, 1)");
}

EnergySeries energy_signal(std::span<const double> tep, const TimeAxis& time,
                           double window_len_s) {
  if (tep.size() != time.n_samples)
    throw DataError("sample count does not match time axis");
  const long long w = std::llround(window_len_s * time.sampling_rate);
  if (w < 2) throw ConfigError("energy window shorter than 2 samples");

  const std::size_t n = tep.size();
  // Compensated (Neumaier) prefix sums of squares; storing the running
  // compensation alongside keeps the windowed difference accurate to the
  // window sum's own scale instead of the full prefix magnitude.
  std::vector<double> cs(n + 1, 0.0), comp(n + 1, 0.0);
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = tep[i] * tep[i];
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
    cs[i + 1] = s;
    comp[i + 1] = c;
  }

  const long long half_lo = (w - 1) / 2;
  const long long half_hi = w / 2;
  EnergySeries out;
  out.time = time;
  out.window_len_s = window_len_s;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long long a = std::max<long long>(0, static_cast<long long>(i) - half_lo);
    const long long b =
        std::min<long long>(static_cast<long long>(n) - 1,
                            static_cast<long long>(i) + half_hi);
    const double sum = (cs[b + 1] - cs[a]) + (comp[b + 1] - comp[a]);
    out.values[i] = sum / static_cast<double>(b - a + 1);
  }
  return out;
}

double baseline_threshold(const EnergySeries& energy, const TimeWindow& baseline) {
  baseline.validate();
  const std::size_t i0 = energy.time.first_at_or_after(baseline.start);
  const long long i1 = energy.time.last_at_or_before(baseline.end);
  if (static_cast<long long>(i0) + 1 > i1)
    throw DataError("baseline segment has fewer than 2 samples");
  std::span<const double> seg(energy.values.data() + i0,
                              static_cast<std::size_t>(i1) - i0 + 1);
  MeanStd ms = mean_std(seg);
  return ms.mean + ms.std;
}

std::vector<double> supra_threshold_times(const EnergySeries& energy,
                                          double threshold,
                                          const TimeWindow& search) {
  std::vector<double> out;
  const std::size_t i0 = energy.time.first_at_or_after(search.start);
  const long long i1 = energy.time.last_at_or_before(search.end);
  for (long long i = static_cast<long long>(i0); i <= i1; ++i)
    if (energy.values[static_cast<std::size_t>(i)] > threshold)
      out.push_back(energy.time.time_at(static_cast<std::size_t>(i)));
  return out;
}

DetectionResult detect_return_to_baseline(std::span<const double> tep,
                                          const TimeAxis& time,
                                          const DetectorConfig& cfg,
                                          double post_start_s) {
  cfg.validate();
  EnergySeries energy = energy_signal(tep, time, cfg.window_len_s);

  const std::size_t b0 = time.first_at_or_after(cfg.baseline.start);
  const long long b1 = time.last_at_or_before(cfg.baseline.end);
  if (static_cast<long long>(b0) + 1 > b1)
    throw DataError("baseline segment has fewer than 2 samples");
  MeanStd base = mean_std(std::span<const double>(
      energy.values.data() + b0, static_cast<std::size_t>(b1) - b0 + 1));

  const TimeWindow post{post_start_s, time.t_end()};
  DetectionResult r;
  r.threshold_used = base.mean + base.std;
  r.crossings_s = supra_threshold_times(energy, r.threshold_used, post);

  if (static_cast<int>(r.crossings_s.size()) < cfg.min_supra_samples) {
    // Fallback: lower the threshold to the baseline mean.
    r.fallback_applied = true;
    r.threshold_used = base.mean;
    r.crossings_s = supra_threshold_times(energy, r.threshold_used, post);
    if (static_cast<int>(r.crossings_s.size()) < cfg.min_supra_samples) {
      r.no_response = true;
      r.tedi_s = cfg.search_lo_s;
      return r;
    }
  }

  // Virtual final crossing at the epoch end makes "last burst then permanent
  // silence" yield a terminal gap.
  std::vector<double> pts = r.crossings_s;
  pts.push_back(time.t_end());
  r.gaps_s.resize(pts.size() - 1);
  double max_gap = 0.0;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    r.gaps_s[j] = pts[j + 1] - pts[j];
    max_gap = std::max(max_gap, r.gaps_s[j]);
  }

  double raw = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < r.gaps_s.size(); ++j) {
    if (r.gaps_s[j] > cfg.gap_fraction * max_gap) {
      raw = pts[j];  // settling at the left edge of the qualifying gap
      break;
    }
  }
  if (std::isnan(raw)) {
    raw = r.crossings_s.back();
    r.no_response = true;
  }
  r.tedi_s = std::clamp(raw, cfg.search_lo_s, cfg.search_hi_s);
  return r;
}

}  // namespace tep
