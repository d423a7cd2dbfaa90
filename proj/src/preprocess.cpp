#include "tep/preprocess.hpp"

#include <cmath>

#include "tep/errors.hpp"
#include "tep/filter.hpp"

namespace tep {

void PreprocessConfig::validate() const {
  if (!(band_low_hz > 0.0 && band_low_hz < band_high_hz &&
        band_high_hz < target_rate_hz / 2.0))
    throw ConfigError("band edges must satisfy 0 < low < high < target_rate/2");
  if (filter_order < 1) throw ConfigError("filter order must be >= 1");
  if (!(epoch_pre_s > 0.0 && epoch_post_s > 0.0))
    throw ConfigError("epoch_pre and epoch_post must be > 0");
  excise_window.validate();
  if (!excise_window.contains(0.0))
    throw ConfigError("excise window must contain t=0");
}

SegmentResult segment_epochs(const ContinuousRecording& rec,
                             std::span<const double> pulse_times,
                             const PreprocessConfig& cfg) {
  cfg.validate();
  if (pulse_times.empty()) throw DataError("empty pulse list");
  if (rec.data.empty()) throw DataError("recording has no channels");
  const std::size_t total = rec.data.front().size();
  for (const auto& ch : rec.data)
    if (ch.size() != total) throw DataError("channel length mismatch");

  const long long n_pre = std::llround(cfg.epoch_pre_s * rec.sampling_rate);
  const long long n_post = std::llround(cfg.epoch_post_s * rec.sampling_rate);
  const std::size_t n_epoch = static_cast<std::size_t>(n_pre + n_post);

  SegmentResult out;
  for (std::size_t p = 0; p < pulse_times.size(); ++p) {
    const long long pulse_idx = std::llround(pulse_times[p] * rec.sampling_rate);
    const long long lo = pulse_idx - n_pre;
    const long long hi = pulse_idx + n_post;  // exclusive
    if (lo < 0 || hi > static_cast<long long>(total)) {
      out.skipped_pulses.push_back(p);
      continue;
    }
    Epoch e;
    e.time = TimeAxis{rec.sampling_rate,
                      -static_cast<double>(n_pre) / rec.sampling_rate, n_epoch};
    e.channels = rec.channels;
    e.data.reserve(rec.data.size());
    for (const auto& ch : rec.data)
      e.data.emplace_back(ch.begin() + lo, ch.begin() + hi);
    out.epochs.push_back(std::move(e));
  }
  return out;
}

Epoch excise_interpolate(const Epoch& epoch, const TimeWindow& window) {
  window.validate();
  const TimeAxis& t = epoch.time;
  if (window.start < t.t_start || window.end > t.t_end())
    throw DataError("excision window outside epoch");

  const std::size_t i0 = t.first_at_or_after(window.start);
  const long long i1 = t.last_at_or_before(window.end);

  Epoch out = epoch;
  out.excised = window;
  if (static_cast<long long>(i0) > i1) return out;  // no samples inside

  if (i0 < 2 || i1 + 2 >= static_cast<long long>(t.n_samples))
    throw DataError("insufficient flanking samples for cubic interpolation");

  const std::size_t anchors[4] = {i0 - 2, i0 - 1, static_cast<std::size_t>(i1) + 1,
                                  static_cast<std::size_t>(i1) + 2};
  double tx[4];
  for (int k = 0; k < 4; ++k) tx[k] = t.time_at(anchors[k]);

  for (auto& ch : out.data) {
    double ty[4];
    for (int k = 0; k < 4; ++k) ty[k] = ch[anchors[k]];
    for (std::size_t i = i0; static_cast<long long>(i) <= i1; ++i) {
      // Lagrange cubic through the 4 anchor points.
      const double x = t.time_at(i);
      double v = 0.0;
      for (int k = 0; k < 4; ++k) {
        double lk = 1.0;
        for (int m = 0; m < 4; ++m)
          if (m != k) lk *= (x - tx[m]) / (tx[k] - tx[m]);
        v += ty[k] * lk;
      }
      ch[i] = v;
    }
  }
  return out;
}

Epoch bandpass_zero_phase(const Epoch& epoch, const PreprocessConfig& cfg) {
  FilterCoeffs f = butterworth_bandpass(cfg.filter_order, cfg.band_low_hz,
                                        cfg.band_high_hz,
                                        epoch.time.sampling_rate);
  Epoch out = epoch;
  for (auto& ch : out.data) ch = filtfilt(f, ch);
  return out;
}

Epoch downsample(const Epoch& epoch, double target_rate_hz) {
  if (!(target_rate_hz > 0.0)) throw ConfigError("target rate must be > 0");
  const double ratio = epoch.time.sampling_rate / target_rate_hz;
  const long long k = std::llround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9)
    throw ConfigError("original rate must be an integer multiple of target rate");
  if (k == 1) return epoch;

  Epoch out = epoch;
  const std::size_t n = (epoch.time.n_samples + static_cast<std::size_t>(k) - 1) /
                        static_cast<std::size_t>(k);
  out.time = TimeAxis{target_rate_hz, epoch.time.t_start, n};
  for (std::size_t c = 0; c < out.data.size(); ++c) {
    std::vector<double> d;
    d.reserve(n);
    for (std::size_t i = 0; i < epoch.time.n_samples;
         i += static_cast<std::size_t>(k))
      d.push_back(epoch.data[c][i]);
    out.data[c] = std::move(d);
  }
  return out;
}

Epoch rereference_average(const Epoch& epoch) {
  if (epoch.data.size() < 2)
    throw DataError("average re-reference needs at least 2 channels");
  Epoch out = epoch;
  const std::size_t n = epoch.time.n_samples;
  const double nch = static_cast<double>(epoch.data.size());
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& ch : epoch.data) mean += ch[i];
    mean /= nch;
    for (auto& ch : out.data) ch[i] -= mean;
  }
  return out;
}

Epoch preprocess_epoch(const Epoch& epoch, const PreprocessConfig& cfg,
                       std::vector<std::string>* provenance) {
  cfg.validate();
  auto note = [&](const std::string& s) {
    if (provenance) provenance->push_back(s);
  };
  Epoch e = excise_interpolate(epoch, cfg.excise_window);
  note("excise_interpolate");
  e = downsample(e, cfg.target_rate_hz);
  note("downsample");
  e = bandpass_zero_phase(e, cfg);
  note("bandpass_zero_phase");
  note("ICA skipped");
  if (e.data.size() >= 2) {
    e = rereference_average(e);
    note("rereference_average");
  } else {
    note("rereference skipped: single channel");
  }
  return e;
}

PipelineResult preprocess_pipeline(const ContinuousRecording& rec,
                                   std::span<const double> pulse_times,
                                   const PreprocessConfig& cfg) {
  cfg.validate();
  PipelineResult out;
  SegmentResult seg = segment_epochs(rec, pulse_times, cfg);
  out.skipped_pulses = seg.skipped_pulses;
  out.provenance.push_back("segment_epochs: " + std::to_string(seg.epochs.size()) +
                           " epochs, " + std::to_string(seg.skipped_pulses.size()) +
                           " pulses skipped");
  for (const Epoch& e : seg.epochs)
    out.epochs.push_back(preprocess_epoch(e, cfg, &out.provenance));
  return out;
}

}  // namespace tep
