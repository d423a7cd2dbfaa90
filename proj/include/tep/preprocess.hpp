#pragma once

#include <span>
#include <string>
#include <vector>

#include "tep/signal_core.hpp"

namespace tep {

struct PreprocessConfig {
  double band_low_hz{1.0};
  double band_high_hz{80.0};
  int filter_order{3};  // applied forward-backward (effective order 6)
  double target_rate_hz{1000.0};
  double epoch_pre_s{0.5};
  double epoch_post_s{1.0};
  TimeWindow excise_window{-0.002, 0.006};

  void validate() const;  // throws ConfigError
};

// A continuous multi-channel recording; sample 0 is at t = 0 recording time.
struct ContinuousRecording {
  double sampling_rate{1000.0};
  std::vector<std::string> channels;
  std::vector<std::vector<double>> data;  // data[ch][sample], microvolts
};

struct SegmentResult {
  std::vector<Epoch> epochs;
  std::vector<std::size_t> skipped_pulses;  // indices into pulse_times
};

// Cut one epoch per pulse with the pulse at t=0. Pulses too close to the
// recording edges are skipped and reported.
SegmentResult segment_epochs(const ContinuousRecording& rec,
                             std::span<const double> pulse_times,
                             const PreprocessConfig& cfg);

// Replace samples inside `window` with a cubic through the 2 nearest samples
// on each side; all samples outside the window are bit-identical.
Epoch excise_interpolate(const Epoch& epoch, const TimeWindow& window);

// Zero-phase Butterworth bandpass (forward-backward) per channel.
Epoch bandpass_zero_phase(const Epoch& epoch, const PreprocessConfig& cfg);

// Keep every k-th sample, k = original rate / target rate (integer).
Epoch downsample(const Epoch& epoch, double target_rate_hz);

// Subtract the per-sample mean across channels. Requires >= 2 channels.
Epoch rereference_average(const Epoch& epoch);

struct PipelineResult {
  std::vector<Epoch> epochs;
  std::vector<std::size_t> skipped_pulses;
  std::vector<std::string> provenance;  // one note per stage / event
};

// segment -> excise_interpolate -> downsample -> bandpass -> rereference.
PipelineResult preprocess_pipeline(const ContinuousRecording& rec,
                                   std::span<const double> pulse_times,
                                   const PreprocessConfig& cfg);

// The per-epoch tail of the pipeline, for data that is already epoched.
Epoch preprocess_epoch(const Epoch& epoch, const PreprocessConfig& cfg,
                       std::vector<std::string>* provenance = nullptr);

}  // namespace tep
