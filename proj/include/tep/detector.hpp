#pragma once

#include <span>
#include <vector>

#include "tep/signal_core.hpp"

namespace tep {

struct DetectorConfig {
  double window_len_s{0.020};          // sliding energy window
  TimeWindow baseline{-0.500, -0.200};
  double search_lo_s{0.080};           // TEDI lower bound
  double search_hi_s{0.850};           // TEDI upper bound
  int min_supra_samples{5};
  double gap_fraction{0.75};

  void validate() const;  // throws ConfigError
};

// Per-sample sliding-window energy of a rectified, normalized TEP.
struct EnergySeries {
  TimeAxis time;
  std::vector<double> values;  // mean of squares, >= 0
  double window_len_s{0.0};
};

struct DetectionResult {
  double tedi_s{0.0};
  double threshold_used{0.0};
  bool fallback_applied{false};
  bool no_response{false};
  std::vector<double> crossings_s;  // supra-threshold sample times, ascending
  std::vector<double> gaps_s;       // diffs including the terminal gap
};

// values[i] = mean of squares over a window centered at sample i, truncated
// at the epoch edges to the available samples.
EnergySeries energy_signal(std::span<const double> tep, const TimeAxis& time,
                           double window_len_s);

// mean + 1*std of the energy values whose times fall inside `baseline`.
double baseline_threshold(const EnergySeries& energy, const TimeWindow& baseline);

// Sorted times of all samples with energy strictly above `threshold` within
// the closed window `search`.
std::vector<double> supra_threshold_times(const EnergySeries& energy,
                                          double threshold,
                                          const TimeWindow& search);

// Full return-to-baseline detection. `post_start_s` is the start of the
// post-pulse span (the end of the excised window, or 0 when none).
DetectionResult detect_return_to_baseline(std::span<const double> tep,
                                          const TimeAxis& time,
                                          const DetectorConfig& cfg,
                                          double post_start_s = 0.0);

}  // namespace tep
