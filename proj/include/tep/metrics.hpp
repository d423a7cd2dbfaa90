#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tep/detector.hpp"
#include "tep/signal_core.hpp"

namespace tep {

// The three perturbation indexes for one trial/channel.
struct TepMetrics {
  double tedi_s{0.0};
  double edi_rad{0.0};
  double tei{0.0};  // dimensionless * seconds
  DetectionResult detection;
  std::string channel;
  int trial{0};
};

// Per-subject 3-vector: (mean TEDI, mean EDI, mean TEI) over all
// (trial, channel) pairs.
struct SubjectFeatures {
  std::string subject_id;
  std::string group;
  std::array<double, 3> features{0.0, 0.0, 0.0};
  std::size_t n_trials_used{0};
  std::size_t n_no_response{0};
};

// Angle between the detected return time and the TEP peak before it:
// atan(A_peak / (tedi - t_peak)), with pi/2 when they coincide.
// Peak search runs over (post_start, tedi].
double compute_edi(std::span<const double> tep, const TimeAxis& time,
                   double tedi_s, double post_start_s = 0.0);

// Area under the normalized rectified TEP over [post_start, tedi].
double compute_tei(std::span<const double> tep, const TimeAxis& time,
                   double tedi_s, double post_start_s = 0.0);

// rectify_normalize -> detect_return_to_baseline -> EDI/TEI.
TepMetrics compute_trial_metrics(std::span<const double> raw_channel,
                                 const TimeAxis& time,
                                 const std::optional<TimeWindow>& excised,
                                 const DetectorConfig& cfg,
                                 std::string channel = {}, int trial = 0);

// Unweighted mean of each metric across all entries.
SubjectFeatures aggregate_subject(std::span<const TepMetrics> metrics,
                                  std::string subject_id, std::string group);

}  // namespace tep
