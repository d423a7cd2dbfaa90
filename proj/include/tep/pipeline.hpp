#pragma once

#include <span>
#include <string>
#include <vector>

#include "tep/classifier.hpp"
#include "tep/detector.hpp"
#include "tep/metrics.hpp"
#include "tep/signal_core.hpp"
#include "tep/synth.hpp"

namespace tep {

// One multi-channel trial with subject metadata, the unit the dataset-level
// operations work on.
struct TrialRecord {
  std::string subject_id;
  std::string group;
  int trial{0};
  Epoch epoch;
};

struct TrialChannelMetrics {
  std::string subject_id;
  std::string group;
  TepMetrics metrics;  // carries channel and trial index
};

// Detector + metrics for every (trial, channel) pair, in input order.
std::vector<TrialChannelMetrics> compute_dataset_metrics(
    std::span<const TrialRecord> records, const DetectorConfig& cfg);

// Per-subject averages, subjects in order of first appearance.
std::vector<SubjectFeatures> aggregate_dataset(
    std::span<const TrialChannelMetrics> metrics);

struct SweepRow {
  double window_ms{0.0};
  int repeat{0};
  double accuracy{0.0}, sensitivity{0.0}, specificity{0.0}, f1{0.0};
};

struct SweepResult {
  std::vector<std::pair<double, CvReport>> reports;  // (window seconds, report)
  std::vector<SweepRow> rows;                        // one per (window, repeat)
};

// Full detector -> metrics -> LOSO chain per window length.
SweepResult window_sweep(std::span<const TrialRecord> records,
                         std::span<const double> window_lens_s,
                         DetectorConfig detector_cfg,
                         const ForestConfig& forest_cfg, int n_repeats,
                         const std::string& positive_label = "AD");

std::vector<TrialRecord> cohort_to_records(const Cohort& cohort);

}  // namespace tep
