#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tep/classifier.hpp"
#include "tep/pipeline.hpp"
#include "tep/preprocess.hpp"
#include "tep/synth.hpp"

namespace tep {

inline constexpr const char* kToolVersion = "0.1.0";

// Everything one run needs, read from an INI-style config file.
struct RunConfig {
  PreprocessConfig preprocess;
  DetectorConfig detector;
  ForestConfig forest;
  int n_repeats{100};
  std::uint64_t rng_seed{0};
  std::string positive_label{"AD"};

  void validate() const;
};

// Parse `[section]` / `key = value` text. Unknown sections or keys are
// rejected. Missing keys keep their defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical key=value dump (fixed order, round-trip float format).
std::string canonical_config_text(const RunConfig& cfg);
// FNV-1a 64 over the canonical text.
std::uint64_t config_hash(const RunConfig& cfg);

struct Provenance {
  std::uint64_t config_hash{0};
  std::uint64_t seed{0};
};

struct LoadReport {
  std::size_t n_rows{0};
  std::map<std::string, std::size_t> rows_per_subject;
};

// Long-format trial CSV: subject_id,group,trial,channel,time_ms,value_uv.
void write_trials(const std::filesystem::path& path,
                  std::span<const TrialRecord> records, const Provenance& prov);
std::vector<TrialRecord> load_trials(const std::filesystem::path& path,
                                     LoadReport* report = nullptr);

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const TrialChannelMetrics> metrics,
                       const Provenance& prov);
void write_features_csv(const std::filesystem::path& path,
                        std::span<const SubjectFeatures> features,
                        const Provenance& prov);
std::vector<SubjectFeatures> load_features_csv(const std::filesystem::path& path);

void write_detections_csv(const std::filesystem::path& path,
                          std::span<const TrialChannelMetrics> metrics,
                          const Provenance& prov);

nlohmann::json cv_report_json(const CvReport& report, const Provenance& prov);
void write_cv_report(const std::filesystem::path& path, const CvReport& report,
                     const Provenance& prov);

void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const SweepRow> rows, const Provenance& prov);

void write_manifest(const std::filesystem::path& path, const Cohort& cohort,
                    const Provenance& prov);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace tep
