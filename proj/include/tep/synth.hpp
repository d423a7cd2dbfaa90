#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tep/signal_core.hpp"

namespace tep {

struct TepComponent {
  double amplitude_uv{10.0};
  double decay_tau_s{0.1};
  double frequency_hz{10.0};
  double phase_rad{0.0};
};

enum class NoiseModel { White, Ar1 };

struct TepModel {
  std::vector<TepComponent> components;
  double noise_sigma_uv{0.0};
  NoiseModel noise_model{NoiseModel::White};
  double ar1_rho{0.95};  // only used for NoiseModel::Ar1

  void validate() const;  // throws ConfigError
};

struct GeneratedTrial {
  Epoch epoch;  // single channel
  // Time when the noiseless amplitude envelope first falls below
  // noise_sigma; absent when noise_sigma == 0 (no reference level).
  std::optional<double> ground_truth_return_s;
};

// Time when sum_j |A_j| exp(-t/tau_j) first drops below noise_sigma,
// found by bisection. Throws DegenerateError("unresolvable ground truth")
// when the envelope never falls below noise_sigma within the epoch.
double envelope_return_time(const TepModel& model, const TimeAxis& time);

// Damped-sinusoid response for t > 0, zero before, plus noise everywhere.
GeneratedTrial gen_trial(const TepModel& model, const TimeAxis& time,
                         std::uint64_t seed,
                         const std::string& channel_label = "ch1");

struct CohortSpec {
  std::size_t n_subjects{17};
  std::size_t n_trials{40};
  std::size_t n_channels{8};
  std::string group{"HC"};
  double jitter_rel{0.1};  // relative std of per-subject amplitude/tau jitter
  TepModel base;

  void validate() const;  // throws ConfigError
};

struct CohortTrial {
  int trial{0};
  Epoch epoch;  // multi-channel
};

struct CohortSubject {
  std::string subject_id;
  std::string group;
  TepModel model;  // subject-level jittered model
  std::optional<double> ground_truth_return_s;
  std::vector<CohortTrial> trials;
};

struct Cohort {
  std::vector<CohortSubject> subjects;
};

// Per-subject jittered models, per-channel phase/frequency variation (so the
// average reference does not cancel the response), independent noise per
// trial and channel. Fully determined by (spec, seed).
Cohort gen_cohort(const CohortSpec& spec, std::uint64_t seed);

// The benchmark cohort used in tests: damped 10 Hz response, amplitude
// 10 uV, white noise sigma 1 uV (SNR ~ 10), configurable decay tau.
CohortSpec benchmark_cohort_spec(const std::string& group, double tau_s);

// Standard epoch grid: [-0.5, 1.0) s at 1000 Hz.
TimeAxis standard_epoch_axis();

}  // namespace tep
