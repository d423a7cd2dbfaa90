#include "tep/synth.hpp"

#include <cmath>
#include <numbers>

#include "tep/errors.hpp"
#include "tep/rng.hpp"

namespace tep {

void TepModel::validate() const {
  if (components.empty()) throw ConfigError("model needs at least one component");
  for (const TepComponent& c : components) {
    if (!(c.decay_tau_s > 0.0)) throw ConfigError("decay_tau must be > 0");
    if (!(c.frequency_hz > 0.0)) throw ConfigError("frequency must be > 0");
  }
  if (noise_sigma_uv < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (noise_model == NoiseModel::Ar1 && !(ar1_rho > -1.0 && ar1_rho < 1.0))
    throw ConfigError("AR(1) rho must be in (-1, 1)");
}

void CohortSpec::validate() const {
  if (n_subjects < 1 || n_trials < 1 || n_channels < 1)
    throw ConfigError("cohort counts must be >= 1");
  if (jitter_rel < 0.0) throw ConfigError("jitter must be >= 0");
  base.validate();
}

TimeAxis standard_epoch_axis() { return TimeAxis{1000.0, -0.5, 1500}; }

namespace {

double envelope(const TepModel& model, double t) {
  double e = 0.0;
  for (const TepComponent& c : model.components)
    e += std::abs(c.amplitude_uv) * std::exp(-t / c.decay_tau_s);
  return e;
}

std::vector<double> render_signal(const TepModel& model, const TimeAxis& time) {
  std::vector<double> x(time.n_samples, 0.0);
  for (std::size_t i = 0; i < time.n_samples; ++i) {
    const double t = time.time_at(i);
    if (t <= 0.0) continue;
    double v = 0.0;
    for (const TepComponent& c : model.components)
      v += c.amplitude_uv * std::exp(-t / c.decay_tau_s) *
           std::sin(2.0 * std::numbers::pi * c.frequency_hz * t + c.phase_rad);
    x[i] = v;
  }
  return x;
}

void add_noise(std::vector<double>& x, const TepModel& model, Rng& rng) {
  const double sigma = model.noise_sigma_uv;
  if (sigma <= 0.0) return;
  if (model.noise_model == NoiseModel::White) {
    for (double& v : x) v += sigma * rng.gauss();
  } else {
    const double rho = model.ar1_rho;
    const double innov = sigma * std::sqrt(1.0 - rho * rho);
    double state = sigma * rng.gauss();  // stationary start
    for (double& v : x) {
      v += state;
      state = rho * state + innov * rng.gauss();
    }
  }
}

}  // namespace

double envelope_return_time(const TepModel& model, const TimeAxis& time) {
  model.validate();
  const double sigma = model.noise_sigma_uv;
  if (!(sigma > 0.0) || envelope(model, time.t_end()) >= sigma)
    throw DegenerateError("unresolvable ground truth");
  if (envelope(model, 0.0) <= sigma) return 0.0;
  double lo = 0.0, hi = time.t_end();
  // Envelope is strictly decreasing, so the crossing is unique.
  while (hi - lo > 1e-6) {
    const double mid = 0.5 * (lo + hi);
    (envelope(model, mid) >= sigma ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GeneratedTrial gen_trial(const TepModel& model, const TimeAxis& time,
                         std::uint64_t seed, const std::string& channel_label) {
  model.validate();
  time.validate();
  GeneratedTrial out;
  std::vector<double> x = render_signal(model, time);
  Rng rng(seed);
  add_noise(x, model, rng);
  out.epoch.time = time;
  out.epoch.channels = {channel_label};
  out.epoch.data = {std::move(x)};
  if (model.noise_sigma_uv > 0.0)
    out.ground_truth_return_s = envelope_return_time(model, time);
  return out;
}

Cohort gen_cohort(const CohortSpec& spec, std::uint64_t seed) {
  spec.validate();
  const TimeAxis time = standard_epoch_axis();
  Cohort cohort;
  cohort.subjects.reserve(spec.n_subjects);

  for (std::size_t s = 0; s < spec.n_subjects; ++s) {
    const std::uint64_t subj_seed = mix_seed(seed, s);
    Rng jitter_rng(mix_seed(subj_seed, 0));

    CohortSubject subj;
    subj.subject_id = spec.group + "_" + std::to_string(s + 1);
    subj.group = spec.group;
    subj.model = spec.base;
    for (TepComponent& c : subj.model.components) {
      c.amplitude_uv *= std::max(0.2, 1.0 + spec.jitter_rel * jitter_rng.gauss());
      c.decay_tau_s *= std::max(0.2, 1.0 + spec.jitter_rel * jitter_rng.gauss());
    }
    if (subj.model.noise_sigma_uv > 0.0 &&
        envelope(subj.model, time.t_end()) < subj.model.noise_sigma_uv)
      subj.ground_truth_return_s = envelope_return_time(subj.model, time);

    // Channel-level variation is fixed per (subject, channel) across trials:
    // phases and frequencies differ per electrode so the average reference
    // keeps most of the per-channel response.
    std::vector<TepModel> channel_models(spec.n_channels, subj.model);
    for (std::size_t c = 0; c < spec.n_channels; ++c) {
      Rng ch_rng(mix_seed(subj_seed, 1000 + c));
      for (TepComponent& comp : channel_models[c].components) {
        comp.phase_rad = ch_rng.uniform(0.0, 2.0 * std::numbers::pi);
        comp.frequency_hz *= 1.0 + 0.2 * ch_rng.uniform(-1.0, 1.0);
        comp.amplitude_uv *= 1.0 + 0.1 * ch_rng.uniform(-1.0, 1.0);
      }
    }

    for (std::size_t tr = 0; tr < spec.n_trials; ++tr) {
      CohortTrial trial;
      trial.trial = static_cast<int>(tr + 1);
      trial.epoch.time = time;
      for (std::size_t c = 0; c < spec.n_channels; ++c) {
        std::vector<double> x = render_signal(channel_models[c], time);
        Rng noise_rng(mix_seed(subj_seed, 2'000'000 + tr * 1000 + c));
        add_noise(x, channel_models[c], noise_rng);
        trial.epoch.channels.push_back("ch" + std::to_string(c + 1));
        trial.epoch.data.push_back(std::move(x));
      }
      subj.trials.push_back(std::move(trial));
    }
    cohort.subjects.push_back(std::move(subj));
  }
  return cohort;
}

CohortSpec benchmark_cohort_spec(const std::string& group, double tau_s) {
  CohortSpec spec;
  spec.group = group;
  spec.base.components = {TepComponent{10.0, tau_s, 10.0, 0.0}};
  spec.base.noise_sigma_uv = 1.0;
  spec.base.noise_model = NoiseModel::White;
  return spec;
}

}  // namespace tep
