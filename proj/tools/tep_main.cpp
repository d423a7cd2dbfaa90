// tep: energy-based TMS-EEG perturbation indexes and AD/HC classification.
//
// Subcommands mirror the processing chain: simulate -> preprocess -> detect /
// metrics -> classify, plus `sweep` (window-length study) and `pipeline`
// (the whole chain in one go).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tep/errors.hpp"
#include "tep/rng.hpp"
#include "tep/io.hpp"
#include "tep/pipeline.hpp"
#include "tep/preprocess.hpp"
#include "tep/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> window_ms_override;
  std::optional<int> repeats_override;
  bool verbose{false};
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration file (INI)");
  cmd->add_option("--seed", opts.seed_override, "Override the config RNG seed");
  cmd->add_option("--window-ms", opts.window_ms_override,
                  "Override the detector sliding-window length (ms)");
  cmd->add_option("--repeats", opts.repeats_override,
                  "Override the number of LOSO repeats");
  cmd->add_flag("--verbose", opts.verbose, "Chatty progress output");
}

tep::RunConfig resolve_config(const CommonOpts& opts) {
  tep::RunConfig cfg;
  if (!opts.config_path.empty()) cfg = tep::load_run_config(opts.config_path);
  if (opts.seed_override) cfg.rng_seed = *opts.seed_override;
  if (opts.window_ms_override)
    cfg.detector.window_len_s = *opts.window_ms_override / 1000.0;
  if (opts.repeats_override) cfg.n_repeats = *opts.repeats_override;
  cfg.validate();
  return cfg;
}

tep::Provenance provenance_of(const tep::RunConfig& cfg) {
  return {tep::config_hash(cfg), cfg.rng_seed};
}

// Timestamps stay out of the data artifacts so determinism checks can be
// byte-exact; they live in this side file only.
std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

void write_provenance_file(const fs::path& path, const tep::RunConfig& cfg,
                           const std::string& command) {
  const auto now = std::chrono::system_clock::now();
  json j{{"command", command},
         {"config_hash", hex64(tep::config_hash(cfg))},
         {"seed", cfg.rng_seed},
         {"version", tep::kToolVersion},
         {"timestamp_unix_ms",
          std::chrono::duration_cast<std::chrono::milliseconds>(
              now.time_since_epoch())
              .count()}};
  std::ofstream out(path);
  if (!out) throw tep::IoError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<tep::TrialRecord> preprocess_records(
    const std::vector<tep::TrialRecord>& records, const tep::RunConfig& cfg,
    bool verbose) {
  std::vector<tep::TrialRecord> out;
  out.reserve(records.size());
  for (const tep::TrialRecord& rec : records) {
    tep::TrialRecord p = rec;
    std::vector<std::string> notes;
    p.epoch = tep::preprocess_epoch(rec.epoch, cfg.preprocess,
                                    verbose ? &notes : nullptr);
    if (verbose)
      for (const std::string& n : notes)
        std::cerr << rec.subject_id << "/" << rec.trial << ": " << n << "\n";
    out.push_back(std::move(p));
  }
  return out;
}

int run_simulate(const CommonOpts& opts, const std::string& outdir,
                 std::size_t subjects, std::size_t trials, std::size_t channels,
                 double tau_hc, double tau_ad, double amplitude, double sigma,
                 double jitter) {
  tep::RunConfig cfg = resolve_config(opts);
  fs::create_directories(outdir);

  auto make = [&](const std::string& group, double tau, std::uint64_t stream) {
    tep::CohortSpec spec = tep::benchmark_cohort_spec(group, tau);
    spec.n_subjects = subjects;
    spec.n_trials = trials;
    spec.n_channels = channels;
    spec.jitter_rel = jitter;
    spec.base.components.front().amplitude_uv = amplitude;
    spec.base.noise_sigma_uv = sigma;
    return tep::gen_cohort(spec, tep::mix_seed(cfg.rng_seed, stream));
  };
  tep::Cohort hc = make("HC", tau_hc, 1);
  tep::Cohort ad = make("AD", tau_ad, 2);

  tep::Cohort merged;
  merged.subjects = hc.subjects;
  merged.subjects.insert(merged.subjects.end(), ad.subjects.begin(),
                         ad.subjects.end());
  auto records = tep::cohort_to_records(merged);
  tep::write_trials(fs::path(outdir) / "trials.csv", records,
                    provenance_of(cfg));
  tep::write_manifest(fs::path(outdir) / "manifest.json", merged,
                      provenance_of(cfg));
  write_provenance_file(fs::path(outdir) / "provenance.json", cfg, "simulate");
  if (opts.verbose)
    std::cerr << "simulate: " << records.size() << " trials written\n";
  return 0;
}

int run_preprocess(const CommonOpts& opts, const std::string& input,
                   const std::string& output) {
  tep::RunConfig cfg = resolve_config(opts);
  auto records = tep::load_trials(input);
  auto processed = preprocess_records(records, cfg, opts.verbose);
  tep::write_trials(output, processed, provenance_of(cfg));
  write_provenance_file(fs::path(output).string() + ".provenance.json", cfg,
                        "preprocess");
  return 0;
}

int run_detect(const CommonOpts& opts, const std::string& input,
               const std::string& output) {
  tep::RunConfig cfg = resolve_config(opts);
  auto records = tep::load_trials(input);
  auto metrics = tep::compute_dataset_metrics(records, cfg.detector);
  tep::write_detections_csv(output, metrics, provenance_of(cfg));
  write_provenance_file(fs::path(output).string() + ".provenance.json", cfg,
                        "detect");
  return 0;
}

int run_metrics(const CommonOpts& opts, const std::string& input,
                const std::string& metrics_out, const std::string& features_out) {
  tep::RunConfig cfg = resolve_config(opts);
  auto records = tep::load_trials(input);
  auto metrics = tep::compute_dataset_metrics(records, cfg.detector);
  tep::write_metrics_csv(metrics_out, metrics, provenance_of(cfg));
  if (!features_out.empty()) {
    auto features = tep::aggregate_dataset(metrics);
    tep::write_features_csv(features_out, features, provenance_of(cfg));
  }
  write_provenance_file(fs::path(metrics_out).string() + ".provenance.json", cfg,
                        "metrics");
  return 0;
}

int run_classify(const CommonOpts& opts, const std::string& input,
                 const std::string& output) {
  tep::RunConfig cfg = resolve_config(opts);
  auto features = tep::load_features_csv(input);
  tep::ForestConfig fc = cfg.forest;
  fc.rng_seed = cfg.rng_seed;
  tep::CvReport report =
      tep::loso_cv(features, fc, cfg.n_repeats, cfg.positive_label);
  tep::write_cv_report(output, report, provenance_of(cfg));
  write_provenance_file(fs::path(output).string() + ".provenance.json", cfg,
                        "classify");
  if (opts.verbose)
    std::cerr << "classify: mean accuracy " << report.accuracy.mean << "\n";
  return 0;
}

int run_sweep(const CommonOpts& opts, const std::string& input,
              const std::string& output, std::vector<double> windows_ms) {
  tep::RunConfig cfg = resolve_config(opts);
  auto records = tep::load_trials(input);
  if (windows_ms.empty()) windows_ms = {5.0, 10.0, 20.0, 30.0, 40.0};
  std::vector<double> windows_s;
  for (double w : windows_ms) windows_s.push_back(w / 1000.0);
  tep::ForestConfig fc = cfg.forest;
  fc.rng_seed = cfg.rng_seed;
  tep::SweepResult sweep =
      tep::window_sweep(records, windows_s, cfg.detector, fc, cfg.n_repeats,
                        cfg.positive_label);
  tep::write_sweep_csv(output, sweep.rows, provenance_of(cfg));
  write_provenance_file(fs::path(output).string() + ".provenance.json", cfg,
                        "sweep");
  return 0;
}

int run_pipeline(const CommonOpts& opts, const std::string& input,
                 const std::string& outdir, bool skip_preprocess) {
  tep::RunConfig cfg = resolve_config(opts);
  fs::create_directories(outdir);
  const fs::path dir(outdir);

  auto records = tep::load_trials(input);
  if (!skip_preprocess) {
    records = preprocess_records(records, cfg, opts.verbose);
    tep::write_trials(dir / "processed.csv", records, provenance_of(cfg));
  }
  auto metrics = tep::compute_dataset_metrics(records, cfg.detector);
  tep::write_detections_csv(dir / "detections.csv", metrics, provenance_of(cfg));
  tep::write_metrics_csv(dir / "metrics.csv", metrics, provenance_of(cfg));
  auto features = tep::aggregate_dataset(metrics);
  tep::write_features_csv(dir / "features.csv", features, provenance_of(cfg));
  tep::ForestConfig fc = cfg.forest;
  fc.rng_seed = cfg.rng_seed;
  tep::CvReport report =
      tep::loso_cv(features, fc, cfg.n_repeats, cfg.positive_label);
  tep::write_cv_report(dir / "cv_report.json", report, provenance_of(cfg));
  write_provenance_file(dir / "provenance.json", cfg, "pipeline");
  if (opts.verbose)
    std::cerr << "pipeline: mean accuracy " << report.accuracy.mean << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-based TMS-EEG perturbation indexes (TEDI/EDI/TEI) "
               "and Random Forest LOSO classification"};
  app.require_subcommand(1);

  CommonOpts opts;

  // simulate
  auto* sim = app.add_subcommand("simulate",
                                 "Generate two synthetic cohorts (HC/AD)");
  std::string sim_out;
  std::size_t sim_subjects = 17, sim_trials = 40, sim_channels = 8;
  double sim_tau_hc = 0.08, sim_tau_ad = 0.20, sim_amp = 10.0, sim_sigma = 1.0,
         sim_jitter = 0.1;
  sim->add_option("--output", sim_out, "Output directory")->required();
  sim->add_option("--subjects", sim_subjects, "Subjects per cohort");
  sim->add_option("--trials", sim_trials, "Trials per subject");
  sim->add_option("--channels", sim_channels, "Channels per trial");
  sim->add_option("--tau-hc", sim_tau_hc, "HC decay tau (s)");
  sim->add_option("--tau-ad", sim_tau_ad, "AD decay tau (s)");
  sim->add_option("--amplitude", sim_amp, "Response amplitude (uV)");
  sim->add_option("--noise-sigma", sim_sigma, "Noise sigma (uV)");
  sim->add_option("--jitter", sim_jitter, "Per-subject parameter jitter");
  add_common(sim, opts);

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Clean epoched trials");
  std::string pre_in, pre_out;
  pre->add_option("--input", pre_in, "Input trial CSV")->required();
  pre->add_option("--output", pre_out, "Output trial CSV")->required();
  add_common(pre, opts);

  // detect
  auto* det = app.add_subcommand("detect", "Return-to-baseline detection");
  std::string det_in, det_out;
  det->add_option("--input", det_in, "Input trial CSV")->required();
  det->add_option("--output", det_out, "Output detections CSV")->required();
  add_common(det, opts);

  // metrics
  auto* met = app.add_subcommand("metrics", "TEDI/EDI/TEI per trial/channel");
  std::string met_in, met_out, met_features;
  met->add_option("--input", met_in, "Input trial CSV")->required();
  met->add_option("--output", met_out, "Output metrics CSV")->required();
  met->add_option("--output-features", met_features,
                  "Optional per-subject features CSV");
  add_common(met, opts);

  // classify
  auto* cls = app.add_subcommand("classify", "Random Forest LOSO CV");
  std::string cls_in, cls_out;
  cls->add_option("--input", cls_in, "Input features CSV")->required();
  cls->add_option("--output", cls_out, "Output CV report JSON")->required();
  add_common(cls, opts);

  // sweep
  auto* swp = app.add_subcommand("sweep", "Window-length sweep");
  std::string swp_in, swp_out;
  std::vector<double> swp_windows;
  swp->add_option("--input", swp_in, "Input trial CSV")->required();
  swp->add_option("--output", swp_out, "Output sweep CSV")->required();
  swp->add_option("--windows-ms", swp_windows,
                  "Window lengths in ms (default 5 10 20 30 40)");
  add_common(swp, opts);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run the whole chain");
  std::string pipe_in, pipe_out;
  bool pipe_skip_pre = false;
  pipe->add_option("--input", pipe_in, "Input trial CSV")->required();
  pipe->add_option("--output", pipe_out, "Output directory")->required();
  pipe->add_flag("--skip-preprocess", pipe_skip_pre,
                 "Treat the input as already preprocessed");
  add_common(pipe, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return run_simulate(opts, sim_out, sim_subjects, sim_trials, sim_channels,
                          sim_tau_hc, sim_tau_ad, sim_amp, sim_sigma, sim_jitter);
    if (pre->parsed()) return run_preprocess(opts, pre_in, pre_out);
    if (det->parsed()) return run_detect(opts, det_in, det_out);
    if (met->parsed()) return run_metrics(opts, met_in, met_out, met_features);
    if (cls->parsed()) return run_classify(opts, cls_in, cls_out);
    if (swp->parsed()) return run_sweep(opts, swp_in, swp_out, swp_windows);
    if (pipe->parsed()) return run_pipeline(opts, pipe_in, pipe_out, pipe_skip_pre);
  } catch (const tep::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const tep::IoError& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 3;
  } catch (const tep::DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 4;
  } catch (const tep::DegenerateError& e) {
    std::cerr << "error: degenerate: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
