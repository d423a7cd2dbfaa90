#include "tep/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tep/errors.hpp"

namespace tep {

using nlohmann::json;

void RunConfig::validate() const {
  preprocess.validate();
  detector.validate();
  forest.validate();
  if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");
  if (positive_label.empty()) throw ConfigError("positive_label must not be empty");
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  double v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("invalid number for " + what + ": '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("invalid integer for " + what + ": '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("invalid unsigned integer for " + what + ": '" + s + "'");
  return v;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "run" && section != "preprocess" && section != "detector" &&
          section != "forest")
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    const std::string qual = section + "." + key;

    if (section == "run") {
      if (key == "seed") cfg.rng_seed = parse_u64(val, qual);
      else if (key == "n_repeats") cfg.n_repeats = static_cast<int>(parse_int(val, qual));
      else if (key == "positive_label") cfg.positive_label = val;
      else throw ConfigError("unknown config key '" + qual + "'");
    } else if (section == "preprocess") {
      auto& p = cfg.preprocess;
      if (key == "band_low_hz") p.band_low_hz = parse_double(val, qual);
      else if (key == "band_high_hz") p.band_high_hz = parse_double(val, qual);
      else if (key == "filter_order") p.filter_order = static_cast<int>(parse_int(val, qual));
      else if (key == "target_rate_hz") p.target_rate_hz = parse_double(val, qual);
      else if (key == "epoch_pre_s") p.epoch_pre_s = parse_double(val, qual);
      else if (key == "epoch_post_s") p.epoch_post_s = parse_double(val, qual);
      else if (key == "excise_start_s") p.excise_window.start = parse_double(val, qual);
      else if (key == "excise_end_s") p.excise_window.end = parse_double(val, qual);
      else throw ConfigError("unknown config key '" + qual + "'");
    } else if (section == "detector") {
      auto& d = cfg.detector;
      if (key == "window_len_s") d.window_len_s = parse_double(val, qual);
      else if (key == "baseline_start_s") d.baseline.start = parse_double(val, qual);
      else if (key == "baseline_end_s") d.baseline.end = parse_double(val, qual);
      else if (key == "search_lo_s") d.search_lo_s = parse_double(val, qual);
      else if (key == "search_hi_s") d.search_hi_s = parse_double(val, qual);
      else if (key == "min_supra_samples") d.min_supra_samples = static_cast<int>(parse_int(val, qual));
      else if (key == "gap_fraction") d.gap_fraction = parse_double(val, qual);
      else throw ConfigError("unknown config key '" + qual + "'");
    } else if (section == "forest") {
      auto& f = cfg.forest;
      if (key == "n_trees") f.n_trees = static_cast<int>(parse_int(val, qual));
      else if (key == "min_samples_leaf") f.min_samples_leaf = static_cast<int>(parse_int(val, qual));
      else if (key == "features_per_split") f.features_per_split = static_cast<int>(parse_int(val, qual));
      else throw ConfigError("unknown config key '" + qual + "'");
    } else {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": key outside any section");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string canonical_config_text(const RunConfig& cfg) {
  std::ostringstream s;
  s << "run.seed=" << cfg.rng_seed << "\n"
    << "run.n_repeats=" << cfg.n_repeats << "\n"
    << "run.positive_label=" << cfg.positive_label << "\n"
    << "preprocess.band_low_hz=" << format_double(cfg.preprocess.band_low_hz) << "\n"
    << "preprocess.band_high_hz=" << format_double(cfg.preprocess.band_high_hz) << "\n"
    << "preprocess.filter_order=" << cfg.preprocess.filter_order << "\n"
    << "preprocess.target_rate_hz=" << format_double(cfg.preprocess.target_rate_hz) << "\n"
    << "preprocess.epoch_pre_s=" << format_double(cfg.preprocess.epoch_pre_s) << "\n"
    << "preprocess.epoch_post_s=" << format_double(cfg.preprocess.epoch_post_s) << "\n"
    << "preprocess.excise_start_s=" << format_double(cfg.preprocess.excise_window.start) << "\n"
    << "preprocess.excise_end_s=" << format_double(cfg.preprocess.excise_window.end) << "\n"
    << "detector.window_len_s=" << format_double(cfg.detector.window_len_s) << "\n"
    << "detector.baseline_start_s=" << format_double(cfg.detector.baseline.start) << "\n"
    << "detector.baseline_end_s=" << format_double(cfg.detector.baseline.end) << "\n"
    << "detector.search_lo_s=" << format_double(cfg.detector.search_lo_s) << "\n"
    << "detector.search_hi_s=" << format_double(cfg.detector.search_hi_s) << "\n"
    << "detector.min_supra_samples=" << cfg.detector.min_supra_samples << "\n"
    << "detector.gap_fraction=" << format_double(cfg.detector.gap_fraction) << "\n"
    << "forest.n_trees=" << cfg.forest.n_trees << "\n"
    << "forest.min_samples_leaf=" << cfg.forest.min_samples_leaf << "\n"
    << "forest.features_per_split=" << cfg.forest.features_per_split << "\n";
  return s.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = canonical_config_text(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_provenance_comment(std::ofstream& out, const Provenance& prov) {
  out << "# config_hash=" << hex64(prov.config_hash) << " seed=" << prov.seed
      << " version=" << kToolVersion << "\n";
}

json provenance_json(const Provenance& prov) {
  return json{{"config_hash", hex64(prov.config_hash)},
              {"seed", prov.seed},
              {"version", kToolVersion}};
}

}  // namespace

void write_trials(const std::filesystem::path& path,
                  std::span<const TrialRecord> records, const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  write_provenance_comment(out, prov);
  if (!records.empty() && records.front().epoch.excised) {
    const TimeWindow& w = *records.front().epoch.excised;
    out << "# excised_ms=" << format_double(w.start * 1000.0) << ","
        << format_double(w.end * 1000.0) << "\n";
  }
  out << "subject_id,group,trial,channel,time_ms,value_uv\n";
  for (const TrialRecord& rec : records) {
    for (std::size_t c = 0; c < rec.epoch.data.size(); ++c) {
      const std::string prefix = rec.subject_id + "," + rec.group + "," +
                                 std::to_string(rec.trial) + "," +
                                 rec.epoch.channels[c] + ",";
      for (std::size_t i = 0; i < rec.epoch.time.n_samples; ++i) {
        out << prefix << format_double(rec.epoch.time.time_at(i) * 1000.0) << ","
            << format_double(rec.epoch.data[c][i]) << "\n";
      }
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TrialRecord> load_trials(const std::filesystem::path& path,
                                     LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trial file: " + path.string());

  std::optional<TimeWindow> excised;
  struct ChannelAcc {
    std::string name;
    std::vector<double> times_ms;
    std::vector<double> values;
  };
  struct TrialAcc {
    std::string subject, group;
    int trial{};
    std::vector<ChannelAcc> channels;
  };
  std::vector<TrialAcc> trials;
  std::map<std::pair<std::string, int>, std::size_t> trial_index;
  std::map<std::string, std::string> subject_group;
  std::size_t n_rows = 0;
  std::map<std::string, std::size_t> rows_per_subject;

  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# excised_ms=";
      if (line.rfind(tag, 0) == 0) {
        std::string rest = line.substr(tag.size());
        std::size_t comma = rest.find(',');
        if (comma == std::string::npos)
          throw DataError("line " + std::to_string(lineno) +
                          ": malformed excised_ms comment");
        excised = TimeWindow{parse_double(rest.substr(0, comma), "excised_ms") / 1000.0,
                             parse_double(rest.substr(comma + 1), "excised_ms") / 1000.0};
      }
      continue;
    }
    if (!header_seen) {
      if (line != "subject_id,group,trial,channel,time_ms,value_uv")
        throw DataError("line " + std::to_string(lineno) +
                        ": unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    // subject,group,trial,channel,time_ms,value_uv
    std::array<std::string, 6> f;
    std::size_t pos = 0;
    for (int k = 0; k < 5; ++k) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos)
        throw DataError("line " + std::to_string(lineno) + ": expected 6 columns");
      f[static_cast<std::size_t>(k)] = line.substr(pos, comma - pos);
      pos = comma + 1;
    }
    f[5] = line.substr(pos);
    if (f[5].find(',') != std::string::npos)
      throw DataError("line " + std::to_string(lineno) + ": expected 6 columns");

    int trial;
    double time_ms, value;
    try {
      trial = static_cast<int>(parse_int(f[2], "trial"));
      time_ms = parse_double(f[4], "time_ms");
      value = parse_double(f[5], "value_uv");
    } catch (const ConfigError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!std::isfinite(value))
      throw DataError("line " + std::to_string(lineno) + ": non-finite value");

    auto [git, ginserted] = subject_group.try_emplace(f[0], f[1]);
    if (!ginserted && git->second != f[1])
      throw DataError("line " + std::to_string(lineno) + ": subject '" + f[0] +
                      "' has inconsistent group");

    auto key = std::make_pair(f[0], trial);
    auto it = trial_index.find(key);
    if (it == trial_index.end()) {
      it = trial_index.emplace(key, trials.size()).first;
      trials.push_back(TrialAcc{f[0], f[1], trial, {}});
    }
    TrialAcc& acc = trials[it->second];
    ChannelAcc* ch = nullptr;
    for (ChannelAcc& c : acc.channels)
      if (c.name == f[3]) {
        ch = &c;
        break;
      }
    if (!ch) {
      acc.channels.push_back(ChannelAcc{f[3], {}, {}});
      ch = &acc.channels.back();
    }
    ch->times_ms.push_back(time_ms);
    ch->values.push_back(value);
    ++n_rows;
    ++rows_per_subject[f[0]];
  }
  if (!header_seen) throw DataError("trial file has no header row");
  if (trials.empty()) throw DataError("trial file has no data rows");

  std::vector<TrialRecord> out;
  out.reserve(trials.size());
  for (const TrialAcc& acc : trials) {
    const std::string where =
        "subject '" + acc.subject + "' trial " + std::to_string(acc.trial);
    if (acc.channels.empty()) throw DataError(where + ": no channels");
    const std::size_t n = acc.channels.front().times_ms.size();
    if (n < 2) throw DataError(where + ": fewer than 2 samples");
    const double t0 = acc.channels.front().times_ms.front();
    const double dt = (acc.channels.front().times_ms.back() - t0) /
                      static_cast<double>(n - 1);
    for (const ChannelAcc& ch : acc.channels) {
      const std::string cwhere = where + " channel '" + ch.name + "'";
      if (ch.times_ms.size() != n)
        throw DataError(cwhere + ": channel sample count mismatch");
      for (std::size_t i = 1; i < n; ++i) {
        if (!(ch.times_ms[i] > ch.times_ms[i - 1]))
          throw DataError(cwhere + ": non-monotone time");
        if (std::abs((ch.times_ms[i] - ch.times_ms[i - 1]) - dt) > 1e-6)
          throw DataError(cwhere + ": non-uniform sampling");
      }
      if (std::abs(ch.times_ms.front() - t0) > 1e-6)
        throw DataError(cwhere + ": channel time base mismatch");
    }
    if (!(dt > 0.0)) throw DataError(where + ": non-positive sample spacing");

    TrialRecord rec;
    rec.subject_id = acc.subject;
    rec.group = acc.group;
    rec.trial = acc.trial;
    rec.epoch.time = TimeAxis{1000.0 / dt, t0 / 1000.0, n};
    for (const ChannelAcc& ch : acc.channels) {
      rec.epoch.channels.push_back(ch.name);
      rec.epoch.data.push_back(ch.values);
    }
    rec.epoch.excised = excised;
    out.push_back(std::move(rec));
  }
  if (report) {
    report->n_rows = n_rows;
    report->rows_per_subject = rows_per_subject;
  }
  return out;
}

void write_detections_csv(const std::filesystem::path& path,
                          std::span<const TrialChannelMetrics> metrics,
                          const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  write_provenance_comment(out, prov);
  out << "subject_id,group,trial,channel,tedi_s,threshold,fallback_applied,"
         "no_response\n";
  for (const TrialChannelMetrics& m : metrics) {
    out << m.subject_id << "," << m.group << "," << m.metrics.trial << ","
        << m.metrics.channel << "," << format_double(m.metrics.detection.tedi_s)
        << "," << format_double(m.metrics.detection.threshold_used) << ","
        << (m.metrics.detection.fallback_applied ? 1 : 0) << ","
        << (m.metrics.detection.no_response ? 1 : 0) << "\n";
  }
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const TrialChannelMetrics> metrics,
                       const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  write_provenance_comment(out, prov);
  out << "subject_id,group,trial,channel,tedi_s,edi_rad,tei,fallback_applied,"
         "no_response\n";
  for (const TrialChannelMetrics& m : metrics) {
    out << m.subject_id << "," << m.group << "," << m.metrics.trial << ","
        << m.metrics.channel << "," << format_double(m.metrics.tedi_s) << ","
        << format_double(m.metrics.edi_rad) << "," << format_double(m.metrics.tei)
        << "," << (m.metrics.detection.fallback_applied ? 1 : 0) << ","
        << (m.metrics.detection.no_response ? 1 : 0) << "\n";
  }
}

void write_features_csv(const std::filesystem::path& path,
                        std::span<const SubjectFeatures> features,
                        const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  write_provenance_comment(out, prov);
  out << "subject_id,group,mean_tedi_s,mean_edi_rad,mean_tei,n_trials_used,"
         "n_no_response\n";
  for (const SubjectFeatures& s : features) {
    out << s.subject_id << "," << s.group << "," << format_double(s.features[0])
        << "," << format_double(s.features[1]) << ","
        << format_double(s.features[2]) << "," << s.n_trials_used << ","
        << s.n_no_response << "\n";
  }
}

std::vector<SubjectFeatures> load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open features file: " + path.string());
  std::vector<SubjectFeatures> out;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        f.push_back(line.substr(pos));
        break;
      }
      f.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (f.size() != 7)
      throw DataError("features line " + std::to_string(lineno) +
                      ": expected 7 columns");
    SubjectFeatures s;
    s.subject_id = f[0];
    s.group = f[1];
    try {
      s.features = {parse_double(f[2], "mean_tedi_s"),
                    parse_double(f[3], "mean_edi_rad"),
                    parse_double(f[4], "mean_tei")};
      s.n_trials_used = static_cast<std::size_t>(parse_int(f[5], "n_trials_used"));
      s.n_no_response = static_cast<std::size_t>(parse_int(f[6], "n_no_response"));
    } catch (const ConfigError& e) {
      throw DataError("features line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw DataError("features file has no data rows");
  return out;
}

json cv_report_json(const CvReport& report, const Provenance& prov) {
  json per_repeat = json::array();
  for (std::size_t r = 0; r < report.per_repeat.size(); ++r) {
    const ConfusionCounts& c = report.per_repeat[r];
    EvalMetrics m = confusion_metrics(c);
    json jm{{"repeat", r}, {"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
    auto put = [&jm](const char* k, const std::optional<double>& v) {
      if (v) jm[k] = *v;
      else jm[k] = nullptr;
    };
    put("accuracy", m.accuracy);
    put("sensitivity", m.sensitivity);
    put("specificity", m.specificity);
    put("f1", m.f1);
    per_repeat.push_back(std::move(jm));
  }
  auto summary = [](const MetricSummary& s) {
    return json{{"mean", s.mean}, {"std", s.std}};
  };
  return json{
      {"provenance", provenance_json(prov)},
      {"positive_label", report.positive_label},
      {"n_repeats", report.n_repeats},
      {"forest",
       {{"n_trees", report.config.n_trees},
        {"min_samples_leaf", report.config.min_samples_leaf},
        {"features_per_split", report.config.features_per_split}}},
      {"summary",
       {{"accuracy", summary(report.accuracy)},
        {"sensitivity", summary(report.sensitivity)},
        {"specificity", summary(report.specificity)},
        {"f1", summary(report.f1)}}},
      {"per_repeat", std::move(per_repeat)}};
}

void write_cv_report(const std::filesystem::path& path, const CvReport& report,
                     const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  out << cv_report_json(report, prov).dump(2) << "\n";
}

void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const SweepRow> rows, const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  write_provenance_comment(out, prov);
  out << "window_ms,repeat,accuracy,sensitivity,specificity,f1\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.window_ms) << "," << r.repeat << ","
        << format_double(r.accuracy) << "," << format_double(r.sensitivity) << ","
        << format_double(r.specificity) << "," << format_double(r.f1) << "\n";
  }
}

void write_manifest(const std::filesystem::path& path, const Cohort& cohort,
                    const Provenance& prov) {
  json subjects = json::array();
  for (const CohortSubject& s : cohort.subjects) {
    json comps = json::array();
    for (const TepComponent& c : s.model.components) {
      comps.push_back(json{{"amplitude_uv", c.amplitude_uv},
                           {"decay_tau_s", c.decay_tau_s},
                           {"frequency_hz", c.frequency_hz},
                           {"phase_rad", c.phase_rad}});
    }
    json js{{"subject_id", s.subject_id},
            {"group", s.group},
            {"n_trials", s.trials.size()},
            {"n_channels",
             s.trials.empty() ? 0 : s.trials.front().epoch.channels.size()},
            {"model",
             {{"components", std::move(comps)},
              {"noise_sigma_uv", s.model.noise_sigma_uv},
              {"noise_model",
               s.model.noise_model == NoiseModel::White ? "white" : "ar1"},
              {"ar1_rho", s.model.ar1_rho}}}};
    if (s.ground_truth_return_s)
      js["ground_truth_return_s"] = *s.ground_truth_return_s;
    else
      js["ground_truth_return_s"] = nullptr;
    subjects.push_back(std::move(js));
  }
  json j{{"provenance", provenance_json(prov)}, {"subjects", std::move(subjects)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace tep
