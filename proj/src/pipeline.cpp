#include "tep/pipeline.hpp"

#include <map>

#include "tep/errors.hpp"

namespace tep {

std::vector<TrialChannelMetrics> compute_dataset_metrics(
    std::span<const TrialRecord> records, const DetectorConfig& cfg) {
  cfg.validate();
  std::vector<TrialChannelMetrics> out;
  for (const TrialRecord& rec : records) {
    for (std::size_t c = 0; c < rec.epoch.data.size(); ++c) {
      TrialChannelMetrics tcm;
      tcm.subject_id = rec.subject_id;
      tcm.group = rec.group;
      tcm.metrics = compute_trial_metrics(rec.epoch.data[c], rec.epoch.time,
                                          rec.epoch.excised, cfg,
                                          rec.epoch.channels[c], rec.trial);
      out.push_back(std::move(tcm));
    }
  }
  return out;
}

std::vector<SubjectFeatures> aggregate_dataset(
    std::span<const TrialChannelMetrics> metrics) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<TepMetrics>> by_subject;
  std::map<std::string, std::string> groups;
  for (const TrialChannelMetrics& m : metrics) {
    if (!by_subject.contains(m.subject_id)) order.push_back(m.subject_id);
    by_subject[m.subject_id].push_back(m.metrics);
    auto [it, inserted] = groups.try_emplace(m.subject_id, m.group);
    if (!inserted && it->second != m.group)
      throw DataError("subject '" + m.subject_id + "' has inconsistent group");
  }
  std::vector<SubjectFeatures> out;
  out.reserve(order.size());
  for (const std::string& id : order)
    out.push_back(aggregate_subject(by_subject[id], id, groups[id]));
  return out;
}

SweepResult window_sweep(std::span<const TrialRecord> records,
                         std::span<const double> window_lens_s,
                         DetectorConfig detector_cfg,
                         const ForestConfig& forest_cfg, int n_repeats,
                         const std::string& positive_label) {
  SweepResult out;
  for (double wl : window_lens_s) {
    detector_cfg.window_len_s = wl;
    detector_cfg.validate();
    auto metrics = compute_dataset_metrics(records, detector_cfg);
    auto features = aggregate_dataset(metrics);
    CvReport report =
        loso_cv(features, forest_cfg, n_repeats, positive_label);
    for (int r = 0; r < report.n_repeats; ++r) {
      EvalMetrics m = confusion_metrics(report.per_repeat[static_cast<std::size_t>(r)]);
      SweepRow row;
      row.window_ms = wl * 1000.0;
      row.repeat = r;
      row.accuracy = m.accuracy.value_or(0.0);
      row.sensitivity = m.sensitivity.value_or(0.0);
      row.specificity = m.specificity.value_or(0.0);
      row.f1 = m.f1.value_or(0.0);
      out.rows.push_back(row);
    }
    out.reports.emplace_back(wl, std::move(report));
  }
  return out;
}

std::vector<TrialRecord> cohort_to_records(const Cohort& cohort) {
  std::vector<TrialRecord> out;
  for (const CohortSubject& s : cohort.subjects) {
    for (const CohortTrial& t : s.trials) {
      TrialRecord rec;
      rec.subject_id = s.subject_id;
      rec.group = s.group;
      rec.trial = t.trial;
      rec.epoch = t.epoch;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace tep
