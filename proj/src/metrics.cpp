#include "tep/metrics.hpp"

#include <cmath>
#include <numbers>

#include "tep/errors.hpp"

namespace tep {

double compute_edi(std::span<const double> tep, const TimeAxis& time,
                   double tedi_s, double post_start_s) {
  if (tep.size() != time.n_samples)
    throw DataError("sample count does not match time axis");
  double a_peak = -1.0;
  double t_peak = 0.0;
  for (std::size_t i = 0; i < tep.size(); ++i) {
    const double t = time.time_at(i);
    if (t <= post_start_s || t > tedi_s + 1e-12) continue;
    if (tep[i] > a_peak) {
      a_peak = tep[i];
      t_peak = t;
    }
  }
  if (a_peak < 0.0) throw DataError("empty peak-search interval");
  const double dt = tedi_s - t_peak;
  if (dt <= 0.0) return std::numbers::pi / 2.0;
  return std::atan(a_peak / dt);
}

double compute_tei(std::span<const double> tep, const TimeAxis& time,
                   double tedi_s, double post_start_s) {
  if (tedi_s <= post_start_s) return 0.0;
  return trapezoid_auc(tep, time, TimeWindow{post_start_s, tedi_s});
}

TepMetrics compute_trial_metrics(std::span<const double> raw_channel,
                                 const TimeAxis& time,
                                 const std::optional<TimeWindow>& excised,
                                 const DetectorConfig& cfg,
                                 std::string channel, int trial) {
  std::vector<double> tep = rectify_normalize(raw_channel, excised, time);
  const double post_start = excised ? excised->end : 0.0;
  TepMetrics m;
  m.detection = detect_return_to_baseline(tep, time, cfg, post_start);
  m.tedi_s = m.detection.tedi_s;
  m.edi_rad = compute_edi(tep, time, m.tedi_s, post_start);
  m.tei = compute_tei(tep, time, m.tedi_s, post_start);
  m.channel = std::move(channel);
  m.trial = trial;
  return m;
}

SubjectFeatures aggregate_subject(std::span<const TepMetrics> metrics,
                                  std::string subject_id, std::string group) {
  if (metrics.empty()) throw DataError("aggregate_subject: empty metrics list");
  SubjectFeatures s;
  s.subject_id = std::move(subject_id);
  s.group = std::move(group);
  for (const TepMetrics& m : metrics) {
    s.features[0] += m.tedi_s;
    s.features[1] += m.edi_rad;
    s.features[2] += m.tei;
    if (m.detection.no_response) ++s.n_no_response;
  }
  const double n = static_cast<double>(metrics.size());
  for (double& f : s.features) f /= n;
  s.n_trials_used = metrics.size();
  return s;
}

}  // namespace tep
