#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tep {

// Uniform sampling grid. Sample i sits at t_start + i / sampling_rate seconds,
// with the TMS pulse at t = 0.
struct TimeAxis {
  double sampling_rate{1000.0};  // Hz
  double t_start{-0.5};          // seconds relative to the pulse
  std::size_t n_samples{0};

  double time_at(std::size_t i) const {
    return t_start + static_cast<double>(i) / sampling_rate;
  }
  double t_end() const { return time_at(n_samples - 1); }
  double dt() const { return 1.0 / sampling_rate; }

  // First sample index with time >= t; returns n_samples when past the end.
  std::size_t first_at_or_after(double t) const;
  // Last sample index with time <= t; returns -1 when before the start.
  long long last_at_or_before(double t) const;

  void validate() const;  // throws ConfigError
};

// Half-open in spirit but treated as closed [start, end] for membership.
struct TimeWindow {
  double start{0.0};  // seconds
  double end{0.0};    // seconds

  bool contains(double t) const { return t >= start && t <= end; }
  double length() const { return end - start; }
  void validate() const;  // throws ConfigError
};

// One trial aligned to the pulse. data[ch][i] is in microvolts.
struct Epoch {
  TimeAxis time;
  std::vector<std::string> channels;
  std::vector<std::vector<double>> data;
  std::optional<TimeWindow> excised;  // window removed and interpolated around t=0

  void validate() const;  // throws DataError / ConfigError
};

struct MeanStd {
  double mean{0.0};
  double std{0.0};  // population (denominator N)
};

// |x| / M with M the max of |x| over samples outside the excised window.
// Throws DegenerateError("degenerate flat trial") when M == 0.
std::vector<double> rectify_normalize(std::span<const double> x,
                                      const std::optional<TimeWindow>& excised,
                                      const TimeAxis& time);

// Composite trapezoidal rule over [window.start, window.end]; values at the
// window boundaries are linearly interpolated between bracketing samples.
double trapezoid_auc(std::span<const double> x, const TimeAxis& time,
                     const TimeWindow& window);

// Arithmetic mean and population standard deviation. Requires >= 2 samples.
MeanStd mean_std(std::span<const double> x);

}  // namespace tep
