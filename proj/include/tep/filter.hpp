#pragma once

#include <span>
#include <vector>

namespace tep {

// IIR transfer function coefficients, a[0] normalized to 1.
struct FilterCoeffs {
  std::vector<double> b;
  std::vector<double> a;
};

// Digital Butterworth bandpass (bilinear transform of the analog prototype).
// The resulting filter has order 2*order. Throws ConfigError on bad edges.
FilterCoeffs butterworth_bandpass(int order, double low_hz, double high_hz,
                                  double rate_hz);

// Direct form II transposed filter with initial state zi (may be empty).
std::vector<double> lfilter(const FilterCoeffs& f, std::span<const double> x,
                            std::span<const double> zi);

// Steady-state initial conditions for a unit step (scaled by the caller).
std::vector<double> lfilter_zi(const FilterCoeffs& f);

// Zero-phase forward-backward filtering with odd-reflection padding of length
// min(3 * filter length, n - 1) and step-matched initial conditions.
std::vector<double> filtfilt(const FilterCoeffs& f, std::span<const double> x);

}  // namespace tep
