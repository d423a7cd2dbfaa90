#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "tep/detector.hpp"
#include "tep/errors.hpp"
#include "tep/rng.hpp"

using namespace tep;

namespace {

TimeAxis standard_axis() { return {1000.0, -0.5, 1500}; }

// Signal that is zero except for damped bursts over given spans.
std::vector<double> burst_signal(const TimeAxis& t,
                                 const std::vector<TimeWindow>& bursts,
                                 double amplitude = 1.0) {
  std::vector<double> x(t.n_samples, 0.0);
  for (std::size_t i = 0; i < t.n_samples; ++i) {
    double tt = t.time_at(i);
    for (const TimeWindow& b : bursts)
      if (tt >= b.start && tt < b.end)
        x[i] = amplitude * std::sin(2.0 * std::numbers::pi * 37.0 * tt + 0.4);
  }
  return x;
}

// Straight-line reference implementation of the whole detector, computed
// independently of the library internals (naive O(n*w) energy, explicit
// step-by-step settling logic).
DetectionResult detect_ref(std::span<const double> tep, const TimeAxis& time,
                           const DetectorConfig& cfg, double post_start_s) {
  const long long n = static_cast<long long>(tep.size());
  const long long w = std::llround(cfg.window_len_s * time.sampling_rate);
  std::vector<double> energy(tep.size());
  for (long long i = 0; i < n; ++i) {
    long long a = std::max<long long>(0, i - (w - 1) / 2);
    long long b = std::min<long long>(n - 1, i + w / 2);
    double s = 0.0;
    for (long long k = a; k <= b; ++k) s += tep[k] * tep[k];
    energy[static_cast<std::size_t>(i)] = s / static_cast<double>(b - a + 1);
  }

  std::vector<double> base;
  for (long long i = 0; i < n; ++i) {
    double tt = time.time_at(static_cast<std::size_t>(i));
    if (tt >= cfg.baseline.start - 1e-9 && tt <= cfg.baseline.end + 1e-9)
      base.push_back(energy[static_cast<std::size_t>(i)]);
  }
  double bm = 0.0;
  for (double v : base) bm += v;
  bm /= static_cast<double>(base.size());
  double bs = 0.0;
  for (double v : base) bs += (v - bm) * (v - bm);
  bs = std::sqrt(bs / static_cast<double>(base.size()));

  auto supra = [&](double thr) {
    std::vector<double> out;
    for (long long i = 0; i < n; ++i) {
      double tt = time.time_at(static_cast<std::size_t>(i));
      if (tt >= post_start_s - 1e-9 && tt <= time.t_end() + 1e-9 &&
          energy[static_cast<std::size_t>(i)] > thr)
        out.push_back(tt);
    }
    return out;
  };

  DetectionResult r;
  r.threshold_used = bm + bs;
  r.crossings_s = supra(r.threshold_used);
  if (static_cast<int>(r.crossings_s.size()) < cfg.min_supra_samples) {
    r.fallback_applied = true;
    r.threshold_used = bm;
    r.crossings_s = supra(bm);
    if (static_cast<int>(r.crossings_s.size()) < cfg.min_supra_samples) {
      r.no_response = true;
      r.tedi_s = cfg.search_lo_s;
      return r;
    }
  }
  std::vector<double> pts = r.crossings_s;
  pts.push_back(time.t_end());
  double max_gap = 0.0;
  for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
    r.gaps_s.push_back(pts[j + 1] - pts[j]);
    max_gap = std::max(max_gap, pts[j + 1] - pts[j]);
  }
  double raw = -1.0;
  for (std::size_t j = 0; j < r.gaps_s.size(); ++j)
    if (r.gaps_s[j] > cfg.gap_fraction * max_gap) {
      raw = pts[j];
      break;
    }
  if (raw < 0.0) {
    raw = r.crossings_s.back();
    r.no_response = true;
  }
  r.tedi_s = std::clamp(raw, cfg.search_lo_s, cfg.search_hi_s);
  return r;
}

void check_equal(const DetectionResult& got, const DetectionResult& want) {
  CHECK(got.tedi_s == want.tedi_s);
  CHECK(got.threshold_used == doctest::Approx(want.threshold_used).epsilon(1e-12));
  CHECK(got.fallback_applied == want.fallback_applied);
  CHECK(got.no_response == want.no_response);
  CHECK(got.crossings_s == want.crossings_s);
  REQUIRE(got.gaps_s.size() == want.gaps_s.size());
  for (std::size_t i = 0; i < got.gaps_s.size(); ++i)
    CHECK(got.gaps_s[i] == doctest::Approx(want.gaps_s[i]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("energy of a 3-sample signal, window of 3") {
  TimeAxis t{1.0, 0.0, 3};
  std::vector<double> x{1.0, 2.0, 3.0};
  EnergySeries e = energy_signal(x, t, 3.0);
  REQUIRE(e.values.size() == 3);
  CHECK(e.values[0] == doctest::Approx((1.0 + 4.0) / 2.0));      // edge-truncated
  CHECK(e.values[1] == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0));
  CHECK(e.values[2] == doctest::Approx((4.0 + 9.0) / 2.0));
}

TEST_CASE("energy matches a double-loop oracle on random signals") {
  Rng rng(101);
  for (int it = 0; it < 20; ++it) {
    TimeAxis t{1000.0, -0.5, 400 + 100 * static_cast<std::size_t>(it % 5)};
    std::vector<double> x(t.n_samples);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    double wlen = 0.005 + 0.005 * (it % 7);
    EnergySeries e = energy_signal(x, t, wlen);
    const long long w = std::llround(wlen * t.sampling_rate);
    for (std::size_t i = 0; i < t.n_samples; ++i) {
      long long a = std::max<long long>(0, static_cast<long long>(i) - (w - 1) / 2);
      long long b = std::min<long long>(static_cast<long long>(t.n_samples) - 1,
                                        static_cast<long long>(i) + w / 2);
      double s = 0.0;
      for (long long k = a; k <= b; ++k) s += x[static_cast<std::size_t>(k)] *
                                              x[static_cast<std::size_t>(k)];
      double want = s / static_cast<double>(b - a + 1);
      CHECK(std::abs(e.values[i] - want) < 1e-12);
    }
  }
}

TEST_CASE("energy is non-negative and zero on silence") {
  TimeAxis t = standard_axis();
  std::vector<double> x(t.n_samples, 0.0);
  x[700] = 2.0;
  EnergySeries e = energy_signal(x, t, 0.020);
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    CHECK(e.values[i] >= 0.0);
    // The impulse at index 700 only reaches windows centered at 690..710.
    if (i < 690 || i > 710) CHECK(e.values[i] == 0.0);
  }
}

TEST_CASE("energy window validation") {
  TimeAxis t = standard_axis();
  std::vector<double> x(t.n_samples, 1.0);
  CHECK_THROWS_AS(energy_signal(x, t, 0.001), ConfigError);  // single sample
  CHECK_NOTHROW(energy_signal(x, t, 0.002));
}

TEST_CASE("baseline threshold is mean plus one std") {
  EnergySeries e;
  e.time = {1000.0, -0.5, 1500};
  e.values.assign(1500, 5.0);
  // Two-sample baseline {0, 2}: mean 1, population std 1, threshold 2.
  std::size_t i0 = e.time.first_at_or_after(-0.3);
  e.values[i0] = 0.0;
  e.values[i0 + 1] = 2.0;
  CHECK(baseline_threshold(e, {-0.3, -0.299}) == doctest::Approx(2.0));

  CHECK_THROWS_AS(baseline_threshold(e, {-0.3, -0.2999}), DataError);  // 1 sample
}

TEST_CASE("supra-threshold selection is strict and window-closed") {
  EnergySeries e;
  e.time = {1000.0, 0.0, 10};
  e.values = {0.0, 1.0, 2.0, 2.0, 3.0, 2.0, 1.0, 0.0, 5.0, 5.0};
  auto times = supra_threshold_times(e, 2.0, {0.001, 0.008});
  // Values equal to the threshold are excluded; both window edges included.
  CHECK(times == std::vector<double>{0.004, 0.008});
}

TEST_CASE("single burst then silence") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  auto x = burst_signal(t, {{0.0, 0.100}});
  DetectionResult r = detect_return_to_baseline(x, t, cfg);

  // Noiseless baseline -> threshold 0; the 20 ms window smears the burst to
  // ~108 ms; the terminal gap to the epoch end qualifies first.
  CHECK(r.threshold_used == 0.0);
  CHECK(!r.fallback_applied);
  CHECK(!r.no_response);
  CHECK(r.tedi_s == doctest::Approx(0.108).epsilon(0.03));
  check_equal(r, detect_ref(x, t, cfg, 0.0));
}

TEST_CASE("two bursts: the inter-burst gap wins") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  auto x = burst_signal(t, {{0.0, 0.100}, {0.700, 0.750}});
  DetectionResult r = detect_return_to_baseline(x, t, cfg);

  // Gap between the bursts (~580 ms) dwarfs the terminal gap (~240 ms), so
  // settling is at the end of the first burst, not the second.
  CHECK(r.tedi_s == doctest::Approx(0.108).epsilon(0.03));
  CHECK(!r.no_response);
  check_equal(r, detect_ref(x, t, cfg, 0.0));
}

TEST_CASE("quiet post-pulse span: fallback then no-response floor") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  Rng rng(55);
  std::vector<double> x(t.n_samples, 0.0);
  for (std::size_t i = 0; i < t.n_samples; ++i)
    if (t.time_at(i) < 0.0) x[i] = rng.gauss();

  DetectionResult r = detect_return_to_baseline(x, t, cfg);
  CHECK(r.fallback_applied);
  CHECK(r.no_response);
  CHECK(r.tedi_s == cfg.search_lo_s);
  CHECK(r.crossings_s.size() < static_cast<std::size_t>(cfg.min_supra_samples));
  check_equal(r, detect_ref(x, t, cfg, 0.0));
}

TEST_CASE("clamping to the search range") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;

  SUBCASE("very short burst clamps up to the lower bound") {
    auto x = burst_signal(t, {{0.0, 0.050}});
    DetectionResult r = detect_return_to_baseline(x, t, cfg);
    CHECK(r.tedi_s == cfg.search_lo_s);
  }
  SUBCASE("activity almost to the end clamps down to the upper bound") {
    auto x = burst_signal(t, {{0.0, 0.900}});
    DetectionResult r = detect_return_to_baseline(x, t, cfg);
    CHECK(r.tedi_s == cfg.search_hi_s);
  }
}

TEST_CASE("post_start shifts the search span") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  auto x = burst_signal(t, {{0.0, 0.100}});
  DetectionResult a = detect_return_to_baseline(x, t, cfg, 0.0);
  DetectionResult b = detect_return_to_baseline(x, t, cfg, 0.006);
  CHECK(b.crossings_s.front() >= 0.006);
  CHECK(a.crossings_s.front() < 0.006);
  CHECK(a.tedi_s == b.tedi_s);  // same settling point
  check_equal(b, detect_ref(x, t, cfg, 0.006));
}

TEST_CASE("detector agrees with the reference on noisy signals") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  Rng rng(202);
  for (int it = 0; it < 25; ++it) {
    std::vector<double> x(t.n_samples);
    double tau = rng.uniform(0.05, 0.3);
    for (std::size_t i = 0; i < t.n_samples; ++i) {
      double tt = t.time_at(i);
      x[i] = 0.3 * rng.gauss();
      if (tt > 0.0)
        x[i] += 3.0 * std::exp(-tt / tau) *
                std::sin(2.0 * std::numbers::pi * 10.0 * tt);
    }
    check_equal(detect_return_to_baseline(x, t, cfg),
                detect_ref(x, t, cfg, 0.0));
  }
}

TEST_CASE("detection is invariant to positive rescaling") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  Rng rng(303);
  std::vector<double> x(t.n_samples);
  for (std::size_t i = 0; i < t.n_samples; ++i) {
    double tt = t.time_at(i);
    x[i] = 0.2 * rng.gauss() +
           (tt > 0.0 ? 2.0 * std::exp(-tt / 0.15) *
                           std::sin(2.0 * std::numbers::pi * 11.0 * tt)
                     : 0.0);
  }
  DetectionResult a = detect_return_to_baseline(x, t, cfg);
  std::vector<double> scaled(x);
  for (double& v : scaled) v *= 37.5;
  DetectionResult b = detect_return_to_baseline(scaled, t, cfg);
  CHECK(a.tedi_s == b.tedi_s);
  CHECK(a.crossings_s == b.crossings_s);
  CHECK(a.no_response == b.no_response);
}

TEST_CASE("detection is deterministic") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  Rng rng(404);
  std::vector<double> x(t.n_samples);
  for (double& v : x) v = rng.gauss();
  DetectionResult a = detect_return_to_baseline(x, t, cfg);
  DetectionResult b = detect_return_to_baseline(x, t, cfg);
  check_equal(a, b);
}

TEST_CASE("tedi always lands inside the configured search range") {
  TimeAxis t = standard_axis();
  DetectorConfig cfg;
  Rng rng(505);
  for (int it = 0; it < 40; ++it) {
    std::vector<double> x(t.n_samples);
    for (double& v : x) v = rng.gauss();
    DetectionResult r = detect_return_to_baseline(x, t, cfg);
    CHECK(r.tedi_s >= cfg.search_lo_s);
    CHECK(r.tedi_s <= cfg.search_hi_s);
  }
}

TEST_CASE("raising the threshold never adds crossings") {
  TimeAxis t = standard_axis();
  Rng rng(606);
  std::vector<double> x(t.n_samples);
  for (double& v : x) v = rng.gauss();
  EnergySeries e = energy_signal(x, t, 0.020);
  TimeWindow search{0.0, t.t_end()};
  std::size_t prev = supra_threshold_times(e, 0.0, search).size();
  for (double thr : {0.2, 0.5, 1.0, 2.0, 5.0}) {
    std::size_t cur = supra_threshold_times(e, thr, search).size();
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("detector config validation") {
  DetectorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("baseline after pulse") {
    cfg.baseline = {-0.1, 0.1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("search bounds") {
    cfg.search_lo_s = 0.9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("gap fraction range") {
    cfg.gap_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
