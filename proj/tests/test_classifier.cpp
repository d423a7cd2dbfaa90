#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "tep/classifier.hpp"
#include "tep/errors.hpp"
#include "tep/rng.hpp"

using namespace tep;

namespace {

// Two well-separated 2-D blobs.
void make_blobs(std::vector<std::vector<double>>& X, std::vector<std::string>& y,
                int per_class, std::uint64_t seed) {
  Rng rng(seed);
  for (int i = 0; i < per_class; ++i) {
    X.push_back({rng.gauss() * 0.3 - 3.0, rng.gauss() * 0.3 - 3.0});
    y.push_back("HC");
    X.push_back({rng.gauss() * 0.3 + 3.0, rng.gauss() * 0.3 + 3.0});
    y.push_back("AD");
  }
}

std::vector<SubjectFeatures> separable_subjects(int per_class,
                                                std::uint64_t seed,
                                                double gap = 3.0) {
  Rng rng(seed);
  std::vector<SubjectFeatures> out;
  for (int i = 0; i < per_class; ++i) {
    SubjectFeatures hc;
    hc.subject_id = "hc" + std::to_string(i);
    hc.group = "HC";
    hc.features = {rng.gauss() * 0.3, rng.gauss() * 0.3, rng.gauss() * 0.3};
    out.push_back(hc);
    SubjectFeatures ad;
    ad.subject_id = "ad" + std::to_string(i);
    ad.group = "AD";
    ad.features = {gap + rng.gauss() * 0.3, gap + rng.gauss() * 0.3,
                   gap + rng.gauss() * 0.3};
    out.push_back(ad);
  }
  return out;
}

}  // namespace

TEST_CASE("forest separates two clear blobs") {
  std::vector<std::vector<double>> X;
  std::vector<std::string> y;
  make_blobs(X, y, 20, 1);
  ForestConfig cfg;
  cfg.rng_seed = 7;
  Forest f = Forest::train(X, y, cfg);

  CHECK(f.labels() == std::vector<std::string>{"AD", "HC"});
  CHECK(f.trees().size() == 100);

  // Training points and fresh probes both land on the right side.
  for (std::size_t i = 0; i < X.size(); ++i) CHECK(f.predict(X[i]) == y[i]);
  CHECK(f.predict(std::array<double, 2>{-3.0, -2.5}) == "HC");
  CHECK(f.predict(std::array<double, 2>{2.5, 3.5}) == "AD");
}

TEST_CASE("votes sum to the tree count and match predict") {
  std::vector<std::vector<double>> X;
  std::vector<std::string> y;
  make_blobs(X, y, 10, 2);
  ForestConfig cfg;
  cfg.n_trees = 31;
  cfg.rng_seed = 3;
  Forest f = Forest::train(X, y, cfg);
  Rng rng(44);
  for (int it = 0; it < 20; ++it) {
    std::array<double, 2> p{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    auto v = f.votes(p);
    REQUIRE(v.size() == 2);
    CHECK(v[0] + v[1] == 31);
    // predict picks the label with the most votes; ties break toward the
    // lexicographically smaller label ("AD" at index 0).
    std::size_t arg = (v[1] > v[0]) ? 1 : 0;
    CHECK(f.predict(p) == f.labels()[arg]);
  }
}

TEST_CASE("training is deterministic in the seed") {
  std::vector<std::vector<double>> X;
  std::vector<std::string> y;
  make_blobs(X, y, 15, 5);
  ForestConfig cfg;
  cfg.rng_seed = 99;
  Forest a = Forest::train(X, y, cfg);
  Forest b = Forest::train(X, y, cfg);
  REQUIRE(a.trees().size() == b.trees().size());
  for (std::size_t t = 0; t < a.trees().size(); ++t) {
    const auto& na = a.trees()[t].nodes;
    const auto& nb = b.trees()[t].nodes;
    REQUIRE(na.size() == nb.size());
    for (std::size_t i = 0; i < na.size(); ++i) {
      CHECK(na[i].feature == nb[i].feature);
      CHECK(na[i].threshold == nb[i].threshold);
      CHECK(na[i].label == nb[i].label);
    }
  }
}

TEST_CASE("a clean 1-D split lands between the classes") {
  // Six points, one feature: {1,2,3} -> "a", {10,11,12} -> "b". Every
  // bootstrap that contains both classes must split inside (3, 10), so every
  // probe below 3 and above 10 classifies perfectly.
  std::vector<std::vector<double>> X{{1.0}, {2.0}, {3.0}, {10.0}, {11.0}, {12.0}};
  std::vector<std::string> y{"a", "a", "a", "b", "b", "b"};
  ForestConfig cfg;
  cfg.rng_seed = 11;
  Forest f = Forest::train(X, y, cfg);
  for (const DecisionTree& tree : f.trees()) {
    for (const TreeNode& n : tree.nodes) {
      if (n.label >= 0) continue;  // leaf
      CHECK(n.feature == 0);
      CHECK(n.threshold > 3.0);
      CHECK(n.threshold < 10.0);
    }
  }
  CHECK(f.predict(std::array<double, 1>{0.0}) == "a");
  CHECK(f.predict(std::array<double, 1>{6.4}) != "");  // in-gap: defined answer
  CHECK(f.predict(std::array<double, 1>{20.0}) == "b");
}

TEST_CASE("degenerate training inputs are rejected") {
  ForestConfig cfg;
  std::vector<std::vector<double>> X{{1.0}, {2.0}};
  SUBCASE("single class") {
    std::vector<std::string> y{"a", "a"};
    CHECK_THROWS_AS(Forest::train(X, y, cfg), DataError);
  }
  SUBCASE("size mismatch") {
    std::vector<std::string> y{"a"};
    CHECK_THROWS_AS(Forest::train(X, y, cfg), DataError);
  }
  SUBCASE("bad config") {
    cfg.n_trees = 0;
    std::vector<std::string> y{"a", "b"};
    CHECK_THROWS_AS(Forest::train(X, y, cfg), ConfigError);
  }
}

TEST_CASE("confusion metrics on a worked example") {
  // tp=3, fn=1, tn=2, fp=2.
  EvalMetrics m = confusion_metrics({3, 2, 2, 1});
  CHECK(m.accuracy.value() == doctest::Approx(5.0 / 8.0));
  CHECK(m.sensitivity.value() == doctest::Approx(3.0 / 4.0));
  CHECK(m.specificity.value() == doctest::Approx(1.0 / 2.0));
  CHECK(m.f1.value() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("confusion metrics leave zero-denominator entries empty") {
  SUBCASE("no positives at all") {
    EvalMetrics m = confusion_metrics({0, 5, 0, 0});
    CHECK(!m.sensitivity.has_value());
    CHECK(!m.f1.has_value());
    CHECK(m.specificity.value() == doctest::Approx(1.0));
    CHECK(m.accuracy.value() == doctest::Approx(1.0));
  }
  SUBCASE("no negatives at all") {
    EvalMetrics m = confusion_metrics({4, 0, 0, 2});
    CHECK(!m.specificity.has_value());
    CHECK(m.sensitivity.value() == doctest::Approx(4.0 / 6.0));
  }
  SUBCASE("empty matrix") {
    EvalMetrics m = confusion_metrics({0, 0, 0, 0});
    CHECK(!m.accuracy.has_value());
  }
}

TEST_CASE("confusion metrics property: random matrices") {
  Rng rng(21);
  for (int it = 0; it < 50; ++it) {
    ConfusionCounts c{static_cast<long>(rng.below(20)),
                      static_cast<long>(rng.below(20)),
                      static_cast<long>(rng.below(20)),
                      static_cast<long>(rng.below(20))};
    EvalMetrics m = confusion_metrics(c);
    if (c.total() > 0)
      CHECK(m.accuracy.value() ==
            doctest::Approx(static_cast<double>(c.tp + c.tn) /
                            static_cast<double>(c.total())));
    if (m.sensitivity)
      CHECK(*m.sensitivity ==
            doctest::Approx(static_cast<double>(c.tp) /
                            static_cast<double>(c.tp + c.fn)));
    if (m.specificity)
      CHECK(*m.specificity ==
            doctest::Approx(static_cast<double>(c.tn) /
                            static_cast<double>(c.tn + c.fp)));
    if (m.f1)
      CHECK(*m.f1 == doctest::Approx(static_cast<double>(2 * c.tp) /
                                     static_cast<double>(2 * c.tp + c.fp + c.fn)));
  }
}

TEST_CASE("loso on separable subjects is perfect") {
  auto data = separable_subjects(6, 13);
  ForestConfig cfg;
  cfg.rng_seed = 4;
  CvReport rep = loso_cv(data, cfg, 5);
  CHECK(rep.n_repeats == 5);
  CHECK(rep.accuracy.mean == doctest::Approx(1.0));
  CHECK(rep.accuracy.std == doctest::Approx(0.0));
  CHECK(rep.sensitivity.mean == doctest::Approx(1.0));
  CHECK(rep.specificity.mean == doctest::Approx(1.0));
  for (const ConfusionCounts& c : rep.per_repeat)
    CHECK(c.total() == static_cast<long>(data.size()));
}

TEST_CASE("loso never trains on the held-out subject") {
  auto data = separable_subjects(4, 17);
  ForestConfig cfg;
  int calls = 0;
  bool clean = true;
  FoldObserver obs = [&](int, std::size_t held_out,
                         const std::vector<std::size_t>& training) {
    ++calls;
    clean = clean && training.size() == data.size() - 1;
    for (std::size_t i : training) clean = clean && i != held_out;
    std::set<std::size_t> uniq(training.begin(), training.end());
    clean = clean && uniq.size() == training.size();
  };
  loso_cv(data, cfg, 3, "AD", &obs);
  CHECK(calls == 3 * static_cast<int>(data.size()));
  CHECK(clean);
}

TEST_CASE("loso is deterministic in the seed") {
  auto data = separable_subjects(5, 23, 0.6);  // overlapping enough to vary
  ForestConfig cfg;
  cfg.rng_seed = 77;
  CvReport a = loso_cv(data, cfg, 8);
  CvReport b = loso_cv(data, cfg, 8);
  REQUIRE(a.per_repeat.size() == b.per_repeat.size());
  for (std::size_t i = 0; i < a.per_repeat.size(); ++i) {
    CHECK(a.per_repeat[i].tp == b.per_repeat[i].tp);
    CHECK(a.per_repeat[i].tn == b.per_repeat[i].tn);
    CHECK(a.per_repeat[i].fp == b.per_repeat[i].fp);
    CHECK(a.per_repeat[i].fn == b.per_repeat[i].fn);
  }
}

TEST_CASE("loso repeats use independent bootstrap streams") {
  auto data = separable_subjects(5, 29, 0.4);  // hard problem -> variance
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.rng_seed = 5;
  CvReport rep = loso_cv(data, cfg, 20);
  bool all_same = true;
  for (const ConfusionCounts& c : rep.per_repeat)
    all_same = all_same && c.tp == rep.per_repeat[0].tp &&
               c.tn == rep.per_repeat[0].tn;
  CHECK(!all_same);
}

TEST_CASE("loso input validation") {
  ForestConfig cfg;
  SUBCASE("too few subjects") {
    auto data = separable_subjects(1, 1);
    CHECK_THROWS_AS(loso_cv(data, cfg, 2), DataError);
  }
  SUBCASE("missing positive label") {
    auto data = separable_subjects(4, 1);
    CHECK_THROWS_AS(loso_cv(data, cfg, 2, "XX"), ConfigError);
  }
  SUBCASE("single class") {
    auto data = separable_subjects(4, 1);
    for (auto& s : data) s.group = "AD";
    CHECK_THROWS_AS(loso_cv(data, cfg, 2), DataError);
  }
}

TEST_CASE("per-repeat accuracy identity") {
  auto data = separable_subjects(5, 37, 0.8);
  ForestConfig cfg;
  cfg.rng_seed = 12;
  CvReport rep = loso_cv(data, cfg, 10);
  double mean = 0.0;
  for (const ConfusionCounts& c : rep.per_repeat)
    mean += static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  mean /= static_cast<double>(rep.per_repeat.size());
  CHECK(rep.accuracy.mean == doctest::Approx(mean).epsilon(1e-12));
}
