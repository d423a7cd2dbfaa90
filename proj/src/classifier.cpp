#include "tep/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "tep/errors.hpp"
#include "tep/rng.hpp"

namespace tep {

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (features_per_split < 0) throw ConfigError("features_per_split must be >= 0");
}

int DecisionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].label < 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = (x[static_cast<std::size_t>(n.feature)] <= n.threshold) ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].label;
}

namespace {

struct SplitCandidate {
  int feature{-1};
  double threshold{0.0};
  double impurity{std::numeric_limits<double>::infinity()};
};

double gini(const std::vector<int>& counts, int n) {
  if (n == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    double p = static_cast<double>(c) / n;
    g -= p * p;
  }
  return g;
}

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& X,
              const std::vector<int>& y, int n_labels, const ForestConfig& cfg,
              int mtry, Rng& rng)
      : X_(X), y_(y), n_labels_(n_labels), cfg_(cfg), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> indices) {
    tree_.nodes.clear();
    build_node(std::move(indices));
    return std::move(tree_);
  }

 private:
  int majority(const std::vector<std::size_t>& idx) const {
    std::vector<int> counts(static_cast<std::size_t>(n_labels_), 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(y_[i])];
    // Ties break toward the smaller label index (lexicographic order).
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                            counts.begin());
  }

  // Best Gini split of `idx` on a single feature; nullopt when the feature is
  // constant or no split respects min_samples_leaf.
  std::optional<SplitCandidate> best_split_on(const std::vector<std::size_t>& idx,
                                              int f) const {
    std::vector<std::pair<double, int>> vals;
    vals.reserve(idx.size());
    for (std::size_t i : idx)
      vals.emplace_back(X_[i][static_cast<std::size_t>(f)], y_[i]);
    std::sort(vals.begin(), vals.end());

    const int n = static_cast<int>(vals.size());
    std::vector<int> left(static_cast<std::size_t>(n_labels_), 0);
    std::vector<int> right(static_cast<std::size_t>(n_labels_), 0);
    for (const auto& [v, lab] : vals) ++right[static_cast<std::size_t>(lab)];

    std::optional<SplitCandidate> best;
    int nl = 0;
    for (int k = 0; k + 1 < n; ++k) {
      ++left[static_cast<std::size_t>(vals[static_cast<std::size_t>(k)].second)];
      --right[static_cast<std::size_t>(vals[static_cast<std::size_t>(k)].second)];
      ++nl;
      if (vals[static_cast<std::size_t>(k)].first ==
          vals[static_cast<std::size_t>(k) + 1].first)
        continue;
      const int nr = n - nl;
      if (nl < cfg_.min_samples_leaf || nr < cfg_.min_samples_leaf) continue;
      const double imp =
          (nl * gini(left, nl) + nr * gini(right, nr)) / static_cast<double>(n);
      if (!best || imp < best->impurity) {
        best = SplitCandidate{
            f,
            0.5 * (vals[static_cast<std::size_t>(k)].first +
                   vals[static_cast<std::size_t>(k) + 1].first),
            imp};
      }
    }
    return best;
  }

  int build_node(std::vector<std::size_t> idx) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    bool pure = true;
    for (std::size_t i : idx)
      if (y_[i] != y_[idx.front()]) {
        pure = false;
        break;
      }
    if (pure || static_cast<int>(idx.size()) < 2 * cfg_.min_samples_leaf ||
        idx.size() < 2) {
      tree_.nodes[static_cast<std::size_t>(node_id)].label = majority(idx);
      return node_id;
    }

    const int d = static_cast<int>(X_.front().size());
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates; the first mtry entries are the sampled feature subset.
    for (int k = 0; k < d - 1; ++k) {
      std::size_t j = static_cast<std::size_t>(k) +
                      rng_.below(static_cast<std::size_t>(d - k));
      std::swap(order[static_cast<std::size_t>(k)], order[j]);
    }

    std::optional<SplitCandidate> best;
    for (int k = 0; k < d; ++k) {
      auto cand = best_split_on(idx, order[static_cast<std::size_t>(k)]);
      if (cand && (!best || cand->impurity < best->impurity)) best = cand;
      // Stop at mtry features once any valid split exists; otherwise keep
      // scanning the remaining features so constant subsets do not stall.
      if (k + 1 >= mtry_ && best) break;
    }
    if (!best) {
      tree_.nodes[static_cast<std::size_t>(node_id)].label = majority(idx);
      return node_id;
    }

    std::vector<std::size_t> li, ri;
    for (std::size_t i : idx) {
      if (X_[i][static_cast<std::size_t>(best->feature)] <= best->threshold)
        li.push_back(i);
      else
        ri.push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    tree_.nodes[static_cast<std::size_t>(node_id)].feature = best->feature;
    tree_.nodes[static_cast<std::size_t>(node_id)].threshold = best->threshold;
    const int l = build_node(std::move(li));
    const int r = build_node(std::move(ri));
    tree_.nodes[static_cast<std::size_t>(node_id)].left = l;
    tree_.nodes[static_cast<std::size_t>(node_id)].right = r;
    return node_id;
  }

  const std::vector<std::vector<double>>& X_;
  const std::vector<int>& y_;
  int n_labels_;
  const ForestConfig& cfg_;
  int mtry_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace

Forest Forest::train(const std::vector<std::vector<double>>& X,
                     const std::vector<std::string>& y,
                     const ForestConfig& cfg) {
  cfg.validate();
  if (X.size() != y.size()) throw DataError("feature/label count mismatch");
  if (X.size() < 2) throw DataError("need at least 2 training samples");
  const std::size_t d = X.front().size();
  for (const auto& row : X)
    if (row.size() != d) throw DataError("inconsistent feature dimension");

  Forest forest;
  {
    std::set<std::string> uniq(y.begin(), y.end());
    if (uniq.size() < 2) throw DataError("single-class training set");
    forest.labels_.assign(uniq.begin(), uniq.end());
  }
  std::vector<int> yi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    yi[i] = static_cast<int>(std::lower_bound(forest.labels_.begin(),
                                              forest.labels_.end(), y[i]) -
                             forest.labels_.begin());

  int mtry = cfg.features_per_split;
  if (mtry == 0)
    mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(
                           static_cast<double>(d)))));
  if (mtry > static_cast<int>(d))
    throw ConfigError("features_per_split exceeds feature dimension");

  const std::size_t n = X.size();
  forest.trees_.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> boot(n);
    for (std::size_t i = 0; i < n; ++i) boot[i] = rng.below(n);
    std::sort(boot.begin(), boot.end());
    TreeBuilder builder(X, yi, static_cast<int>(forest.labels_.size()), cfg,
                        mtry, rng);
    forest.trees_.push_back(builder.build(std::move(boot)));
  }
  return forest;
}

std::vector<int> Forest::votes(std::span<const double> x) const {
  std::vector<int> v(labels_.size(), 0);
  for (const DecisionTree& t : trees_) ++v[static_cast<std::size_t>(t.predict(x))];
  return v;
}

const std::string& Forest::predict(std::span<const double> x) const {
  std::vector<int> v = votes(x);
  // max_element returns the first maximum: ties go to the smaller label.
  std::size_t best = static_cast<std::size_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
  return labels_[best];
}

EvalMetrics confusion_metrics(const ConfusionCounts& c) {
  EvalMetrics m;
  const long total = c.total();
  if (total > 0)
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  if (c.tp + c.fn > 0)
    m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0)
    m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  if (2 * c.tp + c.fp + c.fn > 0)
    m.f1 = static_cast<double>(2 * c.tp) /
           static_cast<double>(2 * c.tp + c.fp + c.fn);
  return m;
}

CvReport loso_cv(const std::vector<SubjectFeatures>& dataset,
                 const ForestConfig& cfg, int n_repeats,
                 const std::string& positive_label,
                 const FoldObserver* observer) {
  cfg.validate();
  if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");
  if (dataset.size() < 3) throw DataError("LOSO needs at least 3 subjects");
  {
    std::set<std::string> groups;
    for (const auto& s : dataset) groups.insert(s.group);
    if (groups.size() < 2) throw DataError("LOSO needs both classes present");
    if (!groups.contains(positive_label))
      throw ConfigError("positive label '" + positive_label +
                        "' not present in dataset");
  }

  CvReport report;
  report.config = cfg;
  report.n_repeats = n_repeats;
  report.positive_label = positive_label;

  const std::size_t n = dataset.size();
  for (int r = 0; r < n_repeats; ++r) {
    const std::uint64_t repeat_seed =
        mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(r));
    ConfusionCounts counts;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<std::vector<double>> X;
      std::vector<std::string> y;
      std::vector<std::size_t> train_idx;
      X.reserve(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == k) continue;
        X.emplace_back(dataset[i].features.begin(), dataset[i].features.end());
        y.push_back(dataset[i].group);
        train_idx.push_back(i);
      }
      if (observer) (*observer)(r, k, train_idx);
      ForestConfig fold_cfg = cfg;
      fold_cfg.rng_seed = mix_seed(repeat_seed, k);
      Forest forest = Forest::train(X, y, fold_cfg);
      const std::string& pred = forest.predict(std::span<const double>(
          dataset[k].features.data(), dataset[k].features.size()));
      const bool actual_pos = dataset[k].group == positive_label;
      const bool pred_pos = pred == positive_label;
      if (actual_pos && pred_pos) ++counts.tp;
      if (actual_pos && !pred_pos) ++counts.fn;
      if (!actual_pos && pred_pos) ++counts.fp;
      if (!actual_pos && !pred_pos) ++counts.tn;
    }
    report.per_repeat.push_back(counts);
  }

  auto summarize = [&](auto pick) {
    std::vector<double> vals;
    for (const ConfusionCounts& c : report.per_repeat) {
      EvalMetrics m = confusion_metrics(c);
      if (auto v = pick(m)) vals.push_back(*v);
    }
    MetricSummary s;
    if (vals.empty()) return s;
    for (double v : vals) s.mean += v;
    s.mean /= static_cast<double>(vals.size());
    for (double v : vals) s.std += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(s.std / static_cast<double>(vals.size()));
    return s;
  };
  report.accuracy = summarize([](const EvalMetrics& m) { return m.accuracy; });
  report.sensitivity =
      summarize([](const EvalMetrics& m) { return m.sensitivity; });
  report.specificity =
      summarize([](const EvalMetrics& m) { return m.specificity; });
  report.f1 = summarize([](const EvalMetrics& m) { return m.f1; });
  return report;
}

}  // namespace tep
