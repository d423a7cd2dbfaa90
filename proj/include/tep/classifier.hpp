#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tep/metrics.hpp"

namespace tep {

struct ForestConfig {
  int n_trees{100};
  int min_samples_leaf{1};
  int features_per_split{0};  // 0 -> floor(sqrt(d))
  std::uint64_t rng_seed{0};

  void validate() const;  // throws ConfigError
};

struct TreeNode {
  int feature{-1};
  double threshold{0.0};
  int left{-1};
  int right{-1};
  int label{-1};  // >= 0 marks a leaf
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int predict(std::span<const double> x) const;
};

// Bagged CART ensemble: Gini splits over a random feature subset per node,
// bootstrap sample per tree, majority vote with a lexicographic tie-break.
class Forest {
 public:
  static Forest train(const std::vector<std::vector<double>>& X,
                      const std::vector<std::string>& y,
                      const ForestConfig& cfg);

  const std::string& predict(std::span<const double> x) const;
  std::vector<int> votes(std::span<const double> x) const;  // per label index
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<std::string> labels_;  // sorted; index order = lexicographic
  std::vector<DecisionTree> trees_;
};

struct ConfusionCounts {
  long tp{0}, tn{0}, fp{0}, fn{0};
  long total() const { return tp + tn + fp + fn; }
};

// A metric is absent when its denominator is zero.
struct EvalMetrics {
  std::optional<double> accuracy, sensitivity, specificity, f1;
};

EvalMetrics confusion_metrics(const ConfusionCounts& c);

struct MetricSummary {
  double mean{0.0};
  double std{0.0};  // population std across repeats
};

struct CvReport {
  std::vector<ConfusionCounts> per_repeat;
  MetricSummary accuracy, sensitivity, specificity, f1;
  ForestConfig config;
  int n_repeats{0};
  std::string positive_label;
};

// Called once per (repeat, fold) with the training-set indices; used by tests
// to check that the held-out subject never enters training.
using FoldObserver =
    std::function<void(int repeat, std::size_t held_out,
                       const std::vector<std::size_t>& training)>;

// Leave-one-subject-out cross-validation repeated n_repeats times with
// independent bootstrap seed streams.
CvReport loso_cv(const std::vector<SubjectFeatures>& dataset,
                 const ForestConfig& cfg, int n_repeats = 100,
                 const std::string& positive_label = "AD",
                 const FoldObserver* observer = nullptr);

}  // namespace tep
