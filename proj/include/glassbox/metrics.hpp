#pragma once

#include "glassbox/core.hpp"
#include "glassbox/stats.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace glassbox {

/// Mann-Whitney ROC-AUC with average ranks for tied scores:
/// P(score+ > score-) + 0.5 P(tie).
template <typename DL, typename DS>
double roc_auc(const Eigen::DenseBase<DL>& labels, const Eigen::DenseBase<DS>& scores) {
  if (labels.size() != scores.size()) throw ValidationError("roc_auc: length mismatch");
  const VectorXd ranks = average_ranks(scores);
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const auto label = labels(i);
    if (label != 0 && label != 1) throw ValidationError("roc_auc: labels must be 0 or 1");
    if (label == 1) {
      rank_sum += ranks[i];
      n_pos += 1.0;
    }
  }
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw ValidationError("roc_auc: single class");
  const double wins = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return wins / (n_pos * n_neg);
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

/// Zero denominators give 0 and raise the matching `undefined` flag.
struct ClassificationScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  ConfusionCounts counts;
};

ClassificationScores precision_recall_f1(const Labels& labels, const Labels& predictions);
ClassificationScores precision_recall_f1(const ConfusionCounts& counts);

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.5;
  double threshold = 0.5;
  ConfusionCounts counts;
  bool precision_undefined = false;
  bool recall_undefined = false;
  std::optional<std::size_t> fold;  // empty means aggregate
};

/// Metrics for probability scores; class = score >= threshold.
MetricsReport evaluate(const Labels& labels, const VectorXd& probabilities, double threshold,
                       std::optional<std::size_t> fold = std::nullopt);

struct OverfitReport {
  double mean_train = 0.0;
  double mean_test = 0.0;
  double gap = 0.0;
  double threshold = 0.1;
  bool pass = true;
  std::string metric = "roc_auc";
};

/// gap = mean(train) - mean(test); passes when gap < threshold.
OverfitReport overfit_gap(const std::vector<double>& train_scores, const std::vector<double>& test_scores,
                          double threshold = 0.1);

/// Column order follows the published tables: precision, recall, ROC-AUC, F1.
nlohmann::json to_json(const MetricsReport& r);
nlohmann::json to_json(const OverfitReport& r);
std::vector<std::string> metrics_csv_header();
std::vector<std::string> metrics_csv_cells(const MetricsReport& r);

}  // namespace glassbox
