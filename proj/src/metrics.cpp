#include "glassbox/metrics.hpp"

#include "glassbox/io.hpp"

#include <numeric>

namespace glassbox {

ClassificationScores precision_recall_f1(const ConfusionCounts& counts) {
  ClassificationScores s;
  s.counts = counts;
  const std::size_t predicted = counts.tp + counts.fp;
  const std::size_t actual = counts.tp + counts.fn;
  if (predicted == 0) {
    s.precision_undefined = true;
  } else {
    s.precision = static_cast<double>(counts.tp) / static_cast<double>(predicted);
  }
  if (actual == 0) {
    s.recall_undefined = true;
  } else {
    s.recall = static_cast<double>(counts.tp) / static_cast<double>(actual);
  }
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

ClassificationScores precision_recall_f1(const Labels& labels, const Labels& predictions) {
  if (labels.size() != predictions.size()) throw ValidationError("precision_recall_f1: length mismatch");
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == 1;
    const bool predicted = predictions[i] == 1;
    if (actual && predicted) ++c.tp;
    else if (!actual && predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return precision_recall_f1(c);
}

MetricsReport evaluate(const Labels& labels, const VectorXd& probabilities, double threshold,
                       std::optional<std::size_t> fold) {
  if (labels.size() != probabilities.size()) throw ValidationError("evaluate: length mismatch");
  Labels predicted(labels.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i) predicted[i] = probabilities[i] >= threshold ? 1 : 0;
  const auto s = precision_recall_f1(labels, predicted);
  MetricsReport r;
  r.precision = s.precision;
  r.recall = s.recall;
  r.f1 = s.f1;
  r.precision_undefined = s.precision_undefined;
  r.recall_undefined = s.recall_undefined;
  r.counts = s.counts;
  r.threshold = threshold;
  r.fold = fold;
  r.roc_auc = roc_auc(labels, probabilities);
  return r;
}

OverfitReport overfit_gap(const std::vector<double>& train_scores, const std::vector<double>& test_scores,
                          double threshold) {
  if (train_scores.empty() || test_scores.empty()) throw ValidationError("overfit_gap: empty score list");
  OverfitReport r;
  r.mean_train = std::accumulate(train_scores.begin(), train_scores.end(), 0.0) /
                 static_cast<double>(train_scores.size());
  r.mean_test = std::accumulate(test_scores.begin(), test_scores.end(), 0.0) /
                static_cast<double>(test_scores.size());
  r.gap = r.mean_train - r.mean_test;
  r.threshold = threshold;
  r.pass = r.gap < threshold;
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j{{"fold", r.fold ? nlohmann::json(*r.fold) : nlohmann::json("aggregate")},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"roc_auc", r.roc_auc},
                   {"f1", r.f1},
                   {"threshold", r.threshold},
                   {"tp", r.counts.tp},
                   {"fp", r.counts.fp},
                   {"tn", r.counts.tn},
                   {"fn", r.counts.fn}};
  if (r.precision_undefined) j["precision_undefined"] = true;
  if (r.recall_undefined) j["recall_undefined"] = true;
  return j;
}

nlohmann::json to_json(const OverfitReport& r) {
  return {{"metric", r.metric},          {"mean_train", r.mean_train}, {"mean_test", r.mean_test},
          {"gap", r.gap},                {"threshold", r.threshold},   {"verdict", r.pass ? "pass" : "fail"}};
}

std::vector<std::string> metrics_csv_header() {
  return {"fold", "precision", "recall", "roc_auc", "f1", "threshold", "tp", "fp", "tn", "fn"};
}

std::vector<std::string> metrics_csv_cells(const MetricsReport& r) {
  return {r.fold ? std::to_string(*r.fold) : "aggregate",
          format_number(r.precision),
          format_number(r.recall),
          format_number(r.roc_auc),
          format_number(r.f1),
          format_number(r.threshold),
          std::to_string(r.counts.tp),
          std::to_string(r.counts.fp),
          std::to_string(r.counts.tn),
          std::to_string(r.counts.fn)};
}

}  // namespace glassbox
