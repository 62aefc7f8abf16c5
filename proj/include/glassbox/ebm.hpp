#pragma once

#include "glassbox/core.hpp"
#include "glassbox/dataset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace glassbox {

/// Hyperparameters of the explainable boosting machine. Defaults are the tuned
/// values used for the credit-card workflow.
struct EbmConfig {
  int max_bins = 256;
  double learning_rate = 0.05;
  int max_rounds = 100;
  int interactions = 20;
  int outer_bags = 8;
  int min_samples_bin = 2;
  int interaction_grid = 16;
  int max_leaves = 3;        // segments per shape-function update; 0 = one per bin
  int min_samples_leaf = 2;  // rows per segment
  std::array<double, 2> class_weights{1.0, 1.0};  // {negative, positive}
  int early_stopping_rounds = 0;                   // 0 disables; uses out-of-bag rows
  std::uint64_t seed = 0;

  void validate() const;
  /// Rounds spent boosting pair grids after the univariate stage.
  int pair_rounds() const { return std::max(1, max_rounds / 4); }
};

nlohmann::json to_json(const EbmConfig& cfg);
EbmConfig ebm_config_from_json(const nlohmann::json& j, EbmConfig base = {});

/// Ascending cut points per feature. Value v falls in bin upper_bound(cuts, v),
/// so bin k covers [cuts[k-1], cuts[k]) and out-of-range values clamp to the
/// edge bins.
struct BinDefinition {
  std::vector<std::vector<double>> cuts;

  std::size_t features() const { return cuts.size(); }
  std::size_t bin_count(std::size_t feature) const { return cuts[feature].size() + 1; }
  std::size_t bin_of(std::size_t feature, double value) const;
};

/// Cuts at evenly spaced quantile levels k / max_bins, each placed midway
/// between the neighbouring distinct sample values so that no training value
/// sits on a cut. Bins holding fewer than min_samples_bin rows are merged into
/// a neighbour.
std::vector<double> feature_cuts(const VectorXd& values, int max_bins, int min_samples_bin);
BinDefinition build_bins(const MatrixXd& X, int max_bins, int min_samples_bin);

/// Per-bin additive score f_j in log-odds, with the training row count per bin.
struct ShapeFunction {
  std::size_t feature = 0;
  VectorXd scores;
  VectorXd weights;
};

/// Pair term f_ij on the coarse pair bins; rows index `first`, columns `second`.
struct InteractionTerm {
  std::size_t first = 0;
  std::size_t second = 0;
  MatrixXd scores;
  MatrixXd weights;
};

struct EbmModel {
  EbmConfig config;
  std::vector<std::string> feature_names;
  double intercept = 0.0;
  BinDefinition bins;
  BinDefinition pair_bins;
  std::vector<ShapeFunction> univariate;
  std::vector<InteractionTerm> pairs;

  std::size_t features() const { return feature_names.size(); }
  std::size_t terms() const { return univariate.size() + pairs.size(); }
  std::string term_name(std::size_t term) const;
};

/// Per-bag training log-loss (weighted, on the bag's own sample) recorded
/// before the first round and after every round. The pair stage starts from
/// the bag-averaged univariate model, so it has its own baseline entry.
struct EbmTrainingTrace {
  std::vector<std::vector<double>> bag_losses;
  std::vector<std::vector<double>> pair_losses;
  std::vector<std::size_t> univariate_rounds;  // rounds run per bag (early stopping may cut)
  std::vector<std::pair<std::size_t, std::size_t>> selected_pairs;
};

struct EbmTrainOptions {
  std::size_t workers = 1;
  EbmTrainingTrace* trace = nullptr;
};

/// Cyclic boosting: every round visits each feature in index order and fits
/// the logistic residual y - p, computed from the logits at the start of the
/// round, by at most max_leaves contiguous bin segments with Newton values
/// sum(w r) / sum(w p(1 - p)). The scaled updates are applied together (halved
/// if the training loss would rise), so the result does not depend on feature
/// order. max_leaves = 0 gives every bin its own value. Then the top pairs are
/// detected and their grids boosted for pair_rounds() rounds. Bags train on
/// bootstrap resamples and are averaged; finally every term is centred on its
/// training distribution with the mass moved into the intercept.
EbmModel train_ebm(const Dataset& ds, const EbmConfig& cfg, const EbmTrainOptions& options = {});

struct PairScore {
  std::size_t first = 0;
  std::size_t second = 0;
  double score = 0.0;
};

/// Interaction strength of every pair: weighted residual sum-of-squares
/// reduction of the full grid x grid cell-mean fit minus that of the best
/// additive (row + column effect) fit on the same grid. Sorted by descending
/// score, ties by (first, second).
std::vector<PairScore> interaction_scores(const Dataset& ds, const EbmModel& model, int grid);

/// Top-k pairs from interaction_scores; k above p(p-1)/2 is clamped with a warning.
std::vector<std::pair<std::size_t, std::size_t>> detect_interactions(const Dataset& ds, const EbmModel& model,
                                                                     int k, int grid);

double predict_logit(const EbmModel& model, const VectorXd& row);
double predict_proba(const EbmModel& model, const VectorXd& row);
int predict_class(const EbmModel& model, const VectorXd& row, double threshold = 0.5);
VectorXd predict_proba(const EbmModel& model, const MatrixXd& X);
VectorXd predict_logit(const EbmModel& model, const MatrixXd& X);

struct Contribution {
  std::size_t term = 0;
  std::string name;
  double value = 0.0;  // log-odds; negative pushes toward class 0
};

struct LocalExplanation {
  double intercept = 0.0;
  std::vector<Contribution> contributions;  // model term order
  double logit = 0.0;
  double probability = 0.0;

  std::vector<Contribution> by_magnitude() const;
};

/// Signed per-term contributions. intercept + contributions, summed in term
/// order, reproduces predict_logit exactly.
LocalExplanation explain_local(const EbmModel& model, const VectorXd& row);

struct TermImportance {
  std::size_t term = 0;
  std::string name;
  bool is_pair = false;
  std::vector<std::size_t> features;
  double importance = 0.0;
};

/// Training-weighted mean |score| per term.
double term_importance(const VectorXd& scores, const VectorXd& weights);
double term_importance(const MatrixXd& scores, const MatrixXd& weights);

/// All terms ranked by importance (descending, ties by term index).
std::vector<TermImportance> explain_global(const EbmModel& model);

/// Feature ids ranked by univariate importance (ties by id). With
/// `split_pairs`, each pair term adds half its importance to both features.
std::vector<std::size_t> top_k_features(const EbmModel& model, std::size_t k, bool split_pairs = false);


nlohmann::json to_json(const EbmModel& model);
EbmModel ebm_model_from_json(const nlohmann::json& j);

void save_model(const EbmModel& model, const std::filesystem::path& path);
EbmModel load_model(const std::filesystem::path& path);

}  // namespace glassbox
