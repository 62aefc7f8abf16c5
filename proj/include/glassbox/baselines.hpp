#pragma once

#include "glassbox/core.hpp"
#include "glassbox/dataset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace glassbox {

// Logistic regression -------------------------------------------------------

/// C is the inverse regularization strength; the penalty on the weights is
/// l2/2 * |w|^2 with l2 = 1 / (C n) against the mean weighted log-loss, which
/// matches the usual "C times summed loss" convention. The bias is unpenalized.
struct LogregConfig {
  double C = 1.0;
  std::array<double, 2> class_weights{1.0, 10.0};
  double tol = 1e-8;
  int max_iter = 100;

  void validate() const;
};

struct LinearModel {
  std::vector<std::string> feature_names;
  VectorXd weights;
  double bias = 0.0;
  double l2 = 0.0;
  LogregConfig config;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;  // max-norm of the objective gradient at the solution
};

/// Damped Newton with Armijo backtracking on
///   (1/n) sum_i w_i logloss_i + l2/2 |w|^2.
/// Stops when the gradient max-norm drops below tol or after max_iter steps.
LinearModel train_logreg(const Dataset& ds, const LogregConfig& cfg);

/// Objective gradient (weights then bias) for a given parameter vector; used
/// to audit convergence.
VectorXd logreg_gradient(const Dataset& ds, const LinearModel& model);

double predict_proba(const LinearModel& model, const VectorXd& row);
VectorXd predict_proba(const LinearModel& model, const MatrixXd& X);

// Trees ---------------------------------------------------------------------

/// Internal node when feature >= 0: rows with x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  std::size_t samples = 0;
};

struct TreeConfig {
  int max_depth = 5;
  std::size_t min_samples_split = 50;
  std::size_t min_samples_leaf = 20;
  std::array<double, 2> class_weights{1.0, 10.0};

  void validate() const;
};

struct TreeModel {
  std::vector<std::string> feature_names;
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  TreeConfig config;

  double predict(const VectorXd& row) const;
  int depth() const;
};

/// Growth limits shared by every tree learner. max_features = 0 means all.
struct TreeGrowth {
  int max_depth = 5;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;
  std::uint64_t feature_seed = 0;
};

/// Greedy weighted least-squares tree on `target` over X rows listed in
/// `rows` (duplicates allowed). For 0/1 targets the criterion is half the
/// class-weighted Gini impurity, so this is CART. Split thresholds are
/// midpoints between consecutive distinct values; ties go to the lowest
/// (feature, threshold). Leaves hold the weighted mean target.
std::vector<TreeNode> grow_tree(const MatrixXd& X, std::span<const std::size_t> rows, std::span<const double> target,
                                std::span<const double> weight, const TreeGrowth& growth);

double tree_value(const std::vector<TreeNode>& nodes, const VectorXd& row);

/// Class-weighted Gini CART; leaves hold the weighted positive fraction.
TreeModel train_tree(const Dataset& ds, const TreeConfig& cfg);
TreeModel train_tree(const Dataset& ds, std::span<const std::size_t> rows, const TreeConfig& cfg,
                     std::size_t max_features, std::uint64_t feature_seed);

double predict_proba(const TreeModel& model, const VectorXd& row);
VectorXd predict_proba(const TreeModel& model, const MatrixXd& X);

// Random forest -------------------------------------------------------------

struct ForestConfig {
  std::size_t n_estimators = 200;
  int max_depth = 10;
  std::size_t max_features = 0;  // 0 selects ceil(sqrt(p))
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::array<double, 2> class_weights{1.0, 1.0};
  std::uint64_t seed = 0;

  void validate() const;
};

struct ForestModel {
  std::vector<std::string> feature_names;
  std::vector<TreeModel> trees;
  std::vector<std::uint64_t> tree_seeds;
  ForestConfig config;
};

/// Row ids drawn with replacement, n of them.
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed);

/// Tree t trains on bootstrap_rows(n, mix_seed(tree_seed, 0)) with feature
/// sampling seeded by mix_seed(tree_seed, 1), where tree_seed = mix_seed(seed, t).
ForestModel train_forest(const Dataset& ds, const ForestConfig& cfg, std::size_t workers = 1);

double predict_proba(const ForestModel& model, const VectorXd& row);
VectorXd predict_proba(const ForestModel& model, const MatrixXd& X);

// Gradient-boosted trees ----------------------------------------------------

struct GbtConfig {
  double learning_rate = 0.1;
  int max_depth = 3;
  int n_rounds = 100;
  double scale_pos_weight = 10.0;
  double subsample = 1.0;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GbtModel {
  std::vector<std::string> feature_names;
  double base_logit = 0.0;
  std::vector<std::vector<TreeNode>> trees;  // leaves hold logit increments, already scaled
  GbtConfig config;
  std::vector<double> train_loss;  // weighted log-loss before round 1 and after each round
};

/// Stagewise first-order boosting: each round fits a regression tree to the
/// logistic residuals y - p with positive rows weighted by scale_pos_weight,
/// and adds learning_rate times the leaf means.
GbtModel train_gbt(const Dataset& ds, const GbtConfig& cfg);

double predict_logit(const GbtModel& model, const VectorXd& row);
double predict_proba(const GbtModel& model, const VectorXd& row);
VectorXd predict_proba(const GbtModel& model, const MatrixXd& X);

// Serialization -------------------------------------------------------------

nlohmann::json to_json(const LogregConfig& cfg);
nlohmann::json to_json(const TreeConfig& cfg);
nlohmann::json to_json(const ForestConfig& cfg);
nlohmann::json to_json(const GbtConfig& cfg);
LogregConfig logreg_config_from_json(const nlohmann::json& j, LogregConfig base = {});
TreeConfig tree_config_from_json(const nlohmann::json& j, TreeConfig base = {});
ForestConfig forest_config_from_json(const nlohmann::json& j, ForestConfig base = {});
GbtConfig gbt_config_from_json(const nlohmann::json& j, GbtConfig base = {});

nlohmann::json to_json(const LinearModel& model);
nlohmann::json to_json(const TreeModel& model);
nlohmann::json to_json(const ForestModel& model);
nlohmann::json to_json(const GbtModel& model);
LinearModel linear_model_from_json(const nlohmann::json& j);
TreeModel tree_model_from_json(const nlohmann::json& j);
ForestModel forest_model_from_json(const nlohmann::json& j);
GbtModel gbt_model_from_json(const nlohmann::json& j);

}  // namespace glassbox
