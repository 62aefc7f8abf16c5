#pragma once

#include "glassbox/baselines.hpp"
#include "glassbox/dataset.hpp"
#include "glassbox/ebm.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/scaling.hpp"
#include "glassbox/taguchi.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace glassbox {

enum class ModelKind { ebm, logreg, tree, forest, gbt };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
const std::vector<ModelKind>& all_model_kinds();

/// Tuned defaults per model (the optima of the hyperparameter search).
nlohmann::json default_hyperparameters(ModelKind kind);

/// Defaults overlaid with `overrides`, validated and written out in full.
/// A "seed" key is dropped: seeds always come from the run.
nlohmann::json resolve_hyperparameters(ModelKind kind, const nlohmann::json& overrides);

using AnyModel = std::variant<EbmModel, LinearModel, TreeModel, ForestModel, GbtModel>;

ModelKind kind_of(const AnyModel& model);
AnyModel train_model(ModelKind kind, const Dataset& ds, const nlohmann::json& params, std::uint64_t seed,
                     std::size_t workers = 1);
VectorXd predict_proba(const AnyModel& model, const MatrixXd& X);
nlohmann::json model_body(const AnyModel& model);
AnyModel model_from_body(ModelKind kind, const nlohmann::json& body);

FoldTrainer make_fold_trainer(ModelKind kind, std::size_t workers = 1);

/// Preprocessing plus model, stored as one file: features are picked by name
/// from the input, scaled by the fitted sequence, then scored.
struct Pipeline {
  std::vector<std::string> features;
  FittedSequence scalers;
  AnyModel model;

  MatrixXd prepare(const Dataset& ds) const;
  VectorXd predict_proba(const Dataset& ds) const;
};

void save_pipeline(const Pipeline& pipeline, const std::filesystem::path& path);
Pipeline load_pipeline(const std::filesystem::path& path);

struct CvOutcome {
  std::vector<MetricsReport> folds;  // validation metrics per fold
  std::vector<double> train_auc;     // empty unless requested
  MetricsReport pooled;              // all out-of-fold predictions together
  double mean_auc = 0.0;             // mean of the per-fold validation ROC-AUC
  VectorXd oof;
};

struct CvOptions {
  ScalerSequence scalers;
  std::vector<std::size_t> scaler_columns;
  double threshold = 0.5;
  bool train_scores = false;
  std::size_t workers = 1;
};

/// Fold f trains with seed mix_seed(seed, f). Scalers are fitted on the
/// training part of each fold only.
CvOutcome cross_validate(const Dataset& ds, const StratifiedFolds& folds, const FoldTrainer& trainer,
                         const nlohmann::json& params, std::uint64_t seed, const CvOptions& options);

/// One tunable factor and its candidate values.
struct FactorLevels {
  std::string name;
  std::vector<nlohmann::json> values;
};

/// Candidate levels per model: {"ebm": [{"name": ..., "levels": [...]}, ...]}.
std::vector<FactorLevels> factor_levels_from_json(const nlohmann::json& j, ModelKind kind);
nlohmann::json default_factor_levels();

/// Overrides for one OA row; level k of factor f picks factors[f].values[k - 1].
nlohmann::json hyperparameters_for_row(const std::vector<FactorLevels>& factors, const std::vector<int>& levels);

}  // namespace glassbox
