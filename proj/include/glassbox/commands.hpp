#pragma once

#include "glassbox/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace glassbox {

/// Everything a command needs to rerun. Output files are listed relative to
/// the output directory, so a manifest can be replayed into another directory.
struct RunManifest {
  std::string command;
  std::string input;
  std::string label_column = "Class";
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  double threshold = 0.5;
  std::string model = "ebm";
  ScalerSequence scalers;
  std::vector<std::size_t> scaler_columns;  // empty = all features
  std::vector<std::size_t> features;        // empty = all features
  nlohmann::json models = nlohmann::json::object();   // kind -> resolved hyperparameters
  nlohmann::json options = nlohmann::json::object();  // command-specific settings
  std::vector<std::string> outputs;
  std::string tool_version = kToolVersion;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const nlohmann::json& j);
RunManifest load_manifest(const std::filesystem::path& path);

inline constexpr const char* kManifestFile = "manifest.json";

/// Where reports go and how much parallelism to use. Neither changes results.
struct RunContext {
  std::filesystem::path out_dir = ".";
  std::size_t workers = 1;
};

/// Resolved hyperparameters for `kind` as recorded in the manifest (defaults
/// when absent).
nlohmann::json manifest_params(const RunManifest& m, ModelKind kind);

/// Loads the manifest's input with its label column and feature subset.
Dataset load_input(const RunManifest& m);

// Each command writes its report files into ctx.out_dir, then the manifest
// (with the outputs filled in), and returns the main JSON report.

/// options: methods (list), include_label (bool), vif_bootstrap (int).
nlohmann::json cmd_eda(RunManifest m, const RunContext& ctx);

/// options: oa ("L25"). A custom trainer replaces the model named in m.model.
nlohmann::json cmd_tune_scalers(RunManifest m, const RunContext& ctx, const FoldTrainer* trainer = nullptr);

/// options: oa ("L9" or "L27"), levels (factor table; defaults built in).
nlohmann::json cmd_tune_hparams(RunManifest m, const RunContext& ctx, const FoldTrainer* trainer = nullptr);

/// Fits scalers and model on all rows; writes model.json (a pipeline file).
nlohmann::json cmd_train(RunManifest m, const RunContext& ctx);

/// options: k_min (3), k_max (30), split_pairs (false), tolerance (5e-4).
nlohmann::json cmd_feature_sweep(RunManifest m, const RunContext& ctx);

/// options: models (list of kinds; default all five).
nlohmann::json cmd_compare(RunManifest m, const RunContext& ctx);

/// options: gap_threshold (0.1).
nlohmann::json cmd_check_overfit(RunManifest m, const RunContext& ctx, const FoldTrainer* trainer = nullptr);

/// options: model_path, mode ("global" or "local"), row (index into input).
nlohmann::json cmd_explain(RunManifest m, const RunContext& ctx);

/// Dispatches on m.command.
nlohmann::json run_command(const RunManifest& m, const RunContext& ctx);

}  // namespace glassbox
