#include "glassbox/commands.hpp"
#include "glassbox/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace glassbox;
using nlohmann::json;

namespace {

// Flags shared by every verb. Optionals stay empty unless given, so a manifest
// loaded from disk is only overridden by what the user actually typed.
struct Flags {
  std::string input;
  std::optional<std::string> label_column;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> folds;
  std::optional<double> threshold;
  std::string out_dir;
  std::string manifest;
  std::size_t workers = 1;
  std::optional<std::string> model;
  std::string params;
  std::string scalers;
  std::vector<std::size_t> scaler_columns;
  std::vector<std::size_t> features;
  json options = json::object();
};

json parse_json_arg(const std::string& text, const char* what) {
  if (std::filesystem::exists(text)) return read_json_file(text);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + " is neither a file nor valid JSON: " + e.what());
  }
}

ScalerSequence parse_scalers(const std::string& text) {
  if (std::filesystem::exists(text)) return scaler_sequence_from_json(read_json_file(text));
  std::array<int, 5> codes{};
  std::stringstream ss(text);
  std::string cell;
  std::size_t i = 0;
  while (std::getline(ss, cell, ',')) {
    if (i >= 5) throw ValidationError("--scalers takes at most 5 codes");
    try {
      codes[i++] = std::stoi(cell);
    } catch (const std::exception&) {
      throw ValidationError("--scalers: '" + cell + "' is not a scaler code");
    }
  }
  return ScalerSequence::from_codes(codes);
}

RunManifest build_manifest(const std::string& command, const Flags& f) {
  RunManifest m;
  std::filesystem::path manifest_path = f.manifest;
  const bool replay = !f.manifest.empty() && std::filesystem::exists(manifest_path);
  if (replay) {
    m = load_manifest(manifest_path);
    if (m.command != command) {
      throw ValidationError("manifest is for '" + m.command + "', not '" + command + "'");
    }
  } else {
    m.command = command;
  }
  if (!f.input.empty()) m.input = f.input;
  if (f.label_column) m.label_column = *f.label_column;
  if (f.seed) m.seed = *f.seed;
  if (f.folds) m.folds = *f.folds;
  if (f.threshold) m.threshold = *f.threshold;
  if (f.model) m.model = *f.model;
  if (!f.scalers.empty()) m.scalers = parse_scalers(f.scalers);
  if (!f.scaler_columns.empty()) m.scaler_columns = f.scaler_columns;
  if (!f.features.empty()) m.features = f.features;
  if (!f.params.empty()) {
    const json p = parse_json_arg(f.params, "--params");
    if (!p.is_object()) throw ValidationError("--params must be a JSON object");
    bool keyed_by_model = !p.empty();
    for (const auto& [k, v] : p.items()) {
      keyed_by_model = keyed_by_model && v.is_object() &&
                       (k == "ebm" || k == "logreg" || k == "tree" || k == "forest" || k == "gbt");
    }
    if (p.size() == 2 && p.contains("model") && p.contains("hyperparameters")) {
      // a best_hparams.json file
      const auto kind = p.at("model").get<std::string>();
      if (!f.model) m.model = kind;
      m.models[kind] = p.at("hyperparameters");
    } else if (keyed_by_model) {
      for (const auto& [k, v] : p.items()) m.models[k] = v;
    } else {
      m.models[m.model] = p;
    }
  }
  for (const auto& [k, v] : f.options.items()) m.options[k] = v;
  m.outputs.clear();
  m.tool_version = kToolVersion;
  if (m.folds < 2) throw ValidationError("--folds must be at least 2");
  if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) throw ValidationError("--threshold must lie in [0, 1]");
  return m;
}

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ValidationError& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return 2;
  } catch (const TrainingError& err) {
    std::cerr << "training error: " << err.what() << "\n";
    return 3;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "validation error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable boosting and baselines for imbalanced fraud detection"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Flags f;
  auto common = [&](CLI::App* sub, bool needs_input = true) {
    auto* in = sub->add_option("--input", f.input, "CSV file with a header row");
    if (!needs_input) in->description("CSV file with a header row (local explanations)");
    sub->add_option("--label-column", f.label_column, "label column name (default Class)");
    sub->add_option("--seed", f.seed, "master seed (default 0)");
    sub->add_option("--folds", f.folds, "cross-validation folds (default 5)");
    sub->add_option("--threshold", f.threshold, "decision threshold (default 0.5)");
    sub->add_option("--out-dir", f.out_dir, "directory for reports")->required();
    sub->add_option("--manifest", f.manifest, "replay this manifest if it exists, otherwise save the run to it");
    sub->add_option("--workers", f.workers, "threads (results do not depend on this)")->check(CLI::PositiveNumber);
    sub->add_option("--features", f.features, "feature column indices to keep")->delimiter(',');
  };
  auto modelled = [&](CLI::App* sub) {
    sub->add_option("--model", f.model, "ebm, logreg, tree, forest or gbt (default ebm)");
    sub->add_option("--params", f.params, "hyperparameters as JSON text or a JSON file");
    sub->add_option("--scalers", f.scalers, "scaler codes (e.g. 3,1,0,0,0) or a best_scalers.json file");
    sub->add_option("--scaler-columns", f.scaler_columns, "feature indices to scale (default all)")->delimiter(',');
  };

  std::vector<std::string> methods;
  std::optional<std::size_t> vif_bootstrap;
  std::optional<bool> include_label, vif_include_label;
  auto* eda = app.add_subcommand("eda", "correlation matrices and VIF table");
  common(eda);
  eda->add_option("--methods", methods, "pearson,spearman,kendall,chatterjee")->delimiter(',');
  eda->add_option("--vif-bootstrap", vif_bootstrap, "bootstrap replicates for VIF standard errors (default 100)");
  eda->add_option("--include-label", include_label, "add the label column to the correlation matrices (default true)");
  eda->add_option("--vif-include-label", vif_include_label, "add the label column to the VIF regressions (default false)");

  std::optional<std::string> oa;
  std::string levels;
  auto* tune_scalers = app.add_subcommand("tune-scalers", "L25 search over scaler sequences");
  common(tune_scalers);
  modelled(tune_scalers);
  tune_scalers->add_option("--oa", oa, "orthogonal array (L25)");

  auto* tune_hparams = app.add_subcommand("tune-hparams", "L9/L27 search over hyperparameters");
  common(tune_hparams);
  modelled(tune_hparams);
  tune_hparams->add_option("--oa", oa, "L9 or L27 (default L9)");
  tune_hparams->add_option("--levels", levels, "factor levels JSON file (default built in)");

  auto* train = app.add_subcommand("train", "fit scalers and a model on all rows");
  common(train);
  modelled(train);

  std::optional<std::size_t> k_min, k_max;
  std::optional<bool> split_pairs;
  std::optional<double> tolerance;
  auto* sweep = app.add_subcommand("feature-sweep", "EBM cross-validation over the top-k ranked features");
  common(sweep);
  modelled(sweep);
  sweep->add_option("--k-min", k_min, "smallest k (default 3)");
  sweep->add_option("--k-max", k_max, "largest k (default min(30, p))");
  sweep->add_option("--split-pairs", split_pairs, "credit pair importance to both features (default false)");
  sweep->add_option("--tolerance", tolerance, "ROC-AUC tolerance when picking the smallest k (default 5e-4)");

  std::vector<std::string> models;
  auto* compare = app.add_subcommand("compare", "all models on shared folds");
  common(compare);
  modelled(compare);
  compare->add_option("--models", models, "models to compare (default all five)")->delimiter(',');

  std::optional<double> gap_threshold;
  auto* overfit = app.add_subcommand("check-overfit", "train versus validation ROC-AUC gap");
  common(overfit);
  modelled(overfit);
  overfit->add_option("--gap-threshold", gap_threshold, "maximum allowed gap (default 0.1)");

  std::string mode, model_path;
  std::optional<std::size_t> row;
  auto* explain = app.add_subcommand("explain", "global or local EBM explanations");
  common(explain, false);
  explain->add_option("--model-path", model_path, "model.json written by train");
  explain->add_option("--mode", mode, "global or local (default global)");
  explain->add_option("--row", row, "row index into --input (local mode)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    auto set = [&](const char* key, const auto& value) {
      if (value) f.options[key] = *value;
    };
    if (!methods.empty()) f.options["methods"] = methods;
    set("vif_bootstrap", vif_bootstrap);
    set("include_label", include_label);
    set("vif_include_label", vif_include_label);
    set("oa", oa);
    if (!levels.empty()) f.options["levels"] = read_json_file(levels);
    set("k_min", k_min);
    set("k_max", k_max);
    set("split_pairs", split_pairs);
    set("tolerance", tolerance);
    if (!models.empty()) f.options["models"] = models;
    set("gap_threshold", gap_threshold);
    if (!model_path.empty()) f.options["model_path"] = model_path;
    if (!mode.empty()) f.options["mode"] = mode;
    set("row", row);

    const RunManifest m = build_manifest(sub->get_name(), f);
    const RunContext ctx{f.out_dir, f.workers};
    std::filesystem::create_directories(ctx.out_dir);
    run_command(m, ctx);
    if (!f.manifest.empty() && !std::filesystem::exists(f.manifest)) {
      std::filesystem::copy_file(ctx.out_dir / kManifestFile, f.manifest);
    }
    std::cout << "wrote " << (ctx.out_dir / kManifestFile).string() << "\n";
    return 0;
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
}
