#include "glassbox/commands.hpp"

#include "glassbox/io.hpp"
#include "glassbox/stats.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace glassbox {

using nlohmann::json;

namespace {

// Collects report files so the manifest can list them.
class Outputs {
 public:
  Outputs(const RunContext& ctx) : dir_(ctx.out_dir) {}

  void json_file(const std::string& name, const json& j) {
    write_json_file(dir_ / name, j);
    names_.push_back(name);
  }
  void text_file(const std::string& name, const std::string& text) {
    write_text_file(dir_ / name, text);
    names_.push_back(name);
  }
  void finish(RunManifest& m) {
    m.outputs = names_;
    write_json_file(dir_ / kManifestFile, to_json(m));
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> names_;
};

json report_header(const RunManifest& m) { return json{{"command", m.command}, {"manifest", kManifestFile}}; }

template <typename T>
T option(const RunManifest& m, const char* key, T fallback) {
  if (!m.options.contains(key) || m.options.at(key).is_null()) return fallback;
  try {
    return m.options.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("option '") + key + "': " + e.what());
  }
}

ModelKind primary_kind(const RunManifest& m) { return model_kind_from_string(m.model); }

// Scaler columns are indices into the full input; remap them onto a feature subset.
std::vector<std::size_t> remap_columns(const std::vector<std::size_t>& columns, const std::vector<std::size_t>& ids) {
  if (columns.empty()) return {};
  std::vector<std::size_t> out;
  for (std::size_t pos = 0; pos < ids.size(); ++pos) {
    if (std::find(columns.begin(), columns.end(), ids[pos]) != columns.end()) out.push_back(pos);
  }
  return out;
}

std::vector<std::size_t> input_scaler_columns(const RunManifest& m) { return remap_columns(m.scaler_columns, m.features); }

std::string fingerprint(const std::vector<std::size_t>& values) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t v : values) {
    for (int b = 0; b < 8; ++b) {
      h ^= (static_cast<std::uint64_t>(v) >> (8 * b)) & 0xFF;
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CvSummary {
  double precision = 0.0, recall = 0.0, roc_auc = 0.0, f1 = 0.0;
};

CvSummary summarize(const CvOutcome& cv) {
  CvSummary s;
  for (const auto& f : cv.folds) {
    s.precision += f.precision;
    s.recall += f.recall;
    s.roc_auc += f.roc_auc;
    s.f1 += f.f1;
  }
  const auto k = static_cast<double>(cv.folds.size());
  s.precision /= k;
  s.recall /= k;
  s.roc_auc /= k;
  s.f1 /= k;
  return s;
}

json to_json(const CvSummary& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"roc_auc", s.roc_auc}, {"f1", s.f1}};
}

json cv_to_json(const CvOutcome& cv) {
  json folds = json::array();
  for (const auto& f : cv.folds) folds.push_back(to_json(f));
  json j{{"mean", to_json(summarize(cv))}, {"pooled", to_json(cv.pooled)}, {"folds", folds}};
  if (!cv.train_auc.empty()) j["train_roc_auc"] = cv.train_auc;
  return j;
}

std::vector<std::string> summary_cells(const CvSummary& s) {
  return {format_number(s.precision), format_number(s.recall), format_number(s.roc_auc), format_number(s.f1)};
}

std::string matrix_csv(const CorrelationMatrix& cm) {
  std::vector<std::string> header{"feature"};
  header.insert(header.end(), cm.names.begin(), cm.names.end());
  CsvWriter csv(header);
  for (Eigen::Index i = 0; i < cm.values.rows(); ++i) {
    std::vector<std::string> cells{cm.names[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < cm.values.cols(); ++j) cells.push_back(format_number(cm.values(i, j)));
    csv.row(cells);
  }
  return csv.str();
}

json matrix_json(const CorrelationMatrix& cm) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < cm.values.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(cm.values.cols()));
    for (Eigen::Index j = 0; j < cm.values.cols(); ++j) r[static_cast<std::size_t>(j)] = cm.values(i, j);
    rows.push_back(r);
  }
  json j{{"method", to_string(cm.method)}, {"names", cm.names}, {"values", rows}};
  if (cm.method == CorrelationMethod::chatterjee) {
    j["orientation"] = "values[i][j] = xi(names[i] -> names[j]), how well names[i] predicts names[j]";
  }
  return j;
}

json vif_number(const VifRow& r, double v) { return r.infinite ? json("inf") : json(v); }

}  // namespace

json to_json(const RunManifest& m) {
  return json{{"command", m.command},
              {"input", m.input},
              {"label_column", m.label_column},
              {"seed", m.seed},
              {"folds", m.folds},
              {"threshold", m.threshold},
              {"model", m.model},
              {"scalers", to_json(m.scalers)},
              {"scaler_columns", m.scaler_columns},
              {"features", m.features},
              {"models", m.models},
              {"options", m.options},
              {"outputs", m.outputs},
              {"tool_version", m.tool_version}};
}

RunManifest run_manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.input = j.value("input", "");
    m.label_column = j.value("label_column", "Class");
    m.seed = j.value("seed", std::uint64_t{0});
    m.folds = j.value("folds", std::size_t{5});
    m.threshold = j.value("threshold", 0.5);
    m.model = j.value("model", "ebm");
    if (j.contains("scalers")) m.scalers = scaler_sequence_from_json(j.at("scalers"));
    m.scaler_columns = j.value("scaler_columns", std::vector<std::size_t>{});
    m.features = j.value("features", std::vector<std::size_t>{});
    m.models = j.value("models", json::object());
    m.options = j.value("options", json::object());
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.tool_version = j.value("tool_version", std::string(kToolVersion));
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest load_manifest(const std::filesystem::path& path) { return run_manifest_from_json(read_json_file(path)); }

json manifest_params(const RunManifest& m, ModelKind kind) {
  const std::string key = to_string(kind);
  return resolve_hyperparameters(kind, m.models.contains(key) ? m.models.at(key) : json::object());
}

Dataset load_input(const RunManifest& m) {
  if (m.input.empty()) throw ValidationError("no input file given");
  Dataset ds = load_csv(m.input, {m.label_column});
  if (!m.features.empty()) ds = select_features(ds, m.features);
  return ds;
}

json cmd_eda(RunManifest m, const RunContext& ctx) {
  const Dataset ds = load_input(m);
  const auto methods = option<std::vector<std::string>>(m, "methods", {"pearson", "spearman", "kendall", "chatterjee"});
  const bool include_label = option<bool>(m, "include_label", true);
  const bool vif_label = option<bool>(m, "vif_include_label", false);
  const auto bootstrap = option<std::size_t>(m, "vif_bootstrap", 100);
  m.options["methods"] = methods;
  m.options["include_label"] = include_label;
  m.options["vif_include_label"] = vif_label;
  m.options["vif_bootstrap"] = bootstrap;

  MatrixXd with_label(ds.X().rows(), ds.X().cols() + 1);
  with_label << ds.X(), ds.y().cast<double>();
  std::vector<std::string> names_with_label = ds.feature_names();
  names_with_label.push_back(m.label_column);

  Outputs out(ctx);
  json report = report_header(m);
  report["matrices"] = json::array();
  for (const auto& name : methods) {
    const auto method = correlation_method_from_string(name);
    const auto cm = include_label ? correlation_matrix(with_label, names_with_label, method, m.seed, ctx.workers)
                                  : correlation_matrix(ds, method, m.seed, ctx.workers);
    out.text_file("corr_" + name + ".csv", matrix_csv(cm));
    out.json_file("corr_" + name + ".json", matrix_json(cm));
    report["matrices"].push_back("corr_" + name + ".csv");
  }

  const VifTable vif = vif_label ? vif_table(with_label, names_with_label, bootstrap, m.seed, ctx.workers)
                                 : vif_table(ds, bootstrap, m.seed, ctx.workers);
  CsvWriter csv({"feature", "vif", "standard_error", "ci_lower", "ci_upper"});
  json rows = json::array();
  for (const auto& r : vif.rows) {
    csv.row({r.feature, r.infinite ? "inf" : format_number(r.vif), format_number(r.standard_error),
             r.infinite ? "inf" : format_number(r.ci_lower), r.infinite ? "inf" : format_number(r.ci_upper)});
    rows.push_back({{"feature", r.feature},
                    {"vif", vif_number(r, r.vif)},
                    {"standard_error", r.standard_error},
                    {"ci_lower", vif_number(r, r.ci_lower)},
                    {"ci_upper", vif_number(r, r.ci_upper)},
                    {"infinite", r.infinite}});
  }
  out.text_file("vif.csv", csv.str());
  out.json_file("vif.json", json{{"bootstrap_b", vif.bootstrap_b},
                                 {"seed", vif.seed},
                                 {"interval", "vif +/- 1.96 bootstrap standard error"},
                                 {"rows", rows}});
  report["vif"] = "vif.csv";
  out.json_file("eda_report.json", report);
  out.finish(m);
  return report;
}

json cmd_tune_scalers(RunManifest m, const RunContext& ctx, const FoldTrainer* trainer) {
  const Dataset ds = load_input(m);
  const ModelKind kind = primary_kind(m);
  const std::string oa_name = option<std::string>(m, "oa", "L25");
  m.options["oa"] = oa_name;
  const OrthogonalArray oa = named_oa(oa_name);
  if (oa.levels != 5 || oa.factors() != 5) throw ValidationError("scaler search needs a 5-level, 5-factor array (L25)");
  const json params = manifest_params(m, kind);
  m.models[to_string(kind)] = params;

  const ScalerParams scaler_params = m.scalers.params;
  ConfigMapper mapper = [&](const std::vector<int>& levels) {
    RowPlan plan;
    plan.scalers = row_to_scaler_sequence(levels, scaler_params);
    plan.params = params;
    std::vector<std::string> names;
    for (int c : plan.scalers.codes()) names.push_back(to_string(static_cast<ScalerCode>(c)));
    plan.configuration = {{"codes", plan.scalers.codes()}, {"scalers", names}};
    return plan;
  };
  const StratifiedFolds folds = stratified_kfold(ds, m.folds, m.seed);
  const FoldTrainer fold_trainer = trainer ? *trainer : make_fold_trainer(kind);
  const auto results =
      run_experiment(ds, oa, mapper, fold_trainer, folds, {ctx.workers, m.seed}, input_scaler_columns(m));
  const MainEffects effects = main_effects_select(oa, results);
  const auto& best = results[effects.best_row];
  const ScalerSequence adopted = mapper(best.levels).scalers;

  Outputs out(ctx);
  json rows = json::array();
  for (const auto& r : results) rows.push_back(to_json(r));
  json report = report_header(m);
  report.update({{"model", to_string(kind)},
                 {"oa", to_json(oa)},
                 {"repeat_rule", "a level already used further left in the row becomes 0 (no-op)"},
                 {"rows", rows},
                 {"main_effects", to_json(effects)},
                 {"best_row", best.row},
                 {"best_mean_roc_auc", best.mean},
                 {"adopted", to_json(adopted)}});
  out.text_file("scaler_experiments.csv", experiment_csv(results));
  out.json_file("best_scalers.json", to_json(adopted));
  out.json_file("scaler_experiments.json", report);
  out.finish(m);
  return report;
}

json cmd_tune_hparams(RunManifest m, const RunContext& ctx, const FoldTrainer* trainer) {
  const Dataset ds = load_input(m);
  const ModelKind kind = primary_kind(m);
  const std::string oa_name = option<std::string>(m, "oa", "L9");
  if (oa_name != "L9" && oa_name != "L27") throw ValidationError("hyperparameter search uses L9 or L27");
  const json levels_json = m.options.contains("levels") ? m.options.at("levels") : default_factor_levels();
  const auto factors = factor_levels_from_json(levels_json, kind);
  m.options["oa"] = oa_name;
  m.options["levels"] = json{{to_string(kind), levels_json.at(to_string(kind))}};

  const std::size_t capacity = oa_name == "L9" ? 4 : 5;
  if (oa_name == "L9" && factors.size() < 4) throw ValidationError("L9 needs at least 4 factors");
  const OrthogonalArray oa = named_oa(oa_name, static_cast<int>(std::min(capacity, factors.size())));
  for (const auto& f : factors) {
    if (f.values.size() != 3) throw ValidationError("factor '" + f.name + "' must have exactly 3 levels");
  }
  const json base = manifest_params(m, kind);
  m.models[to_string(kind)] = base;

  ConfigMapper mapper = [&](const std::vector<int>& levels) {
    RowPlan plan;
    plan.scalers = m.scalers;
    const json overrides = hyperparameters_for_row(factors, levels);
    json merged = base;
    for (const auto& [k, v] : overrides.items()) merged[k] = v;
    plan.params = resolve_hyperparameters(kind, merged);
    plan.configuration = overrides;
    return plan;
  };
  const StratifiedFolds folds = stratified_kfold(ds, m.folds, m.seed);
  const FoldTrainer fold_trainer = trainer ? *trainer : make_fold_trainer(kind);
  const auto results =
      run_experiment(ds, oa, mapper, fold_trainer, folds, {ctx.workers, m.seed}, input_scaler_columns(m));
  const MainEffects effects = main_effects_select(oa, results);
  const auto& best = results[effects.best_row];
  const json best_params = mapper(best.levels).params;

  Outputs out(ctx);
  json rows = json::array();
  for (const auto& r : results) rows.push_back(to_json(r));
  json report = report_header(m);
  report.update({{"model", to_string(kind)},
                 {"oa", to_json(oa)},
                 {"trainings", results.size()},
                 {"rows", rows},
                 {"main_effects", to_json(effects)},
                 {"main_effects_levels", hyperparameters_for_row(factors, effects.best_levels)},
                 {"best_row", best.row},
                 {"best_mean_roc_auc", best.mean},
                 {"best_hyperparameters", best_params}});
  CsvWriter summary({"model", "optimal_hyperparameters", "roc_auc"});
  summary.row({to_string(kind), best.configuration.dump(), format_number(best.mean)});
  out.text_file("hparam_experiments.csv", experiment_csv(results));
  out.text_file("hparam_summary.csv", summary.str());
  out.json_file("best_hparams.json", json{{"model", to_string(kind)}, {"hyperparameters", best_params}});
  out.json_file("hparam_experiments.json", report);
  out.finish(m);
  return report;
}

json cmd_train(RunManifest m, const RunContext& ctx) {
  const Dataset ds = load_input(m);
  const ModelKind kind = primary_kind(m);
  const json params = manifest_params(m, kind);
  m.models[to_string(kind)] = params;

  const FittedSequence fitted = fit_sequence(m.scalers, ds.X(), input_scaler_columns(m));
  const Dataset scaled = ds.with_features(apply_sequence(fitted, ds.X()));
  Pipeline pipeline{ds.feature_names(), fitted, train_model(kind, scaled, params, m.seed, ctx.workers)};
  const VectorXd probs = predict_proba(pipeline.model, scaled.X());

  Outputs out(ctx);
  save_pipeline(pipeline, ctx.out_dir / "model.json");
  json report = report_header(m);
  report.update({{"model", to_string(kind)},
                 {"model_file", "model.json"},
                 {"features", ds.feature_names()},
                 {"hyperparameters", params},
                 {"training_metrics", to_json(evaluate(ds.y(), probs, m.threshold))}});
  if (const auto* ebm = std::get_if<EbmModel>(&pipeline.model)) {
    json terms = json::array();
    for (const auto& t : explain_global(*ebm)) terms.push_back({{"term", t.name}, {"importance", t.importance}});
    report["term_importance"] = terms;
  }
  out.json_file("train_report.json", report);
  out.finish(m);
  // listed after finish so the manifest also names the model file
  m.outputs.insert(m.outputs.begin(), "model.json");
  write_json_file(ctx.out_dir / kManifestFile, to_json(m));
  return report;
}

json cmd_feature_sweep(RunManifest m, const RunContext& ctx) {
  const Dataset ds = load_input(m);
  const std::size_t p = ds.cols();
  const auto k_min = option<std::size_t>(m, "k_min", 3);
  const auto k_max = option<std::size_t>(m, "k_max", std::min<std::size_t>(30, p));
  const bool split_pairs = option<bool>(m, "split_pairs", false);
  const double tolerance = option<double>(m, "tolerance", 5e-4);
  if (k_max > p) {
    throw ValidationError("feature sweep: k_max = " + std::to_string(k_max) + " exceeds the " + std::to_string(p) +
                          " available features");
  }
  if (k_min < 1 || k_min > k_max) throw ValidationError("feature sweep: need 1 <= k_min <= k_max");
  m.options.update({{"k_min", k_min}, {"k_max", k_max}, {"split_pairs", split_pairs}, {"tolerance", tolerance}});
  m.model = "ebm";
  const json params = manifest_params(m, ModelKind::ebm);
  m.models["ebm"] = params;

  // rank features with an EBM fitted on every row
  const auto all_columns = input_scaler_columns(m);
  const FittedSequence fitted = fit_sequence(m.scalers, ds.X(), all_columns);
  const auto ranking_model =
      std::get<EbmModel>(train_model(ModelKind::ebm, ds.with_features(apply_sequence(fitted, ds.X())), params, m.seed,
                                     ctx.workers));
  const auto ranking = top_k_features(ranking_model, p, split_pairs);

  const StratifiedFolds folds = stratified_kfold(ds, m.folds, m.seed);
  const FoldTrainer trainer = make_fold_trainer(ModelKind::ebm);
  CsvWriter csv({"k", "precision", "recall", "roc_auc", "f1", "features"});
  json rows = json::array();
  std::vector<double> auc;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const std::vector<std::size_t> ids(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k));
    const Dataset sub = select_features(ds, ids);
    CvOptions cv_opts{m.scalers, remap_columns(all_columns.empty() ? std::vector<std::size_t>{} : all_columns, ids),
                      m.threshold, false, ctx.workers};
    if (!all_columns.empty() && cv_opts.scaler_columns.empty()) cv_opts.scalers = ScalerSequence{};
    const CvOutcome cv = cross_validate(sub, folds, trainer, params, m.seed, cv_opts);
    const CvSummary s = summarize(cv);
    auc.push_back(s.roc_auc);
    std::string names;
    for (std::size_t i = 0; i < ids.size(); ++i) names += (i ? " " : "") + ds.feature_names()[ids[i]];
    auto cells = summary_cells(s);
    cells.insert(cells.begin(), std::to_string(k));
    cells.push_back(names);
    csv.row(cells);
    json row = cv_to_json(cv);
    row["k"] = k;
    row["features"] = ids;
    rows.push_back(row);
  }
  const double best = *std::max_element(auc.begin(), auc.end());
  std::size_t chosen = k_max;
  for (std::size_t i = 0; i < auc.size(); ++i) {
    if (auc[i] >= best - tolerance) {
      chosen = k_min + i;
      break;
    }
  }

  json ranked = json::array();
  for (std::size_t id : ranking) ranked.push_back({{"feature", id}, {"name", ds.feature_names()[id]}});
  Outputs out(ctx);
  json report = report_header(m);
  report.update({{"ranking", ranked},
                 {"rows", rows},
                 {"best_roc_auc", best},
                 {"chosen_k", chosen},
                 {"rule", "smallest k whose mean fold ROC-AUC is within tolerance of the best"},
                 {"chosen_features",
                  std::vector<std::size_t>(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(chosen))}});
  out.text_file("feature_sweep.csv", csv.str());
  out.json_file("feature_sweep.json", report);
  out.finish(m);
  return report;
}

json cmd_compare(RunManifest m, const RunContext& ctx) {
  const Dataset ds = load_input(m);
  std::vector<std::string> names;
  for (ModelKind k : all_model_kinds()) names.push_back(to_string(k));
  names = option<std::vector<std::string>>(m, "models", names);
  m.options["models"] = names;
  std::vector<ModelKind> kinds;
  for (const auto& n : names) kinds.push_back(model_kind_from_string(n));
  for (ModelKind k : kinds) m.models[to_string(k)] = manifest_params(m, k);

  const StratifiedFolds folds = stratified_kfold(ds, m.folds, m.seed);
  const std::string shared = fingerprint(folds.assignment);
  CsvWriter csv({"model", "precision", "recall", "roc_auc", "f1", "status"});
  json rows = json::array();
  for (ModelKind kind : kinds) {
    json row{{"model", to_string(kind)}, {"hyperparameters", m.models[to_string(kind)]}};
    try {
      const CvOptions opts{m.scalers, input_scaler_columns(m), m.threshold, false, ctx.workers};
      const CvOutcome cv = cross_validate(ds, folds, make_fold_trainer(kind), m.models[to_string(kind)], m.seed, opts);
      row.update(cv_to_json(cv));
      row["fold_assignment"] = fingerprint(folds.assignment);
      row["status"] = "ok";
      auto cells = summary_cells(summarize(cv));
      cells.insert(cells.begin(), to_string(kind));
      cells.push_back("ok");
      csv.row(cells);
    } catch (const Error& e) {
      row["status"] = std::string("failed: ") + e.what();
      csv.row({to_string(kind), "", "", "", "", row["status"].get<std::string>()});
    }
    rows.push_back(row);
  }
  Outputs out(ctx);
  json report = report_header(m);
  report.update({{"features", ds.feature_names()},
                 {"fold_assignment", shared},
                 {"fold_sizes", [&] {
                    std::vector<std::size_t> sizes(folds.k, 0);
                    for (std::size_t a : folds.assignment) ++sizes[a];
                    return sizes;
                  }()},
                 {"rows", rows}});
  out.text_file("comparison.csv", csv.str());
  out.json_file("comparison.json", report);
  out.finish(m);
  return report;
}

json cmd_check_overfit(RunManifest m, const RunContext& ctx, const FoldTrainer* trainer) {
  const Dataset ds = load_input(m);
  const ModelKind kind = primary_kind(m);
  const double gap_threshold = option<double>(m, "gap_threshold", 0.1);
  m.options["gap_threshold"] = gap_threshold;
  const json params = manifest_params(m, kind);
  m.models[to_string(kind)] = params;

  const StratifiedFolds folds = stratified_kfold(ds, m.folds, m.seed);
  const CvOptions opts{m.scalers, input_scaler_columns(m), m.threshold, true, ctx.workers};
  const CvOutcome cv =
      cross_validate(ds, folds, trainer ? *trainer : make_fold_trainer(kind), params, m.seed, opts);
  std::vector<double> test_auc;
  for (const auto& f : cv.folds) test_auc.push_back(f.roc_auc);
  const OverfitReport gap = overfit_gap(cv.train_auc, test_auc, gap_threshold);

  CsvWriter csv({"fold", "train_roc_auc", "test_roc_auc"});
  for (std::size_t f = 0; f < test_auc.size(); ++f) {
    csv.row({std::to_string(f), format_number(cv.train_auc[f]), format_number(test_auc[f])});
  }
  csv.row({"mean", format_number(gap.mean_train), format_number(gap.mean_test)});
  Outputs out(ctx);
  json report = report_header(m);
  report.update({{"model", to_string(kind)},
                 {"overfit", to_json(gap)},
                 {"train_roc_auc", cv.train_auc},
                 {"test_roc_auc", test_auc}});
  out.text_file("overfit.csv", csv.str());
  out.json_file("overfit.json", report);
  out.finish(m);
  return report;
}

json cmd_explain(RunManifest m, const RunContext& ctx) {
  const auto model_path = option<std::string>(m, "model_path", "");
  const auto mode = option<std::string>(m, "mode", "global");
  if (model_path.empty()) throw ValidationError("explain needs a model file");
  if (mode != "global" && mode != "local") throw ValidationError("explain mode must be 'global' or 'local'");
  m.options["model_path"] = model_path;
  m.options["mode"] = mode;
  const Pipeline pipeline = load_pipeline(model_path);
  const auto* ebm = std::get_if<EbmModel>(&pipeline.model);
  if (ebm == nullptr) throw ValidationError("explanations need an EBM model, got '" + to_string(kind_of(pipeline.model)) + "'");

  Outputs out(ctx);
  json report = report_header(m);
  report["mode"] = mode;
  if (mode == "global") {
    CsvWriter csv({"rank", "term", "type", "importance"});
    json terms = json::array();
    std::size_t rank = 1;
    for (const auto& t : explain_global(*ebm)) {
      csv.row({std::to_string(rank), t.name, t.is_pair ? "pair" : "univariate", format_number(t.importance)});
      terms.push_back({{"rank", rank}, {"term", t.name}, {"type", t.is_pair ? "pair" : "univariate"},
                       {"features", t.features}, {"importance", t.importance}});
      ++rank;
    }
    report["terms"] = terms;
    out.text_file("explain_global.csv", csv.str());
    out.json_file("explain_global.json", report);
  } else {
    if (!m.options.contains("row") || m.options.at("row").is_null()) throw ValidationError("local explanation needs a row index");
    const auto row = option<std::size_t>(m, "row", 0);
    RunManifest input = m;
    input.features.clear();
    const Dataset ds = load_input(input);
    if (row >= ds.rows()) {
      throw ValidationError("row " + std::to_string(row) + " is out of range (input has " + std::to_string(ds.rows()) +
                            " rows)");
    }
    const MatrixXd X = pipeline.prepare(ds);
    const LocalExplanation e = explain_local(*ebm, X.row(static_cast<Eigen::Index>(row)).transpose());
    auto direction = [](double v) { return v > 0 ? "toward class 1" : (v < 0 ? "toward class 0" : "none"); };
    CsvWriter csv({"term", "contribution", "direction"});
    csv.row({"intercept", format_number(e.intercept), "baseline"});
    json contributions = json::array();
    for (const auto& c : e.by_magnitude()) {
      csv.row({c.name, format_number(c.value), direction(c.value)});
      contributions.push_back({{"term", c.name}, {"contribution", c.value}, {"direction", direction(c.value)}});
    }
    report.update({{"row", row},
                   {"label", ds.y()[static_cast<Eigen::Index>(row)]},
                   {"intercept", e.intercept},
                   {"contributions", contributions},
                   {"logit", e.logit},
                   {"probability_class_1", e.probability},
                   {"probability_class_0", 1.0 - e.probability},
                   {"sign_convention", "positive contributions push toward class 1, negative toward class 0"}});
    out.text_file("explain_local.csv", csv.str());
    out.json_file("explain_local.json", report);
  }
  out.finish(m);
  return report;
}

json run_command(const RunManifest& m, const RunContext& ctx) {
  if (m.command == "eda") return cmd_eda(m, ctx);
  if (m.command == "tune-scalers") return cmd_tune_scalers(m, ctx);
  if (m.command == "tune-hparams") return cmd_tune_hparams(m, ctx);
  if (m.command == "train") return cmd_train(m, ctx);
  if (m.command == "feature-sweep") return cmd_feature_sweep(m, ctx);
  if (m.command == "compare") return cmd_compare(m, ctx);
  if (m.command == "check-overfit") return cmd_check_overfit(m, ctx);
  if (m.command == "explain") return cmd_explain(m, ctx);
  throw ValidationError("unknown command '" + m.command + "'");
}

}  // namespace glassbox
