#include "glassbox/pipeline.hpp"

#include "glassbox/io.hpp"

namespace glassbox {

using nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ebm: return "ebm";
    case ModelKind::logreg: return "logreg";
    case ModelKind::tree: return "tree";
    case ModelKind::forest: return "forest";
    case ModelKind::gbt: return "gbt";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind k : all_model_kinds()) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown model '" + name + "' (expected ebm, logreg, tree, forest or gbt)");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds{ModelKind::ebm, ModelKind::logreg, ModelKind::tree, ModelKind::forest,
                                            ModelKind::gbt};
  return kinds;
}

json default_hyperparameters(ModelKind kind) {
  switch (kind) {
    case ModelKind::ebm: return {{"interactions", 20}, {"max_bins", 256}, {"learning_rate", 0.05}, {"max_rounds", 100}};
    case ModelKind::logreg: return {{"C", 1.0}, {"class_weights", {1.0, 10.0}}};
    case ModelKind::tree:
      return {{"max_depth", 5}, {"min_samples_split", 50}, {"min_samples_leaf", 20}, {"class_weights", {1.0, 10.0}}};
    case ModelKind::forest:
      return {{"max_depth", 10}, {"n_estimators", 200}, {"class_weights", {1.0, 1.0}}, {"max_features", 0}};
    case ModelKind::gbt:
      return {{"learning_rate", 0.1}, {"max_depth", 3}, {"scale_pos_weight", 10.0}, {"subsample", 1.0}};
  }
  return json::object();
}

json resolve_hyperparameters(ModelKind kind, const json& overrides) {
  if (!overrides.is_null() && !overrides.is_object()) throw ValidationError("hyperparameters must be a JSON object");
  json merged = default_hyperparameters(kind);
  if (overrides.is_object()) {
    for (const auto& [k, v] : overrides.items()) merged[k] = v;
  }
  merged.erase("seed");
  json out;
  switch (kind) {
    case ModelKind::ebm: out = to_json(ebm_config_from_json(merged)); break;
    case ModelKind::logreg: out = to_json(logreg_config_from_json(merged)); break;
    case ModelKind::tree: out = to_json(tree_config_from_json(merged)); break;
    case ModelKind::forest: out = to_json(forest_config_from_json(merged)); break;
    case ModelKind::gbt: out = to_json(gbt_config_from_json(merged)); break;
  }
  out.erase("seed");
  return out;
}

ModelKind kind_of(const AnyModel& model) {
  static constexpr ModelKind kinds[] = {ModelKind::ebm, ModelKind::logreg, ModelKind::tree, ModelKind::forest,
                                        ModelKind::gbt};
  return kinds[model.index()];
}

AnyModel train_model(ModelKind kind, const Dataset& ds, const json& params, std::uint64_t seed, std::size_t workers) {
  json p = params.is_object() ? params : json::object();
  p.erase("seed");
  switch (kind) {
    case ModelKind::ebm: {
      EbmConfig cfg = ebm_config_from_json(p);
      cfg.seed = seed;
      return train_ebm(ds, cfg, {workers, nullptr});
    }
    case ModelKind::logreg: return train_logreg(ds, logreg_config_from_json(p));
    case ModelKind::tree: return train_tree(ds, tree_config_from_json(p));
    case ModelKind::forest: {
      ForestConfig cfg = forest_config_from_json(p);
      cfg.seed = seed;
      return train_forest(ds, cfg, workers);
    }
    case ModelKind::gbt: {
      GbtConfig cfg = gbt_config_from_json(p);
      cfg.seed = seed;
      return train_gbt(ds, cfg);
    }
  }
  throw ValidationError("unknown model kind");
}

VectorXd predict_proba(const AnyModel& model, const MatrixXd& X) {
  return std::visit([&](const auto& m) -> VectorXd { return predict_proba(m, X); }, model);
}

json model_body(const AnyModel& model) {
  return std::visit([](const auto& m) { return to_json(m); }, model);
}

AnyModel model_from_body(ModelKind kind, const json& body) {
  switch (kind) {
    case ModelKind::ebm: return ebm_model_from_json(body);
    case ModelKind::logreg: return linear_model_from_json(body);
    case ModelKind::tree: return tree_model_from_json(body);
    case ModelKind::forest: return forest_model_from_json(body);
    case ModelKind::gbt: return gbt_model_from_json(body);
  }
  throw ValidationError("unknown model kind");
}

FoldTrainer make_fold_trainer(ModelKind kind, std::size_t workers) {
  return [kind, workers](const Dataset& train, const MatrixXd& test_X, const json& params, std::uint64_t seed) {
    return predict_proba(train_model(kind, train, params, seed, workers), test_X);
  };
}

MatrixXd Pipeline::prepare(const Dataset& ds) const {
  MatrixXd X(static_cast<Eigen::Index>(ds.rows()), static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    X.col(static_cast<Eigen::Index>(j)) = ds.X().col(static_cast<Eigen::Index>(ds.feature_index(features[j])));
  }
  return apply_sequence(scalers, X);
}

VectorXd Pipeline::predict_proba(const Dataset& ds) const { return glassbox::predict_proba(model, prepare(ds)); }

void save_pipeline(const Pipeline& pipeline, const std::filesystem::path& path) {
  const json body{{"model_kind", to_string(kind_of(pipeline.model))},
                  {"features", pipeline.features},
                  {"scalers", to_json(pipeline.scalers)},
                  {"model", model_body(pipeline.model)}};
  write_json_file(path, make_envelope("pipeline", body));
}

Pipeline load_pipeline(const std::filesystem::path& path) {
  const json envelope = read_json_file(path);
  const std::string kind = envelope.is_object() ? envelope.value("kind", "") : "";
  if (kind != "pipeline") {
    // a bare model file: no preprocessing, features taken from the model
    const ModelKind mk = model_kind_from_string(kind);
    Pipeline p{{}, {}, model_from_body(mk, open_envelope(envelope, kind))};
    p.features = std::visit([](const auto& m) { return m.feature_names; }, p.model);
    p.scalers.n_features = p.features.size();
    return p;
  }
  const json& body = open_envelope(envelope, "pipeline");
  try {
    Pipeline p{body.at("features").get<std::vector<std::string>>(), fitted_sequence_from_json(body.at("scalers")),
               model_from_body(model_kind_from_string(body.at("model_kind").get<std::string>()), body.at("model"))};
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed pipeline file: ") + e.what());
  }
}

CvOutcome cross_validate(const Dataset& ds, const StratifiedFolds& folds, const FoldTrainer& trainer,
                         const json& params, std::uint64_t seed, const CvOptions& options) {
  if (folds.assignment.size() != ds.rows()) throw ValidationError("cross_validate: folds do not match the dataset");
  CvOutcome out;
  out.folds.resize(folds.k);
  out.oof = VectorXd::Zero(static_cast<Eigen::Index>(ds.rows()));
  std::vector<double> train_auc(folds.k, 0.0);
  parallel_for(folds.k, options.workers, [&](std::size_t f) {
    const auto train_rows = folds.train_rows(f);
    const auto test_rows = folds.test_rows(f);
    const Dataset train_raw = ds.subset_rows(train_rows);
    const Dataset test_raw = ds.subset_rows(test_rows);
    const auto fitted = fit_sequence(options.scalers, train_raw.X(), options.scaler_columns);
    const Dataset train = train_raw.with_features(apply_sequence(fitted, train_raw.X()));
    MatrixXd score_X = apply_sequence(fitted, test_raw.X());
    if (options.train_scores) {
      // score validation and training rows with the same fitted model
      MatrixXd both(score_X.rows() + train.X().rows(), score_X.cols());
      both << score_X, train.X();
      score_X = std::move(both);
    }
    const VectorXd probs = trainer(train, score_X, params, mix_seed(seed, f));
    if (probs.size() != score_X.rows()) throw TrainingError("trainer returned the wrong number of scores");
    const auto n_test = static_cast<Eigen::Index>(test_rows.size());
    const VectorXd test_probs = probs.head(n_test);
    out.folds[f] = evaluate(test_raw.y(), test_probs, options.threshold, f);
    for (Eigen::Index i = 0; i < n_test; ++i) out.oof[static_cast<Eigen::Index>(test_rows[static_cast<std::size_t>(i)])] = test_probs[i];
    if (options.train_scores) train_auc[f] = roc_auc(train.y(), VectorXd(probs.tail(probs.size() - n_test)));
  });
  if (options.train_scores) out.train_auc = train_auc;
  out.pooled = evaluate(ds.y(), out.oof, options.threshold);
  double sum = 0.0;
  for (const auto& r : out.folds) sum += r.roc_auc;
  out.mean_auc = sum / static_cast<double>(folds.k);
  return out;
}

std::vector<FactorLevels> factor_levels_from_json(const json& j, ModelKind kind) {
  const std::string key = to_string(kind);
  if (!j.is_object() || !j.contains(key)) throw ValidationError("levels file has no entry for model '" + key + "'");
  std::vector<FactorLevels> out;
  try {
    for (const auto& f : j.at(key)) {
      FactorLevels fl{f.at("name").get<std::string>(), {}};
      for (const auto& v : f.at("levels")) fl.values.push_back(v);
      if (fl.values.empty()) throw ValidationError("factor '" + fl.name + "' has no levels");
      out.push_back(std::move(fl));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed levels file: ") + e.what());
  }
  if (out.empty()) throw ValidationError("levels file lists no factors for '" + key + "'");
  return out;
}

json default_factor_levels() {
  auto factor = [](const char* name, json levels) { return json{{"name", name}, {"levels", std::move(levels)}}; };
  return json{
      {"ebm",
       {factor("learning_rate", {0.01, 0.05, 0.1}), factor("max_bins", {128, 256, 512}),
        factor("max_rounds", {50, 100, 200}), factor("interactions", {10, 20, 30}), factor("outer_bags", {4, 8, 12})}},
      {"logreg",
       {factor("C", {0.1, 1.0, 10.0}), factor("positive_weight", {1.0, 10.0, 50.0}),
        factor("max_iter", {25, 50, 100}), factor("tol", {1e-4, 1e-6, 1e-8})}},
      {"tree",
       {factor("max_depth", {3, 5, 8}), factor("min_samples_split", {20, 50, 100}),
        factor("min_samples_leaf", {10, 20, 40}), factor("positive_weight", {1.0, 10.0, 50.0})}},
      {"forest",
       {factor("max_depth", {5, 10, 15}), factor("n_estimators", {100, 200, 300}),
        factor("positive_weight", {1.0, 10.0, 50.0}), factor("min_samples_leaf", {1, 5, 10}),
        factor("max_features", {0, 1, 2})}},
      {"gbt",
       {factor("learning_rate", {0.05, 0.1, 0.3}), factor("max_depth", {2, 3, 4}),
        factor("scale_pos_weight", {1.0, 10.0, 50.0}), factor("subsample", {0.6, 0.8, 1.0}),
        factor("n_rounds", {50, 100, 200})}}};
}

json hyperparameters_for_row(const std::vector<FactorLevels>& factors, const std::vector<int>& levels) {
  if (levels.size() > factors.size()) throw ValidationError("more array columns than tunable factors");
  json out = json::object();
  for (std::size_t f = 0; f < levels.size(); ++f) {
    const auto& values = factors[f].values;
    const int l = levels[f];
    if (l < 1 || static_cast<std::size_t>(l) > values.size()) {
      throw ValidationError("factor '" + factors[f].name + "' has no level " + std::to_string(l));
    }
    out[factors[f].name] = values[static_cast<std::size_t>(l - 1)];
  }
  return out;
}

}  // namespace glassbox
