#include "glassbox/taguchi.hpp"

#include "glassbox/io.hpp"
#include "glassbox/metrics.hpp"

#include <cmath>
#include <map>
#include <numeric>

namespace glassbox {

using nlohmann::json;

namespace {

bool is_prime(int v) {
  if (v < 2) return false;
  for (int d = 2; d * d <= v; ++d) {
    if (v % d == 0) return false;
  }
  return true;
}

// Coefficients of the 13 columns of the 27-run array, in the usual order.
constexpr int kL27Forms[13][3] = {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 2, 0}, {0, 0, 1}, {1, 0, 1}, {1, 0, 2},
                                  {0, 1, 1}, {1, 1, 1}, {1, 2, 2}, {0, 1, 2}, {1, 1, 2}, {1, 2, 1}};

OrthogonalArray square_array(int s, int factors) {
  OrthogonalArray oa;
  oa.levels = s;
  oa.table.resize(s * s, factors);
  for (int a = 0; a < s; ++a) {
    for (int b = 0; b < s; ++b) {
      const int r = a * s + b;
      for (int c = 0; c < factors; ++c) {
        int v = 0;
        if (c == 0) v = a;
        else if (c == 1) v = b;
        else v = (a + (c - 1) * b) % s;
        oa.table(r, c) = v + 1;
      }
    }
  }
  return oa;
}

OrthogonalArray l27_array(int factors) {
  OrthogonalArray oa;
  oa.levels = 3;
  oa.table.resize(27, factors);
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        const int r = 9 * a + 3 * b + c;
        for (int f = 0; f < factors; ++f) {
          oa.table(r, f) = (kL27Forms[f][0] * a + kL27Forms[f][1] * b + kL27Forms[f][2] * c) % 3 + 1;
        }
      }
    }
  }
  return oa;
}

}  // namespace

std::vector<int> OrthogonalArray::row(std::size_t r) const {
  std::vector<int> out(factors());
  for (std::size_t c = 0; c < factors(); ++c) out[c] = table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

OrthogonalArray build_oa(int levels, int factors, int runs) {
  const auto unsupported = [&] {
    return ValidationError("build_oa: unsupported combination levels=" + std::to_string(levels) +
                           ", factors=" + std::to_string(factors) +
                           (runs ? ", runs=" + std::to_string(runs) : std::string{}));
  };
  if (!is_prime(levels) || factors < 1) throw unsupported();
  const int square = levels * levels;
  if (runs == 0) runs = factors <= levels + 1 ? square : (levels == 3 ? 27 : -1);
  OrthogonalArray oa;
  if (runs == square && factors <= levels + 1) {
    oa = square_array(levels, factors);
  } else if (levels == 3 && runs == 27 && factors <= 13) {
    oa = l27_array(factors);
  } else {
    throw unsupported();
  }
  oa.name = "L" + std::to_string(runs);
  return oa;
}

OrthogonalArray named_oa(const std::string& name, int factors) {
  if (name == "L9") return build_oa(3, factors ? factors : 4, 9);
  if (name == "L25") return build_oa(5, factors ? factors : 5, 25);
  if (name == "L27") return build_oa(3, factors ? factors : 5, 27);
  throw ValidationError("unknown orthogonal array '" + name + "' (expected L9, L25 or L27)");
}

bool is_balanced(const OrthogonalArray& oa) {
  const auto s = static_cast<std::size_t>(oa.levels);
  if (s == 0 || oa.rows() % s != 0) return false;
  for (std::size_t c = 0; c < oa.factors(); ++c) {
    std::vector<std::size_t> count(s, 0);
    for (std::size_t r = 0; r < oa.rows(); ++r) {
      const int v = oa.table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (v < 1 || v > oa.levels) return false;
      ++count[static_cast<std::size_t>(v - 1)];
    }
    for (std::size_t k : count) {
      if (k != oa.rows() / s) return false;
    }
  }
  return true;
}

bool is_pairwise_orthogonal(const OrthogonalArray& oa) {
  const auto s = static_cast<std::size_t>(oa.levels);
  if (s == 0 || oa.rows() % (s * s) != 0) return false;
  for (std::size_t c1 = 0; c1 < oa.factors(); ++c1) {
    for (std::size_t c2 = c1 + 1; c2 < oa.factors(); ++c2) {
      std::vector<std::size_t> count(s * s, 0);
      for (std::size_t r = 0; r < oa.rows(); ++r) {
        const int a = oa.table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c1));
        const int b = oa.table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c2));
        if (a < 1 || a > oa.levels || b < 1 || b > oa.levels) return false;
        ++count[static_cast<std::size_t>(a - 1) * s + static_cast<std::size_t>(b - 1)];
      }
      for (std::size_t k : count) {
        if (k != oa.rows() / (s * s)) return false;
      }
    }
  }
  return true;
}

ScalerSequence row_to_scaler_sequence(const std::vector<int>& levels, const ScalerParams& params) {
  if (levels.size() != 5) throw ValidationError("row_to_scaler_sequence: expected 5 levels");
  std::array<int, 5> codes{};
  std::vector<bool> seen(6, false);
  for (std::size_t i = 0; i < 5; ++i) {
    const int v = levels[i];
    if (v < 1 || v > 5) throw ValidationError("row_to_scaler_sequence: level out of [1, 5]");
    codes[i] = seen[static_cast<std::size_t>(v)] ? 0 : v;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return ScalerSequence::from_codes(codes, params);
}

double sn_ratio(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sn_ratio: no values");
  double sum = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw ValidationError("sn_ratio: values must be positive");
    sum += 1.0 / (v * v);
  }
  return -10.0 * std::log10(sum / static_cast<double>(values.size()));
}

std::vector<ExperimentResult> run_experiment(const OrthogonalArray& oa, const RowDescriber& describe,
                                             const RowObjective& objective, const ExperimentOptions& options) {
  std::vector<ExperimentResult> results(oa.rows());
  parallel_for(oa.rows(), options.workers, [&](std::size_t r) {
    auto& res = results[r];
    res.row = r;
    res.levels = oa.row(r);
    res.seed = mix_seed(options.seed, r);
    try {
      if (describe) res.configuration = describe(res.levels);
      res.fold_scores = objective(res.levels, res.seed);
      if (res.fold_scores.empty()) throw TrainingError("objective returned no scores");
      res.mean = std::accumulate(res.fold_scores.begin(), res.fold_scores.end(), 0.0) /
                 static_cast<double>(res.fold_scores.size());
      res.sn_ratio = sn_ratio(res.fold_scores);
    } catch (const std::exception& e) {
      res.failed = true;
      res.failure = e.what();
    }
  });
  return results;
}

std::vector<ExperimentResult> run_experiment(const Dataset& ds, const OrthogonalArray& oa, const ConfigMapper& mapper,
                                             const FoldTrainer& trainer, const StratifiedFolds& folds,
                                             const ExperimentOptions& options,
                                             const std::vector<std::size_t>& scaler_columns) {
  if (folds.assignment.size() != ds.rows()) throw ValidationError("run_experiment: folds do not match the dataset");
  // split once; every row reuses the same folds
  std::vector<Dataset> train_sets, test_sets;
  for (std::size_t f = 0; f < folds.k; ++f) {
    train_sets.push_back(ds.subset_rows(folds.train_rows(f)));
    test_sets.push_back(ds.subset_rows(folds.test_rows(f)));
  }
  auto describe = [&](const std::vector<int>& levels) { return mapper(levels).configuration; };
  auto objective = [&](const std::vector<int>& levels, std::uint64_t seed) {
    const RowPlan plan = mapper(levels);
    std::vector<double> scores;
    for (std::size_t f = 0; f < folds.k; ++f) {
      const auto fitted = fit_sequence(plan.scalers, train_sets[f].X(), scaler_columns);
      const Dataset train = train_sets[f].with_features(apply_sequence(fitted, train_sets[f].X()));
      const MatrixXd test_X = apply_sequence(fitted, test_sets[f].X());
      const VectorXd probs = trainer(train, test_X, plan.params, mix_seed(seed, f));
      scores.push_back(roc_auc(test_sets[f].y(), probs));
    }
    return scores;
  };
  return run_experiment(oa, describe, objective, options);
}

MainEffects main_effects_select(const OrthogonalArray& oa, const std::vector<ExperimentResult>& results) {
  MainEffects m;
  const auto s = static_cast<std::size_t>(oa.levels);
  m.level_sn.assign(oa.factors(), std::vector<double>(s, 0.0));
  m.level_count.assign(oa.factors(), std::vector<std::size_t>(s, 0));
  bool have_best = false;
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (r.failed) {
      ++failed;
      continue;
    }
    if (r.levels.size() != oa.factors()) throw ValidationError("main_effects_select: result does not match the array");
    ++m.used_rows;
    for (std::size_t f = 0; f < oa.factors(); ++f) {
      const auto level = static_cast<std::size_t>(r.levels[f] - 1);
      m.level_sn[f][level] += r.sn_ratio;
      ++m.level_count[f][level];
    }
    const auto& best = results[m.best_row];
    if (!have_best || r.mean > best.mean || (r.mean == best.mean && r.row < best.row)) {
      m.best_row = static_cast<std::size_t>(&r - results.data());
      have_best = true;
    }
  }
  if (!have_best) throw TrainingError("main_effects_select: all experiment rows failed");
  if (failed > 0) warn(std::to_string(failed) + " failed experiment row(s) excluded from main effects");

  m.best_levels.assign(oa.factors(), 1);
  m.tie.assign(oa.factors(), false);
  for (std::size_t f = 0; f < oa.factors(); ++f) {
    bool have = false;
    double best = 0.0;
    for (std::size_t l = 0; l < s; ++l) {
      if (m.level_count[f][l] == 0) continue;
      m.level_sn[f][l] /= static_cast<double>(m.level_count[f][l]);
      const double v = m.level_sn[f][l];
      const double tol = 1e-12 * std::max(1.0, std::abs(best));
      if (!have || v > best + tol) {
        best = v;
        m.best_levels[f] = static_cast<int>(l + 1);
        m.tie[f] = false;
        have = true;
      } else if (std::abs(v - best) <= tol) {
        m.tie[f] = true;
      }
    }
  }
  return m;
}

json to_json(const OrthogonalArray& oa) {
  json rows = json::array();
  for (std::size_t r = 0; r < oa.rows(); ++r) rows.push_back(oa.row(r));
  return json{{"name", oa.name}, {"levels", oa.levels}, {"factors", oa.factors()}, {"rows", rows}};
}

json to_json(const ExperimentResult& r) {
  json j{{"row", r.row},
         {"levels", r.levels},
         {"configuration", r.configuration},
         {"seed", r.seed},
         {"fold_scores", r.fold_scores},
         {"failed", r.failed}};
  if (r.failed) {
    j["failure"] = r.failure;
  } else {
    j["mean"] = r.mean;
    j["sn_ratio"] = r.sn_ratio;
  }
  return j;
}

json to_json(const MainEffects& m) {
  std::vector<int> ties;
  for (bool t : m.tie) ties.push_back(t ? 1 : 0);
  return json{{"level_sn", m.level_sn},
              {"level_count", m.level_count},
              {"best_levels", m.best_levels},
              {"tie", ties},
              {"best_row", m.best_row},
              {"used_rows", m.used_rows}};
}

std::string experiment_csv(const std::vector<ExperimentResult>& results) {
  std::size_t folds = 0;
  for (const auto& r : results) folds = std::max(folds, r.fold_scores.size());
  std::vector<std::string> header{"row", "levels", "configuration"};
  for (std::size_t f = 0; f < folds; ++f) header.push_back("fold" + std::to_string(f));
  for (const char* h : {"mean_roc_auc", "sn_ratio_db", "status"}) header.emplace_back(h);
  CsvWriter csv(header);
  for (const auto& r : results) {
    std::string levels;
    for (std::size_t i = 0; i < r.levels.size(); ++i) levels += (i ? " " : "") + std::to_string(r.levels[i]);
    std::vector<std::string> cells{std::to_string(r.row), levels, r.configuration.dump()};
    for (std::size_t f = 0; f < folds; ++f) cells.push_back(f < r.fold_scores.size() ? format_number(r.fold_scores[f]) : "");
    cells.push_back(r.failed ? "" : format_number(r.mean));
    cells.push_back(r.failed ? "" : format_number(r.sn_ratio));
    cells.push_back(r.failed ? "failed: " + r.failure : "ok");
    csv.row(cells);
  }
  return csv.str();
}

}  // namespace glassbox
