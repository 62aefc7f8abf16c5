#pragma once

#include "glassbox/core.hpp"
#include "glassbox/dataset.hpp"
#include "glassbox/scaling.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace glassbox {

/// Rows x factors table of 1-based levels; every factor has `levels` levels.
struct OrthogonalArray {
  std::string name;
  int levels = 0;
  Matrix<int> table;

  std::size_t rows() const { return static_cast<std::size_t>(table.rows()); }
  std::size_t factors() const { return static_cast<std::size_t>(table.cols()); }
  std::vector<int> row(std::size_t r) const;
};

/// Modular construction for prime `levels`. With factors <= levels + 1 the
/// array has levels^2 rows and columns a, b, a+b, a+2b, ... (mod levels). For
/// levels = 3 and 5..13 factors (or runs = 27) the 27-run array is built from
/// linear forms over Z_3^3 in the standard column order. runs = 0 picks the
/// smallest array that fits.
OrthogonalArray build_oa(int levels, int factors, int runs = 0);

/// "L9" (3 levels, up to 4 factors), "L25" (5 levels, up to 6), "L27" (3
/// levels, up to 13). factors = 0 selects 4, 5 and 5 respectively.
OrthogonalArray named_oa(const std::string& name, int factors = 0);

/// Each level appears rows/levels times in every column.
bool is_balanced(const OrthogonalArray& oa);
/// Each ordered level pair appears rows/levels^2 times in every column pair.
bool is_pairwise_orthogonal(const OrthogonalArray& oa);

/// Level k at position i puts scaler code k in slot i; any level already used
/// further left becomes 0.
ScalerSequence row_to_scaler_sequence(const std::vector<int>& levels, const ScalerParams& params = {});

/// Larger-the-better signal-to-noise ratio in dB: -10 log10(mean(1 / v^2)).
double sn_ratio(const std::vector<double>& values);

struct ExperimentResult {
  std::size_t row = 0;
  std::vector<int> levels;
  nlohmann::json configuration;
  std::uint64_t seed = 0;
  std::vector<double> fold_scores;
  double mean = 0.0;
  double sn_ratio = 0.0;
  bool failed = false;
  std::string failure;
};

struct ExperimentOptions {
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

/// Scores one OA row: (levels, row seed) -> per-fold objective values.
using RowObjective = std::function<std::vector<double>(const std::vector<int>& levels, std::uint64_t seed)>;
/// Describes a row's configuration for reports.
using RowDescriber = std::function<nlohmann::json(const std::vector<int>& levels)>;

/// Runs every row with seed mix_seed(options.seed, row). Rows are independent;
/// a row whose objective throws is marked failed and the run continues.
std::vector<ExperimentResult> run_experiment(const OrthogonalArray& oa, const RowDescriber& describe,
                                             const RowObjective& objective, const ExperimentOptions& options = {});

/// What a row trains: a scaler sequence plus model hyperparameter overrides.
struct RowPlan {
  ScalerSequence scalers;
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json configuration = nlohmann::json::object();
};

using ConfigMapper = std::function<RowPlan(const std::vector<int>& levels)>;

/// Fits on `train` and returns positive-class probabilities for `test_X`.
using FoldTrainer = std::function<VectorXd(const Dataset& train, const MatrixXd& test_X,
                                           const nlohmann::json& params, std::uint64_t seed)>;

/// Cross-validated ROC-AUC per row. Scalers are fitted on each training fold
/// only and then applied to that fold's validation rows. `scaler_columns`
/// restricts scaling to some features (empty = all).
std::vector<ExperimentResult> run_experiment(const Dataset& ds, const OrthogonalArray& oa, const ConfigMapper& mapper,
                                             const FoldTrainer& trainer, const StratifiedFolds& folds,
                                             const ExperimentOptions& options = {},
                                             const std::vector<std::size_t>& scaler_columns = {});

struct MainEffects {
  std::vector<std::vector<double>> level_sn;          // [factor][level - 1] mean S/N
  std::vector<std::vector<std::size_t>> level_count;  // rows averaged per cell
  std::vector<int> best_levels;                       // 1-based
  std::vector<bool> tie;
  std::size_t best_row = 0;  // highest mean objective, ties to the lowest row
  std::size_t used_rows = 0;
};

/// Failed rows are left out (with a warning); throws TrainingError when every
/// row failed.
MainEffects main_effects_select(const OrthogonalArray& oa, const std::vector<ExperimentResult>& results);

nlohmann::json to_json(const OrthogonalArray& oa);
nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json to_json(const MainEffects& m);
/// One line per row: row, levels, configuration, per-fold and mean scores, S/N.
std::string experiment_csv(const std::vector<ExperimentResult>& results);

}  // namespace glassbox
