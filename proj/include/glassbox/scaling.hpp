#pragma once

#include "glassbox/core.hpp"

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace glassbox {

/// Scaler codes as used in experiment tables. 0 is the "do nothing" slot.
enum class ScalerCode : int { none = 0, minmax = 1, standard = 2, quantile = 3, robust = 4, power = 5 };

std::string to_string(ScalerCode code);
ScalerCode scaler_code_from_int(int code);

struct MinMaxParams {
  double low = 0.0;
  double high = 1.0;
};

struct StandardParams {
  bool with_mean = true;
  bool with_std = true;
};

enum class QuantileOutput { uniform, normal };

struct QuantileParams {
  int n_quantiles = 1000;
  QuantileOutput output = QuantileOutput::uniform;
};

struct RobustParams {
  double q_low = 25.0;  // percent
  double q_high = 75.0;
};

/// Yeo-Johnson; the exponent is estimated per feature.
struct PowerParams {};

/// Parameters for every kind. A sequence picks which kinds run and in what
/// order; each kind always uses its entry here.
struct ScalerParams {
  MinMaxParams minmax;
  StandardParams standard;
  QuantileParams quantile;
  RobustParams robust;
  PowerParams power;

  void validate() const;
};

/// Five ordered pipeline slots. No non-zero code may repeat.
struct ScalerSequence {
  std::array<ScalerCode, 5> slots{ScalerCode::none, ScalerCode::none, ScalerCode::none, ScalerCode::none,
                                  ScalerCode::none};
  ScalerParams params;

  static ScalerSequence from_codes(const std::array<int, 5>& codes, ScalerParams params = {});
  std::array<int, 5> codes() const;
  void validate() const;
};

struct FittedMinMax {
  MinMaxParams params;
  VectorXd min, max;
};

struct FittedStandard {
  StandardParams params;
  VectorXd mean, std;  // population std (divide by n)
};

struct FittedQuantile {
  QuantileParams params;
  int n_quantiles = 0;  // effective count, min(requested, n)
  MatrixXd references;  // n_quantiles x p, column j ascending
};

struct FittedRobust {
  RobustParams params;
  VectorXd center, scale;
};

struct FittedPower {
  VectorXd lambda;
};

using FittedScalerStats = std::variant<FittedMinMax, FittedStandard, FittedQuantile, FittedRobust, FittedPower>;

/// One fitted stage. Constant training columns are marked pass-through and
/// left unchanged by apply_scaler.
struct FittedScaler {
  FittedScalerStats stats;
  std::vector<bool> passthrough;

  ScalerCode code() const;
  std::size_t cols() const { return passthrough.size(); }
};

FittedScaler fit_scaler(ScalerCode code, const ScalerParams& params, const MatrixXd& X);
MatrixXd apply_scaler(const FittedScaler& fitted, const MatrixXd& X);

/// Stages are fitted one after another, each on the output of the previous
/// ones. When `columns` is set, only those columns are transformed.
struct FittedSequence {
  ScalerSequence sequence;
  std::size_t n_features = 0;
  std::vector<std::size_t> columns;  // empty means all
  std::vector<FittedScaler> stages;  // non-zero slots, in slot order
};

FittedSequence fit_sequence(const ScalerSequence& seq, const MatrixXd& X,
                            const std::vector<std::size_t>& columns = {});
MatrixXd apply_sequence(const FittedSequence& fs, const MatrixXd& X);

/// Yeo-Johnson transform of one value.
double yeo_johnson(double x, double lambda);

/// Profile log-likelihood maximized when estimating lambda.
double yeo_johnson_log_likelihood(const VectorXd& x, double lambda);

/// Maximizes the profile log-likelihood over [-5, 5] by golden-section search.
double fit_yeo_johnson_lambda(const VectorXd& x);

/// Percentile (0..100) of a sorted sample, linear interpolation between order
/// statistics at position q/100 * (n - 1).
double percentile_sorted(const std::vector<double>& sorted, double q);

/// Inverse of the standard normal CDF.
double normal_quantile(double p);

nlohmann::json to_json(const ScalerSequence& seq);
ScalerSequence scaler_sequence_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedSequence& fs);
FittedSequence fitted_sequence_from_json(const nlohmann::json& j);

}  // namespace glassbox
