#include "glassbox/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace glassbox {

using nlohmann::json;

namespace {

constexpr double kCdfClip = 1e-7;
constexpr double kLambdaLow = -5.0;
constexpr double kLambdaHigh = 5.0;

std::vector<double> sorted_column(const MatrixXd& X, Eigen::Index j) {
  std::vector<double> v(X.col(j).data(), X.col(j).data() + X.rows());
  std::sort(v.begin(), v.end());
  return v;
}

bool is_constant(const std::vector<double>& sorted) { return sorted.front() == sorted.back(); }

std::vector<double> to_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd to_eigen(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double quantile_cdf(const double* refs, int n, double v) {
  if (v <= refs[0]) return 0.0;
  if (v >= refs[n - 1]) return 1.0;
  const double* lo = std::lower_bound(refs, refs + n, v);
  const double* hi = std::upper_bound(refs, refs + n, v);
  const double denom = static_cast<double>(n - 1);
  if (lo != hi) {
    // v sits on a run of equal references; use the middle of the run.
    return 0.5 * static_cast<double>((lo - refs) + (hi - refs) - 1) / denom;
  }
  const auto j = (lo - refs) - 1;
  const double t = (v - refs[j]) / (refs[j + 1] - refs[j]);
  return (static_cast<double>(j) + t) / denom;
}

}  // namespace

std::string to_string(ScalerCode code) {
  switch (code) {
    case ScalerCode::none: return "none";
    case ScalerCode::minmax: return "minmax";
    case ScalerCode::standard: return "standard";
    case ScalerCode::quantile: return "quantile";
    case ScalerCode::robust: return "robust";
    case ScalerCode::power: return "power";
  }
  return "unknown";
}

ScalerCode scaler_code_from_int(int code) {
  if (code < 0 || code > 5) throw ValidationError("scaler code " + std::to_string(code) + " outside 0..5");
  return static_cast<ScalerCode>(code);
}

void ScalerParams::validate() const {
  if (!(minmax.low < minmax.high)) throw ValidationError("minmax: feature_range low must be < high");
  if (quantile.n_quantiles < 2) throw ValidationError("quantile: n_quantiles must be > 1");
  if (!(0.0 <= robust.q_low && robust.q_low < robust.q_high && robust.q_high <= 100.0)) {
    throw ValidationError("robust: quantile_range must satisfy 0 <= low < high <= 100");
  }
}

ScalerSequence ScalerSequence::from_codes(const std::array<int, 5>& codes, ScalerParams params) {
  ScalerSequence seq;
  for (std::size_t i = 0; i < 5; ++i) seq.slots[i] = scaler_code_from_int(codes[i]);
  seq.params = params;
  seq.validate();
  return seq;
}

std::array<int, 5> ScalerSequence::codes() const {
  std::array<int, 5> out{};
  for (std::size_t i = 0; i < 5; ++i) out[i] = static_cast<int>(slots[i]);
  return out;
}

void ScalerSequence::validate() const {
  std::array<bool, 6> seen{};
  for (auto code : slots) {
    const int c = static_cast<int>(code);
    if (c == 0) continue;
    if (seen[static_cast<std::size_t>(c)]) {
      throw ValidationError("scaler sequence repeats " + to_string(code) + "; duplicates must be 0");
    }
    seen[static_cast<std::size_t>(c)] = true;
  }
  params.validate();
}

ScalerCode FittedScaler::code() const {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FittedMinMax>) return ScalerCode::minmax;
        else if constexpr (std::is_same_v<T, FittedStandard>) return ScalerCode::standard;
        else if constexpr (std::is_same_v<T, FittedQuantile>) return ScalerCode::quantile;
        else if constexpr (std::is_same_v<T, FittedRobust>) return ScalerCode::robust;
        else return ScalerCode::power;
      },
      stats);
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("percentile of empty sample");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double yeo_johnson(double x, double lambda) {
  if (lambda == 1.0) return x;
  if (x >= 0.0) {
    if (std::abs(lambda) < 1e-12) return std::log1p(x);
    return std::expm1(lambda * std::log1p(x)) / lambda;
  }
  const double two_minus = 2.0 - lambda;
  if (std::abs(two_minus) < 1e-12) return -std::log1p(-x);
  return -std::expm1(two_minus * std::log1p(-x)) / two_minus;
}

double yeo_johnson_log_likelihood(const VectorXd& x, double lambda) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  VectorXd t(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    t[i] = yeo_johnson(x[i], lambda);
    mean += t[i];
  }
  mean /= n;
  const double var = (t.array() - mean).square().sum() / n;
  double jacobian = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    jacobian += std::copysign(std::log1p(std::abs(x[i])), x[i]);
  }
  if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n * std::log(var) + (lambda - 1.0) * jacobian;
}

double fit_yeo_johnson_lambda(const VectorXd& x) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = kLambdaLow, b = kLambdaHigh;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = yeo_johnson_log_likelihood(x, c);
  double fd = yeo_johnson_log_likelihood(x, d);
  while (b - a > 1e-6) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = yeo_johnson_log_likelihood(x, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = yeo_johnson_log_likelihood(x, d);
    }
  }
  return std::clamp(0.5 * (a + b), kLambdaLow, kLambdaHigh);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ValidationError("normal_quantile: p outside [0,1]");
  }
  // Acklam's rational approximation, then one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

FittedScaler fit_scaler(ScalerCode code, const ScalerParams& params, const MatrixXd& X) {
  if (X.rows() == 0 || X.cols() == 0) throw ValidationError("fit_scaler: empty matrix");
  if (code == ScalerCode::none) throw ValidationError("fit_scaler: code 0 has nothing to fit");
  params.validate();
  const Eigen::Index p = X.cols();
  const Eigen::Index n = X.rows();
  FittedScaler out;
  out.passthrough.assign(static_cast<std::size_t>(p), false);

  switch (code) {
    case ScalerCode::minmax: {
      FittedMinMax s{params.minmax, X.colwise().minCoeff().transpose(), X.colwise().maxCoeff().transpose()};
      for (Eigen::Index j = 0; j < p; ++j) out.passthrough[static_cast<std::size_t>(j)] = s.min[j] == s.max[j];
      out.stats = std::move(s);
      break;
    }
    case ScalerCode::standard: {
      FittedStandard s{params.standard, VectorXd(p), VectorXd(p)};
      for (Eigen::Index j = 0; j < p; ++j) {
        const double mean = X.col(j).mean();
        s.mean[j] = mean;
        s.std[j] = std::sqrt((X.col(j).array() - mean).square().sum() / static_cast<double>(n));
        out.passthrough[static_cast<std::size_t>(j)] = X.col(j).minCoeff() == X.col(j).maxCoeff();
      }
      out.stats = std::move(s);
      break;
    }
    case ScalerCode::quantile: {
      const int nq = static_cast<int>(std::min<Eigen::Index>(params.quantile.n_quantiles, n));
      if (nq < 2) throw ValidationError("quantile: need at least 2 rows");
      FittedQuantile s{params.quantile, nq, MatrixXd(nq, p)};
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto sorted = sorted_column(X, j);
        out.passthrough[static_cast<std::size_t>(j)] = is_constant(sorted);
        for (int k = 0; k < nq; ++k) {
          s.references(k, j) = percentile_sorted(sorted, 100.0 * k / (nq - 1));
        }
      }
      out.stats = std::move(s);
      break;
    }
    case ScalerCode::robust: {
      FittedRobust s{params.robust, VectorXd(p), VectorXd(p)};
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto sorted = sorted_column(X, j);
        const bool constant = is_constant(sorted);
        out.passthrough[static_cast<std::size_t>(j)] = constant;
        s.center[j] = constant ? 0.0 : percentile_sorted(sorted, 50.0);
        const double iqr = percentile_sorted(sorted, params.robust.q_high) -
                           percentile_sorted(sorted, params.robust.q_low);
        s.scale[j] = (constant || iqr == 0.0) ? 1.0 : iqr;
      }
      out.stats = std::move(s);
      break;
    }
    case ScalerCode::power: {
      FittedPower s{VectorXd(p)};
      for (Eigen::Index j = 0; j < p; ++j) {
        const bool constant = X.col(j).minCoeff() == X.col(j).maxCoeff();
        out.passthrough[static_cast<std::size_t>(j)] = constant;
        s.lambda[j] = constant ? 1.0 : fit_yeo_johnson_lambda(X.col(j));
      }
      out.stats = std::move(s);
      break;
    }
    case ScalerCode::none: break;
  }
  return out;
}

MatrixXd apply_scaler(const FittedScaler& fitted, const MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != fitted.cols()) {
    throw ValidationError("apply_scaler: matrix has " + std::to_string(X.cols()) + " columns, scaler was fitted on " +
                          std::to_string(fitted.cols()));
  }
  MatrixXd out = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (fitted.passthrough[static_cast<std::size_t>(j)]) continue;
    auto col = out.col(j);
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, FittedMinMax>) {
            const double k = (s.params.high - s.params.low) / (s.max[j] - s.min[j]);
            col = ((col.array() - s.min[j]) * k + s.params.low).matrix();
          } else if constexpr (std::is_same_v<T, FittedStandard>) {
            if (s.params.with_mean) col.array() -= s.mean[j];
            if (s.params.with_std && s.std[j] > 0.0) col.array() /= s.std[j];
          } else if constexpr (std::is_same_v<T, FittedQuantile>) {
            const double* refs = s.references.col(j).data();
            for (Eigen::Index i = 0; i < col.size(); ++i) {
              double u = quantile_cdf(refs, s.n_quantiles, col[i]);
              if (s.params.output == QuantileOutput::normal) {
                col[i] = normal_quantile(std::clamp(u, kCdfClip, 1.0 - kCdfClip));
              } else {
                col[i] = u;
              }
            }
          } else if constexpr (std::is_same_v<T, FittedRobust>) {
            col = ((col.array() - s.center[j]) / s.scale[j]).matrix();
          } else {
            for (Eigen::Index i = 0; i < col.size(); ++i) col[i] = yeo_johnson(col[i], s.lambda[j]);
          }
        },
        fitted.stats);
  }
  return out;
}

namespace {

MatrixXd take_columns(const MatrixXd& X, const std::vector<std::size_t>& columns) {
  MatrixXd out(X.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = X.col(static_cast<Eigen::Index>(columns[k]));
  }
  return out;
}

}  // namespace

FittedSequence fit_sequence(const ScalerSequence& seq, const MatrixXd& X, const std::vector<std::size_t>& columns) {
  seq.validate();
  FittedSequence fs{seq, static_cast<std::size_t>(X.cols()), columns, {}};
  for (std::size_t c : columns) {
    if (c >= fs.n_features) throw ValidationError("fit_sequence: column " + std::to_string(c) + " out of range");
  }
  MatrixXd work = columns.empty() ? X : take_columns(X, columns);
  for (ScalerCode code : seq.slots) {
    if (code == ScalerCode::none) continue;
    fs.stages.push_back(fit_scaler(code, seq.params, work));
    work = apply_scaler(fs.stages.back(), work);
  }
  return fs;
}

MatrixXd apply_sequence(const FittedSequence& fs, const MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != fs.n_features) {
    throw ValidationError("apply_sequence: matrix has " + std::to_string(X.cols()) + " columns, sequence was fitted on " +
                          std::to_string(fs.n_features));
  }
  if (fs.columns.empty()) {
    MatrixXd out = X;
    for (const auto& stage : fs.stages) out = apply_scaler(stage, out);
    return out;
  }
  MatrixXd sub = take_columns(X, fs.columns);
  for (const auto& stage : fs.stages) sub = apply_scaler(stage, sub);
  MatrixXd out = X;
  for (std::size_t k = 0; k < fs.columns.size(); ++k) {
    out.col(static_cast<Eigen::Index>(fs.columns[k])) = sub.col(static_cast<Eigen::Index>(k));
  }
  return out;
}

json to_json(const ScalerSequence& seq) {
  const auto& p = seq.params;
  return json{
      {"slots", seq.codes()},
      {"names",
       [&] {
         std::vector<std::string> names;
         for (auto c : seq.slots) names.push_back(to_string(c));
         return names;
       }()},
      {"params",
       {{"minmax", {{"feature_range", {p.minmax.low, p.minmax.high}}}},
        {"standard", {{"with_mean", p.standard.with_mean}, {"with_std", p.standard.with_std}}},
        {"quantile",
         {{"n_quantiles", p.quantile.n_quantiles},
          {"output_distribution", p.quantile.output == QuantileOutput::normal ? "normal" : "uniform"}}},
        {"robust", {{"quantile_range", {p.robust.q_low, p.robust.q_high}}}},
        {"power", {{"method", "yeo-johnson"}}}}},
  };
}

ScalerSequence scaler_sequence_from_json(const json& j) {
  try {
    ScalerParams params;
    if (j.contains("params")) {
      const auto& p = j.at("params");
      if (p.contains("minmax")) {
        const auto r = p.at("minmax").at("feature_range").get<std::vector<double>>();
        if (r.size() != 2) throw ValidationError("minmax feature_range needs two values");
        params.minmax = {r[0], r[1]};
      }
      if (p.contains("standard")) {
        params.standard = {p.at("standard").at("with_mean").get<bool>(), p.at("standard").at("with_std").get<bool>()};
      }
      if (p.contains("quantile")) {
        const auto& q = p.at("quantile");
        params.quantile.n_quantiles = q.at("n_quantiles").get<int>();
        const auto dist = q.at("output_distribution").get<std::string>();
        if (dist != "uniform" && dist != "normal") throw ValidationError("unknown output_distribution '" + dist + "'");
        params.quantile.output = dist == "normal" ? QuantileOutput::normal : QuantileOutput::uniform;
      }
      if (p.contains("robust")) {
        const auto r = p.at("robust").at("quantile_range").get<std::vector<double>>();
        if (r.size() != 2) throw ValidationError("robust quantile_range needs two values");
        params.robust = {r[0], r[1]};
      }
    }
    const auto codes = j.at("slots").get<std::vector<int>>();
    if (codes.size() != 5) throw ValidationError("scaler sequence needs exactly 5 slots");
    return ScalerSequence::from_codes({codes[0], codes[1], codes[2], codes[3], codes[4]}, params);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scaler sequence: ") + e.what());
  }
}

json to_json(const FittedSequence& fs) {
  json stages = json::array();
  for (const auto& stage : fs.stages) {
    json s{{"code", static_cast<int>(stage.code())}, {"kind", to_string(stage.code())}};
    std::vector<int> pass;
    for (bool b : stage.passthrough) pass.push_back(b ? 1 : 0);
    s["passthrough"] = pass;
    std::visit(
        [&](const auto& st) {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, FittedMinMax>) {
            s["min"] = to_vector(st.min);
            s["max"] = to_vector(st.max);
          } else if constexpr (std::is_same_v<T, FittedStandard>) {
            s["mean"] = to_vector(st.mean);
            s["std"] = to_vector(st.std);
            s["std_convention"] = "population";
          } else if constexpr (std::is_same_v<T, FittedQuantile>) {
            s["n_quantiles"] = st.n_quantiles;
            json refs = json::array();
            for (Eigen::Index c = 0; c < st.references.cols(); ++c) refs.push_back(to_vector(st.references.col(c)));
            s["references"] = refs;
          } else if constexpr (std::is_same_v<T, FittedRobust>) {
            s["center"] = to_vector(st.center);
            s["scale"] = to_vector(st.scale);
          } else {
            s["lambda"] = to_vector(st.lambda);
          }
        },
        stage.stats);
    stages.push_back(std::move(s));
  }
  return json{{"sequence", to_json(fs.sequence)},
              {"n_features", fs.n_features},
              {"columns", fs.columns},
              {"stages", stages}};
}

FittedSequence fitted_sequence_from_json(const json& j) {
  try {
    FittedSequence fs;
    fs.sequence = scaler_sequence_from_json(j.at("sequence"));
    fs.n_features = j.at("n_features").get<std::size_t>();
    fs.columns = j.at("columns").get<std::vector<std::size_t>>();
    const auto& params = fs.sequence.params;
    for (const auto& s : j.at("stages")) {
      FittedScaler stage;
      for (int b : s.at("passthrough").get<std::vector<int>>()) stage.passthrough.push_back(b != 0);
      switch (scaler_code_from_int(s.at("code").get<int>())) {
        case ScalerCode::minmax: stage.stats = FittedMinMax{params.minmax, to_eigen(s.at("min")), to_eigen(s.at("max"))}; break;
        case ScalerCode::standard:
          stage.stats = FittedStandard{params.standard, to_eigen(s.at("mean")), to_eigen(s.at("std"))};
          break;
        case ScalerCode::quantile: {
          FittedQuantile q{params.quantile, s.at("n_quantiles").get<int>(), {}};
          const auto& refs = s.at("references");
          q.references.resize(q.n_quantiles, static_cast<Eigen::Index>(refs.size()));
          for (std::size_t c = 0; c < refs.size(); ++c) q.references.col(static_cast<Eigen::Index>(c)) = to_eigen(refs[c]);
          stage.stats = std::move(q);
          break;
        }
        case ScalerCode::robust:
          stage.stats = FittedRobust{params.robust, to_eigen(s.at("center")), to_eigen(s.at("scale"))};
          break;
        case ScalerCode::power: stage.stats = FittedPower{to_eigen(s.at("lambda"))}; break;
        case ScalerCode::none: throw ValidationError("fitted stage with code 0");
      }
      fs.stages.push_back(std::move(stage));
    }
    return fs;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fitted scaler sequence: ") + e.what());
  }
}

}  // namespace glassbox
