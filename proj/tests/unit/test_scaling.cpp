#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glassbox/scaling.hpp"
#include "support.hpp"

#include <cmath>

using namespace glassbox;
using doctest::Approx;

namespace {

MatrixXd column(std::initializer_list<double> v) {
  MatrixXd X(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) X(i++, 0) = x;
  return X;
}

MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd X(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = std::exp(rng.normal() * (0.3 + 0.2 * static_cast<double>(j)));
  }
  return X;
}

// Yeo-Johnson written out from its definition.
double yj(double x, double l) {
  if (x >= 0) return std::abs(l) < 1e-12 ? std::log1p(x) : (std::pow(x + 1, l) - 1) / l;
  return std::abs(l - 2) < 1e-12 ? -std::log1p(-x) : -(std::pow(1 - x, 2 - l) - 1) / (2 - l);
}

double yj_loglik(const VectorXd& x, double l) {
  const double n = static_cast<double>(x.size());
  VectorXd t(x.size());
  double jac = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    t[i] = yj(x[i], l);
    jac += (x[i] >= 0 ? 1.0 : -1.0) * std::log1p(std::abs(x[i]));
  }
  const double var = (t.array() - t.mean()).square().sum() / n;
  return -0.5 * n * std::log(var) + (l - 1) * jac;
}

double brute_force_lambda(const VectorXd& x) {
  double best = -5, best_ll = -1e300;
  for (int k = 0; k <= 10000; ++k) {
    const double l = -5.0 + 0.001 * k;
    const double ll = yj_loglik(x, l);
    if (ll > best_ll) {
      best_ll = ll;
      best = l;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("standard: centering identity and population std") {
  const auto f = fit_scaler(ScalerCode::standard, {}, column({1, 2, 3}));
  const auto& st = std::get<FittedStandard>(f.stats);
  CHECK(st.mean[0] == Approx(2.0));
  CHECK(st.std[0] == Approx(std::sqrt(2.0 / 3.0)));
  const MatrixXd out = apply_scaler(f, column({1, 2, 3}));
  CHECK(std::abs(out.mean()) < 1e-12);
}

TEST_CASE("minmax: fit, linear map, constant pass-through") {
  const auto f = fit_scaler(ScalerCode::minmax, {}, column({0, 5, 10}));
  const auto& mm = std::get<FittedMinMax>(f.stats);
  CHECK(mm.min[0] == 0.0);
  CHECK(mm.max[0] == 10.0);
  const MatrixXd out = apply_scaler(f, column({0, 5, 10}));
  CHECK(out(0, 0) == 0.0);
  CHECK(out(1, 0) == 0.5);
  CHECK(out(2, 0) == 1.0);

  const auto c = fit_scaler(ScalerCode::minmax, {}, column({4, 4, 4}));
  CHECK(c.passthrough[0]);
  CHECK(apply_scaler(c, column({4, 7}))(1, 0) == 7.0);
}

TEST_CASE("robust (25, 75) on [1,2,3,4,100]") {
  const MatrixXd X = column({1, 2, 3, 4, 100});
  const auto f = fit_scaler(ScalerCode::robust, {}, X);
  const auto& r = std::get<FittedRobust>(f.stats);
  std::vector<double> v{1, 2, 3, 4, 100};
  CHECK(r.center[0] == oracle::percentile(v, 50));
  CHECK(r.scale[0] == oracle::percentile(v, 75) - oracle::percentile(v, 25));
  CHECK(r.center[0] == 3.0);
  CHECK(r.scale[0] == 2.0);
  CHECK(apply_scaler(f, column({4}))(0, 0) == 0.5);
}

TEST_CASE("percentile_sorted matches the interpolation oracle") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + rng.uniform_index(40));
    for (auto& x : v) x = std::round(rng.normal() * 4);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.0, 12.5, 25.0, 50.0, 75.0, 99.0, 100.0}) {
      CHECK(percentile_sorted(sorted, q) == Approx(oracle::percentile(v, q)).epsilon(1e-14));
    }
  }
}

TEST_CASE("Yeo-Johnson: transform identity and lambda search") {
  for (double x : {-3.0, -0.5, 0.0, 0.25, 8.0}) {
    CHECK(yeo_johnson(x, 1.0) == x);
    for (double l : {-1.5, 0.0, 0.5, 2.0, 3.0}) CHECK(yeo_johnson(x, l) == Approx(yj(x, l)).epsilon(1e-12));
  }

  SUBCASE("normal data gives lambda near 1") {
    Rng rng(9);
    VectorXd x(4000);
    for (auto& v : x) v = rng.normal();
    CHECK(std::abs(fit_yeo_johnson_lambda(x) - 1.0) < 0.2);
  }
  SUBCASE("golden section agrees with a brute-force scan of the likelihood") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Rng rng(seed);
      VectorXd x(600);
      for (auto& v : x) v = std::exp(rng.normal() * 0.7) - 0.5;
      const double fitted = fit_yeo_johnson_lambda(x);
      CHECK(fitted >= -5.0);
      CHECK(fitted <= 5.0);
      CHECK(std::abs(fitted - brute_force_lambda(x)) < 2e-3);
      CHECK(yeo_johnson_log_likelihood(x, fitted) == Approx(yj_loglik(x, fitted)).epsilon(1e-10));
    }
  }
}

TEST_CASE("quantile: uniform output passes a KS check on training data") {
  const MatrixXd X = random_matrix(5000, 2, 21);
  ScalerParams params;
  params.quantile.n_quantiles = 1000;
  const auto f = fit_scaler(ScalerCode::quantile, params, X);
  const MatrixXd out = apply_scaler(f, X);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    std::vector<double> u(out.col(j).data(), out.col(j).data() + out.rows());
    std::sort(u.begin(), u.end());
    double d = 0.0;
    const double n = static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      d = std::max({d, std::abs(static_cast<double>(i + 1) / n - u[i]), std::abs(u[i] - static_cast<double>(i) / n)});
    }
    CHECK(d < 2.0 / 1000.0);
  }
}

TEST_CASE("quantile: normal output is finite and clamped") {
  const MatrixXd X = random_matrix(300, 1, 4);
  ScalerParams params;
  params.quantile.output = QuantileOutput::normal;
  const auto f = fit_scaler(ScalerCode::quantile, params, X);
  MatrixXd probe(3, 1);
  probe << -1e9, X(0, 0), 1e9;
  const MatrixXd out = apply_scaler(f, probe);
  CHECK(out.allFinite());
  CHECK(out(0, 0) == Approx(normal_quantile(1e-7)));
  CHECK(out(2, 0) == Approx(normal_quantile(1 - 1e-7)));
  CHECK(std::get<FittedQuantile>(f.stats).n_quantiles == 300);
}

TEST_CASE("scaler parameter validation") {
  ScalerParams p;
  p.minmax = {1.0, 1.0};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.robust = {80.0, 20.0};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.quantile.n_quantiles = 1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  CHECK_THROWS_AS(ScalerSequence::from_codes({1, 2, 1, 0, 0}), ValidationError);
  CHECK_THROWS_AS(ScalerSequence::from_codes({6, 0, 0, 0, 0}), ValidationError);
  CHECK_NOTHROW(ScalerSequence::from_codes({5, 4, 3, 2, 1}));
}

TEST_CASE("output properties on training data") {
  const MatrixXd X = random_matrix(400, 3, 8);
  SUBCASE("minmax stays in range") {
    ScalerParams p;
    p.minmax = {-2.0, 3.0};
    const MatrixXd out = apply_scaler(fit_scaler(ScalerCode::minmax, p, X), X);
    CHECK(out.minCoeff() >= -2.0);
    CHECK(out.maxCoeff() <= 3.0);
  }
  SUBCASE("standard has mean 0 and std 1") {
    const MatrixXd out = apply_scaler(fit_scaler(ScalerCode::standard, {}, X), X);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double mean = out.col(j).mean();
      const double sd = std::sqrt((out.col(j).array() - mean).square().mean());
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(sd - 1.0) < 1e-9);
    }
  }
  SUBCASE("robust has median 0 and IQR 1") {
    const MatrixXd out = apply_scaler(fit_scaler(ScalerCode::robust, {}, X), X);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      std::vector<double> v(out.col(j).data(), out.col(j).data() + out.rows());
      CHECK(std::abs(oracle::percentile(v, 50)) < 1e-12);
      CHECK(oracle::percentile(v, 75) - oracle::percentile(v, 25) == Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sequences") {
  const MatrixXd X = random_matrix(200, 3, 2);
  SUBCASE("all zeros is the identity") {
    const auto fs = fit_sequence(ScalerSequence{}, X);
    CHECK(fs.stages.empty());
    CHECK(apply_sequence(fs, X) == X);
  }
  SUBCASE("single stage equals fit_scaler") {
    const auto fs = fit_sequence(ScalerSequence::from_codes({2, 0, 0, 0, 0}), X);
    CHECK(apply_sequence(fs, X) == apply_scaler(fit_scaler(ScalerCode::standard, {}, X), X));
  }
  SUBCASE("minmax then standard has zero column means") {
    const auto fs = fit_sequence(ScalerSequence::from_codes({1, 2, 0, 0, 0}), X);
    // chained closed forms: (x - min)/(max - min), then z-scores of that
    MatrixXd expected(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const VectorXd mm = (X.col(j).array() - X.col(j).minCoeff()) / (X.col(j).maxCoeff() - X.col(j).minCoeff());
      const double mean = mm.mean();
      const double sd = std::sqrt((mm.array() - mean).square().mean());
      expected.col(j) = (mm.array() - mean) / sd;
    }
    const MatrixXd out = apply_sequence(fs, X);
    CHECK((out - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(out.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("slot order matters and later stages see earlier output") {
    const auto a = apply_sequence(fit_sequence(ScalerSequence::from_codes({5, 1, 0, 0, 0}), X), X);
    const auto b = apply_sequence(fit_sequence(ScalerSequence::from_codes({1, 5, 0, 0, 0}), X), X);
    CHECK((a - b).cwiseAbs().maxCoeff() > 1e-6);
  }
  SUBCASE("column restriction leaves other columns untouched") {
    const auto fs = fit_sequence(ScalerSequence::from_codes({2, 0, 0, 0, 0}), X, {1});
    const MatrixXd out = apply_sequence(fs, X);
    CHECK(out.col(0) == X.col(0));
    CHECK(out.col(2) == X.col(2));
    CHECK(std::abs(out.col(1).mean()) < 1e-12);
  }
  SUBCASE("repeated application is deterministic") {
    const auto fs = fit_sequence(ScalerSequence::from_codes({3, 4, 5, 0, 2}), X);
    CHECK(apply_sequence(fs, X) == apply_sequence(fs, X));
  }
  SUBCASE("dimension mismatch") {
    const auto fs = fit_sequence(ScalerSequence::from_codes({2, 0, 0, 0, 0}), X);
    CHECK_THROWS_AS(apply_sequence(fs, MatrixXd::Zero(3, 2)), ValidationError);
  }
}

TEST_CASE("fitted sequence JSON round-trip") {
  const MatrixXd X = random_matrix(150, 2, 13);
  const auto fs = fit_sequence(ScalerSequence::from_codes({3, 5, 1, 4, 2}), X);
  const auto back = fitted_sequence_from_json(nlohmann::json::parse(to_json(fs).dump()));
  CHECK(apply_sequence(back, X) == apply_sequence(fs, X));
  CHECK(back.sequence.codes() == fs.sequence.codes());
  const auto seq = scaler_sequence_from_json(to_json(fs.sequence));
  CHECK(seq.codes() == fs.sequence.codes());
}
