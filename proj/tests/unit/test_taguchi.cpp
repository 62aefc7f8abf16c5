#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glassbox/ebm.hpp"
#include "glassbox/synthetic.hpp"
#include "glassbox/taguchi.hpp"
#include "support.hpp"

#include <map>
#include <mutex>
#include <set>

using namespace glassbox;
using doctest::Approx;

namespace {

// Counts every level per column and every ordered level pair per column pair.
void check_orthogonal(const OrthogonalArray& oa) {
  const int s = oa.levels;
  const auto rows = static_cast<int>(oa.rows());
  for (std::size_t c = 0; c < oa.factors(); ++c) {
    std::map<int, int> count;
    for (std::size_t r = 0; r < oa.rows(); ++r) ++count[oa.row(r)[c]];
    CHECK(count.size() == static_cast<std::size_t>(s));
    for (const auto& [level, n] : count) {
      CHECK(level >= 1);
      CHECK(level <= s);
      CHECK(n == rows / s);
    }
    for (std::size_t d = c + 1; d < oa.factors(); ++d) {
      std::map<std::pair<int, int>, int> pairs;
      for (std::size_t r = 0; r < oa.rows(); ++r) ++pairs[{oa.row(r)[c], oa.row(r)[d]}];
      CHECK(pairs.size() == static_cast<std::size_t>(s * s));
      for (const auto& entry : pairs) CHECK(entry.second == rows / (s * s));
    }
  }
}

std::vector<int> codes_of(const std::vector<int>& levels) {
  const auto c = row_to_scaler_sequence(levels).codes();
  return {c.begin(), c.end()};
}

// Objective whose S/N is exactly `db`: a single fold scoring 10^(db/20).
std::vector<double> with_sn(double db) { return {std::pow(10.0, db / 20.0)}; }

}  // namespace

TEST_CASE("orthogonal arrays are balanced and pairwise orthogonal") {
  const auto l9 = build_oa(3, 4);
  CHECK(l9.rows() == 9);
  CHECK(l9.factors() == 4);
  check_orthogonal(l9);

  const auto l25 = build_oa(5, 5);
  CHECK(l25.rows() == 25);
  check_orthogonal(l25);
  check_orthogonal(build_oa(5, 6));

  const auto l27 = named_oa("L27", 13);
  CHECK(l27.rows() == 27);
  CHECK(l27.factors() == 13);
  check_orthogonal(l27);
  CHECK(named_oa("L27").factors() == 5);
  CHECK(named_oa("L9").rows() == 9);
  CHECK(named_oa("L25").factors() == 5);
  CHECK(build_oa(3, 5).rows() == 27);
  CHECK(build_oa(3, 3, 27).rows() == 27);

  for (const auto& oa : {l9, l25, l27}) {
    CHECK(is_balanced(oa));
    CHECK(is_pairwise_orthogonal(oa));
  }
  OrthogonalArray broken = l9;
  broken.table(0, 0) = broken.table(0, 0) % 3 + 1;
  CHECK_FALSE(is_balanced(broken));

  CHECK_THROWS_AS(build_oa(4, 3), ValidationError);
  CHECK_THROWS_AS(build_oa(5, 7), ValidationError);
  CHECK_THROWS_AS(build_oa(3, 14), ValidationError);
  CHECK_THROWS_AS(named_oa("L18"), ValidationError);
}

TEST_CASE("row_to_scaler_sequence") {
  CHECK(codes_of({2, 2, 3, 1, 1}) == std::vector<int>{2, 0, 3, 1, 0});
  CHECK(codes_of({1, 2, 3, 4, 5}) == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(codes_of({4, 4, 4, 4, 4}) == std::vector<int>{4, 0, 0, 0, 0});
  CHECK_THROWS_AS(row_to_scaler_sequence({1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(row_to_scaler_sequence({1, 2, 3, 4, 6}), ValidationError);

  const auto l25 = build_oa(5, 5);
  for (std::size_t r = 0; r < l25.rows(); ++r) {
    const auto codes = codes_of(l25.row(r));
    std::set<int> seen;
    for (int c : codes) {
      if (c == 0) continue;
      CHECK(seen.insert(c).second);
    }
    CHECK_NOTHROW(row_to_scaler_sequence(l25.row(r)).validate());
  }
}

TEST_CASE("sn_ratio") {
  CHECK(sn_ratio({1, 1, 1}) == 0.0);
  CHECK(sn_ratio({10}) == Approx(20.0).epsilon(1e-15));
  CHECK(sn_ratio({0.9, 0.8}) == Approx(-10.0 * std::log10((1.0 / 0.81 + 1.0 / 0.64) / 2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(sn_ratio({0.5, 0.0}), ValidationError);
  CHECK_THROWS_AS(sn_ratio({-1}), ValidationError);
  CHECK_THROWS_AS(sn_ratio({}), ValidationError);
}

TEST_CASE("constant objective gives equal S/N and tied factors") {
  const auto oa = build_oa(3, 4);
  const auto results = run_experiment(oa, nullptr, [](auto&, auto) { return std::vector<double>{0.9, 0.9, 0.9}; });
  REQUIRE(results.size() == 9);
  for (const auto& r : results) {
    CHECK_FALSE(r.failed);
    CHECK(r.sn_ratio == results[0].sn_ratio);
    CHECK(r.mean == Approx(0.9));
  }
  const auto effects = main_effects_select(oa, results);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(effects.tie[f]);
    CHECK(effects.best_levels[f] == 1);
  }
  CHECK(effects.best_row == 0);
}

TEST_CASE("main effects recover an additive S/N table") {
  const auto oa = build_oa(3, 4);
  // factor A: level 2 adds 1 dB; factor C: level 3 adds 0.4 dB; B and D do nothing
  auto sn_of = [](const std::vector<int>& l) { return -1.0 + (l[0] == 2 ? 1.0 : 0.0) + (l[2] == 3 ? 0.4 : 0.0); };
  const auto results = run_experiment(oa, nullptr, [&](auto& l, auto) { return with_sn(sn_of(l)); });
  const auto effects = main_effects_select(oa, results);
  CHECK(effects.best_levels[0] == 2);
  CHECK(effects.best_levels[2] == 3);
  CHECK(effects.used_rows == 9);
  for (std::size_t f = 0; f < 4; ++f) {
    for (int level = 1; level <= 3; ++level) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t r = 0; r < oa.rows(); ++r) {
        if (oa.row(r)[f] != level) continue;
        sum += sn_of(oa.row(r));
        ++n;
      }
      CHECK(n == 3);
      CHECK(effects.level_count[f][static_cast<std::size_t>(level - 1)] == 3);
      CHECK(effects.level_sn[f][static_cast<std::size_t>(level - 1)] == Approx(sum / n).epsilon(1e-12));
    }
  }
  CHECK(effects.tie[1]);  // B is flat
  CHECK_FALSE(effects.tie[0]);
  const auto& best = results[effects.best_row];
  CHECK(best.levels[0] == 2);
  CHECK(best.levels[2] == 3);
}

TEST_CASE("single-factor array picks the best level mean") {
  const auto oa = build_oa(5, 1);
  const std::vector<double> by_level{0.7, 0.95, 0.8, 0.6, 0.9};
  const auto results = run_experiment(oa, nullptr, [&](auto& l, auto) {
    return std::vector<double>{by_level[static_cast<std::size_t>(l[0] - 1)]};
  });
  CHECK(main_effects_select(oa, results).best_levels[0] == 2);
}

TEST_CASE("failed rows are excluded and reported") {
  const auto oa = build_oa(3, 4);
  std::vector<std::string> warnings;
  set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
  const auto results = run_experiment(oa, nullptr, [](const std::vector<int>& l, std::uint64_t) {
    if (l[0] == 3 && l[1] == 3) throw TrainingError("diverged");
    return std::vector<double>{0.5 + 0.1 * l[0]};
  });
  const auto effects = main_effects_select(oa, results);
  set_warning_handler(nullptr);
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.failed) continue;
    ++failed;
    CHECK(r.failure == "diverged");
    CHECK(to_json(r).at("failure") == "diverged");
  }
  CHECK(failed == 1);
  CHECK(effects.used_rows == 8);
  CHECK(warnings.size() == 1);

  const auto all_bad = run_experiment(oa, nullptr, [](auto&, auto) -> std::vector<double> { throw TrainingError("x"); });
  CHECK_THROWS_AS(main_effects_select(oa, all_bad), TrainingError);
}

TEST_CASE("best observed row is at least the median row") {
  const auto oa = build_oa(5, 5);
  const auto results = run_experiment(oa, nullptr, [](const std::vector<int>& l, std::uint64_t seed) {
    return std::vector<double>{0.5 + 0.02 * l[0] + 0.01 * l[3] + static_cast<double>(seed % 97) * 1e-4};
  });
  std::vector<double> means;
  for (const auto& r : results) means.push_back(r.mean);
  const auto effects = main_effects_select(oa, results);
  CHECK(results[effects.best_row].mean >= oracle::percentile(means, 50.0));
  CHECK(results[effects.best_row].mean == *std::max_element(means.begin(), means.end()));
}

TEST_CASE("row seeds and worker count do not change results") {
  const auto oa = named_oa("L27");
  auto objective = [](const std::vector<int>& l, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v;
    for (int f = 0; f < 3; ++f) v.push_back(0.6 + 0.05 * l[1] + 0.1 * rng.uniform());
    return v;
  };
  const auto serial = run_experiment(oa, nullptr, objective, {1, 42});
  const auto parallel = run_experiment(oa, nullptr, objective, {4, 42});
  for (std::size_t r = 0; r < oa.rows(); ++r) {
    CHECK(serial[r].seed == mix_seed(42, r));
    CHECK(to_json(serial[r]) == to_json(parallel[r]));
    const auto [lo, hi] = std::minmax_element(serial[r].fold_scores.begin(), serial[r].fold_scores.end());
    CHECK(serial[r].mean >= *lo);
    CHECK(serial[r].mean <= *hi);
  }
  CHECK(experiment_csv(serial) == experiment_csv(parallel));
}

TEST_CASE("cross-validated experiment over EBM hyperparameters") {
  const Dataset ds = make_monotone(600, 4, 2, 1.5, 3);
  const auto folds = stratified_kfold(ds, 3, 1);
  const auto oa = build_oa(3, 4);
  const std::vector<std::vector<double>> table{{0.01, 0.05, 0.1}, {32, 64, 128}, {20, 40, 60}, {0, 1, 2}};
  std::mutex mu;
  std::set<std::string> configurations;
  std::size_t calls = 0;
  auto mapper = [&](const std::vector<int>& l) {
    RowPlan plan;
    plan.params = {{"learning_rate", table[0][static_cast<std::size_t>(l[0] - 1)]},
                   {"max_bins", static_cast<int>(table[1][static_cast<std::size_t>(l[1] - 1)])},
                   {"max_rounds", static_cast<int>(table[2][static_cast<std::size_t>(l[2] - 1)])},
                   {"interactions", static_cast<int>(table[3][static_cast<std::size_t>(l[3] - 1)])}};
    plan.configuration = plan.params;
    return plan;
  };
  auto trainer = [&](const Dataset& train, const MatrixXd& test_X, const nlohmann::json& params, std::uint64_t seed) {
    {
      std::lock_guard lock(mu);
      configurations.insert(params.dump());
      ++calls;
    }
    EbmConfig cfg = ebm_config_from_json(params);
    cfg.outer_bags = 1;
    cfg.seed = seed;
    return predict_proba(train_ebm(train, cfg), test_X);
  };
  const auto results = run_experiment(ds, oa, mapper, trainer, folds, {2, 5});
  CHECK(results.size() == 9);
  CHECK(configurations.size() == 9);
  CHECK(calls == 27);
  for (const auto& r : results) {
    CHECK_FALSE(r.failed);
    CHECK(r.fold_scores.size() == 3);
    CHECK(r.configuration.at("max_bins").is_number_integer());
  }
}

TEST_CASE("scalers are fitted on the training fold only") {
  const Dataset ds = make_monotone(300, 3, 2, 1.0, 4);
  const auto folds = stratified_kfold(ds, 3, 2);
  OrthogonalArray one;
  one.name = "one";
  one.levels = 5;
  one.table = Matrix<int>(1, 5);
  one.table << 3, 1, 2, 4, 5;  // every scaler type in one pipeline

  auto capture = [&](const Dataset& data) {
    std::vector<MatrixXd> trains, tests;
    auto trainer = [&](const Dataset& train, const MatrixXd& test_X, const nlohmann::json&, std::uint64_t) {
      trains.push_back(train.X());
      tests.push_back(test_X);
      return VectorXd(test_X.col(0));
    };
    auto mapper = [](const std::vector<int>& l) { return RowPlan{row_to_scaler_sequence(l)}; };
    run_experiment(data, one, mapper, trainer, folds);
    return std::pair{trains, tests};
  };
  const auto [train_a, test_a] = capture(ds);

  // blow up the validation rows of fold 0 only
  MatrixXd X = ds.X();
  for (std::size_t r : folds.test_rows(0)) X.row(static_cast<Eigen::Index>(r)) *= 1000.0;
  const auto [train_b, test_b] = capture(ds.with_features(X));

  REQUIRE(train_a.size() == 3);
  CHECK(train_a[0] == train_b[0]);  // same fitted statistics, same transformed training rows
  CHECK(test_a[0] != test_b[0]);
  CHECK(train_a[1] != train_b[1]);  // fold 0's rows train the other folds
}
