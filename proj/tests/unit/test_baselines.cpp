#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glassbox/baselines.hpp"
#include "glassbox/metrics.hpp"
#include "glassbox/synthetic.hpp"
#include "support.hpp"

#include <random>

using namespace glassbox;
using doctest::Approx;

namespace {

// x < 0 is class 0, x > 0 is class 1, with a gap of 1 around zero.
Dataset separable_1d(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  MatrixXd X(static_cast<Eigen::Index>(n), 1);
  Labels y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y[i] = static_cast<int>(i % 2);
    X(i, 0) = y[i] == 1 ? u(gen) : -u(gen);
  }
  return Dataset({"x"}, X, y);
}

Dataset blobs(std::size_t negatives, std::size_t positives, double shift, std::uint64_t seed) {
  BlobOptions o;
  o.negatives = negatives;
  o.positives = positives;
  o.features = 6;
  o.informative = 3;
  o.shift = shift;
  o.seed = seed;
  return make_blobs(o);
}

double weighted_base_rate(const Dataset& ds, double w0, double w1) {
  const double pos = w1 * static_cast<double>(ds.positives());
  const double neg = w0 * static_cast<double>(ds.rows() - ds.positives());
  return pos / (pos + neg);
}

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = INFINITY;
};

// Exhaustive class-weighted Gini root split: every feature, every midpoint.
Split best_gini_split(const Dataset& ds, double w0, double w1) {
  Split best;
  const auto n = static_cast<Eigen::Index>(ds.rows());
  for (std::size_t f = 0; f < ds.cols(); ++f) {
    std::vector<double> values(ds.X().col(static_cast<Eigen::Index>(f)).data(),
                               ds.X().col(static_cast<Eigen::Index>(f)).data() + n);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = 0.5 * (values[k] + values[k + 1]);
      double side[2][2] = {{0, 0}, {0, 0}};  // [left/right][class] weights
      for (Eigen::Index i = 0; i < n; ++i) {
        const int c = ds.y()[i];
        side[ds.X()(i, static_cast<Eigen::Index>(f)) <= t ? 0 : 1][c] += c == 1 ? w1 : w0;
      }
      double impurity = 0.0;
      for (auto& s : side) {
        const double w = s[0] + s[1];
        const double p = s[1] / w;
        impurity += w * (1.0 - p * p - (1.0 - p) * (1.0 - p));
      }
      if (impurity < best.impurity) best = {f, t, impurity};
    }
  }
  return best;
}

template <typename Model>
void check_unit_interval(const Model& m, const MatrixXd& X) {
  const VectorXd p = predict_proba(m, X);
  CHECK(p.allFinite());
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() <= 1.0);
}

}  // namespace

TEST_CASE("logistic regression on separable data") {
  const Dataset train = separable_1d(200, 1), test = separable_1d(200, 2);
  const LinearModel m = train_logreg(train, LogregConfig{});
  CHECK(roc_auc(test.y(), predict_proba(m, test.X())) == 1.0);
  CHECK(m.weights[0] > 0.0);
  CHECK(m.converged);
}

TEST_CASE("logistic regression gradient at the optimum") {
  const Dataset ds = blobs(2000, 60, 1.0, 3);
  for (double C : {0.01, 1.0, 100.0}) {
    LogregConfig cfg;
    cfg.C = C;
    const LinearModel m = train_logreg(ds, cfg);
    CHECK(m.converged);
    CHECK(m.l2 == Approx(1.0 / (C * static_cast<double>(ds.rows()))).epsilon(1e-15));
    const VectorXd g = logreg_gradient(ds, m);
    CHECK(g.size() == 7);
    CHECK(g.cwiseAbs().maxCoeff() < cfg.tol);
    CHECK(m.gradient_norm == g.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("logistic regression: class weights raise recall") {
  const Dataset train = blobs(5000, 50, 1.5, 4), test = blobs(5000, 50, 1.5, 5);
  LogregConfig plain;
  plain.class_weights = {1.0, 1.0};
  LogregConfig weighted;
  weighted.class_weights = {1.0, 10.0};
  const auto r_plain = evaluate(test.y(), predict_proba(train_logreg(train, plain), test.X()), 0.5);
  const auto r_weighted = evaluate(test.y(), predict_proba(train_logreg(train, weighted), test.X()), 0.5);
  CHECK(r_weighted.recall > r_plain.recall);
}

TEST_CASE("logistic regression: heavy regularization gives the base rate") {
  const Dataset ds = blobs(900, 100, 1.5, 6);
  LogregConfig cfg;
  cfg.C = 1e-12;
  cfg.class_weights = {1.0, 1.0};
  const LinearModel m = train_logreg(ds, cfg);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(m.bias == Approx(std::log(100.0 / 900.0)).epsilon(1e-6));
  CHECK(predict_proba(m, ds.X()).maxCoeff() == Approx(0.1).epsilon(1e-6));
}

TEST_CASE("logistic regression errors") {
  const Dataset ds = separable_1d(10, 1);
  const Dataset zeros(ds.feature_names(), ds.X(), Labels::Zero(10));
  CHECK_THROWS_AS(train_logreg(zeros, LogregConfig{}), TrainingError);
  LogregConfig bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(train_logreg(ds, bad), ValidationError);
  CHECK_THROWS_AS(predict_proba(train_logreg(ds, LogregConfig{}), VectorXd(VectorXd::Zero(2))), ValidationError);
}

TEST_CASE("tree: depth-1 threshold recovery") {
  const Dataset train = separable_1d(100, 7), test = separable_1d(100, 8);
  TreeConfig cfg;
  cfg.max_depth = 1;
  cfg.min_samples_split = 2;
  cfg.min_samples_leaf = 1;
  const TreeModel m = train_tree(train, cfg);
  REQUIRE(m.nodes.size() == 3);
  CHECK(m.nodes[0].feature == 0);
  double below = -INFINITY, above = INFINITY;
  for (Eigen::Index i = 0; i < train.X().rows(); ++i) {
    const double x = train.X()(i, 0);
    if (x < 0) below = std::max(below, x);
    else above = std::min(above, x);
  }
  CHECK(m.nodes[0].threshold == Approx(0.5 * (below + above)).epsilon(1e-12));
  CHECK(roc_auc(test.y(), predict_proba(m, test.X())) == 1.0);
  CHECK(m.depth() == 1);
}

TEST_CASE("tree: degenerate limits give the base rate") {
  const Dataset ds = blobs(300, 30, 1.5, 9);
  TreeConfig zero;
  zero.max_depth = 0;
  const TreeModel stump = train_tree(ds, zero);
  CHECK(stump.nodes.size() == 1);
  CHECK(predict_proba(stump, ds.X()).isConstant(weighted_base_rate(ds, 1.0, 10.0), 1e-12));

  TreeConfig wide;
  wide.min_samples_leaf = ds.rows() / 2 + 1;
  wide.min_samples_split = 2;
  CHECK(train_tree(ds, wide).nodes.size() == 1);
}

TEST_CASE("tree: root split matches the brute-force Gini oracle") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal;
  int unique_optimum = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 6 + gen() % 25;
    const std::size_t p = 1 + gen() % 3;
    MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    Labels y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = std::round(normal(gen) * 3.0) / 3.0;
      y[i] = static_cast<int>(X(i, 0) + 0.8 * normal(gen) > 0.0);
    }
    y[0] = 0;
    y[1] = 1;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
    const Dataset ds(names, X, y);
    const Split want = best_gini_split(ds, 1.0, 10.0);
    REQUIRE(std::isfinite(want.impurity));

    TreeConfig cfg;
    cfg.max_depth = 1;
    cfg.min_samples_split = 2;
    cfg.min_samples_leaf = 1;
    const TreeModel m = train_tree(ds, cfg);
    REQUIRE(m.nodes.size() == 3);
    // recompute the library split's impurity with the oracle's formula
    Split got{static_cast<std::size_t>(m.nodes[0].feature), m.nodes[0].threshold, 0.0};
    double side[2][2] = {{0, 0}, {0, 0}};
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      side[X(i, m.nodes[0].feature) <= got.threshold ? 0 : 1][y[i]] += y[i] == 1 ? 10.0 : 1.0;
    }
    for (auto& s : side) {
      const double w = s[0] + s[1];
      const double q = s[1] / w;
      got.impurity += w * 2.0 * q * (1.0 - q);
    }
    CHECK(got.impurity == Approx(want.impurity).epsilon(1e-12));
    if (got.feature == want.feature && got.threshold == want.threshold) ++unique_optimum;
  }
  CHECK(unique_optimum > 150);
}

TEST_CASE("tree depth limit and leaf size hold") {
  const Dataset ds = blobs(1500, 150, 1.0, 12);
  TreeConfig cfg;
  const TreeModel m = train_tree(ds, cfg);
  CHECK(m.depth() <= cfg.max_depth);
  for (const auto& node : m.nodes) {
    if (node.feature < 0) CHECK(node.samples >= cfg.min_samples_leaf);
  }
  check_unit_interval(m, ds.X());
}

TEST_CASE("forest: a one-tree forest is a bootstrapped tree") {
  const Dataset ds = blobs(400, 40, 1.0, 13);
  ForestConfig cfg;
  cfg.n_estimators = 1;
  cfg.seed = 5;
  const ForestModel f = train_forest(ds, cfg);
  REQUIRE(f.trees.size() == 1);
  const std::uint64_t tree_seed = mix_seed(cfg.seed, 0);
  CHECK(f.tree_seeds[0] == tree_seed);
  const auto rows = bootstrap_rows(ds.rows(), mix_seed(tree_seed, 0));
  TreeConfig tc;
  tc.max_depth = cfg.max_depth;
  tc.min_samples_split = cfg.min_samples_split;
  tc.min_samples_leaf = cfg.min_samples_leaf;
  tc.class_weights = cfg.class_weights;
  const std::size_t mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(ds.cols()))));
  const TreeModel t = train_tree(ds, rows, tc, mtry, mix_seed(tree_seed, 1));
  CHECK(predict_proba(f, ds.X()) == predict_proba(t, ds.X()));
}

TEST_CASE("forest beats a single tree on noisy blobs") {
  std::vector<double> gaps;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Dataset train = blobs(1500, 150, 0.8, 100 + s), test = blobs(1500, 150, 0.8, 200 + s);
    ForestConfig fc;
    fc.n_estimators = 40;
    fc.seed = s;
    const double forest = roc_auc(test.y(), predict_proba(train_forest(train, fc), test.X()));
    const double tree = roc_auc(test.y(), predict_proba(train_tree(train, TreeConfig{}), test.X()));
    gaps.push_back(forest - tree);
  }
  CHECK(oracle::percentile(gaps, 50.0) >= 0.0);
}

TEST_CASE("forest determinism and worker independence") {
  const Dataset ds = blobs(500, 50, 1.0, 14);
  ForestConfig cfg;
  cfg.n_estimators = 12;
  cfg.seed = 3;
  const ForestModel a = train_forest(ds, cfg);
  CHECK(a.trees.size() == 12);
  CHECK(predict_proba(train_forest(ds, cfg), ds.X()) == predict_proba(a, ds.X()));
  CHECK(to_json(train_forest(ds, cfg, 3)) == to_json(a));
  check_unit_interval(a, ds.X());
}

TEST_CASE("gbt: loss, XOR and the zero-round model") {
  const Dataset ds = blobs(1000, 100, 1.0, 15);
  const GbtModel m = train_gbt(ds, GbtConfig{});
  REQUIRE(m.train_loss.size() == 101);
  for (std::size_t r = 1; r < m.train_loss.size(); ++r) CHECK(m.train_loss[r] <= m.train_loss[r - 1]);
  CHECK(m.trees.size() == 100);
  check_unit_interval(m, ds.X());

  const Dataset xtrain = make_xor(2000, 16), xtest = make_xor(2000, 17);
  GbtConfig xc;
  xc.max_depth = 2;
  xc.n_rounds = 100;
  xc.learning_rate = 0.3;
  xc.scale_pos_weight = 1.0;
  CHECK(roc_auc(xtest.y(), predict_proba(train_gbt(xtrain, xc), xtest.X())) >= 0.95);

  GbtConfig none;
  none.n_rounds = 0;
  const GbtModel base = train_gbt(ds, none);
  CHECK(base.trees.empty());
  CHECK(predict_proba(base, ds.X()).isConstant(weighted_base_rate(ds, 1.0, 10.0), 1e-12));
}

TEST_CASE("baseline models survive JSON round trips") {
  const Dataset ds = blobs(300, 30, 1.0, 18);
  const auto lm = train_logreg(ds, LogregConfig{});
  CHECK(predict_proba(linear_model_from_json(to_json(lm)), ds.X()) == predict_proba(lm, ds.X()));
  const auto tm = train_tree(ds, TreeConfig{});
  CHECK(predict_proba(tree_model_from_json(to_json(tm)), ds.X()) == predict_proba(tm, ds.X()));
  ForestConfig fc;
  fc.n_estimators = 5;
  const auto fm = train_forest(ds, fc);
  CHECK(predict_proba(forest_model_from_json(to_json(fm)), ds.X()) == predict_proba(fm, ds.X()));
  GbtConfig gc;
  gc.n_rounds = 10;
  const auto gm = train_gbt(ds, gc);
  CHECK(predict_proba(gbt_model_from_json(to_json(gm)), ds.X()) == predict_proba(gm, ds.X()));

  CHECK(logreg_config_from_json({{"C", 0.5}}).C == 0.5);
  CHECK(forest_config_from_json({{"n_estimators", 7}}).n_estimators == 7);
  CHECK_THROWS_AS(gbt_config_from_json({{"eta", 0.1}}), ValidationError);
  CHECK_THROWS_AS(tree_config_from_json({{"max_depth", -1}}).validate(), ValidationError);
}

TEST_CASE("default hyperparameters follow the tuned table") {
  CHECK(LogregConfig{}.C == 1.0);
  CHECK(TreeConfig{}.max_depth == 5);
  CHECK(TreeConfig{}.min_samples_split == 50);
  CHECK(ForestConfig{}.n_estimators == 200);
  CHECK(ForestConfig{}.max_depth == 10);
  CHECK(GbtConfig{}.learning_rate == 0.1);
  CHECK(GbtConfig{}.max_depth == 3);
  CHECK(GbtConfig{}.scale_pos_weight == 10.0);
  CHECK(GbtConfig{}.subsample == 1.0);
}
