#include "glassbox/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace glassbox {

using nlohmann::json;

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_features(std::size_t expected, Eigen::Index got) {
  if (static_cast<std::size_t>(got) != expected) {
    throw ValidationError("input has " + std::to_string(got) + " features, model expects " + std::to_string(expected));
  }
}

void check_class_weights(const std::array<double, 2>& w, const char* who) {
  if (!(w[0] > 0.0) || !(w[1] > 0.0) || !std::isfinite(w[0]) || !std::isfinite(w[1])) {
    throw ValidationError(std::string(who) + ": class weights must be positive");
  }
}

std::vector<double> class_weight_vector(const Labels& y, const std::array<double, 2>& cw) {
  std::vector<double> w(static_cast<std::size_t>(y.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) w[static_cast<std::size_t>(i)] = cw[static_cast<std::size_t>(y[i])];
  return w;
}

// Logistic objective on the augmented design [X, 1].
struct LogregProblem {
  const MatrixXd& X;
  const Labels& y;
  VectorXd w;
  double l2;

  double n() const { return static_cast<double>(X.rows()); }

  VectorXd logits(const VectorXd& theta) const {
    const auto p = X.cols();
    return (X * theta.head(p)).array() + theta[p];
  }

  double objective(const VectorXd& theta) const {
    const VectorXd z = logits(theta);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += w[i] * (softplus(z[i]) - y[i] * z[i]);
    return loss / n() + 0.5 * l2 * theta.head(X.cols()).squaredNorm();
  }

  VectorXd gradient(const VectorXd& theta) const {
    const auto p = X.cols();
    const VectorXd z = logits(theta);
    VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r[i] = w[i] * (sigmoid(z[i]) - y[i]);
    VectorXd g(p + 1);
    g.head(p) = X.transpose() * r / n() + l2 * theta.head(p);
    g[p] = r.sum() / n();
    return g;
  }

  MatrixXd hessian(const VectorXd& theta) const {
    const auto p = X.cols();
    const VectorXd z = logits(theta);
    VectorXd d(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double s = sigmoid(z[i]);
      d[i] = w[i] * s * (1.0 - s);
    }
    MatrixXd H(p + 1, p + 1);
    const MatrixXd DX = X.array().colwise() * d.array();
    H.topLeftCorner(p, p) = X.transpose() * DX / n();
    H.topLeftCorner(p, p).diagonal().array() += l2;
    H.block(0, p, p, 1) = DX.colwise().sum().transpose() / n();
    H.block(p, 0, 1, p) = H.block(0, p, p, 1).transpose();
    H(p, p) = d.sum() / n();
    return H;
  }
};

// Presorted CART growth. order[f] lists node positions sorted by feature f;
// every node owns the same [begin, end) range in all of them.
class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& X, std::span<const std::size_t> rows, std::span<const double> target,
              std::span<const double> weight, const TreeGrowth& growth,
              std::vector<std::vector<std::uint32_t>> order)
      : X_(X), rows_(rows), target_(target), weight_(weight), growth_(growth), order_(std::move(order)),
        goes_left_(rows.size(), 0), rng_(growth.feature_seed) {
    features_.resize(static_cast<std::size_t>(X.cols()));
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<TreeNode> run() {
    if (!rows_.empty()) build(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  double value(std::uint32_t pos, std::size_t f) const {
    return X_(static_cast<Eigen::Index>(rows_[pos]), static_cast<Eigen::Index>(f));
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t p = features_.size();
    const std::size_t m = growth_.max_features;
    if (m == 0 || m >= p) return features_;
    std::vector<std::size_t> pool = features_;
    for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + rng_.uniform_index(p - i)]);
    pool.resize(m);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  int build(std::size_t begin, std::size_t end, int depth) {
    const auto& any = order_[0];
    double W = 0.0, S = 0.0, SS = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto pos = any[k];
      W += weight_[pos];
      S += weight_[pos] * target_[pos];
      SS += weight_[pos] * target_[pos] * target_[pos];
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(id)].value = W > 0.0 ? S / W : 0.0;
    nodes_[static_cast<std::size_t>(id)].samples = end - begin;

    const std::size_t count = end - begin;
    const double parent = W > 0.0 ? S * S / W : 0.0;
    if (depth >= growth_.max_depth || count < growth_.min_samples_split || count < 2 * growth_.min_samples_leaf ||
        SS - parent <= 1e-14 * std::max(SS, 1e-300)) {
      return id;
    }

    int best_feature = -1;
    double best_gain = parent + 1e-12 * SS;
    double best_threshold = 0.0;
    for (std::size_t f : candidate_features()) {
      const auto& ord = order_[f];
      double wl = 0.0, sl = 0.0;
      for (std::size_t k = begin; k + 1 < end; ++k) {
        const auto pos = ord[k];
        wl += weight_[pos];
        sl += weight_[pos] * target_[pos];
        const std::size_t nl = k + 1 - begin;
        if (nl < growth_.min_samples_leaf) continue;
        if (count - nl < growth_.min_samples_leaf) break;
        const double v = value(pos, f);
        const double next = value(ord[k + 1], f);
        if (!(v < next)) continue;
        const double wr = W - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double sr = S - sl;
        const double gain = sl * sl / wl + sr * sr / wr;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          double mid = v + 0.5 * (next - v);
          if (mid >= next) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    const auto bf = static_cast<std::size_t>(best_feature);
    std::size_t n_left = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const auto pos = order_[bf][k];
      goes_left_[pos] = value(pos, bf) <= best_threshold ? 1 : 0;
      n_left += goes_left_[pos];
    }
    for (auto& ord : order_) {
      std::stable_partition(ord.begin() + static_cast<std::ptrdiff_t>(begin), ord.begin() + static_cast<std::ptrdiff_t>(end),
                            [&](std::uint32_t pos) { return goes_left_[pos] != 0; });
    }
    const int left = build(begin, begin + n_left, depth + 1);
    const int right = build(begin + n_left, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const MatrixXd& X_;
  std::span<const std::size_t> rows_;
  std::span<const double> target_;
  std::span<const double> weight_;
  TreeGrowth growth_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<char> goes_left_;
  std::vector<std::size_t> features_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::vector<std::uint32_t>> sorted_positions(const MatrixXd& X, std::span<const std::size_t> rows) {
  std::vector<std::vector<std::uint32_t>> order(static_cast<std::size_t>(X.cols()));
  for (std::size_t f = 0; f < order.size(); ++f) {
    auto& ord = order[f];
    ord.resize(rows.size());
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
      return X(static_cast<Eigen::Index>(rows[a]), col) < X(static_cast<Eigen::Index>(rows[b]), col);
    });
  }
  return order;
}

void validate_growth_rows(const MatrixXd& X, std::span<const std::size_t> rows, std::span<const double> target,
                          std::span<const double> weight) {
  if (target.size() != rows.size() || weight.size() != rows.size()) {
    throw ValidationError("grow_tree: rows, target and weight lengths differ");
  }
  if (rows.size() > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("grow_tree: too many rows");
  for (std::size_t r : rows) {
    if (r >= static_cast<std::size_t>(X.rows())) throw ValidationError("grow_tree: row id out of range");
  }
}

int node_depth(const std::vector<TreeNode>& nodes, int id) {
  const auto& n = nodes[static_cast<std::size_t>(id)];
  if (n.feature < 0) return 0;
  return 1 + std::max(node_depth(nodes, n.left), node_depth(nodes, n.right));
}

json nodes_to_json(const std::vector<TreeNode>& nodes) {
  json out = json::array();
  for (const auto& n : nodes) {
    out.push_back({{"feature", n.feature},
                   {"threshold", n.threshold},
                   {"left", n.left},
                   {"right", n.right},
                   {"value", n.value},
                   {"samples", n.samples}});
  }
  return out;
}

std::vector<TreeNode> nodes_from_json(const json& j, std::size_t p) {
  std::vector<TreeNode> nodes;
  for (const auto& n : j) {
    TreeNode t;
    t.feature = n.at("feature").get<int>();
    t.threshold = n.at("threshold").get<double>();
    t.left = n.at("left").get<int>();
    t.right = n.at("right").get<int>();
    t.value = n.at("value").get<double>();
    t.samples = n.at("samples").get<std::size_t>();
    nodes.push_back(t);
  }
  if (nodes.empty()) throw ValidationError("tree has no nodes");
  const auto count = static_cast<int>(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& t = nodes[i];
    if (t.feature < 0) continue;
    if (static_cast<std::size_t>(t.feature) >= p || t.left <= static_cast<int>(i) || t.right <= static_cast<int>(i) ||
        t.left >= count || t.right >= count) {
      throw ValidationError("tree node " + std::to_string(i) + " is malformed");
    }
  }
  return nodes;
}

template <typename Fn>
auto parse_guard(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

[[noreturn]] void unknown_key(const char* who, const std::string& key) {
  throw ValidationError(std::string(who) + ": unknown hyperparameter '" + key + "'");
}

}  // namespace

// Logistic regression -------------------------------------------------------

void LogregConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("logreg: C must be > 0");
  check_class_weights(class_weights, "logreg");
  if (!(tol > 0.0)) throw ValidationError("logreg: tol must be > 0");
  if (max_iter < 1) throw ValidationError("logreg: max_iter must be >= 1");
}

LinearModel train_logreg(const Dataset& ds, const LogregConfig& cfg) {
  cfg.validate();
  ds.require_both_classes("train_logreg");
  const auto p = static_cast<Eigen::Index>(ds.cols());
  const auto wv = class_weight_vector(ds.y(), cfg.class_weights);
  LogregProblem prob{ds.X(), ds.y(), Eigen::Map<const VectorXd>(wv.data(), static_cast<Eigen::Index>(wv.size())),
                     1.0 / (cfg.C * static_cast<double>(ds.rows()))};

  double pos = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < prob.w.size(); ++i) {
    total += prob.w[i];
    if (ds.y()[i] == 1) pos += prob.w[i];
  }
  VectorXd theta = VectorXd::Zero(p + 1);
  theta[p] = std::log(pos / (total - pos));

  LinearModel m;
  m.feature_names = ds.feature_names();
  m.config = cfg;
  m.l2 = prob.l2;
  double f = prob.objective(theta);
  VectorXd g = prob.gradient(theta);
  int iter = 0;
  while (g.lpNorm<Eigen::Infinity>() >= cfg.tol && iter < cfg.max_iter) {
    MatrixXd H = prob.hessian(theta);
    Eigen::LDLT<MatrixXd> ldlt(H);
    VectorXd step = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || g.dot(step) >= 0.0) {
      // separable directions leave H near singular; damp it
      H.diagonal().array() += 1e-8 * std::max(1.0, H.diagonal().maxCoeff());
      step = H.ldlt().solve(-g);
      if (!step.allFinite() || g.dot(step) >= 0.0) step = -g;
    }
    double t = 1.0;
    const double slope = g.dot(step);
    double f_new = prob.objective(theta + step);
    while (f_new > f + 1e-4 * t * slope && t > 1e-14) {
      t *= 0.5;
      f_new = prob.objective(theta + t * step);
    }
    ++iter;
    if (!(f_new <= f)) break;
    theta += t * step;
    f = f_new;
    g = prob.gradient(theta);
  }
  m.weights = theta.head(p);
  m.bias = theta[p];
  m.iterations = iter;
  m.gradient_norm = g.lpNorm<Eigen::Infinity>();
  m.converged = m.gradient_norm < cfg.tol;
  return m;
}

VectorXd logreg_gradient(const Dataset& ds, const LinearModel& model) {
  check_features(static_cast<std::size_t>(model.weights.size()), static_cast<Eigen::Index>(ds.cols()));
  const auto wv = class_weight_vector(ds.y(), model.config.class_weights);
  LogregProblem prob{ds.X(), ds.y(), Eigen::Map<const VectorXd>(wv.data(), static_cast<Eigen::Index>(wv.size())),
                     model.l2};
  VectorXd theta(model.weights.size() + 1);
  theta << model.weights, model.bias;
  return prob.gradient(theta);
}

double predict_proba(const LinearModel& model, const VectorXd& row) {
  check_features(static_cast<std::size_t>(model.weights.size()), row.size());
  return sigmoid(model.weights.dot(row) + model.bias);
}

VectorXd predict_proba(const LinearModel& model, const MatrixXd& X) {
  check_features(static_cast<std::size_t>(model.weights.size()), X.cols());
  const VectorXd z = (X * model.weights).array() + model.bias;
  return z.unaryExpr([](double v) { return sigmoid(v); });
}

// Trees ---------------------------------------------------------------------

void TreeConfig::validate() const {
  if (max_depth < 0) throw ValidationError("tree: max_depth must be >= 0");
  if (min_samples_split < 2) throw ValidationError("tree: min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ValidationError("tree: min_samples_leaf must be >= 1");
  check_class_weights(class_weights, "tree");
}

std::vector<TreeNode> grow_tree(const MatrixXd& X, std::span<const std::size_t> rows, std::span<const double> target,
                                std::span<const double> weight, const TreeGrowth& growth) {
  validate_growth_rows(X, rows, target, weight);
  return TreeBuilder(X, rows, target, weight, growth, sorted_positions(X, rows)).run();
}

double tree_value(const std::vector<TreeNode>& nodes, const VectorXd& row) {
  std::size_t id = 0;
  while (nodes[id].feature >= 0) {
    const auto& n = nodes[id];
    id = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left : n.right);
  }
  return nodes[id].value;
}

double TreeModel::predict(const VectorXd& row) const {
  check_features(feature_names.size(), row.size());
  return tree_value(nodes, row);
}

int TreeModel::depth() const { return nodes.empty() ? 0 : node_depth(nodes, 0); }

TreeModel train_tree(const Dataset& ds, std::span<const std::size_t> rows, const TreeConfig& cfg,
                     std::size_t max_features, std::uint64_t feature_seed) {
  cfg.validate();
  ds.require_both_classes("train_tree");
  std::vector<double> target(rows.size()), weight(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const int label = ds.y()[static_cast<Eigen::Index>(rows[k])];
    target[k] = label;
    weight[k] = cfg.class_weights[static_cast<std::size_t>(label)];
  }
  TreeGrowth growth{cfg.max_depth, cfg.min_samples_split, cfg.min_samples_leaf, max_features, feature_seed};
  TreeModel m;
  m.feature_names = ds.feature_names();
  m.config = cfg;
  m.nodes = grow_tree(ds.X(), rows, target, weight, growth);
  if (m.nodes.empty()) throw TrainingError("train_tree: no rows");
  return m;
}

TreeModel train_tree(const Dataset& ds, const TreeConfig& cfg) {
  std::vector<std::size_t> rows(ds.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return train_tree(ds, rows, cfg, 0, 0);
}

double predict_proba(const TreeModel& model, const VectorXd& row) { return model.predict(row); }

VectorXd predict_proba(const TreeModel& model, const MatrixXd& X) {
  check_features(model.feature_names.size(), X.cols());
  VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = tree_value(model.nodes, X.row(i).transpose());
  return out;
}

// Random forest -------------------------------------------------------------

void ForestConfig::validate() const {
  if (n_estimators < 1) throw ValidationError("forest: n_estimators must be >= 1");
  if (max_depth < 0) throw ValidationError("forest: max_depth must be >= 0");
  if (min_samples_split < 2) throw ValidationError("forest: min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ValidationError("forest: min_samples_leaf must be >= 1");
  check_class_weights(class_weights, "forest");
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.uniform_index(n);
  return rows;
}

ForestModel train_forest(const Dataset& ds, const ForestConfig& cfg, std::size_t workers) {
  cfg.validate();
  ds.require_both_classes("train_forest");
  const std::size_t p = ds.cols();
  const std::size_t m = cfg.max_features == 0
                            ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))))
                            : std::min(cfg.max_features, p);
  TreeConfig tree_cfg{cfg.max_depth, cfg.min_samples_split, cfg.min_samples_leaf, cfg.class_weights};

  ForestModel f;
  f.feature_names = ds.feature_names();
  f.config = cfg;
  f.trees.resize(cfg.n_estimators);
  f.tree_seeds.resize(cfg.n_estimators);
  parallel_for(cfg.n_estimators, workers, [&](std::size_t t) {
    const std::uint64_t seed = mix_seed(cfg.seed, t);
    f.tree_seeds[t] = seed;
    const auto rows = bootstrap_rows(ds.rows(), mix_seed(seed, 0));
    // a bootstrap may miss a class entirely; that tree is then a single leaf
    std::vector<double> target(rows.size()), weight(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const int label = ds.y()[static_cast<Eigen::Index>(rows[k])];
      target[k] = label;
      weight[k] = cfg.class_weights[static_cast<std::size_t>(label)];
    }
    TreeModel tree;
    tree.feature_names = ds.feature_names();
    tree.config = tree_cfg;
    tree.nodes = grow_tree(ds.X(), rows, target, weight,
                           {cfg.max_depth, cfg.min_samples_split, cfg.min_samples_leaf, m, mix_seed(seed, 1)});
    f.trees[t] = std::move(tree);
  });
  return f;
}

double predict_proba(const ForestModel& model, const VectorXd& row) {
  check_features(model.feature_names.size(), row.size());
  double sum = 0.0;
  for (const auto& t : model.trees) sum += tree_value(t.nodes, row);
  return sum / static_cast<double>(model.trees.size());
}

VectorXd predict_proba(const ForestModel& model, const MatrixXd& X) {
  check_features(model.feature_names.size(), X.cols());
  VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_proba(model, VectorXd(X.row(i).transpose()));
  return out;
}

// Gradient-boosted trees ----------------------------------------------------

void GbtConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("gbt: learning_rate must be > 0");
  if (max_depth < 0) throw ValidationError("gbt: max_depth must be >= 0");
  if (n_rounds < 0) throw ValidationError("gbt: n_rounds must be >= 0");
  if (!(scale_pos_weight > 0.0) || !std::isfinite(scale_pos_weight)) {
    throw ValidationError("gbt: scale_pos_weight must be > 0");
  }
  if (!(subsample > 0.0) || subsample > 1.0) throw ValidationError("gbt: subsample must be in (0, 1]");
  if (min_samples_leaf < 1) throw ValidationError("gbt: min_samples_leaf must be >= 1");
}

GbtModel train_gbt(const Dataset& ds, const GbtConfig& cfg) {
  cfg.validate();
  ds.require_both_classes("train_gbt");
  const std::size_t n = ds.rows();
  const Labels& y = ds.y();
  const auto weight = class_weight_vector(y, {1.0, cfg.scale_pos_weight});
  double pos = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += weight[i];
    if (y[static_cast<Eigen::Index>(i)] == 1) pos += weight[i];
  }

  GbtModel m;
  m.feature_names = ds.feature_names();
  m.config = cfg;
  m.base_logit = std::log(pos / (total - pos));

  VectorXd logits = VectorXd::Constant(static_cast<Eigen::Index>(n), m.base_logit);
  auto loss = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      sum += weight[i] * (y[ii] == 1 ? softplus(-logits[ii]) : softplus(logits[ii]));
    }
    return sum / total;
  };
  m.train_loss.push_back(loss());

  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  const auto full_order = cfg.subsample < 1.0 ? std::vector<std::vector<std::uint32_t>>{}
                                              : sorted_positions(ds.X(), all_rows);
  const TreeGrowth growth{cfg.max_depth, 2, cfg.min_samples_leaf, 0, 0};
  std::vector<double> residual(n);

  for (int round = 0; round < cfg.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      residual[i] = static_cast<double>(y[ii]) - sigmoid(logits[ii]);
    }
    std::vector<TreeNode> tree;
    if (cfg.subsample < 1.0) {
      std::vector<std::size_t> rows = all_rows;
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(round)));
      rng.shuffle(rows);
      rows.resize(std::max<std::size_t>(1, static_cast<std::size_t>(cfg.subsample * static_cast<double>(n))));
      std::sort(rows.begin(), rows.end());
      std::vector<double> t(rows.size()), w(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        t[k] = residual[rows[k]];
        w[k] = weight[rows[k]];
      }
      tree = grow_tree(ds.X(), rows, t, w, growth);
    } else {
      tree = TreeBuilder(ds.X(), all_rows, residual, weight, growth, full_order).run();
    }
    for (auto& node : tree) node.value *= cfg.learning_rate;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      logits[ii] += tree_value(tree, ds.X().row(ii).transpose());
    }
    m.trees.push_back(std::move(tree));
    m.train_loss.push_back(loss());
  }
  return m;
}

double predict_logit(const GbtModel& model, const VectorXd& row) {
  check_features(model.feature_names.size(), row.size());
  double z = model.base_logit;
  for (const auto& t : model.trees) z += tree_value(t, row);
  return z;
}

double predict_proba(const GbtModel& model, const VectorXd& row) { return sigmoid(predict_logit(model, row)); }

VectorXd predict_proba(const GbtModel& model, const MatrixXd& X) {
  check_features(model.feature_names.size(), X.cols());
  VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_proba(model, VectorXd(X.row(i).transpose()));
  return out;
}

// Serialization -------------------------------------------------------------

json to_json(const LogregConfig& c) {
  return json{{"C", c.C}, {"class_weights", c.class_weights}, {"tol", c.tol}, {"max_iter", c.max_iter}};
}

json to_json(const TreeConfig& c) {
  return json{{"max_depth", c.max_depth},
              {"min_samples_split", c.min_samples_split},
              {"min_samples_leaf", c.min_samples_leaf},
              {"class_weights", c.class_weights}};
}

json to_json(const ForestConfig& c) {
  return json{{"n_estimators", c.n_estimators},       {"max_depth", c.max_depth},
              {"max_features", c.max_features},       {"min_samples_split", c.min_samples_split},
              {"min_samples_leaf", c.min_samples_leaf}, {"class_weights", c.class_weights},
              {"seed", c.seed}};
}

json to_json(const GbtConfig& c) {
  return json{{"learning_rate", c.learning_rate}, {"max_depth", c.max_depth},
              {"n_rounds", c.n_rounds},           {"scale_pos_weight", c.scale_pos_weight},
              {"subsample", c.subsample},         {"min_samples_leaf", c.min_samples_leaf},
              {"seed", c.seed}};
}

LogregConfig logreg_config_from_json(const json& j, LogregConfig c) {
  parse_guard("logreg config", [&] {
    for (const auto& [k, v] : j.items()) {
      if (k == "C") c.C = v.get<double>();
      else if (k == "class_weights") c.class_weights = v.get<std::array<double, 2>>();
      else if (k == "positive_weight") c.class_weights[1] = v.get<double>();
      else if (k == "tol") c.tol = v.get<double>();
      else if (k == "max_iter") c.max_iter = v.get<int>();
      else if (k == "seed") continue;
      else unknown_key("logreg", k);
    }
    return 0;
  });
  c.validate();
  return c;
}

TreeConfig tree_config_from_json(const json& j, TreeConfig c) {
  parse_guard("tree config", [&] {
    for (const auto& [k, v] : j.items()) {
      if (k == "max_depth") c.max_depth = v.get<int>();
      else if (k == "min_samples_split") c.min_samples_split = v.get<std::size_t>();
      else if (k == "min_samples_leaf") c.min_samples_leaf = v.get<std::size_t>();
      else if (k == "class_weights") c.class_weights = v.get<std::array<double, 2>>();
      else if (k == "positive_weight") c.class_weights[1] = v.get<double>();
      else if (k == "seed") continue;
      else unknown_key("tree", k);
    }
    return 0;
  });
  c.validate();
  return c;
}

ForestConfig forest_config_from_json(const json& j, ForestConfig c) {
  parse_guard("forest config", [&] {
    for (const auto& [k, v] : j.items()) {
      if (k == "n_estimators") c.n_estimators = v.get<std::size_t>();
      else if (k == "max_depth") c.max_depth = v.get<int>();
      else if (k == "max_features") c.max_features = v.get<std::size_t>();
      else if (k == "min_samples_split") c.min_samples_split = v.get<std::size_t>();
      else if (k == "min_samples_leaf") c.min_samples_leaf = v.get<std::size_t>();
      else if (k == "class_weights") c.class_weights = v.get<std::array<double, 2>>();
      else if (k == "positive_weight") c.class_weights[1] = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else unknown_key("forest", k);
    }
    return 0;
  });
  c.validate();
  return c;
}

GbtConfig gbt_config_from_json(const json& j, GbtConfig c) {
  parse_guard("gbt config", [&] {
    for (const auto& [k, v] : j.items()) {
      if (k == "learning_rate") c.learning_rate = v.get<double>();
      else if (k == "max_depth") c.max_depth = v.get<int>();
      else if (k == "n_rounds") c.n_rounds = v.get<int>();
      else if (k == "scale_pos_weight") c.scale_pos_weight = v.get<double>();
      else if (k == "subsample") c.subsample = v.get<double>();
      else if (k == "min_samples_leaf") c.min_samples_leaf = v.get<std::size_t>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else unknown_key("gbt", k);
    }
    return 0;
  });
  c.validate();
  return c;
}

json to_json(const LinearModel& m) {
  return json{{"config", to_json(m.config)},
              {"feature_names", m.feature_names},
              {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
              {"bias", m.bias},
              {"l2", m.l2},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"gradient_norm", m.gradient_norm}};
}

json to_json(const TreeModel& m) {
  return json{{"config", to_json(m.config)}, {"feature_names", m.feature_names}, {"nodes", nodes_to_json(m.nodes)}};
}

json to_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(nodes_to_json(t.nodes));
  return json{{"config", to_json(m.config)},
              {"feature_names", m.feature_names},
              {"tree_seeds", m.tree_seeds},
              {"trees", trees}};
}

json to_json(const GbtModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) trees.push_back(nodes_to_json(t));
  return json{{"config", to_json(m.config)},
              {"feature_names", m.feature_names},
              {"base_logit", m.base_logit},
              {"train_loss", m.train_loss},
              {"trees", trees}};
}

LinearModel linear_model_from_json(const json& j) {
  return parse_guard("malformed logreg model", [&] {
    LinearModel m;
    m.config = logreg_config_from_json(j.at("config"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != m.feature_names.size()) throw ValidationError("logreg weights do not match features");
    m.weights = Eigen::Map<const VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.bias = j.at("bias").get<double>();
    m.l2 = j.at("l2").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.converged = j.at("converged").get<bool>();
    m.gradient_norm = j.at("gradient_norm").get<double>();
    return m;
  });
}

TreeModel tree_model_from_json(const json& j) {
  return parse_guard("malformed tree model", [&] {
    TreeModel m;
    m.config = tree_config_from_json(j.at("config"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.nodes = nodes_from_json(j.at("nodes"), m.feature_names.size());
    return m;
  });
}

ForestModel forest_model_from_json(const json& j) {
  return parse_guard("malformed forest model", [&] {
    ForestModel m;
    m.config = forest_config_from_json(j.at("config"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
    TreeConfig tc{m.config.max_depth, m.config.min_samples_split, m.config.min_samples_leaf, m.config.class_weights};
    for (const auto& t : j.at("trees")) {
      m.trees.push_back({m.feature_names, nodes_from_json(t, m.feature_names.size()), tc});
    }
    if (m.trees.empty() || m.trees.size() != m.tree_seeds.size()) throw ValidationError("forest tree count mismatch");
    return m;
  });
}

GbtModel gbt_model_from_json(const json& j) {
  return parse_guard("malformed gbt model", [&] {
    GbtModel m;
    m.config = gbt_config_from_json(j.at("config"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.base_logit = j.at("base_logit").get<double>();
    m.train_loss = j.at("train_loss").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) m.trees.push_back(nodes_from_json(t, m.feature_names.size()));
    return m;
  });
}

}  // namespace glassbox
