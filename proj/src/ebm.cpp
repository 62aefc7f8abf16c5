#include "glassbox/ebm.hpp"

#include "glassbox/io.hpp"
#include "glassbox/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace glassbox {

using nlohmann::json;

namespace {

using BinColumn = std::vector<std::uint16_t>;

std::vector<BinColumn> bin_columns(const MatrixXd& X, const BinDefinition& bins) {
  std::vector<BinColumn> out(bins.features());
  for (std::size_t j = 0; j < bins.features(); ++j) {
    out[j].resize(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      out[j][static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(bins.bin_of(j, X(i, static_cast<Eigen::Index>(j))));
    }
  }
  return out;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double row_loss(int label, double logit) { return label == 1 ? softplus(-logit) : softplus(logit); }

double weighted_loss(const Labels& y, const VectorXd& logits, const std::vector<double>& weight) {
  double loss = 0.0, total = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (weight[i] == 0.0) continue;
    loss += weight[i] * row_loss(y[static_cast<Eigen::Index>(i)], logits[static_cast<Eigen::Index>(i)]);
    total += weight[i];
  }
  return total > 0.0 ? loss / total : 0.0;
}

constexpr double kCurvatureFloor = 1e-6;

// Gradient y - p and curvature p(1 - p), both times the row weight. The
// curvature is floored so near-pure bins cannot take unbounded steps.
void working_response(const Labels& y, const VectorXd& logits, const std::vector<double>& weight,
                      std::vector<double>& residual, std::vector<double>& curvature) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double prob = sigmoid(logits[ii]);
    residual[i] = weight[i] * (static_cast<double>(y[ii]) - prob);
    curvature[i] = weight[i] * std::max(prob * (1.0 - prob), kCurvatureFloor);
  }
}

template <typename Derived>
typename Derived::PlainObject newton_step(const Eigen::MatrixBase<Derived>& grad, const Eigen::MatrixBase<Derived>& hess,
                                          double learning_rate) {
  return (hess.array() > 0.0).select(learning_rate * grad.array() / hess.array().max(1e-300), 0.0).matrix();
}

// One shape-function update: the bins are split into at most max_leaves
// contiguous segments by greedy best-gain splits, and every bin moves by its
// segment's Newton value. Ties go to the leftmost segment and cut.
VectorXd segment_step(const VectorXd& grad, const VectorXd& hess, const VectorXd& count, const EbmConfig& cfg) {
  const Eigen::Index nb = grad.size();
  if (cfg.max_leaves == 0) return newton_step(grad, hess, cfg.learning_rate);
  VectorXd cg(nb + 1), ch(nb + 1), cc(nb + 1);
  cg[0] = ch[0] = cc[0] = 0.0;
  for (Eigen::Index b = 0; b < nb; ++b) {
    cg[b + 1] = cg[b] + grad[b];
    ch[b + 1] = ch[b] + hess[b];
    cc[b + 1] = cc[b] + count[b];
  }
  auto score = [&](Eigen::Index lo, Eigen::Index hi) {
    const double h = ch[hi] - ch[lo];
    const double g = cg[hi] - cg[lo];
    return h > 0.0 ? g * g / h : 0.0;
  };
  const double min_leaf = static_cast<double>(cfg.min_samples_leaf);
  std::vector<Eigen::Index> edges{0, nb};
  for (int leaves = 1; leaves < cfg.max_leaves; ++leaves) {
    double best_gain = 0.0;
    Eigen::Index best_cut = -1;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
      const Eigen::Index lo = edges[s], hi = edges[s + 1];
      const double parent = score(lo, hi);
      for (Eigen::Index cut = lo + 1; cut < hi; ++cut) {
        if (cc[cut] - cc[lo] < min_leaf || cc[hi] - cc[cut] < min_leaf) continue;
        const double gain = score(lo, cut) + score(cut, hi) - parent;
        if (gain > best_gain * (1.0 + 1e-12) + 1e-300) {
          best_gain = gain;
          best_cut = cut;
        }
      }
    }
    if (best_cut < 0) break;
    edges.insert(std::upper_bound(edges.begin(), edges.end(), best_cut), best_cut);
  }
  VectorXd out = VectorXd::Zero(nb);
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const Eigen::Index lo = edges[s], hi = edges[s + 1];
    const double h = ch[hi] - ch[lo];
    if (h > 0.0) out.segment(lo, hi - lo).setConstant(cfg.learning_rate * (cg[hi] - cg[lo]) / h);
  }
  return out;
}

// Best single cut of a 1-D profile; returns {gain, cut} with cut = -1 when no
// admissible cut improves the fit.
std::pair<double, Eigen::Index> best_cut(const VectorXd& g, const VectorXd& h, const VectorXd& c, double min_leaf) {
  const double gt = g.sum(), ht = h.sum(), ct = c.sum();
  const double parent = ht > 0.0 ? gt * gt / ht : 0.0;
  double gl = 0.0, hl = 0.0, cl = 0.0, best = 0.0;
  Eigen::Index cut = -1;
  for (Eigen::Index k = 1; k < g.size(); ++k) {
    gl += g[k - 1];
    hl += h[k - 1];
    cl += c[k - 1];
    if (cl < min_leaf || ct - cl < min_leaf || hl <= 0.0 || ht - hl <= 0.0) continue;
    const double gain = gl * gl / hl + (gt - gl) * (gt - gl) / (ht - hl) - parent;
    if (gain > best * (1.0 + 1e-12) + 1e-300) {
      best = gain;
      cut = k;
    }
  }
  return {best, cut};
}

// Pair-grid update: one cut along the first axis, then one cut along the other
// axis inside each half (at most four cells). Both axis orders are tried and
// the larger gain wins, rows first on ties.
MatrixXd grid_step(const MatrixXd& grad, const MatrixXd& hess, const MatrixXd& count, const EbmConfig& cfg) {
  if (cfg.max_leaves == 0) return newton_step(grad, hess, cfg.learning_rate);
  const double min_leaf = static_cast<double>(cfg.min_samples_leaf);
  struct Plan {
    double gain = -1.0;
    MatrixXd step;
  };
  auto plan_for = [&](const MatrixXd& g, const MatrixXd& h, const MatrixXd& c) {
    Plan plan;
    const auto [outer_gain, outer_cut] = best_cut(g.rowwise().sum(), h.rowwise().sum(), c.rowwise().sum(), min_leaf);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> halves{{0, g.rows()}};
    if (outer_cut >= 0) halves = {{0, outer_cut}, {outer_cut, g.rows()}};
    plan.step = MatrixXd::Zero(g.rows(), g.cols());
    plan.gain = 0.0;
    const double total = h.sum() > 0.0 ? g.sum() * g.sum() / h.sum() : 0.0;
    for (const auto& [lo, hi] : halves) {
      const VectorXd hg = g.middleRows(lo, hi - lo).colwise().sum().transpose();
      const VectorXd hh = h.middleRows(lo, hi - lo).colwise().sum().transpose();
      const VectorXd hc = c.middleRows(lo, hi - lo).colwise().sum().transpose();
      const auto [inner_gain, inner_cut] = best_cut(hg, hh, hc, min_leaf);
      std::vector<std::pair<Eigen::Index, Eigen::Index>> parts{{0, g.cols()}};
      if (inner_cut >= 0) parts = {{0, inner_cut}, {inner_cut, g.cols()}};
      for (const auto& [c0, c1] : parts) {
        const double sg = hg.segment(c0, c1 - c0).sum();
        const double sh = hh.segment(c0, c1 - c0).sum();
        if (sh <= 0.0) continue;
        plan.gain += sg * sg / sh;
        plan.step.block(lo, c0, hi - lo, c1 - c0).setConstant(cfg.learning_rate * sg / sh);
      }
    }
    plan.gain -= total;
    return plan;
  };
  Plan rows_first = plan_for(grad, hess, count);
  Plan cols_first = plan_for(grad.transpose(), hess.transpose(), count.transpose());
  if (cols_first.gain > rows_first.gain * (1.0 + 1e-12) + 1e-300) return cols_first.step.transpose();
  return rows_first.step;
}

// Largest scale in {1, 1/2, 1/4, ...} that does not raise the training loss.
double backtrack(const Labels& y, const VectorXd& logits, const VectorXd& step, const std::vector<double>& weight,
                 double current) {
  double scale = 1.0;
  for (int k = 0; k < 40; ++k, scale *= 0.5) {
    if (weighted_loss(y, logits + scale * step, weight) <= current) return scale;
  }
  return 0.0;
}

struct BagSample {
  std::vector<double> weight;      // class weight x bootstrap multiplicity
  std::vector<double> oob_weight;  // class weight on rows left out of the bag
  std::vector<double> count;       // bootstrap multiplicity
};

BagSample draw_bag(const Labels& y, const EbmConfig& cfg, std::size_t bag) {
  const auto n = static_cast<std::size_t>(y.size());
  std::vector<double> count(n, 1.0);
  if (cfg.outer_bags > 1) {
    std::fill(count.begin(), count.end(), 0.0);
    Rng rng(mix_seed(cfg.seed, bag));
    for (std::size_t k = 0; k < n; ++k) count[rng.uniform_index(n)] += 1.0;
  }
  BagSample s{std::vector<double>(n), std::vector<double>(n, 0.0), count};
  for (std::size_t i = 0; i < n; ++i) {
    const double cw = cfg.class_weights[static_cast<std::size_t>(y[static_cast<Eigen::Index>(i)])];
    s.weight[i] = cw * count[i];
    if (count[i] == 0.0) s.oob_weight[i] = cw;
  }
  return s;
}

struct UnivariateBag {
  std::vector<VectorXd> scores;
  std::vector<double> losses;
  std::size_t rounds = 0;
};

UnivariateBag boost_univariate(const std::vector<BinColumn>& binned, const std::vector<std::size_t>& bin_counts,
                               const Labels& y, const BagSample& bag, double intercept, const EbmConfig& cfg) {
  const std::size_t p = binned.size();
  const std::size_t n = bag.weight.size();
  UnivariateBag out;
  std::vector<VectorXd> rows_per_bin(p);
  for (std::size_t j = 0; j < p; ++j) {
    out.scores.emplace_back(VectorXd::Zero(static_cast<Eigen::Index>(bin_counts[j])));
    rows_per_bin[j] = VectorXd::Zero(static_cast<Eigen::Index>(bin_counts[j]));
    for (std::size_t i = 0; i < n; ++i) {
      rows_per_bin[j][binned[j][i]] += bag.count[i];
    }
  }

  VectorXd logits = VectorXd::Constant(static_cast<Eigen::Index>(n), intercept);
  std::vector<double> residual(n), curvature(n);
  std::vector<VectorXd> delta(p);
  out.losses.push_back(weighted_loss(y, logits, bag.weight));

  const bool early_stop = cfg.early_stopping_rounds > 0 && cfg.outer_bags > 1;
  double best_oob = early_stop ? weighted_loss(y, logits, bag.oob_weight) : 0.0;
  int since_best = 0;

  for (int round = 0; round < cfg.max_rounds; ++round) {
    working_response(y, logits, bag.weight, residual, curvature);
    for (std::size_t j = 0; j < p; ++j) {
      VectorXd grad = VectorXd::Zero(out.scores[j].size());
      VectorXd hess = VectorXd::Zero(out.scores[j].size());
      for (std::size_t i = 0; i < n; ++i) {
        grad[binned[j][i]] += residual[i];
        hess[binned[j][i]] += curvature[i];
      }
      delta[j] = segment_step(grad, hess, rows_per_bin[j], cfg);
    }
    VectorXd step = VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < n; ++i) step[static_cast<Eigen::Index>(i)] += delta[j][binned[j][i]];
    }
    const double scale = backtrack(y, logits, step, bag.weight, out.losses.back());
    for (std::size_t j = 0; j < p; ++j) out.scores[j] += scale * delta[j];
    logits += scale * step;
    out.losses.push_back(weighted_loss(y, logits, bag.weight));
    out.rounds = static_cast<std::size_t>(round + 1);

    if (early_stop) {
      const double oob = weighted_loss(y, logits, bag.oob_weight);
      if (oob < best_oob) {
        best_oob = oob;
        since_best = 0;
      } else if (++since_best >= cfg.early_stopping_rounds) {
        break;
      }
    }
  }
  return out;
}

struct PairBag {
  std::vector<MatrixXd> scores;
  std::vector<double> losses;
};

PairBag boost_pairs(const std::vector<BinColumn>& coarse, const std::vector<std::size_t>& coarse_counts,
                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs, const Labels& y,
                    const BagSample& bag, const VectorXd& base_logits, const EbmConfig& cfg) {
  const std::size_t n = bag.weight.size();
  PairBag out;
  for (const auto& [a, b] : pairs) {
    out.scores.emplace_back(
        MatrixXd::Zero(static_cast<Eigen::Index>(coarse_counts[a]), static_cast<Eigen::Index>(coarse_counts[b])));
  }
  VectorXd logits = base_logits;
  std::vector<double> residual(n), curvature(n);
  std::vector<MatrixXd> delta(pairs.size());
  out.losses.push_back(weighted_loss(y, logits, bag.weight));

  for (int round = 0; round < cfg.pair_rounds(); ++round) {
    working_response(y, logits, bag.weight, residual, curvature);
    VectorXd step = VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [a, b] = pairs[k];
      MatrixXd grad = MatrixXd::Zero(out.scores[k].rows(), out.scores[k].cols());
      MatrixXd hess = MatrixXd::Zero(grad.rows(), grad.cols());
      MatrixXd count = MatrixXd::Zero(grad.rows(), grad.cols());
      for (std::size_t i = 0; i < n; ++i) {
        grad(coarse[a][i], coarse[b][i]) += residual[i];
        hess(coarse[a][i], coarse[b][i]) += curvature[i];
        count(coarse[a][i], coarse[b][i]) += bag.count[i];
      }
      delta[k] = grid_step(grad, hess, count, cfg);
      for (std::size_t i = 0; i < n; ++i) step[static_cast<Eigen::Index>(i)] += delta[k](coarse[a][i], coarse[b][i]);
    }
    const double scale = backtrack(y, logits, step, bag.weight, out.losses.back());
    for (std::size_t k = 0; k < pairs.size(); ++k) out.scores[k] += scale * delta[k];
    logits += scale * step;
    out.losses.push_back(weighted_loss(y, logits, bag.weight));
  }
  return out;
}

// Weighted residual sums on a pair grid: full cell-mean fit vs. best additive fit.
double pair_strength(const BinColumn& a, const BinColumn& b, std::size_t rows, std::size_t cols,
                     const std::vector<double>& residual, const std::vector<double>& weight) {
  const auto ra = static_cast<Eigen::Index>(rows);
  const auto cb = static_cast<Eigen::Index>(cols);
  MatrixXd sum = MatrixXd::Zero(ra, cb);
  MatrixXd w = MatrixXd::Zero(ra, cb);
  for (std::size_t i = 0; i < residual.size(); ++i) {
    sum(a[i], b[i]) += weight[i] * residual[i];
    w(a[i], b[i]) += weight[i];
  }
  double full = 0.0;
  for (Eigen::Index c = 0; c < cb; ++c) {
    for (Eigen::Index r = 0; r < ra; ++r) {
      if (w(r, c) > 0.0) full += sum(r, c) * sum(r, c) / w(r, c);
    }
  }

  const VectorXd row_w = w.rowwise().sum();
  const VectorXd col_w = w.colwise().sum().transpose();
  VectorXd row_eff = VectorXd::Zero(ra);
  VectorXd col_eff = VectorXd::Zero(cb);
  for (int iter = 0; iter < 500; ++iter) {
    double change = 0.0;
    for (Eigen::Index r = 0; r < ra; ++r) {
      if (row_w[r] <= 0.0) continue;
      const double v = (sum.row(r).sum() - w.row(r).dot(col_eff)) / row_w[r];
      change = std::max(change, std::abs(v - row_eff[r]));
      row_eff[r] = v;
    }
    for (Eigen::Index c = 0; c < cb; ++c) {
      if (col_w[c] <= 0.0) continue;
      const double v = (sum.col(c).sum() - w.col(c).dot(row_eff)) / col_w[c];
      change = std::max(change, std::abs(v - col_eff[c]));
      col_eff[c] = v;
    }
    if (change < 1e-13) break;
  }
  double additive = 0.0;
  for (Eigen::Index c = 0; c < cb; ++c) {
    for (Eigen::Index r = 0; r < ra; ++r) {
      const double f = row_eff[r] + col_eff[c];
      additive += 2.0 * f * sum(r, c) - w(r, c) * f * f;
    }
  }
  return full - additive;
}

std::vector<PairScore> score_pairs(const std::vector<BinColumn>& coarse, const std::vector<std::size_t>& counts,
                                   const std::vector<double>& residual, const std::vector<double>& weight) {
  std::vector<PairScore> scores;
  for (std::size_t a = 0; a < coarse.size(); ++a) {
    for (std::size_t b = a + 1; b < coarse.size(); ++b) {
      scores.push_back({a, b, pair_strength(coarse[a], coarse[b], counts[a], counts[b], residual, weight)});
    }
  }
  std::stable_sort(scores.begin(), scores.end(), [](const PairScore& l, const PairScore& r) {
    if (l.score != r.score) return l.score > r.score;
    return std::tie(l.first, l.second) < std::tie(r.first, r.second);
  });
  return scores;
}

std::vector<std::size_t> bin_counts_of(const BinDefinition& bins) {
  std::vector<std::size_t> counts;
  for (std::size_t j = 0; j < bins.features(); ++j) counts.push_back(bins.bin_count(j));
  return counts;
}

std::vector<std::pair<std::size_t, std::size_t>> take_top(const std::vector<PairScore>& scores, int k,
                                                           std::size_t p) {
  const std::size_t max_pairs = p * (p - 1) / 2;
  auto count = static_cast<std::size_t>(std::max(k, 0));
  if (count > max_pairs) {
    warn("interactions = " + std::to_string(k) + " exceeds the " + std::to_string(max_pairs) +
         " available pairs; clamped");
    count = max_pairs;
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(scores[i].first, scores[i].second);
  return out;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_rows(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_std(m.row(r).transpose()));
  return rows;
}

MatrixXd matrix_from_rows(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw ValidationError("pair grid has wrong row count");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto v = j.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != cols) throw ValidationError("pair grid has wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

void EbmConfig::validate() const {
  if (max_bins < 2 || max_bins > 65536) throw ValidationError("ebm: max_bins must be in [2, 65536]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("ebm: learning_rate must be > 0");
  if (max_rounds < 1) throw ValidationError("ebm: max_rounds must be >= 1");
  if (interactions < 0) throw ValidationError("ebm: interactions must be >= 0");
  if (outer_bags < 1) throw ValidationError("ebm: outer_bags must be >= 1");
  if (min_samples_bin < 1) throw ValidationError("ebm: min_samples_bin must be >= 1");
  if (interaction_grid < 2 || interaction_grid > 65536) throw ValidationError("ebm: interaction_grid must be >= 2");
  if (max_leaves < 0 || max_leaves == 1) throw ValidationError("ebm: max_leaves must be 0 or >= 2");
  if (min_samples_leaf < 1) throw ValidationError("ebm: min_samples_leaf must be >= 1");
  if (!(class_weights[0] > 0.0) || !(class_weights[1] > 0.0)) throw ValidationError("ebm: class weights must be > 0");
  if (early_stopping_rounds < 0) throw ValidationError("ebm: early_stopping_rounds must be >= 0");
}

json to_json(const EbmConfig& cfg) {
  return json{{"max_bins", cfg.max_bins},
              {"learning_rate", cfg.learning_rate},
              {"max_rounds", cfg.max_rounds},
              {"interactions", cfg.interactions},
              {"outer_bags", cfg.outer_bags},
              {"min_samples_bin", cfg.min_samples_bin},
              {"interaction_grid", cfg.interaction_grid},
              {"max_leaves", cfg.max_leaves},
              {"min_samples_leaf", cfg.min_samples_leaf},
              {"class_weights", cfg.class_weights},
              {"early_stopping_rounds", cfg.early_stopping_rounds},
              {"seed", cfg.seed}};
}

EbmConfig ebm_config_from_json(const json& j, EbmConfig cfg) {
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "max_bins") cfg.max_bins = value.get<int>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "max_rounds") cfg.max_rounds = value.get<int>();
      else if (key == "interactions") cfg.interactions = value.get<int>();
      else if (key == "outer_bags") cfg.outer_bags = value.get<int>();
      else if (key == "min_samples_bin") cfg.min_samples_bin = value.get<int>();
      else if (key == "interaction_grid") cfg.interaction_grid = value.get<int>();
      else if (key == "max_leaves") cfg.max_leaves = value.get<int>();
      else if (key == "min_samples_leaf") cfg.min_samples_leaf = value.get<int>();
      else if (key == "class_weights") cfg.class_weights = value.get<std::array<double, 2>>();
      else if (key == "positive_weight") cfg.class_weights[1] = value.get<double>();
      else if (key == "early_stopping_rounds") cfg.early_stopping_rounds = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else throw ValidationError("ebm: unknown hyperparameter '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("ebm config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::size_t BinDefinition::bin_of(std::size_t feature, double value) const {
  const auto& c = cuts[feature];
  return static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

std::vector<double> feature_cuts(const VectorXd& values, int max_bins, int min_samples_bin) {
  if (values.size() < 2) throw ValidationError("build_bins: need at least 2 rows");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  if (sorted.front() == sorted.back()) return cuts;

  for (int k = 1; k < max_bins; ++k) {
    const double level = 100.0 * static_cast<double>(k) / static_cast<double>(max_bins);
    const double v = percentile_sorted(sorted, level);
    const auto upper = std::upper_bound(sorted.begin(), sorted.end(), v);
    if (upper == sorted.end()) continue;
    const double lower = *(upper - 1) <= v ? *(upper - 1) : v;
    const double cut = lower + 0.5 * (*upper - lower);
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }

  auto counts = [&] {
    std::vector<std::size_t> c(cuts.size() + 1, 0);
    for (double v : sorted) ++c[static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin())];
    return c;
  };
  auto c = counts();
  const auto min_rows = static_cast<std::size_t>(min_samples_bin);
  for (std::size_t b = 0; b < c.size() && !cuts.empty();) {
    if (c[b] >= min_rows) {
      ++b;
      continue;
    }
    if (b + 1 < c.size()) {
      // merge with the right neighbour
      cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(b));
      c[b] += c[b + 1];
      c.erase(c.begin() + static_cast<std::ptrdiff_t>(b + 1));
    } else {
      cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(b - 1));
      c[b - 1] += c[b];
      c.erase(c.begin() + static_cast<std::ptrdiff_t>(b));
      b = b - 1;
    }
  }
  return cuts;
}

BinDefinition build_bins(const MatrixXd& X, int max_bins, int min_samples_bin) {
  if (max_bins < 2) throw ValidationError("build_bins: max_bins must be >= 2");
  if (min_samples_bin < 1) throw ValidationError("build_bins: min_samples_bin must be >= 1");
  BinDefinition bins;
  for (Eigen::Index j = 0; j < X.cols(); ++j) bins.cuts.push_back(feature_cuts(X.col(j), max_bins, min_samples_bin));
  return bins;
}

std::string EbmModel::term_name(std::size_t term) const {
  if (term < univariate.size()) return feature_names[univariate[term].feature];
  const auto& pair = pairs.at(term - univariate.size());
  return feature_names[pair.first] + " & " + feature_names[pair.second];
}

EbmModel train_ebm(const Dataset& ds, const EbmConfig& cfg, const EbmTrainOptions& options) {
  cfg.validate();
  ds.require_both_classes("train_ebm");
  const std::size_t n = ds.rows();
  const std::size_t p = ds.cols();
  const Labels& y = ds.y();

  EbmModel model;
  model.config = cfg;
  model.feature_names = ds.feature_names();
  model.bins = build_bins(ds.X(), cfg.max_bins, cfg.min_samples_bin);
  model.pair_bins = build_bins(ds.X(), cfg.interaction_grid, cfg.min_samples_bin);
  const auto binned = bin_columns(ds.X(), model.bins);
  const auto counts = bin_counts_of(model.bins);

  std::vector<double> class_weight(n);
  double pos_w = 0.0, total_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = y[static_cast<Eigen::Index>(i)];
    class_weight[i] = cfg.class_weights[static_cast<std::size_t>(label)];
    total_w += class_weight[i];
    if (label == 1) pos_w += class_weight[i];
  }
  const double base_logit = std::log(pos_w / (total_w - pos_w));

  const auto n_bags = static_cast<std::size_t>(cfg.outer_bags);
  std::vector<BagSample> bags(n_bags);
  std::vector<UnivariateBag> uni(n_bags);
  parallel_for(n_bags, options.workers, [&](std::size_t b) {
    bags[b] = draw_bag(y, cfg, b);
    uni[b] = boost_univariate(binned, counts, y, bags[b], base_logit, cfg);
  });

  std::vector<VectorXd> averaged(p);
  for (std::size_t j = 0; j < p; ++j) {
    averaged[j] = VectorXd::Zero(static_cast<Eigen::Index>(counts[j]));
    for (std::size_t b = 0; b < n_bags; ++b) averaged[j] += uni[b].scores[j];
    averaged[j] /= static_cast<double>(n_bags);
  }

  VectorXd logits = VectorXd::Constant(static_cast<Eigen::Index>(n), base_logit);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) logits[static_cast<Eigen::Index>(i)] += averaged[j][binned[j][i]];
  }

  std::vector<std::pair<std::size_t, std::size_t>> selected;
  std::vector<PairBag> pair_bags(n_bags);
  std::vector<BinColumn> coarse;
  std::vector<std::size_t> coarse_counts;
  if (cfg.interactions > 0 && p >= 2) {
    coarse = bin_columns(ds.X(), model.pair_bins);
    coarse_counts = bin_counts_of(model.pair_bins);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      residual[i] = static_cast<double>(y[ii]) - sigmoid(logits[ii]);
    }
    selected = take_top(score_pairs(coarse, coarse_counts, residual, class_weight), cfg.interactions, p);
    if (!selected.empty()) {
      parallel_for(n_bags, options.workers, [&](std::size_t b) {
        pair_bags[b] = boost_pairs(coarse, coarse_counts, selected, y, bags[b], logits, cfg);
      });
    }
  }

  model.intercept = base_logit;
  for (std::size_t j = 0; j < p; ++j) {
    ShapeFunction f{j, averaged[j], VectorXd::Zero(static_cast<Eigen::Index>(counts[j]))};
    for (std::size_t i = 0; i < n; ++i) f.weights[binned[j][i]] += 1.0;
    model.univariate.push_back(std::move(f));
  }
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto [a, b] = selected[k];
    InteractionTerm t;
    t.first = a;
    t.second = b;
    t.scores = MatrixXd::Zero(static_cast<Eigen::Index>(coarse_counts[a]), static_cast<Eigen::Index>(coarse_counts[b]));
    for (std::size_t bag = 0; bag < n_bags; ++bag) t.scores += pair_bags[bag].scores[k];
    t.scores /= static_cast<double>(n_bags);
    t.weights = MatrixXd::Zero(t.scores.rows(), t.scores.cols());
    for (std::size_t i = 0; i < n; ++i) t.weights(coarse[a][i], coarse[b][i]) += 1.0;
    model.pairs.push_back(std::move(t));
  }

  // Centre every term on the training distribution; the intercept absorbs it.
  for (auto& f : model.univariate) {
    const double mean = f.scores.dot(f.weights) / f.weights.sum();
    f.scores.array() -= mean;
    model.intercept += mean;
  }
  for (auto& t : model.pairs) {
    const double mean = (t.scores.array() * t.weights.array()).sum() / t.weights.sum();
    t.scores.array() -= mean;
    model.intercept += mean;
  }

  if (options.trace != nullptr) {
    options.trace->bag_losses.clear();
    options.trace->pair_losses.clear();
    options.trace->univariate_rounds.clear();
    for (std::size_t b = 0; b < n_bags; ++b) {
      options.trace->bag_losses.push_back(uni[b].losses);
      options.trace->pair_losses.push_back(pair_bags[b].losses);
      options.trace->univariate_rounds.push_back(uni[b].rounds);
    }
    options.trace->selected_pairs = selected;
  }
  return model;
}

std::vector<PairScore> interaction_scores(const Dataset& ds, const EbmModel& model, int grid) {
  if (ds.cols() != model.features()) throw ValidationError("interaction_scores: feature count mismatch");
  if (grid < 2) throw ValidationError("interaction_scores: grid must be >= 2");
  const BinDefinition coarse_bins = build_bins(ds.X(), grid, model.config.min_samples_bin);
  const auto coarse = bin_columns(ds.X(), coarse_bins);
  const VectorXd logits = predict_logit(model, ds.X());
  std::vector<double> residual(ds.rows()), weight(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    residual[i] = static_cast<double>(ds.y()[ii]) - sigmoid(logits[ii]);
    weight[i] = model.config.class_weights[static_cast<std::size_t>(ds.y()[ii])];
  }
  return score_pairs(coarse, bin_counts_of(coarse_bins), residual, weight);
}

std::vector<std::pair<std::size_t, std::size_t>> detect_interactions(const Dataset& ds, const EbmModel& model, int k,
                                                                     int grid) {
  if (k <= 0 || ds.cols() < 2) return {};
  return take_top(interaction_scores(ds, model, grid), k, ds.cols());
}

LocalExplanation explain_local(const EbmModel& model, const VectorXd& row) {
  if (static_cast<std::size_t>(row.size()) != model.features()) {
    throw ValidationError("row has " + std::to_string(row.size()) + " values, model expects " +
                          std::to_string(model.features()));
  }
  LocalExplanation e;
  e.intercept = model.intercept;
  e.contributions.reserve(model.terms());
  double logit = model.intercept;
  std::size_t term = 0;
  for (const auto& f : model.univariate) {
    const double v = f.scores[static_cast<Eigen::Index>(model.bins.bin_of(f.feature, row[static_cast<Eigen::Index>(f.feature)]))];
    e.contributions.push_back({term, model.term_name(term), v});
    logit += v;
    ++term;
  }
  for (const auto& t : model.pairs) {
    const auto r = model.pair_bins.bin_of(t.first, row[static_cast<Eigen::Index>(t.first)]);
    const auto c = model.pair_bins.bin_of(t.second, row[static_cast<Eigen::Index>(t.second)]);
    const double v = t.scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    e.contributions.push_back({term, model.term_name(term), v});
    logit += v;
    ++term;
  }
  e.logit = logit;
  e.probability = sigmoid(logit);
  return e;
}

std::vector<Contribution> LocalExplanation::by_magnitude() const {
  auto out = contributions;
  std::stable_sort(out.begin(), out.end(),
                   [](const Contribution& a, const Contribution& b) { return std::abs(a.value) > std::abs(b.value); });
  return out;
}

double predict_logit(const EbmModel& model, const VectorXd& row) { return explain_local(model, row).logit; }

double predict_proba(const EbmModel& model, const VectorXd& row) { return sigmoid(predict_logit(model, row)); }

int predict_class(const EbmModel& model, const VectorXd& row, double threshold) {
  return predict_proba(model, row) >= threshold ? 1 : 0;
}

VectorXd predict_logit(const EbmModel& model, const MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != model.features()) {
    throw ValidationError("matrix has " + std::to_string(X.cols()) + " columns, model expects " +
                          std::to_string(model.features()));
  }
  VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_logit(model, VectorXd(X.row(i).transpose()));
  return out;
}

VectorXd predict_proba(const EbmModel& model, const MatrixXd& X) {
  return predict_logit(model, X).unaryExpr([](double v) { return sigmoid(v); });
}

double term_importance(const VectorXd& scores, const VectorXd& weights) {
  const double total = weights.sum();
  return total > 0.0 ? scores.cwiseAbs().dot(weights) / total : 0.0;
}

double term_importance(const MatrixXd& scores, const MatrixXd& weights) {
  const double total = weights.sum();
  return total > 0.0 ? (scores.cwiseAbs().array() * weights.array()).sum() / total : 0.0;
}

std::vector<TermImportance> explain_global(const EbmModel& model) {
  std::vector<TermImportance> out;
  std::size_t term = 0;
  for (const auto& f : model.univariate) {
    out.push_back({term, model.term_name(term), false, {f.feature}, term_importance(f.scores, f.weights)});
    ++term;
  }
  for (const auto& t : model.pairs) {
    out.push_back({term, model.term_name(term), true, {t.first, t.second}, term_importance(t.scores, t.weights)});
    ++term;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TermImportance& a, const TermImportance& b) { return a.importance > b.importance; });
  return out;
}

std::vector<std::size_t> top_k_features(const EbmModel& model, std::size_t k, bool split_pairs) {
  const std::size_t p = model.features();
  if (k < 1 || k > p) {
    throw ValidationError("top_k_features: k = " + std::to_string(k) + " outside [1, " + std::to_string(p) + "]");
  }
  std::vector<double> importance(p, 0.0);
  for (const auto& f : model.univariate) importance[f.feature] += term_importance(f.scores, f.weights);
  if (split_pairs) {
    for (const auto& t : model.pairs) {
      const double half = 0.5 * term_importance(t.scores, t.weights);
      importance[t.first] += half;
      importance[t.second] += half;
    }
  }
  std::vector<std::size_t> ids(p);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  ids.resize(k);
  return ids;
}

json to_json(const EbmModel& model) {
  json uni = json::array();
  for (const auto& f : model.univariate) {
    uni.push_back({{"feature", f.feature}, {"scores", to_std(f.scores)}, {"weights", to_std(f.weights)}});
  }
  json pairs = json::array();
  for (const auto& t : model.pairs) {
    pairs.push_back({{"features", {t.first, t.second}},
                     {"scores", matrix_rows(t.scores)},
                     {"weights", matrix_rows(t.weights)}});
  }
  json importances = json::array();
  for (const auto& imp : explain_global(model)) {
    importances.push_back({{"term", imp.name}, {"importance", imp.importance}});
  }
  return json{{"config", to_json(model.config)},
              {"feature_names", model.feature_names},
              {"intercept", model.intercept},
              {"bins", model.bins.cuts},
              {"pair_bins", model.pair_bins.cuts},
              {"univariate", uni},
              {"pairs", pairs},
              {"importances", importances}};
}

EbmModel ebm_model_from_json(const json& j) {
  try {
    EbmModel m;
    m.config = ebm_config_from_json(j.at("config"));
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.intercept = j.at("intercept").get<double>();
    m.bins.cuts = j.at("bins").get<std::vector<std::vector<double>>>();
    m.pair_bins.cuts = j.at("pair_bins").get<std::vector<std::vector<double>>>();
    const std::size_t p = m.feature_names.size();
    if (m.bins.features() != p || m.pair_bins.features() != p) throw ValidationError("bin table size mismatch");
    for (const auto& u : j.at("univariate")) {
      ShapeFunction f{u.at("feature").get<std::size_t>(), vec_from_json(u.at("scores")), vec_from_json(u.at("weights"))};
      if (f.feature >= p || static_cast<std::size_t>(f.scores.size()) != m.bins.bin_count(f.feature) ||
          f.weights.size() != f.scores.size()) {
        throw ValidationError("shape function does not match its bins");
      }
      m.univariate.push_back(std::move(f));
    }
    if (m.univariate.size() != p) throw ValidationError("expected one shape function per feature");
    for (const auto& t : j.at("pairs")) {
      InteractionTerm term;
      const auto ids = t.at("features").get<std::vector<std::size_t>>();
      if (ids.size() != 2 || ids[0] >= ids[1] || ids[1] >= p) throw ValidationError("bad pair feature ids");
      term.first = ids[0];
      term.second = ids[1];
      const auto rows = static_cast<Eigen::Index>(m.pair_bins.bin_count(term.first));
      const auto cols = static_cast<Eigen::Index>(m.pair_bins.bin_count(term.second));
      term.scores = matrix_from_rows(t.at("scores"), rows, cols);
      term.weights = matrix_from_rows(t.at("weights"), rows, cols);
      m.pairs.push_back(std::move(term));
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ebm model: ") + e.what());
  }
}

void save_model(const EbmModel& model, const std::filesystem::path& path) {
  write_json_file(path, make_envelope("ebm", to_json(model)));
}

EbmModel load_model(const std::filesystem::path& path) {
  return ebm_model_from_json(open_envelope(read_json_file(path), "ebm"));
}

}  // namespace glassbox
