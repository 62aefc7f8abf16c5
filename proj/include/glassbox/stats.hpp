#pragma once

#include "glassbox/core.hpp"
#include "glassbox/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace glassbox {

enum class CorrelationMethod { pearson, spearman, kendall, chatterjee };

std::string to_string(CorrelationMethod method);
CorrelationMethod correlation_method_from_string(const std::string& name);

/// 1-based ranks; tied values share the average of their positions.
template <typename Derived>
VectorXd average_ranks(const Eigen::DenseBase<Derived>& values) {
  const auto n = static_cast<std::size_t>(values.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) < values(static_cast<Eigen::Index>(b));
  });
  VectorXd ranks(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values(static_cast<Eigen::Index>(order[j])) == values(static_cast<Eigen::Index>(order[i]))) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[static_cast<Eigen::Index>(order[k])] = avg;
    i = j;
  }
  return ranks;
}

template <typename DX, typename DY>
double pearson(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation: length mismatch");
  if (x.size() < 2) throw ValidationError("correlation: need at least 2 observations");
  const VectorXd xc = x.derived().template cast<double>().array() - x.derived().template cast<double>().mean();
  const VectorXd yc = y.derived().template cast<double>().array() - y.derived().template cast<double>().mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("correlation: zero variance");
  return std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
}

template <typename DX, typename DY>
double spearman(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation: length mismatch");
  return pearson(average_ranks(x), average_ranks(y));
}

namespace detail {

// Merge sort on `values`, returning the number of strict inversions.
inline std::int64_t count_inversions(std::vector<double>& values, std::vector<double>& scratch, std::size_t lo,
                                     std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_inversions(values, scratch, lo, mid) + count_inversions(values, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (values[j] < values[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[k++] = values[j++];
    } else {
      scratch[k++] = values[i++];
    }
  }
  while (i < mid) scratch[k++] = values[i++];
  while (j < hi) scratch[k++] = values[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

inline std::int64_t tied_pairs(const std::vector<double>& sorted) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

}  // namespace detail

/// Kendall tau-b in O(n log n) (Knight's merge-sort algorithm).
template <typename DX, typename DY>
double kendall_tau_b(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation: length mismatch");
  if (x.size() < 2) throw ValidationError("correlation: need at least 2 observations");
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto xv = [&](std::size_t i) { return static_cast<double>(x(static_cast<Eigen::Index>(i))); };
  auto yv = [&](std::size_t i) { return static_cast<double>(y(static_cast<Eigen::Index>(i))); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xv(a) < xv(b) || (xv(a) == xv(b) && yv(a) < yv(b));
  });

  std::int64_t x_ties = 0, joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && xv(order[j]) == xv(order[i])) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    x_ties += t * (t - 1) / 2;
    for (std::size_t a = i; a < j;) {
      std::size_t b = a + 1;
      while (b < j && yv(order[b]) == yv(order[a])) ++b;
      const auto u = static_cast<std::int64_t>(b - a);
      joint_ties += u * (u - 1) / 2;
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = yv(order[i]);
  const std::int64_t swaps = detail::count_inversions(ys, scratch, 0, n);
  const std::int64_t y_ties = detail::tied_pairs(ys);

  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const double denom = std::sqrt(static_cast<double>(total - x_ties) * static_cast<double>(total - y_ties));
  if (denom == 0.0) throw ValidationError("correlation: zero variance");
  const std::int64_t net = total - x_ties - y_ties + joint_ties - 2 * swaps;
  return std::clamp(static_cast<double>(net) / denom, -1.0, 1.0);
}

/// Chatterjee's xi: how well y is explained as a function of x (asymmetric).
/// Ties in x are broken by a seeded random permutation. Constant y gives 0.
template <typename DX, typename DY>
double chatterjee_xi(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y, std::uint64_t seed) {
  if (x.size() != y.size()) throw ValidationError("chatterjee_xi: length mismatch");
  if (x.size() < 2) throw ValidationError("chatterjee_xi: need at least 2 observations");
  const auto n = static_cast<std::size_t>(x.size());
  auto xv = [&](std::size_t i) { return static_cast<double>(x(static_cast<Eigen::Index>(i))); };
  auto yv = [&](std::size_t i) { return static_cast<double>(y(static_cast<Eigen::Index>(i))); };

  std::vector<std::size_t> tie_key(n);
  std::iota(tie_key.begin(), tie_key.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(tie_key);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xv(a) < xv(b) || (xv(a) == xv(b) && tie_key[a] < tie_key[b]);
  });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = yv(i);
  std::sort(ys.begin(), ys.end());
  const bool y_ties = std::adjacent_find(ys.begin(), ys.end()) != ys.end();

  // r_i = #{j : y_j <= y_i}
  std::vector<std::int64_t> r(n);
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = std::upper_bound(ys.begin(), ys.end(), yv(order[k])) - ys.begin();
  }
  std::int64_t gaps = 0;
  for (std::size_t k = 0; k + 1 < n; ++k) gaps += std::abs(r[k + 1] - r[k]);

  const auto nd = static_cast<double>(n);
  if (!y_ties) return 1.0 - 3.0 * static_cast<double>(gaps) / (nd * nd - 1.0);

  // l_i = #{j : y_j >= y_i}
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = static_cast<double>(ys.end() - std::lower_bound(ys.begin(), ys.end(), yv(i)));
    denom += l * (nd - l);
  }
  denom *= 2.0;
  if (denom == 0.0) return 0.0;
  return 1.0 - nd * static_cast<double>(gaps) / denom;
}

template <typename DX, typename DY>
double corr_coefficient(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y, CorrelationMethod method,
                        std::uint64_t seed = 0) {
  switch (method) {
    case CorrelationMethod::pearson: return pearson(x, y);
    case CorrelationMethod::spearman: return spearman(x, y);
    case CorrelationMethod::kendall: return kendall_tau_b(x, y);
    case CorrelationMethod::chatterjee: return chatterjee_xi(x, y, seed);
  }
  return 0.0;
}

/// Cell (i, j) holds the coefficient of column i against column j. For
/// chatterjee that is xi(column i -> column j): column j explained by column i.
struct CorrelationMatrix {
  CorrelationMethod method = CorrelationMethod::pearson;
  std::vector<std::string> names;
  MatrixXd values;
};

CorrelationMatrix correlation_matrix(const MatrixXd& X, const std::vector<std::string>& names,
                                     CorrelationMethod method, std::uint64_t seed = 0, std::size_t workers = 1);
CorrelationMatrix correlation_matrix(const Dataset& ds, CorrelationMethod method, std::uint64_t seed = 0,
                                     std::size_t workers = 1);

struct VifRow {
  std::string feature;
  double vif = 1.0;
  double standard_error = 0.0;
  double ci_lower = 1.0;
  double ci_upper = 1.0;
  bool infinite = false;  // exact collinearity (or a constant column)
};

struct VifTable {
  std::vector<VifRow> rows;
  std::size_t bootstrap_b = 0;
  std::uint64_t seed = 0;
};

/// Point VIFs: for each column, 1 / (1 - R^2) of its least-squares regression on
/// every other column plus an intercept. Entries are +inf for collinear columns.
VectorXd vif_values(const MatrixXd& X);

/// VIFs with bootstrap standard errors (row resampling, B replicates) and a
/// 95% interval vif +/- 1.96 SE.
VifTable vif_table(const MatrixXd& X, const std::vector<std::string>& names, std::size_t bootstrap_b,
                   std::uint64_t seed, std::size_t workers = 1);
VifTable vif_table(const Dataset& ds, std::size_t bootstrap_b, std::uint64_t seed, std::size_t workers = 1);

}  // namespace glassbox
