#include "glassbox/stats.hpp"

#include <limits>

namespace glassbox {

namespace {

constexpr double kCollinearRatio = 1e-12;  // SSres / SStot at or below this is exact collinearity

}  // namespace

std::string to_string(CorrelationMethod method) {
  switch (method) {
    case CorrelationMethod::pearson: return "pearson";
    case CorrelationMethod::spearman: return "spearman";
    case CorrelationMethod::kendall: return "kendall";
    case CorrelationMethod::chatterjee: return "chatterjee";
  }
  return "unknown";
}

CorrelationMethod correlation_method_from_string(const std::string& name) {
  if (name == "pearson") return CorrelationMethod::pearson;
  if (name == "spearman") return CorrelationMethod::spearman;
  if (name == "kendall") return CorrelationMethod::kendall;
  if (name == "chatterjee") return CorrelationMethod::chatterjee;
  throw ValidationError("unknown correlation method '" + name + "'");
}

CorrelationMatrix correlation_matrix(const MatrixXd& X, const std::vector<std::string>& names,
                                     CorrelationMethod method, std::uint64_t seed, std::size_t workers) {
  const Eigen::Index p = X.cols();
  if (p < 2) throw ValidationError("correlation_matrix: need at least 2 columns");
  if (static_cast<std::size_t>(p) != names.size()) throw ValidationError("correlation_matrix: name count mismatch");
  CorrelationMatrix out{method, names, MatrixXd::Identity(p, p)};

  if (method == CorrelationMethod::chatterjee) {
    const auto cells = static_cast<std::size_t>(p * p);
    parallel_for(cells, workers, [&](std::size_t cell) {
      const auto i = static_cast<Eigen::Index>(cell / static_cast<std::size_t>(p));
      const auto j = static_cast<Eigen::Index>(cell % static_cast<std::size_t>(p));
      if (i == j) {
        out.values(i, i) = X.col(i).minCoeff() == X.col(i).maxCoeff() ? 0.0 : 1.0;
      } else {
        out.values(i, j) = chatterjee_xi(X.col(i), X.col(j), mix_seed(seed, cell));
      }
    });
    return out;
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
  }
  std::vector<VectorXd> ranks;
  if (method == CorrelationMethod::spearman) {
    for (Eigen::Index j = 0; j < p; ++j) ranks.push_back(average_ranks(X.col(j)));
  }
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    double v = 0.0;
    if (method == CorrelationMethod::spearman) {
      v = pearson(ranks[static_cast<std::size_t>(i)], ranks[static_cast<std::size_t>(j)]);
    } else {
      v = corr_coefficient(X.col(i), X.col(j), method);
    }
    out.values(i, j) = v;
    out.values(j, i) = v;
  });
  return out;
}

CorrelationMatrix correlation_matrix(const Dataset& ds, CorrelationMethod method, std::uint64_t seed,
                                     std::size_t workers) {
  return correlation_matrix(ds.X(), ds.feature_names(), method, seed, workers);
}

VectorXd vif_values(const MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (p < 2) throw ValidationError("vif: need at least 2 columns");
  if (n <= p) throw ValidationError("vif: need more rows than columns");

  // Centering absorbs the intercept. Xc = QR, so every column regression can be
  // solved on the p x p factor R: ||Xc_i - Xc_{-i} b|| = ||R_i - R_{-i} b||.
  const MatrixXd centered = X.rowwise() - X.colwise().mean();
  const Eigen::HouseholderQR<MatrixXd> qr(centered);
  const MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

  VectorXd out(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const VectorXd target = r.col(i);
    const double total = target.squaredNorm();
    if (total == 0.0) {
      out[i] = std::numeric_limits<double>::infinity();
      continue;
    }
    MatrixXd others(p, p - 1);
    others.leftCols(i) = r.leftCols(i);
    others.rightCols(p - 1 - i) = r.rightCols(p - 1 - i);
    const VectorXd beta = others.colPivHouseholderQr().solve(target);
    const double ratio = (target - others * beta).squaredNorm() / total;
    out[i] = ratio <= kCollinearRatio ? std::numeric_limits<double>::infinity() : 1.0 / ratio;
  }
  return out;
}

VifTable vif_table(const MatrixXd& X, const std::vector<std::string>& names, std::size_t bootstrap_b,
                   std::uint64_t seed, std::size_t workers) {
  if (static_cast<std::size_t>(X.cols()) != names.size()) throw ValidationError("vif_table: name count mismatch");
  const VectorXd point = vif_values(X);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();

  std::vector<VectorXd> replicates(bootstrap_b);
  parallel_for(bootstrap_b, workers, [&](std::size_t b) {
    Rng rng(mix_seed(seed, b));
    MatrixXd sample(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
      sample.row(i) = X.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n))));
    }
    try {
      replicates[b] = vif_values(sample);
    } catch (const ValidationError&) {
      replicates[b] = VectorXd::Constant(p, std::numeric_limits<double>::infinity());
    }
  });

  VifTable table{{}, bootstrap_b, seed};
  for (Eigen::Index i = 0; i < p; ++i) {
    VifRow row;
    row.feature = names[static_cast<std::size_t>(i)];
    row.vif = point[i];
    row.infinite = !std::isfinite(point[i]);
    if (row.infinite) {
      row.standard_error = std::numeric_limits<double>::infinity();
      row.ci_lower = row.ci_upper = std::numeric_limits<double>::infinity();
      table.rows.push_back(row);
      continue;
    }
    std::vector<double> finite;
    for (const auto& rep : replicates) {
      if (std::isfinite(rep[i])) finite.push_back(rep[i]);
    }
    if (finite.size() >= 2) {
      double mean = 0.0;
      for (double v : finite) mean += v;
      mean /= static_cast<double>(finite.size());
      double ss = 0.0;
      for (double v : finite) ss += (v - mean) * (v - mean);
      row.standard_error = std::sqrt(ss / static_cast<double>(finite.size() - 1));
    }
    row.ci_lower = row.vif - 1.96 * row.standard_error;
    row.ci_upper = row.vif + 1.96 * row.standard_error;
    table.rows.push_back(row);
  }
  return table;
}

VifTable vif_table(const Dataset& ds, std::size_t bootstrap_b, std::uint64_t seed, std::size_t workers) {
  return vif_table(ds.X(), ds.feature_names(), bootstrap_b, seed, workers);
}

}  // namespace glassbox
