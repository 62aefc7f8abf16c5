#include "glassbox/synthetic.hpp"

#include <cmath>
#include <string>

namespace glassbox {

namespace {

std::vector<std::string> numbered_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace

Dataset make_blobs(const BlobOptions& o) {
  if (o.informative > o.features) throw ValidationError("make_blobs: informative > features");
  const std::size_t n = o.negatives + o.positives;
  MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(o.features));
  Labels y(static_cast<Eigen::Index>(n));
  Rng rng(o.seed);
  // positives are spread evenly through the rows
  const std::size_t stride = o.positives > 0 ? n / o.positives : n + 1;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const bool positive = i % stride == 0 && i / stride < o.positives;
    y[ii] = positive ? 1 : 0;
    for (std::size_t j = 0; j < o.features; ++j) {
      X(ii, static_cast<Eigen::Index>(j)) = rng.normal() + (positive && j < o.informative ? o.shift : 0.0);
    }
  }
  return Dataset(numbered_names(o.features), std::move(X), std::move(y));
}

Dataset make_xor(std::size_t n, std::uint64_t seed, std::size_t noise_features) {
  const std::size_t p = 2 + noise_features;
  MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Labels y(static_cast<Eigen::Index>(n));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    y[i] = (X(i, 0) > 0.0) != (X(i, 1) > 0.0) ? 1 : 0;
  }
  return Dataset(numbered_names(p), std::move(X), std::move(y));
}

Dataset make_monotone(std::size_t n, std::size_t features, std::size_t informative, double strength,
                      std::uint64_t seed) {
  if (informative > features) throw ValidationError("make_monotone: informative > features");
  MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
  Labels y(static_cast<Eigen::Index>(n));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double logit = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      X(i, j) = rng.normal();
      if (static_cast<std::size_t>(j) < informative) logit += strength * X(i, j);
    }
    y[i] = rng.uniform() < sigmoid(logit) ? 1 : 0;
  }
  return Dataset(numbered_names(features), std::move(X), std::move(y));
}

Dataset make_additive(std::size_t n, std::uint64_t seed) {
  MatrixXd X(static_cast<Eigen::Index>(n), 2);
  Labels y(static_cast<Eigen::Index>(n));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    X(i, 0) = rng.uniform(-1.0, 1.0);
    X(i, 1) = rng.uniform(-1.0, 1.0);
    const double logit = 2.0 * std::sin(3.0 * X(i, 0)) + 3.0 * (X(i, 1) * X(i, 1)) - 1.0;
    y[i] = rng.uniform() < sigmoid(logit) ? 1 : 0;
  }
  return Dataset(numbered_names(2), std::move(X), std::move(y));
}

}  // namespace glassbox
