#pragma once

// Independent reference implementations used as test oracles. They follow the
// textbook definitions directly (quadratic loops, normal equations) and share
// no code with the library.

#include "glassbox/core.hpp"
#include "glassbox/dataset.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// P(s+ > s-) + 0.5 P(tie) over all positive/negative pairs.
inline double pairwise_auc(const std::vector<int>& y, const std::vector<double>& s) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Kendall tau-b by enumerating every pair.
inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double concordant = 0.0, discordant = 0.0, tx = 0.0, ty = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) tx += 1.0;
      else if (dy == 0.0) ty += 1.0;
      else if ((dx > 0) == (dy > 0)) concordant += 1.0;
      else discordant += 1.0;
    }
  }
  return (concordant - discordant) / std::sqrt((concordant + discordant + tx) * (concordant + discordant + ty));
}

// VIF_i = 1 / (1 - R_i^2) with R^2 from the normal equations (A^T A) b = A^T x.
inline VectorXd vif_normal_equations(const MatrixXd& X) {
  const auto n = X.rows(), p = X.cols();
  VectorXd out(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    MatrixXd A(n, p);
    A.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j != i) A.col(c++) = X.col(j);
    }
    const VectorXd target = X.col(i);
    const VectorXd beta = (A.transpose() * A).ldlt().solve(A.transpose() * target);
    const double rss = (target - A * beta).squaredNorm();
    const double tss = (target.array() - target.mean()).square().sum();
    out[i] = 1.0 / (rss / tss);
  }
  return out;
}

// Linear-interpolation percentile at position q/100 * (n - 1).
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace oracle

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("glassbox_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Full precision so the file reloads to the same doubles.
inline void write_dataset(const std::filesystem::path& path, const glassbox::Dataset& ds) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& name : ds.feature_names()) out << name << ",";
  out << "Class\n";
  for (Eigen::Index i = 0; i < ds.X().rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.X().cols(); ++j) out << ds.X()(i, j) << ",";
    out << ds.y()[i] << "\n";
  }
  write_file(path, out.str());
}

}  // namespace testutil
