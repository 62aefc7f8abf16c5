#include "glassbox/dataset.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string_view>
#include <unordered_set>

namespace glassbox {

namespace {

std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return handler;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Header names and label cells may be wrapped in double quotes; numeric
// feature cells are taken verbatim.
std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
  warning_handler() = std::move(handler);
}

void warn(const std::string& message) {
  if (warning_handler()) warning_handler()(message);
}

Dataset::Dataset(std::vector<std::string> feature_names, MatrixXd features, Labels labels)
    : names_(std::move(feature_names)), features_(std::move(features)), labels_(std::move(labels)) {
  if (static_cast<std::size_t>(features_.cols()) != names_.size()) {
    throw ValidationError("dataset: " + std::to_string(names_.size()) + " feature names for " +
                          std::to_string(features_.cols()) + " columns");
  }
  if (features_.rows() != labels_.size()) {
    throw ValidationError("dataset: " + std::to_string(labels_.size()) + " labels for " +
                          std::to_string(features_.rows()) + " rows");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) throw ValidationError("dataset: duplicate feature name '" + name + "'");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw ValidationError("dataset: label at row " + std::to_string(i) + " is not 0 or 1");
    }
    positives_ += static_cast<std::size_t>(labels_[i]);
  }
  if (!features_.allFinite()) {
    for (Eigen::Index j = 0; j < features_.cols(); ++j) {
      for (Eigen::Index i = 0; i < features_.rows(); ++i) {
        if (!std::isfinite(features_(i, j))) {
          throw ValidationError("dataset: non-finite value at row " + std::to_string(i) + ", column '" +
                                names_[static_cast<std::size_t>(j)] + "'");
        }
      }
    }
  }
}

void Dataset::require_both_classes(const std::string& context) const {
  if (!has_both_classes()) {
    throw TrainingError(context + ": single-class labels (" + std::to_string(positives_) + " positives of " +
                        std::to_string(rows()) + " rows)");
  }
}

std::size_t Dataset::feature_index(const std::string& name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return j;
  }
  throw ValidationError("unknown feature '" + name + "'");
}

Dataset Dataset::subset_rows(std::span<const std::size_t> row_ids) const {
  MatrixXd x(static_cast<Eigen::Index>(row_ids.size()), features_.cols());
  Labels y(static_cast<Eigen::Index>(row_ids.size()));
  for (std::size_t r = 0; r < row_ids.size(); ++r) {
    if (row_ids[r] >= rows()) throw ValidationError("row index out of range");
    const auto src = static_cast<Eigen::Index>(row_ids[r]);
    x.row(static_cast<Eigen::Index>(r)) = features_.row(src);
    y[static_cast<Eigen::Index>(r)] = labels_[src];
  }
  return Dataset(names_, std::move(x), std::move(y));
}

Dataset Dataset::with_features(MatrixXd features) const {
  if (features.rows() != features_.rows() || features.cols() != features_.cols()) {
    throw ValidationError("with_features: shape mismatch");
  }
  return Dataset(names_, std::move(features), labels_);
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file, header row expected");
  std::vector<std::string> header;
  for (auto cell : split_commas(line)) header.emplace_back(unquote(cell));

  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) label_col = c;
  }
  if (label_col == header.size()) {
    throw ValidationError(path.string() + ": label column '" + options.label_column + "' not in header");
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_col) names.push_back(header[c]);
  }
  const std::size_t p = names.size();

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ValidationError(path.string() + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (c == label_col) {
        const auto cell = unquote(cells[c]);
        if (!parse_double(cell, v) || (v != 0.0 && v != 1.0)) {
          throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ", column '" + header[c] +
                                "': label '" + std::string(cell) + "' is not 0 or 1");
        }
        labels.push_back(static_cast<int>(v));
        continue;
      }
      if (!parse_double(cells[c], v)) {
        throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ", column '" + header[c] +
                              "': non-numeric value '" + std::string(cells[c]) + "'");
      }
      if (!std::isfinite(v)) {
        throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ", column '" + header[c] +
                              "': non-finite value '" + std::string(cells[c]) + "'");
      }
      values.push_back(v);
    }
  }

  const auto n = static_cast<Eigen::Index>(labels.size());
  MatrixXd x(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(i) * p + j];
    }
  }
  Labels y = Eigen::Map<const Labels>(labels.data(), n);
  return Dataset(std::move(names), std::move(x), std::move(y));
}

Dataset select_features(const Dataset& ds, std::span<const std::size_t> feature_ids) {
  std::vector<bool> used(ds.cols(), false);
  std::vector<std::string> names;
  MatrixXd x(ds.X().rows(), static_cast<Eigen::Index>(feature_ids.size()));
  for (std::size_t k = 0; k < feature_ids.size(); ++k) {
    const std::size_t id = feature_ids[k];
    if (id >= ds.cols()) {
      throw ValidationError("select_features: index " + std::to_string(id) + " out of range [0," +
                            std::to_string(ds.cols()) + ")");
    }
    if (used[id]) throw ValidationError("select_features: duplicate index " + std::to_string(id));
    used[id] = true;
    names.push_back(ds.feature_names()[id]);
    x.col(static_cast<Eigen::Index>(k)) = ds.X().col(static_cast<Eigen::Index>(id));
  }
  return Dataset(std::move(names), std::move(x), ds.y());
}

std::vector<std::size_t> StratifiedFolds::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> StratifiedFolds::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(i);
  }
  return rows;
}

StratifiedFolds stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_kfold: k must be at least 2");
  if (k > ds.positives()) {
    throw ValidationError("stratified_kfold: k exceeds minority class count (positive class has " +
                          std::to_string(ds.positives()) + " rows, k = " + std::to_string(k) + ")");
  }
  if (k > ds.negatives()) {
    throw ValidationError("stratified_kfold: k exceeds minority class count (negative class has " +
                          std::to_string(ds.negatives()) + " rows, k = " + std::to_string(k) + ")");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    (ds.y()[static_cast<Eigen::Index>(i)] == 1 ? pos : neg).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  StratifiedFolds folds{k, std::vector<std::size_t>(ds.rows(), 0), seed};
  std::size_t slot = 0;
  for (std::size_t i : pos) folds.assignment[i] = slot++ % k;
  for (std::size_t i : neg) folds.assignment[i] = slot++ % k;
  return folds;
}

}  // namespace glassbox
