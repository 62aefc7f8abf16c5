#pragma once

#include "glassbox/core.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace glassbox {

/// Feature matrix, 0/1 labels and unique feature names. Construction validates
/// every invariant; instances are immutable afterwards and safe to share.
class Dataset {
 public:
  Dataset(std::vector<std::string> feature_names, MatrixXd features, Labels labels);

  std::size_t rows() const { return static_cast<std::size_t>(features_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(features_.cols()); }

  const std::vector<std::string>& feature_names() const { return names_; }
  const MatrixXd& X() const { return features_; }
  const Labels& y() const { return labels_; }

  std::size_t positives() const { return positives_; }
  std::size_t negatives() const { return rows() - positives_; }
  bool has_both_classes() const { return positives_ > 0 && positives_ < rows(); }

  /// Throws TrainingError naming `context` when only one class is present.
  void require_both_classes(const std::string& context) const;

  /// Index of a feature by name, or throws ValidationError.
  std::size_t feature_index(const std::string& name) const;

  /// Rows in the given order (duplicates allowed, as for bootstrap samples).
  Dataset subset_rows(std::span<const std::size_t> row_ids) const;

  /// Same data with features replaced (used after scaling). Shape must match.
  Dataset with_features(MatrixXd features) const;

 private:
  std::vector<std::string> names_;
  MatrixXd features_;
  Labels labels_;
  std::size_t positives_ = 0;
};

struct CsvOptions {
  std::string label_column = "Class";
};

/// Reads a comma-separated file with a header row. Every non-label cell must
/// parse as a finite number and every label as exactly 0 or 1; failures name
/// the 1-based file line and the column.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Columns in the requested order. Indices must be unique and in range.
Dataset select_features(const Dataset& ds, std::span<const std::size_t> feature_ids);

struct StratifiedFolds {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;
  std::uint64_t seed = 0;

  std::vector<std::size_t> train_rows(std::size_t fold) const;
  std::vector<std::size_t> test_rows(std::size_t fold) const;
};

/// Shuffles each class with the seed, then deals rows round-robin into k
/// folds (negatives continue where positives stopped).
StratifiedFolds stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed);

}  // namespace glassbox
