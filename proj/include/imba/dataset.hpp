#pragma once

#include "imba/core.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imba {

/// Visible label of a row in an unlabeled pool.
inline constexpr int kUnlabeled = -1;
/// Hidden label of a pool row drawn from outside the task's classes.
inline constexpr int kOutOfDistribution = -2;

/// Binary datasets store the +1 / -1 classes as indices 1 / 0.
inline constexpr int kNegative = 0;
inline constexpr int kPositive = 1;

inline constexpr int sign_of_class(int label) noexcept { return label == kPositive ? 1 : -1; }

/// Feature matrix with one visible label per row and, for unlabeled pools,
/// the retained ground truth. Immutable after construction.
///
/// Training code reads `labels()` only. `true_labels()` exists for
/// diagnostics (pseudo-label accuracy, contamination) and is never consulted
/// by the learners.
class Dataset {
 public:
  Dataset() = default;
  Dataset(MatrixXr features, std::vector<int> labels, int class_count,
          std::optional<std::vector<int>> true_labels = std::nullopt);

  const MatrixXr& features() const noexcept { return features_; }
  std::span<const int> labels() const noexcept { return labels_; }
  int class_count() const noexcept { return class_count_; }
  Index size() const noexcept { return features_.rows(); }
  Index dim() const noexcept { return features_.cols(); }
  bool empty() const noexcept { return size() == 0; }

  bool has_true_labels() const noexcept { return true_labels_.has_value(); }
  /// Throws Unsupported when the dataset did not retain ground truth.
  std::span<const int> true_labels() const;

  /// Row counts per visible class; unlabeled rows are not counted.
  std::vector<Index> class_counts() const;

  /// Copy with replaced visible labels; hidden labels untouched.
  Dataset with_labels(std::vector<int> labels) const;
  /// Moves visible labels into the hidden slot and marks every row unlabeled.
  Dataset hide_labels() const;
  Dataset select_rows(std::span<const Index> rows) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  MatrixXr features_;
  std::vector<int> labels_;
  std::optional<std::vector<int>> true_labels_;
  int class_count_ = 0;
};

/// Row-wise concatenation. Hidden labels are kept only when both sides carry them.
Dataset concat(const Dataset& a, const Dataset& b);

/// CSV with header `label,true_label,f0,...,f{d-1}`. Unlabeled rows carry `U`
/// in the label column, out-of-distribution hidden labels are written `OOD`,
/// and `true_label` is left empty when ground truth is not retained. Values
/// use the shortest round-trip decimal form.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

/// `class_count` of 0 infers it from the largest label seen.
Dataset read_csv(std::istream& in, int class_count = 0);
Dataset read_csv(const std::string& path, int class_count = 0);

/// Shortest round-trip formatting shared by every CSV writer in the project.
std::string format_real(double value);
double parse_real(std::string_view text);

}  // namespace imba
