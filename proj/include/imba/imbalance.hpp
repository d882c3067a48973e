#pragma once

#include "imba/core.hpp"
#include "imba/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace imba {

enum class ImbalanceKind { LongTailed, Step, Uniform };

struct ImbalanceProfile {
  ImbalanceKind kind = ImbalanceKind::LongTailed;
  int n_classes = 10;
  Index n_head = 500;
  double rho = 1.0;

  /// Per-class counts, head class first, non-increasing.
  std::vector<Index> counts() const;
};

/// counts[i] = round(n_head * rho^(-i / (C - 1))).
std::vector<Index> long_tailed_counts(int n_classes, Index n_head, double rho);

/// First ceil(C/2) classes keep n_head, the rest get round(n_head / rho).
std::vector<Index> step_counts(int n_classes, Index n_head, double rho);

/// max / min of the counts.
double imbalance_ratio(std::span<const Index> counts);

/// Splits `total` rows over classes in proportion to rho^(-i / (C - 1)), using
/// largest-remainder rounding so the counts sum to `total` exactly.
std::vector<Index> long_tailed_allocation(int n_classes, Index total, double rho);

/// Isotropic Gaussian blobs, one per class, sharing one standard deviation.
/// `scales` multiplies every coordinate of a draw (mean and noise alike), which
/// lets a config produce badly conditioned feature spaces.
struct BlobModel {
  MatrixXr means;  // C x d
  double stddev = 1.0;
  VectorXr scales;  // d, all ones when not heterogeneous

  int classes() const noexcept { return static_cast<int>(means.rows()); }
  Index dim() const noexcept { return means.cols(); }
  void validate() const;

  /// Class means placed at `separation` times a random unit direction.
  /// `scale_spread` > 0 draws per-dimension scales log-uniformly from
  /// [exp(-spread), exp(spread)].
  static BlobModel random(int n_classes, Index dim, double separation, double stddev,
                          double scale_spread, std::uint64_t seed);
};

/// Single Gaussian blob standing in for data outside the task's classes.
struct IrrelevantModel {
  VectorXr mean;
  double stddev = 1.0;

  /// Mean placed along a random direction within the span of the class means,
  /// starting from their centroid and pushed out until it is at least
  /// `displacement` blob standard deviations from every class mean.
  static IrrelevantModel displaced_from(const BlobModel& classes, double displacement,
                                        std::uint64_t seed);
};

struct UnlabeledPoolConfig {
  double multiplier = 5.0;
  double rho_u = 1.0;
  double relevance = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// counts[i] rows per class i drawn from the class blobs, labels visible.
Dataset synthesize_labeled(const ImbalanceProfile& profile, const BlobModel& model,
                           std::uint64_t seed);

/// Rows per class given explicitly; used for balanced test sets.
Dataset synthesize_from_counts(std::span<const Index> counts, const BlobModel& model,
                               std::uint64_t seed);

/// Unlabeled pool of round(multiplier * |labeled|) rows. The relevant portion
/// follows a long-tailed profile with ratio rho_u; the rest comes from the
/// irrelevant blob and is marked out-of-distribution in the hidden labels.
Dataset synthesize_unlabeled(const Dataset& labeled, const UnlabeledPoolConfig& config,
                             const BlobModel& model, const IrrelevantModel& irrelevant);

/// Per-class subsampling to round(fraction * count) rows.
Dataset subsample_labeled(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace imba
