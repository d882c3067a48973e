#pragma once

#include "imba/dataset.hpp"
#include "imba/learner.hpp"
#include "imba/theory.hpp"

#include <json.hpp>

namespace imba {

enum class TransformKind { NormFeature, Standardize };

/// Label-agnostic feature transform fitted before any supervised training.
struct FeatureTransform {
  TransformKind kind = TransformKind::Standardize;
  FeatureMapSpec map;  // NormFeature
  VectorXr mean;       // Standardize
  VectorXr scale;      // Standardize
  Index fitted_on = 0;

  /// NormFeature yields one column z = k1 |x|^2 + k2; Standardize yields
  /// (x - mean) / scale per dimension.
  MatrixXr apply(const MatrixXr& x) const;
  Dataset apply(const Dataset& data) const;

  nlohmann::json to_json() const;
  static FeatureTransform from_json(const nlohmann::json& j);

  bool operator==(const FeatureTransform& other) const;
};

/// Sees inputs only. NormFeature passes the configured (k1, k2) through
/// untouched; Standardize fits per-dimension mean and population scale.
FeatureTransform fit_transform(const MatrixXr& pooled_inputs, TransformKind kind,
                               const FeatureMapSpec& map = {});

/// f_ss(x) = sign(-z + b).
struct ThresholdClassifier {
  double b = 0.0;

  int predict(double z) const noexcept { return -z + b >= 0.0 ? kPositive : kNegative; }
  std::vector<int> predict(const VectorXr& z) const;
};

ThresholdClassifier ssp_threshold_fit(const Dataset& labeled_hd, const FeatureMapSpec& map);

struct SspResult {
  FeatureTransform transform;
  LinearModel model;
  EvalReport ssp_eval;       // transform, then softmax on transformed features
  EvalReport baseline_eval;  // softmax on raw features, same config and seed
};

/// Stage 1 fits the transform on labeled (+ pool) inputs without labels;
/// stage 2 trains softmax on transformed labeled rows. The test set passes
/// through the frozen stage-1 transform.
SspResult pretrain_then_train(const Dataset& labeled, const Dataset* pool, TransformKind kind,
                              const TrainConfig& config, const Dataset& test,
                              const FeatureMapSpec& map = {});

}  // namespace imba
