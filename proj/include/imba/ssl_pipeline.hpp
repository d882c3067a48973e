#pragma once

#include "imba/dataset.hpp"
#include "imba/learner.hpp"

#include <iosfwd>
#include <optional>

namespace imba {

/// Replaces the visible labels of every pool row with the model's arg-max
/// prediction. Hidden labels are carried over unchanged.
Dataset pseudo_label(const LinearModel& model, const Dataset& pool);

struct PseudoLabelQuality {
  VectorXr per_class_accuracy;  // by hidden class; NaN when the class is absent
  VectorXr contamination;       // by pseudo-class: share of its rows that are out-of-distribution
  double ood_fraction = 0.0;    // share of all pool rows that are out-of-distribution
};

PseudoLabelQuality pseudo_label_quality(const Dataset& pseudo_pool);

struct SelfTrainDiagnostics {
  PseudoLabelQuality quality;
  std::optional<EvalReport> intermediate_eval;
  std::optional<EvalReport> final_eval;
};

struct SelfTrainResult {
  LinearModel intermediate;
  LinearModel final_model;
  SelfTrainDiagnostics diagnostics;
};

/// Stage 1 trains on `labeled` only and pseudo-labels the whole pool. Stage 2
/// trains a fresh model on labeled + pseudo-labeled rows, the latter weighted
/// by final_cfg.omega. Both stages are evaluated when `test` is given.
SelfTrainResult self_train(const Dataset& labeled, const Dataset& pool,
                           const TrainConfig& intermediate_cfg, const TrainConfig& final_cfg,
                           const Dataset* test = nullptr);

/// Rows `stage,class,pseudo_accuracy,contamination`.
void write_diagnostics_csv(std::ostream& out, const SelfTrainDiagnostics& diagnostics);

}  // namespace imba
