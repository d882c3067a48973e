#include "imba/ssl_pipeline.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace imba {

Dataset pseudo_label(const LinearModel& model, const Dataset& pool) {
  if (model.dim() != pool.dim()) throw Error(ErrorKind::DimensionMismatch, "pool dimension differs");
  if (model.classes() != pool.class_count()) {
    throw Error(ErrorKind::DimensionMismatch, "pool class count differs from the model");
  }
  return pool.with_labels(model.predict(pool.features()));
}

PseudoLabelQuality pseudo_label_quality(const Dataset& pseudo_pool) {
  const auto truth = pseudo_pool.true_labels();
  const auto pseudo = pseudo_pool.labels();
  const int classes = pseudo_pool.class_count();
  Eigen::VectorXd correct = Eigen::VectorXd::Zero(classes);
  Eigen::VectorXd seen = Eigen::VectorXd::Zero(classes);
  Eigen::VectorXd assigned = Eigen::VectorXd::Zero(classes);
  Eigen::VectorXd ood_assigned = Eigen::VectorXd::Zero(classes);
  Index ood = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = pseudo[i];
    if (p >= 0) assigned(p) += 1.0;
    if (truth[i] == kOutOfDistribution) {
      ++ood;
      if (p >= 0) ood_assigned(p) += 1.0;
      continue;
    }
    seen(truth[i]) += 1.0;
    if (p == truth[i]) correct(truth[i]) += 1.0;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  PseudoLabelQuality quality;
  quality.per_class_accuracy = VectorXr::Constant(classes, nan);
  quality.contamination = VectorXr::Constant(classes, nan);
  for (int c = 0; c < classes; ++c) {
    if (seen(c) > 0) quality.per_class_accuracy(c) = correct(c) / seen(c);
    if (assigned(c) > 0) quality.contamination(c) = ood_assigned(c) / assigned(c);
  }
  quality.ood_fraction =
      truth.empty() ? 0.0 : static_cast<double>(ood) / static_cast<double>(truth.size());
  return quality;
}

SelfTrainResult self_train(const Dataset& labeled, const Dataset& pool,
                           const TrainConfig& intermediate_cfg, const TrainConfig& final_cfg,
                           const Dataset* test) {
  for (int label : pool.labels()) {
    if (label != kUnlabeled) throw Error(ErrorKind::Unsupported, "pool rows must be unlabeled");
  }
  auto tagged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
  };

  SelfTrainResult result;
  result.intermediate =
      tagged("stage 1", [&] { return train_softmax(labeled, nullptr, intermediate_cfg); });
  const Dataset pseudo = pseudo_label(result.intermediate, pool);
  result.final_model =
      tagged("stage 2", [&] { return train_softmax(labeled, &pseudo, final_cfg); });

  if (pseudo.has_true_labels()) result.diagnostics.quality = pseudo_label_quality(pseudo);
  if (test) {
    result.diagnostics.intermediate_eval = evaluate(result.intermediate, *test);
    result.diagnostics.final_eval = evaluate(result.final_model, *test);
  }
  return result;
}

void write_diagnostics_csv(std::ostream& out, const SelfTrainDiagnostics& diagnostics) {
  out << "stage,class,pseudo_accuracy,contamination\n";
  const auto& q = diagnostics.quality;
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_real(v); };
  for (Index c = 0; c < q.per_class_accuracy.size(); ++c) {
    out << "pseudo_label," << c << ',' << cell(q.per_class_accuracy(c)) << ','
        << cell(q.contamination(c)) << '\n';
  }
}

}  // namespace imba
