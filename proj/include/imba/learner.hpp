#pragma once

#include "imba/core.hpp"
#include "imba/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imba {

/// Multi-class linear scorer: score_c(x) = w_c . x + b_c.
template <typename Scalar>
struct BasicLinearModel {
  Matrix<Scalar> weights;  // C x d
  Vector<Scalar> biases;   // C

  static BasicLinearModel zeros(int classes, Index dim) {
    return {Matrix<Scalar>::Zero(classes, dim), Vector<Scalar>::Zero(classes)};
  }

  int classes() const noexcept { return static_cast<int>(weights.rows()); }
  Index dim() const noexcept { return weights.cols(); }

  /// N x C score matrix.
  template <typename Derived>
  Matrix<Scalar> scores(const Eigen::MatrixBase<Derived>& x) const {
    Matrix<Scalar> s = x * weights.transpose();
    s.rowwise() += biases.transpose();
    return s;
  }

  /// Arg-max class per row; ties resolve to the lowest class index.
  template <typename Derived>
  std::vector<int> predict(const Eigen::MatrixBase<Derived>& x) const {
    const Matrix<Scalar> s = scores(x);
    std::vector<int> out(static_cast<std::size_t>(s.rows()));
    for (Index i = 0; i < s.rows(); ++i) {
      Index best = 0;
      for (Index c = 1; c < s.cols(); ++c) {
        if (s(i, c) > s(i, best)) best = c;
      }
      out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
  }

  bool operator==(const BasicLinearModel&) const = default;
};

using LinearModel = BasicLinearModel<double>;

/// Weighted softmax cross-entropy, averaged over rows:
///   L = (1/N) sum_i w_i (logsumexp(s_i) - s_i[y_i]).
/// Gradients are written into the optional outputs.
template <typename Scalar, typename Derived>
Scalar softmax_cross_entropy(const BasicLinearModel<Scalar>& model,
                             const Eigen::MatrixBase<Derived>& x, std::span<const int> labels,
                             std::span<const Scalar> row_weights,
                             Matrix<Scalar>* grad_weights = nullptr,
                             Vector<Scalar>* grad_biases = nullptr) {
  const Index n = x.rows();
  const Matrix<Scalar> s = model.scores(x);
  Matrix<Scalar> residual(n, s.cols());
  Scalar loss = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar top = s.row(i).maxCoeff();
    const auto shifted = (s.row(i).array() - top).exp();
    const Scalar norm = shifted.sum();
    const Scalar lse = top + std::log(norm);
    const auto k = static_cast<std::size_t>(i);
    const Scalar w = row_weights.empty() ? Scalar(1) : row_weights[k];
    loss += w * (lse - s(i, labels[k]));
    residual.row(i) = w * (shifted / norm).matrix();
    residual(i, labels[k]) -= w;
  }
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  if (grad_weights) *grad_weights = inv_n * residual.transpose() * x;
  if (grad_biases) *grad_biases = inv_n * residual.colwise().sum().transpose();
  return loss * inv_n;
}

enum class WeightScheme { Uniform, InverseFrequency };

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.1;
  Index batch_size = 32;
  WeightScheme weight_scheme = WeightScheme::Uniform;
  /// Epoch at which class weights switch on. Unset means 0.8 * epochs for
  /// inverse-frequency weighting.
  std::optional<int> reweight_start_epoch;
  /// Weight of the pseudo-labeled term.
  double omega = 1.0;
  std::uint64_t seed = 0;

  int effective_reweight_start() const;
  void validate() const;
};

/// UNIFORM: all ones. INVERSE_FREQUENCY: 1/count normalised to mean 1.
VectorXr class_weights(std::span<const Index> counts, WeightScheme scheme);

struct TrainTrace {
  std::vector<double> epoch_loss;  // mean weighted loss over each epoch's batches
};

/// Mini-batch SGD on cross-entropy from a zero initialisation. Rows of
/// `pseudo` enter the objective scaled by omega; with omega == 0 the pseudo
/// set is ignored entirely.
LinearModel train_softmax(const Dataset& labeled, const Dataset* pseudo, const TrainConfig& config,
                          TrainTrace* trace = nullptr);

struct ShotGroups {
  std::optional<double> many;
  std::optional<double> medium;
  std::optional<double> few;
};

struct EvalReport {
  double top1_error = 0.0;
  VectorXr per_class_error;  // NaN for classes absent from the test set
  CountMatrix confusion;     // rows: true class, cols: predicted class
  std::optional<ShotGroups> shot_groups;
};

EvalReport evaluate(const LinearModel& model, const Dataset& test);

/// Macro-averaged per-class error over many (> 100 training rows),
/// medium (20..100 inclusive) and few (< 20) shot classes.
ShotGroups shot_group_report(const EvalReport& report, std::span<const Index> train_counts);

void write_model_csv(std::ostream& out, const LinearModel& model);
LinearModel read_model_csv(std::istream& in);

/// Rows `metric,class,value`.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace imba
