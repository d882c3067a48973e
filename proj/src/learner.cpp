#include "imba/learner.hpp"

#include "imba/random.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace imba {

int TrainConfig::effective_reweight_start() const {
  if (reweight_start_epoch) return *reweight_start_epoch;
  return weight_scheme == WeightScheme::InverseFrequency ? static_cast<int>(0.8 * epochs) : 0;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorKind::InvalidSpec, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidSpec, "learning_rate must be positive");
  if (batch_size < 1) throw Error(ErrorKind::InvalidSpec, "batch_size must be >= 1");
  if (!(omega >= 0.0)) throw Error(ErrorKind::InvalidSpec, "omega must be >= 0");
  if (reweight_start_epoch && (*reweight_start_epoch < 0 || *reweight_start_epoch > epochs)) {
    throw Error(ErrorKind::InvalidSpec, "reweight_start_epoch must lie in [0, epochs]");
  }
}

VectorXr class_weights(std::span<const Index> counts, WeightScheme scheme) {
  const Index n = static_cast<Index>(counts.size());
  for (Index c : counts) {
    if (c < 1) throw Error(ErrorKind::InvalidProfile, "class weights need counts >= 1");
  }
  if (scheme == WeightScheme::Uniform) return VectorXr::Ones(n);
  VectorXr w(n);
  for (Index c = 0; c < n; ++c) w(c) = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(c)]);
  return w * (static_cast<double>(n) / w.sum());
}

LinearModel train_softmax(const Dataset& labeled, const Dataset* pseudo, const TrainConfig& config,
                          TrainTrace* trace) {
  config.validate();
  if (labeled.empty()) throw Error(ErrorKind::InvalidSpec, "labeled set is empty");
  const bool use_pseudo = pseudo != nullptr && config.omega > 0.0 && !pseudo->empty();
  if (use_pseudo) {
    if (pseudo->dim() != labeled.dim() || pseudo->class_count() != labeled.class_count()) {
      throw Error(ErrorKind::DimensionMismatch, "pseudo-labeled set does not match labeled set");
    }
  }

  const Dataset train = use_pseudo ? concat(labeled, *pseudo) : labeled;
  const Index n = train.size();
  const Index n_labeled = labeled.size();
  const auto labels = train.labels();
  for (int label : labels) {
    if (label < 0) throw Error(ErrorKind::Unsupported, "training rows must carry visible labels");
  }

  std::vector<Index> counts = train.class_counts();
  for (auto& c : counts) c = std::max<Index>(c, 1);
  const VectorXr balanced = class_weights(counts, config.weight_scheme);
  const int reweight_start = config.effective_reweight_start();

  LinearModel model = LinearModel::zeros(train.class_count(), train.dim());
  Rng rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  const Index batch = std::min(config.batch_size, n);
  MatrixXr xb(batch, train.dim());
  std::vector<int> yb(static_cast<std::size_t>(batch));
  std::vector<double> wb(static_cast<std::size_t>(batch));
  MatrixXr grad_w;
  VectorXr grad_b;

  if (trace) trace->epoch_loss.clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const bool reweight = epoch >= reweight_start;
    rng.shuffle(std::span<Index>(order));
    double epoch_loss = 0.0;
    Index batches = 0;
    for (Index start = 0; start < n; start += batch) {
      const Index m = std::min(batch, n - start);
      if (xb.rows() != m) {
        xb.resize(m, train.dim());
        yb.resize(static_cast<std::size_t>(m));
        wb.resize(static_cast<std::size_t>(m));
      }
      for (Index k = 0; k < m; ++k) {
        const Index row = order[static_cast<std::size_t>(start + k)];
        const int y = labels[static_cast<std::size_t>(row)];
        xb.row(k) = train.features().row(row);
        yb[static_cast<std::size_t>(k)] = y;
        wb[static_cast<std::size_t>(k)] =
            (reweight ? balanced(y) : 1.0) * (row >= n_labeled ? config.omega : 1.0);
      }
      const double loss = softmax_cross_entropy(model, xb, std::span<const int>(yb),
                                                std::span<const double>(wb), &grad_w, &grad_b);
      if (!std::isfinite(loss) || !grad_w.allFinite()) {
        throw Error(ErrorKind::TrainingDiverged, "non-finite loss at epoch " + std::to_string(epoch));
      }
      model.weights -= config.learning_rate * grad_w;
      model.biases -= config.learning_rate * grad_b;
      epoch_loss += loss;
      ++batches;
    }
    if (!model.weights.allFinite() || !model.biases.allFinite()) {
      throw Error(ErrorKind::TrainingDiverged, "non-finite parameters at epoch " + std::to_string(epoch));
    }
    if (trace) trace->epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
  }
  return model;
}

EvalReport evaluate(const LinearModel& model, const Dataset& test) {
  if (model.classes() != test.class_count()) {
    throw Error(ErrorKind::DimensionMismatch, "model and test set disagree on class count");
  }
  if (model.dim() != test.dim()) throw Error(ErrorKind::DimensionMismatch, "feature dimension differs");
  if (test.empty()) throw Error(ErrorKind::InvalidSpec, "test set is empty");
  const int classes = model.classes();
  const auto predicted = model.predict(test.features());
  const auto truth = test.labels();

  EvalReport report;
  report.confusion = CountMatrix::Zero(classes, classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i] < 0) throw Error(ErrorKind::Unsupported, "test rows must carry visible labels");
    ++report.confusion(truth[i], predicted[i]);
  }
  const auto total = static_cast<double>(report.confusion.sum());
  report.top1_error = 1.0 - static_cast<double>(report.confusion.trace()) / total;
  report.per_class_error.resize(classes);
  for (int c = 0; c < classes; ++c) {
    const auto row_total = report.confusion.row(c).sum();
    report.per_class_error(c) =
        row_total == 0 ? std::numeric_limits<double>::quiet_NaN()
                       : 1.0 - static_cast<double>(report.confusion(c, c)) / static_cast<double>(row_total);
  }
  return report;
}

ShotGroups shot_group_report(const EvalReport& report, std::span<const Index> train_counts) {
  if (static_cast<Index>(train_counts.size()) != report.per_class_error.size()) {
    throw Error(ErrorKind::DimensionMismatch, "train counts must have one entry per class");
  }
  double sums[3] = {0.0, 0.0, 0.0};
  int members[3] = {0, 0, 0};
  for (std::size_t c = 0; c < train_counts.size(); ++c) {
    const double err = report.per_class_error(static_cast<Index>(c));
    if (std::isnan(err)) continue;
    const Index count = train_counts[c];
    const int group = count > 100 ? 0 : (count >= 20 ? 1 : 2);
    sums[group] += err;
    ++members[group];
  }
  auto average = [&](int g) -> std::optional<double> {
    if (members[g] == 0) return std::nullopt;
    return sums[g] / members[g];
  };
  return ShotGroups{average(0), average(1), average(2)};
}

void write_model_csv(std::ostream& out, const LinearModel& model) {
  out << "linear_model," << model.classes() << ',' << model.dim() << '\n';
  for (int c = 0; c < model.classes(); ++c) {
    out << format_real(model.biases(c));
    for (Index j = 0; j < model.dim(); ++j) out << ',' << format_real(model.weights(c, j));
    out << '\n';
  }
}

LinearModel read_model_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty model file");
  int classes = 0;
  Index dim = 0;
  {
    std::istringstream header(line);
    std::string tag, field;
    std::getline(header, tag, ',');
    if (tag != "linear_model") throw Error(ErrorKind::Io, "not a linear model file");
    std::getline(header, field, ',');
    classes = std::stoi(field);
    std::getline(header, field, ',');
    dim = std::stol(field);
  }
  if (classes < 1 || dim < 1) throw Error(ErrorKind::Io, "bad model dimensions");
  LinearModel model = LinearModel::zeros(classes, dim);
  for (int c = 0; c < classes; ++c) {
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "truncated model file");
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    model.biases(c) = parse_real(field);
    for (Index j = 0; j < dim; ++j) {
      if (!std::getline(row, field, ',')) throw Error(ErrorKind::Io, "short model row");
      model.weights(c, j) = parse_real(field);
    }
  }
  return model;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "metric,class,value\n";
  out << "top1_error,," << format_real(report.top1_error) << '\n';
  for (Index c = 0; c < report.per_class_error.size(); ++c) {
    out << "class_error," << c << ',';
    if (!std::isnan(report.per_class_error(c))) out << format_real(report.per_class_error(c));
    out << '\n';
  }
  for (Index i = 0; i < report.confusion.rows(); ++i) {
    for (Index j = 0; j < report.confusion.cols(); ++j) {
      out << "confusion_pred_" << j << ',' << i << ',' << report.confusion(i, j) << '\n';
    }
  }
  if (report.shot_groups) {
    const auto emit = [&](const char* name, const std::optional<double>& v) {
      if (v) out << name << ",," << format_real(*v) << '\n';
    };
    emit("many_shot_error", report.shot_groups->many);
    emit("medium_shot_error", report.shot_groups->medium);
    emit("few_shot_error", report.shot_groups->few);
  }
}

}  // namespace imba
