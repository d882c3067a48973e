#include "imba/imbalance.hpp"

#include "imba/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imba {

namespace {

void check_profile_args(int n_classes, Index n_head, double rho) {
  if (n_classes < 2) throw Error(ErrorKind::InvalidProfile, "need at least two classes");
  if (n_head < 1) throw Error(ErrorKind::InvalidProfile, "head class needs at least one row");
  if (!(rho >= 1.0) || !std::isfinite(rho)) throw Error(ErrorKind::InvalidProfile, "rho must be >= 1");
  if (std::llround(static_cast<double>(n_head) / rho) < 1) {
    throw Error(ErrorKind::InvalidProfile, "tail class would round to zero rows");
  }
}

Index round_count(double value) { return static_cast<Index>(std::llround(value)); }

// Adds one class's rows, scaled per dimension, to `features` starting at `row`.
void draw_blob(MatrixXr& features, Index row, Index count, const RowVector<double>& mean,
               double stddev, const VectorXr& scales, Rng& rng) {
  for (Index i = row; i < row + count; ++i) {
    for (Index j = 0; j < features.cols(); ++j) {
      features(i, j) = scales(j) * (mean(j) + stddev * rng.normal());
    }
  }
}

}  // namespace

std::vector<Index> long_tailed_counts(int n_classes, Index n_head, double rho) {
  check_profile_args(n_classes, n_head, rho);
  std::vector<Index> counts(static_cast<std::size_t>(n_classes));
  for (int i = 0; i < n_classes; ++i) {
    const double exponent = -static_cast<double>(i) / static_cast<double>(n_classes - 1);
    counts[static_cast<std::size_t>(i)] =
        std::max<Index>(1, round_count(static_cast<double>(n_head) * std::pow(rho, exponent)));
  }
  counts.front() = n_head;
  return counts;
}

std::vector<Index> step_counts(int n_classes, Index n_head, double rho) {
  check_profile_args(n_classes, n_head, rho);
  const Index tail = round_count(static_cast<double>(n_head) / rho);
  const int majority = (n_classes + 1) / 2;
  std::vector<Index> counts(static_cast<std::size_t>(n_classes), tail);
  std::fill_n(counts.begin(), majority, n_head);
  return counts;
}

std::vector<Index> ImbalanceProfile::counts() const {
  switch (kind) {
    case ImbalanceKind::LongTailed: return long_tailed_counts(n_classes, n_head, rho);
    case ImbalanceKind::Step: return step_counts(n_classes, n_head, rho);
    case ImbalanceKind::Uniform:
      if (rho != 1.0) throw Error(ErrorKind::InvalidProfile, "uniform profile requires rho = 1");
      check_profile_args(n_classes, n_head, 1.0);
      return std::vector<Index>(static_cast<std::size_t>(n_classes), n_head);
  }
  return {};
}

double imbalance_ratio(std::span<const Index> counts) {
  if (counts.empty()) throw Error(ErrorKind::InvalidProfile, "empty count vector");
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo < 1) throw Error(ErrorKind::InvalidProfile, "every class needs at least one row");
  return static_cast<double>(*hi) / static_cast<double>(*lo);
}

std::vector<Index> long_tailed_allocation(int n_classes, Index total, double rho) {
  if (n_classes < 1) throw Error(ErrorKind::InvalidProfile, "need at least one class");
  if (!(rho >= 1.0)) throw Error(ErrorKind::InvalidProfile, "rho must be >= 1");
  if (total < 0) throw Error(ErrorKind::InvalidProfile, "negative total");
  std::vector<double> share(static_cast<std::size_t>(n_classes));
  for (int i = 0; i < n_classes; ++i) {
    share[static_cast<std::size_t>(i)] =
        n_classes == 1 ? 1.0 : std::pow(rho, -static_cast<double>(i) / (n_classes - 1));
  }
  const double norm = std::accumulate(share.begin(), share.end(), 0.0);
  std::vector<Index> counts(share.size());
  std::vector<std::pair<double, int>> remainders;
  Index assigned = 0;
  for (int i = 0; i < n_classes; ++i) {
    const double exact = static_cast<double>(total) * share[static_cast<std::size_t>(i)] / norm;
    counts[static_cast<std::size_t>(i)] = static_cast<Index>(std::floor(exact));
    assigned += counts[static_cast<std::size_t>(i)];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  // Largest remainder first; ties go to the lower class index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Index k = 0; k < total - assigned; ++k) {
    ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(k)].second)];
  }
  return counts;
}

void BlobModel::validate() const {
  if (means.rows() < 1 || means.cols() < 1) throw Error(ErrorKind::InvalidSpec, "empty blob model");
  if (!(stddev > 0.0)) throw Error(ErrorKind::InvalidSpec, "blob stddev must be positive");
  if (scales.size() != means.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "blob scales must match the mean dimension");
  }
  if ((scales.array() <= 0.0).any()) throw Error(ErrorKind::InvalidSpec, "blob scales must be positive");
}

BlobModel BlobModel::random(int n_classes, Index dim, double separation, double stddev,
                            double scale_spread, std::uint64_t seed) {
  if (n_classes < 1 || dim < 1) throw Error(ErrorKind::InvalidSpec, "blob model needs classes and dims");
  Rng rng(seed);
  BlobModel model;
  model.stddev = stddev;
  model.means.resize(n_classes, dim);
  for (int c = 0; c < n_classes; ++c) {
    RowVector<double> direction(dim);
    for (Index j = 0; j < dim; ++j) direction(j) = rng.normal();
    model.means.row(c) = separation * direction.normalized();
  }
  model.scales = VectorXr::Ones(dim);
  if (scale_spread > 0.0) {
    for (Index j = 0; j < dim; ++j) model.scales(j) = std::exp(rng.uniform(-scale_spread, scale_spread));
  }
  model.validate();
  return model;
}

IrrelevantModel IrrelevantModel::displaced_from(const BlobModel& classes, double displacement,
                                                std::uint64_t seed) {
  classes.validate();
  if (!(displacement >= 0.0)) throw Error(ErrorKind::InvalidSpec, "displacement must be >= 0");
  Rng rng(seed);
  const VectorXr centroid = classes.means.colwise().mean().transpose();
  // Random direction inside the span of the class means, so the irrelevant rows
  // compete with the classes instead of sitting in an unused subspace.
  VectorXr mix(classes.classes());
  for (Index c = 0; c < mix.size(); ++c) mix(c) = rng.normal();
  VectorXr direction = classes.means.transpose() * mix;
  if (direction.norm() == 0.0) {
    for (Index j = 0; j < direction.size(); ++j) direction(j) = rng.normal();
  }
  direction.normalize();

  const double required = displacement * classes.stddev;
  auto min_distance = [&](const VectorXr& point) {
    return (classes.means.rowwise() - point.transpose()).rowwise().norm().minCoeff();
  };
  double step = required;
  VectorXr mean = centroid + step * direction;
  while (min_distance(mean) < required) {
    step += 0.25 * classes.stddev;
    mean = centroid + step * direction;
  }
  return IrrelevantModel{mean, classes.stddev};
}

void UnlabeledPoolConfig::validate() const {
  if (!(multiplier > 0.0)) throw Error(ErrorKind::InvalidSpec, "pool multiplier must be positive");
  if (!(rho_u >= 1.0)) throw Error(ErrorKind::InvalidSpec, "rho_u must be >= 1");
  if (!(relevance >= 0.0 && relevance <= 1.0)) {
    throw Error(ErrorKind::InvalidSpec, "relevance must lie in [0, 1]");
  }
}

Dataset synthesize_from_counts(std::span<const Index> counts, const BlobModel& model,
                               std::uint64_t seed) {
  model.validate();
  if (static_cast<int>(counts.size()) != model.classes()) {
    throw Error(ErrorKind::DimensionMismatch, "class model does not match the profile's class count");
  }
  const Index total = std::accumulate(counts.begin(), counts.end(), Index{0});
  Rng rng(seed);
  MatrixXr features(total, model.dim());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(total));
  Index row = 0;
  for (int c = 0; c < model.classes(); ++c) {
    const Index n = counts[static_cast<std::size_t>(c)];
    draw_blob(features, row, n, model.means.row(c), model.stddev, model.scales, rng);
    labels.insert(labels.end(), static_cast<std::size_t>(n), c);
    row += n;
  }
  return Dataset(std::move(features), std::move(labels), model.classes());
}

Dataset synthesize_labeled(const ImbalanceProfile& profile, const BlobModel& model,
                           std::uint64_t seed) {
  if (profile.n_classes != model.classes()) {
    throw Error(ErrorKind::DimensionMismatch, "class model does not match the profile's class count");
  }
  const auto counts = profile.counts();
  return synthesize_from_counts(counts, model, seed);
}

Dataset synthesize_unlabeled(const Dataset& labeled, const UnlabeledPoolConfig& config,
                             const BlobModel& model, const IrrelevantModel& irrelevant) {
  config.validate();
  model.validate();
  if (irrelevant.mean.size() != model.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "irrelevant blob dimension differs from class blobs");
  }
  if (labeled.class_count() != model.classes()) {
    throw Error(ErrorKind::DimensionMismatch, "labeled set and class model disagree on classes");
  }
  const Index pool = round_count(config.multiplier * static_cast<double>(labeled.size()));
  if (pool < 1) throw Error(ErrorKind::InvalidSpec, "unlabeled pool would be empty");
  const Index relevant = round_count(config.relevance * static_cast<double>(pool));
  const auto counts = long_tailed_allocation(model.classes(), relevant, config.rho_u);

  Rng rng(config.seed);
  MatrixXr features(pool, model.dim());
  std::vector<int> truth;
  truth.reserve(static_cast<std::size_t>(pool));
  Index row = 0;
  for (int c = 0; c < model.classes(); ++c) {
    const Index n = counts[static_cast<std::size_t>(c)];
    draw_blob(features, row, n, model.means.row(c), model.stddev, model.scales, rng);
    truth.insert(truth.end(), static_cast<std::size_t>(n), c);
    row += n;
  }
  draw_blob(features, row, pool - row, irrelevant.mean.transpose(), irrelevant.stddev,
            model.scales, rng);
  truth.insert(truth.end(), static_cast<std::size_t>(pool - row), kOutOfDistribution);

  std::vector<Index> order(static_cast<std::size_t>(pool));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(std::span<Index>(order));
  std::vector<int> visible(truth.size(), kUnlabeled);
  Dataset ordered(std::move(features), std::move(visible), model.classes(), std::move(truth));
  return ordered.select_rows(order);
}

Dataset subsample_labeled(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorKind::OutOfRange, "fraction must lie in (0, 1]");
  }
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(data.class_count()));
  const auto labels = data.labels();
  for (Index i = 0; i < data.size(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0) throw Error(ErrorKind::Unsupported, "subsampling needs labeled rows");
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  Rng rng(seed);
  std::vector<Index> keep;
  for (int c = 0; c < data.class_count(); ++c) {
    auto& rows = by_class[static_cast<std::size_t>(c)];
    if (rows.empty()) continue;
    const Index target = round_count(fraction * static_cast<double>(rows.size()));
    if (target < 1) {
      throw Error(ErrorKind::InvalidProfile, "class " + std::to_string(c) + " would be emptied");
    }
    rng.shuffle(std::span<Index>(rows));
    keep.insert(keep.end(), rows.begin(), rows.begin() + target);
  }
  std::sort(keep.begin(), keep.end());
  return data.select_rows(keep);
}

}  // namespace imba
