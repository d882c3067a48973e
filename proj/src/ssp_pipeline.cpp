#include "imba/ssp_pipeline.hpp"

namespace imba {

MatrixXr FeatureTransform::apply(const MatrixXr& x) const {
  if (kind == TransformKind::NormFeature) return ssp_features(x, map);
  if (x.cols() != mean.size()) throw Error(ErrorKind::DimensionMismatch, "transform dimension differs");
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Dataset FeatureTransform::apply(const Dataset& data) const {
  std::optional<std::vector<int>> hidden;
  if (data.has_true_labels()) hidden.emplace(data.true_labels().begin(), data.true_labels().end());
  return Dataset(apply(data.features()), {data.labels().begin(), data.labels().end()},
                 data.class_count(), std::move(hidden));
}

nlohmann::json FeatureTransform::to_json() const {
  nlohmann::json j;
  j["fitted_on"] = fitted_on;
  if (kind == TransformKind::NormFeature) {
    j["kind"] = "norm_feature";
    j["k1"] = map.k1;
    j["k2"] = map.k2;
  } else {
    j["kind"] = "standardize";
    j["mean"] = std::vector<double>(mean.begin(), mean.end());
    j["scale"] = std::vector<double>(scale.begin(), scale.end());
  }
  return j;
}

FeatureTransform FeatureTransform::from_json(const nlohmann::json& j) {
  FeatureTransform t;
  t.fitted_on = j.at("fitted_on").get<Index>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "norm_feature") {
    t.kind = TransformKind::NormFeature;
    t.map = FeatureMapSpec{j.at("k1").get<double>(), j.at("k2").get<double>()};
    t.map.validate();
  } else if (kind == "standardize") {
    t.kind = TransformKind::Standardize;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto scale = j.at("scale").get<std::vector<double>>();
    if (mean.size() != scale.size()) throw Error(ErrorKind::Io, "mean/scale length mismatch");
    t.mean = Eigen::Map<const VectorXr>(mean.data(), static_cast<Index>(mean.size()));
    t.scale = Eigen::Map<const VectorXr>(scale.data(), static_cast<Index>(scale.size()));
    if ((t.scale.array() <= 0.0).any()) throw Error(ErrorKind::DegenerateScale, "non-positive scale");
  } else {
    throw Error(ErrorKind::Io, "unknown transform kind '" + kind + "'");
  }
  return t;
}

bool FeatureTransform::operator==(const FeatureTransform& other) const {
  return kind == other.kind && map.k1 == other.map.k1 && map.k2 == other.map.k2 &&
         fitted_on == other.fitted_on && mean.size() == other.mean.size() && mean == other.mean &&
         scale.size() == other.scale.size() && scale == other.scale;
}

FeatureTransform fit_transform(const MatrixXr& pooled_inputs, TransformKind kind,
                               const FeatureMapSpec& map) {
  if (pooled_inputs.rows() < 2) throw Error(ErrorKind::InvalidSpec, "need at least two rows to fit");
  FeatureTransform t;
  t.kind = kind;
  t.fitted_on = pooled_inputs.rows();
  if (kind == TransformKind::NormFeature) {
    map.validate();
    t.map = map;
    return t;
  }
  t.mean = pooled_inputs.colwise().mean().transpose();
  const MatrixXr centered = pooled_inputs.rowwise() - t.mean.transpose();
  t.scale = (centered.colwise().squaredNorm() / static_cast<double>(pooled_inputs.rows()))
                .cwiseSqrt()
                .transpose();
  for (Index j = 0; j < t.scale.size(); ++j) {
    if (!(t.scale(j) > 0.0)) {
      throw Error(ErrorKind::DegenerateScale, "dimension " + std::to_string(j) + " has zero variance");
    }
  }
  return t;
}

std::vector<int> ThresholdClassifier::predict(const VectorXr& z) const {
  std::vector<int> out(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = predict(z(i));
  return out;
}

ThresholdClassifier ssp_threshold_fit(const Dataset& labeled_hd, const FeatureMapSpec& map) {
  if (labeled_hd.class_count() != 2) {
    throw Error(ErrorKind::Unsupported, "threshold classifier needs binary data");
  }
  const VectorXr z = ssp_features(labeled_hd.features(), map);
  std::vector<double> z_pos, z_neg;
  const auto labels = labeled_hd.labels();
  for (Index i = 0; i < z.size(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label == kPositive) z_pos.push_back(z(i));
    else if (label == kNegative) z_neg.push_back(z(i));
    else throw Error(ErrorKind::Unsupported, "threshold fit needs labeled rows");
  }
  return ThresholdClassifier{ssp_intercept(z_pos, z_neg)};
}

SspResult pretrain_then_train(const Dataset& labeled, const Dataset* pool, TransformKind kind,
                              const TrainConfig& config, const Dataset& test,
                              const FeatureMapSpec& map) {
  MatrixXr pooled = labeled.features();
  if (pool && !pool->empty()) {
    if (pool->dim() != labeled.dim()) throw Error(ErrorKind::DimensionMismatch, "pool dimension differs");
    pooled.conservativeResize(labeled.size() + pool->size(), Eigen::NoChange);
    pooled.bottomRows(pool->size()) = pool->features();
  }
  SspResult result;
  result.transform = fit_transform(pooled, kind, map);
  const Dataset train = result.transform.apply(labeled);
  result.model = train_softmax(train, nullptr, config);
  result.ssp_eval = evaluate(result.model, result.transform.apply(test));
  result.baseline_eval = evaluate(train_softmax(labeled, nullptr, config), test);
  return result;
}

}  // namespace imba
