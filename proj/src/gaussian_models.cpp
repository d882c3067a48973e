#include "imba/gaussian_models.hpp"

#include "imba/random.hpp"

#include <cassert>
#include <numbers>

namespace imba {

void Mixture1D::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::InvalidSpec, "Mixture1D sigma must be positive");
  }
  if (!(mu1 > mu2)) throw Error(ErrorKind::InvalidSpec, "Mixture1D requires mu1 > mu2");
}

void MixtureHD::validate() const {
  if (dim < 1) throw Error(ErrorKind::InvalidSpec, "MixtureHD dim must be >= 1");
  if (!(sigma1_sq > 0.0)) throw Error(ErrorKind::InvalidSpec, "MixtureHD sigma1_sq must be positive");
  if (!(beta > 3.0)) throw Error(ErrorKind::InvalidSpec, "MixtureHD requires beta > 3");
  if (!(p_plus > 0.0 && p_plus <= 0.5)) {
    throw Error(ErrorKind::InvalidSpec, "MixtureHD requires p_plus in (0, 0.5]");
  }
}

Dataset sample_mixture_1d(const Mixture1D& spec, Index n_pos, Index n_neg, std::uint64_t seed) {
  spec.validate();
  if (n_pos < 0 || n_neg < 0 || n_pos + n_neg < 1) {
    throw Error(ErrorKind::InvalidSpec, "sample_mixture_1d needs at least one row");
  }
  Rng rng(seed);
  MatrixXr features(n_pos + n_neg, 1);
  std::vector<int> labels(static_cast<std::size_t>(n_pos + n_neg), kNegative);
  for (Index i = 0; i < n_pos; ++i) {
    features(i, 0) = rng.normal(spec.mu1, spec.sigma);
    labels[static_cast<std::size_t>(i)] = kPositive;
  }
  for (Index i = n_pos; i < n_pos + n_neg; ++i) features(i, 0) = rng.normal(spec.mu2, spec.sigma);
  return Dataset(std::move(features), std::move(labels), 2);
}

double bayes_threshold(const Mixture1D& spec) {
  spec.validate();
  return 0.5 * (spec.mu1 + spec.mu2);
}

int bayes_classify(const Mixture1D& spec, double x) {
  return x >= bayes_threshold(spec) ? kPositive : kNegative;
}

Dataset sample_mixture_hd(const MixtureHD& spec, Index n_pos, Index n_neg, std::uint64_t seed) {
  spec.validate();
  if (n_pos < 0 || n_neg < 0) throw Error(ErrorKind::InvalidSpec, "negative sample count");
  Rng rng(seed);
  const double pos_sd = spec.sigma1();
  const double neg_sd = std::sqrt(spec.beta * spec.sigma1_sq);
  MatrixXr features(n_pos + n_neg, spec.dim);
  std::vector<int> labels(static_cast<std::size_t>(n_pos + n_neg), kNegative);
  for (Index i = 0; i < n_pos + n_neg; ++i) {
    const bool positive = i < n_pos;
    const double sd = positive ? pos_sd : neg_sd;
    for (Index j = 0; j < spec.dim; ++j) features(i, j) = sd * rng.normal();
    if (positive) labels[static_cast<std::size_t>(i)] = kPositive;
  }
  return Dataset(std::move(features), std::move(labels), 2);
}

double normal_cdf(double x) noexcept {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double linear_error_standardized(double p_plus, double beta, double margin) {
  if (!(margin > 0.0)) {
    throw Error(ErrorKind::OutOfModel, "closed-form error assumes a positive intercept");
  }
  const double p_minus = 1.0 - p_plus;
  const double err =
      p_plus * normal_cdf(-margin) + p_minus * normal_cdf(margin / std::sqrt(beta));
  assert(p_minus < 0.5 || err >= 0.25);
  return err;
}

double linear_error_closed_form(const MixtureHD& spec, double theta_norm, double b) {
  spec.validate();
  if (!(theta_norm > 0.0)) throw Error(ErrorKind::OutOfModel, "theta norm must be positive");
  if (!(b > 0.0)) throw Error(ErrorKind::OutOfModel, "closed-form error assumes b > 0");
  return linear_error_standardized(spec.p_plus, spec.beta, b / (theta_norm * spec.sigma1()));
}

}  // namespace imba
