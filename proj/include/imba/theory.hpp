#pragma once

#include "imba/core.hpp"
#include "imba/dataset.hpp"
#include "imba/gaussian_models.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imba {

/// Base labeler with accuracy p on the positive class and q on the negative class.
struct PseudoLabelerSpec {
  double p = 1.0;
  double q = 1.0;

  double delta() const noexcept { return p - q; }
  void validate() const;
};

/// Black-box self-supervised representation z = k1 |x|^2 + k2.
struct FeatureMapSpec {
  double k1 = 1.0;
  double k2 = 1.0;

  void validate() const;
};

struct VerificationReport {
  std::string theorem;
  nlohmann::json params = nlohmann::json::object();
  Index trials = 0;
  double empirical_frequency = 0.0;
  double theoretical_bound = 0.0;
  double margin = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> per_trial_stats;
};

inline constexpr const char* kVerificationCsvHeader = "theorem,param_json,trials,empirical,bound,margin,seed";
void write_csv_row(std::ostream& out, const VerificationReport& report);

/// Three-sigma binomial slack used by every coverage comparison.
inline double binomial_slack(double prob, Index trials) {
  const double p = std::clamp(prob, 0.0, 1.0);
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

// ---------------------------------------------------------------------------
// Semi-supervised estimator

/// Assigns pseudo-labels from the hidden ground truth: a true positive keeps
/// +1 with probability p, a true negative keeps -1 with probability q.
Dataset pseudo_label_with_accuracy(const Dataset& data, const PseudoLabelerSpec& spec,
                                   std::uint64_t seed);

/// Draws pseudo-labeled groups as the estimator's analysis models them:
/// `n_pos` rows pseudo-labeled +1, each truly positive with probability p,
/// and `n_neg` rows pseudo-labeled -1, each truly negative with probability q.
/// Visible labels are the pseudo-labels; hidden labels are the truth.
Dataset sample_pseudo_labeled_groups(const Mixture1D& spec, const PseudoLabelerSpec& labeler,
                                     Index n_pos, Index n_neg, std::uint64_t seed);

/// Half the sum of the two pseudo-group means.
template <typename Derived1, typename Derived2>
typename Derived1::Scalar ssl_estimator(const Eigen::DenseBase<Derived1>& pseudo_pos,
                                        const Eigen::DenseBase<Derived2>& pseudo_neg) {
  if (pseudo_pos.size() == 0 || pseudo_neg.size() == 0) {
    throw Error(ErrorKind::DegenerateGroup, "ssl_estimator needs both groups non-empty");
  }
  return (pseudo_pos.mean() + pseudo_neg.mean()) / 2;
}

double ssl_estimator(std::span<const double> pseudo_pos, std::span<const double> pseudo_neg);

/// Estimator centre (mu1 + mu2)/2 + delta (mu1 - mu2)/2.
double ssl_target(const Mixture1D& spec, double delta_acc);

/// Probability lower bound that the estimator lands within delta of its centre
/// given pseudo-group sizes n_pos / n_neg. May be negative.
double ssl_bound(double delta, const Mixture1D& spec, double n_pos, double n_neg);

VerificationReport verify_theorem1(const Mixture1D& spec, const PseudoLabelerSpec& labeler,
                                   Index n_pos, Index n_neg, double delta, Index trials,
                                   std::uint64_t seed, int jobs = 1);

// ---------------------------------------------------------------------------
// Raw-feature linear classifier

struct MonteCarloError {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo error of sign(<theta, x> + b) on `samples` fresh draws from the
/// high-dimensional mixture, drawing full d-dimensional inputs.
MonteCarloError linear_monte_carlo_error(const MixtureHD& spec, const VectorXr& theta, double b,
                                         Index samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Self-supervised threshold classifier

template <typename Derived>
typename Derived::Scalar ssp_feature(const Eigen::MatrixBase<Derived>& x, const FeatureMapSpec& map) {
  using Scalar = typename Derived::Scalar;
  return Scalar(map.k1) * x.squaredNorm() + Scalar(map.k2);
}

/// Row-wise ssp_feature over a feature matrix.
VectorXr ssp_features(const MatrixXr& x, const FeatureMapSpec& map);

/// b = (mean z_pos + mean z_neg) / 2; the classifier is sign(-z + b).
double ssp_intercept(std::span<const double> z_pos, std::span<const double> z_neg);

/// Upper bound on the error of the threshold classifier, valid for
/// delta in (0, (beta-1)/(beta+1)).
double ssp_error_bound(const MixtureHD& spec, double delta);

/// Probability with which ssp_error_bound holds, given N+ and N- training rows.
double ssp_probability_bound(const MixtureHD& spec, double delta, double n_pos, double n_neg);

VerificationReport verify_theorem3(const MixtureHD& spec, const FeatureMapSpec& map, Index n_pos,
                                   Index n_neg, double delta, Index trials,
                                   Index mc_test_samples, std::uint64_t seed, int jobs = 1);

/// Monte Carlo error of sign(-z + b) on fresh draws from the mixture.
double ssp_monte_carlo_error(const MixtureHD& spec, const FeatureMapSpec& map, double b,
                             Index samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Concentration sub-checks

/// P(|mean of n squared standard normals - 1| >= delta) <= 2 exp(-n delta^2 / 8).
double chi2_tail_bound(Index n, double delta);
VerificationReport chi2_concentration_check(Index n, double delta, Index trials, std::uint64_t seed);

/// P(|mean of n Bernoulli(p) - p| > t) <= 2 exp(-2 n t^2).
VerificationReport hoeffding_check(Index n, double p, double t, Index trials, std::uint64_t seed);

/// P(|mean(Z+) + mean(Z-) - (mu1 + mu2)| > t) <= 2 exp(-t^2 / (2 sigma^2 (1/n+ + 1/n-))).
VerificationReport gaussian_mean_check(double sigma, Index n_pos, Index n_neg, double t,
                                       Index trials, std::uint64_t seed);

}  // namespace imba
