#pragma once

#include "imba/core.hpp"
#include "imba/dataset.hpp"

#include <cmath>
#include <cstdint>

namespace imba {

/// Two-class, one-dimensional mixture: X | +1 ~ N(mu1, sigma^2),
/// X | -1 ~ N(mu2, sigma^2), with mu1 > mu2.
struct Mixture1D {
  double mu1 = 1.0;
  double mu2 = -1.0;
  double sigma = 1.0;

  void validate() const;
};

/// d-dimensional zero-mean mixture: X | +1 ~ N(0, sigma1^2 I),
/// X | -1 ~ N(0, beta sigma1^2 I). The negative class is the majority.
struct MixtureHD {
  int dim = 1;
  double sigma1_sq = 1.0;
  double beta = 4.0;
  double p_plus = 0.5;

  double p_minus() const noexcept { return 1.0 - p_plus; }
  double sigma1() const noexcept { return std::sqrt(sigma1_sq); }
  void validate() const;
};

/// Positive rows first, then negative rows. Labels are visible.
Dataset sample_mixture_1d(const Mixture1D& spec, Index n_pos, Index n_neg, std::uint64_t seed);

/// Midpoint (mu1 + mu2) / 2 of the Bayes-optimal 1-D classifier.
double bayes_threshold(const Mixture1D& spec);

/// Bayes decision; x at the threshold goes to the positive class.
int bayes_classify(const Mixture1D& spec, double x);

Dataset sample_mixture_hd(const MixtureHD& spec, Index n_pos, Index n_neg, std::uint64_t seed);

/// Standard normal CDF, accurate to well under 1e-12 absolute.
double normal_cdf(double x) noexcept;

/// Exact error of sign(<theta, x> + b) on the high-dimensional mixture for b > 0:
///   p+ Phi(-b / (|theta| sigma1)) + p- Phi(b / (|theta| sqrt(beta) sigma1)).
double linear_error_closed_form(const MixtureHD& spec, double theta_norm, double b);

/// Same quantity parameterised by the standardized margin b / (|theta| sigma1).
double linear_error_standardized(double p_plus, double beta, double margin);

}  // namespace imba
