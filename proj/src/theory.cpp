#include "imba/theory.hpp"

#include "imba/parallel.hpp"
#include "imba/random.hpp"

#include <limits>
#include <numeric>
#include <ostream>

namespace imba {

namespace {

std::string csv_quote(const std::string& field) {
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void require_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorKind::InvalidSpec, std::string(name) + " must lie in [0, 1]");
  }
}

void require_trials(Index trials, Index minimum) {
  if (trials < minimum) {
    throw Error(ErrorKind::OutOfRange, "at least " + std::to_string(minimum) + " trials required");
  }
}

// Frequency of a per-trial indicator; order-independent so threading does not
// change the result.
double frequency(const std::vector<char>& hits) {
  const auto count = std::count(hits.begin(), hits.end(), char{1});
  return static_cast<double>(count) / static_cast<double>(hits.size());
}

}  // namespace

void PseudoLabelerSpec::validate() const {
  require_probability(p, "labeler accuracy p");
  require_probability(q, "labeler accuracy q");
}

void FeatureMapSpec::validate() const {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw Error(ErrorKind::InvalidSpec, "feature map needs k1, k2 > 0");
}

void write_csv_row(std::ostream& out, const VerificationReport& report) {
  out << report.theorem << ',' << csv_quote(report.params.dump()) << ',' << report.trials << ','
      << format_real(report.empirical_frequency) << ',' << format_real(report.theoretical_bound)
      << ',' << format_real(report.margin) << ',' << report.seed << '\n';
}

// ---------------------------------------------------------------------------

Dataset pseudo_label_with_accuracy(const Dataset& data, const PseudoLabelerSpec& spec,
                                   std::uint64_t seed) {
  spec.validate();
  if (data.class_count() != 2) {
    throw Error(ErrorKind::Unsupported, "accuracy-controlled pseudo-labeling needs binary data");
  }
  const auto truth = data.true_labels();
  Rng rng(seed);
  std::vector<int> pseudo(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kPositive) {
      pseudo[i] = rng.bernoulli(spec.p) ? kPositive : kNegative;
    } else if (truth[i] == kNegative) {
      pseudo[i] = rng.bernoulli(spec.q) ? kNegative : kPositive;
    } else {
      throw Error(ErrorKind::Unsupported, "hidden labels must be binary class indices");
    }
  }
  return data.with_labels(std::move(pseudo));
}

Dataset sample_pseudo_labeled_groups(const Mixture1D& spec, const PseudoLabelerSpec& labeler,
                                     Index n_pos, Index n_neg, std::uint64_t seed) {
  spec.validate();
  labeler.validate();
  if (n_pos < 0 || n_neg < 0) throw Error(ErrorKind::InvalidSpec, "negative group size");
  Rng rng(seed);
  const Index n = n_pos + n_neg;
  MatrixXr x(n, 1);
  std::vector<int> pseudo(static_cast<std::size_t>(n));
  std::vector<int> truth(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const bool pseudo_positive = i < n_pos;
    const bool correct = rng.bernoulli(pseudo_positive ? labeler.p : labeler.q);
    const bool truly_positive = pseudo_positive == correct;
    x(i, 0) = rng.normal(truly_positive ? spec.mu1 : spec.mu2, spec.sigma);
    pseudo[static_cast<std::size_t>(i)] = pseudo_positive ? kPositive : kNegative;
    truth[static_cast<std::size_t>(i)] = truly_positive ? kPositive : kNegative;
  }
  return Dataset(std::move(x), std::move(pseudo), 2, std::move(truth));
}

double ssl_estimator(std::span<const double> pseudo_pos, std::span<const double> pseudo_neg) {
  using Map = Eigen::Map<const VectorXr>;
  return ssl_estimator(Map(pseudo_pos.data(), static_cast<Index>(pseudo_pos.size())),
                       Map(pseudo_neg.data(), static_cast<Index>(pseudo_neg.size())));
}

double ssl_target(const Mixture1D& spec, double delta_acc) {
  spec.validate();
  return 0.5 * (spec.mu1 + spec.mu2) + 0.5 * delta_acc * (spec.mu1 - spec.mu2);
}

double ssl_bound(double delta, const Mixture1D& spec, double n_pos, double n_neg) {
  if (!(spec.sigma > 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma must be positive");
  if (spec.mu1 == spec.mu2) throw Error(ErrorKind::InvalidSpec, "bound undefined for mu1 == mu2");
  if (!(delta > 0.0)) throw Error(ErrorKind::OutOfRange, "delta must be positive");
  if (!(n_pos >= 1.0 && n_neg >= 1.0)) throw Error(ErrorKind::OutOfRange, "group sizes must be >= 1");
  const double gap_sq = (spec.mu1 - spec.mu2) * (spec.mu1 - spec.mu2);
  const double d2 = delta * delta;
  const double pooled = 1.0 / (1.0 / n_pos + 1.0 / n_neg);
  return 1.0 - 2.0 * std::exp(-2.0 * d2 / (9.0 * spec.sigma * spec.sigma) * pooled) -
         2.0 * std::exp(-8.0 * n_pos * d2 / (9.0 * gap_sq)) -
         2.0 * std::exp(-8.0 * n_neg * d2 / (9.0 * gap_sq));
}

VerificationReport verify_theorem1(const Mixture1D& spec, const PseudoLabelerSpec& labeler,
                                   Index n_pos, Index n_neg, double delta, Index trials,
                                   std::uint64_t seed, int jobs) {
  spec.validate();
  labeler.validate();
  if (!(delta > 0.0)) throw Error(ErrorKind::OutOfRange, "delta must be positive");
  require_trials(trials, 100);
  if (n_pos < 1 || n_neg < 1) throw Error(ErrorKind::OutOfRange, "group sizes must be >= 1");

  const double target = ssl_target(spec, labeler.delta());
  std::vector<char> hit(static_cast<std::size_t>(trials));
  std::vector<double> estimates(static_cast<std::size_t>(trials));
  std::vector<double> bounds(static_cast<std::size_t>(trials));
  parallel_for(trials, jobs, [&](Index t) {
    const auto data = sample_pseudo_labeled_groups(spec, labeler, n_pos, n_neg, sub_seed(seed, t));
    std::vector<double> pos, neg;
    const auto labels = data.labels();
    for (Index i = 0; i < data.size(); ++i) {
      (labels[static_cast<std::size_t>(i)] == kPositive ? pos : neg).push_back(data.features()(i, 0));
    }
    const double estimate = ssl_estimator(pos, neg);
    const auto k = static_cast<std::size_t>(t);
    estimates[k] = estimate;
    hit[k] = std::abs(estimate - target) <= delta;
    bounds[k] = ssl_bound(delta, spec, static_cast<double>(pos.size()), static_cast<double>(neg.size()));
  });

  VerificationReport report;
  report.theorem = "t1";
  report.params = {{"mu1", spec.mu1}, {"mu2", spec.mu2}, {"sigma", spec.sigma},
                   {"p", labeler.p},  {"q", labeler.q},   {"n_pos", n_pos},
                   {"n_neg", n_neg},  {"delta", delta}};
  report.trials = trials;
  report.empirical_frequency = frequency(hit);
  report.theoretical_bound = *std::min_element(bounds.begin(), bounds.end());
  report.margin = report.empirical_frequency - report.theoretical_bound;
  report.seed = seed;
  report.per_trial_stats = std::move(estimates);
  return report;
}

// ---------------------------------------------------------------------------

MonteCarloError linear_monte_carlo_error(const MixtureHD& spec, const VectorXr& theta, double b,
                                         Index samples, std::uint64_t seed) {
  spec.validate();
  if (theta.size() != spec.dim) throw Error(ErrorKind::DimensionMismatch, "theta dimension differs");
  if (samples < 1) throw Error(ErrorKind::OutOfRange, "need at least one Monte Carlo sample");
  Rng rng(seed);
  const double pos_sd = spec.sigma1();
  const double neg_sd = std::sqrt(spec.beta * spec.sigma1_sq);
  Index errors = 0;
  for (Index s = 0; s < samples; ++s) {
    const bool positive = rng.bernoulli(spec.p_plus);
    const double sd = positive ? pos_sd : neg_sd;
    double score = b;
    for (Index j = 0; j < theta.size(); ++j) score += theta(j) * sd * rng.normal();
    errors += (score >= 0.0) != positive;
  }
  const double err = static_cast<double>(errors) / static_cast<double>(samples);
  return {err, std::sqrt(err * (1.0 - err) / static_cast<double>(samples))};
}

// ---------------------------------------------------------------------------

VectorXr ssp_features(const MatrixXr& x, const FeatureMapSpec& map) {
  return (map.k1 * x.rowwise().squaredNorm()).array() + map.k2;
}

double ssp_intercept(std::span<const double> z_pos, std::span<const double> z_neg) {
  if (z_pos.empty() || z_neg.empty()) {
    throw Error(ErrorKind::DegenerateGroup, "intercept needs both classes present");
  }
  // Sorted summation makes the intercept independent of input order.
  auto sorted_mean = [](std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  return 0.5 * (sorted_mean(z_pos) + sorted_mean(z_neg));
}

double ssp_error_bound(const MixtureHD& spec, double delta) {
  spec.validate();
  const double beta = spec.beta;
  const double upper = (beta - 1.0) / (beta + 1.0);
  const double split = (beta - 3.0) / (beta + 1.0);
  if (!(delta > 0.0 && delta < upper)) {
    throw Error(ErrorKind::OutOfRange, "delta must lie in (0, (beta-1)/(beta+1))");
  }
  const double d = spec.dim;
  const double gap = beta - 1.0 - (1.0 + beta) * delta;
  const double neg_term = spec.p_minus() * std::exp(-d * gap * gap / (32.0 * beta * beta));
  const double pos_exponent = delta >= split ? d * gap * gap / 32.0 : d * gap / 16.0;
  return spec.p_plus * std::exp(-pos_exponent) + neg_term;
}

double ssp_probability_bound(const MixtureHD& spec, double delta, double n_pos, double n_neg) {
  const double d = spec.dim;
  return 1.0 - 2.0 * std::exp(-n_neg * d * delta * delta / 8.0) -
         2.0 * std::exp(-n_pos * d * delta * delta / 8.0);
}

double ssp_monte_carlo_error(const MixtureHD& spec, const FeatureMapSpec& map, double b,
                             Index samples, std::uint64_t seed) {
  spec.validate();
  if (samples < 1) throw Error(ErrorKind::OutOfRange, "need at least one Monte Carlo sample");
  Rng rng(seed);
  const double pos_var = spec.sigma1_sq;
  const double neg_var = spec.beta * spec.sigma1_sq;
  Index errors = 0;
  for (Index s = 0; s < samples; ++s) {
    const bool positive = rng.bernoulli(spec.p_plus);
    double sum_sq = 0.0;
    for (int j = 0; j < spec.dim; ++j) {
      const double w = rng.normal();
      sum_sq += w * w;
    }
    const double z = map.k1 * (positive ? pos_var : neg_var) * sum_sq + map.k2;
    const bool predicted_positive = -z + b >= 0.0;
    errors += predicted_positive != positive;
  }
  return static_cast<double>(errors) / static_cast<double>(samples);
}

VerificationReport verify_theorem3(const MixtureHD& spec, const FeatureMapSpec& map, Index n_pos,
                                   Index n_neg, double delta, Index trials,
                                   Index mc_test_samples, std::uint64_t seed, int jobs) {
  spec.validate();
  map.validate();
  require_trials(trials, 100);
  if (n_pos < 1 || n_neg < 1) throw Error(ErrorKind::DegenerateGroup, "both classes need rows");
  const double error_bound = ssp_error_bound(spec, delta);

  std::vector<char> hit(static_cast<std::size_t>(trials));
  std::vector<double> errors(static_cast<std::size_t>(trials));
  parallel_for(trials, jobs, [&](Index t) {
    const std::uint64_t trial_seed = sub_seed(seed, t);
    const auto train = sample_mixture_hd(spec, n_pos, n_neg, sub_seed(trial_seed, 0));
    const VectorXr z = ssp_features(train.features(), map);
    std::vector<double> z_pos, z_neg;
    const auto labels = train.labels();
    for (Index i = 0; i < train.size(); ++i) {
      (labels[static_cast<std::size_t>(i)] == kPositive ? z_pos : z_neg).push_back(z(i));
    }
    const double b = ssp_intercept(z_pos, z_neg);
    const double err = ssp_monte_carlo_error(spec, map, b, mc_test_samples, sub_seed(trial_seed, 1));
    errors[static_cast<std::size_t>(t)] = err;
    hit[static_cast<std::size_t>(t)] = err <= error_bound;
  });

  VerificationReport report;
  report.theorem = "t3";
  report.params = {{"dim", spec.dim},     {"sigma1_sq", spec.sigma1_sq}, {"beta", spec.beta},
                   {"p_plus", spec.p_plus}, {"k1", map.k1},              {"k2", map.k2},
                   {"n_pos", n_pos},       {"n_neg", n_neg},             {"delta", delta},
                   {"mc_test_samples", mc_test_samples}, {"error_bound", error_bound}};
  report.trials = trials;
  report.empirical_frequency = frequency(hit);
  report.theoretical_bound = ssp_probability_bound(spec, delta, static_cast<double>(n_pos),
                                                   static_cast<double>(n_neg));
  report.margin = report.empirical_frequency - report.theoretical_bound;
  report.seed = seed;
  report.per_trial_stats = std::move(errors);
  return report;
}

// ---------------------------------------------------------------------------

double chi2_tail_bound(Index n, double delta) {
  return 2.0 * std::exp(-static_cast<double>(n) * delta * delta / 8.0);
}

VerificationReport chi2_concentration_check(Index n, double delta, Index trials, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::OutOfRange, "delta must lie in (0, 1)");
  if (n < 1) throw Error(ErrorKind::OutOfRange, "n must be >= 1");
  require_trials(trials, 1);
  Rng rng(seed);
  Index tail = 0;
  for (Index t = 0; t < trials; ++t) {
    double sum_sq = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double w = rng.normal();
      sum_sq += w * w;
    }
    tail += std::abs(sum_sq / static_cast<double>(n) - 1.0) >= delta;
  }
  VerificationReport report;
  report.theorem = "chi2";
  report.params = {{"n", n}, {"delta", delta}};
  report.trials = trials;
  report.empirical_frequency = static_cast<double>(tail) / static_cast<double>(trials);
  report.theoretical_bound = chi2_tail_bound(n, delta);
  report.margin = report.empirical_frequency - report.theoretical_bound;
  report.seed = seed;
  return report;
}

VerificationReport hoeffding_check(Index n, double p, double t, Index trials, std::uint64_t seed) {
  require_probability(p, "p");
  if (!(t > 0.0)) throw Error(ErrorKind::OutOfRange, "t must be positive");
  if (n < 1) throw Error(ErrorKind::OutOfRange, "n must be >= 1");
  require_trials(trials, 1);
  Rng rng(seed);
  Index tail = 0;
  for (Index k = 0; k < trials; ++k) {
    Index successes = 0;
    for (Index i = 0; i < n; ++i) successes += rng.bernoulli(p);
    tail += std::abs(static_cast<double>(successes) / static_cast<double>(n) - p) > t;
  }
  VerificationReport report;
  report.theorem = "hoeffding";
  report.params = {{"n", n}, {"p", p}, {"t", t}};
  report.trials = trials;
  report.empirical_frequency = static_cast<double>(tail) / static_cast<double>(trials);
  report.theoretical_bound = 2.0 * std::exp(-2.0 * static_cast<double>(n) * t * t);
  report.margin = report.empirical_frequency - report.theoretical_bound;
  report.seed = seed;
  return report;
}

VerificationReport gaussian_mean_check(double sigma, Index n_pos, Index n_neg, double t,
                                       Index trials, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidSpec, "sigma must be positive");
  if (!(t > 0.0)) throw Error(ErrorKind::OutOfRange, "t must be positive");
  if (n_pos < 1 || n_neg < 1) throw Error(ErrorKind::OutOfRange, "group sizes must be >= 1");
  require_trials(trials, 1);
  Rng rng(seed);
  Index tail = 0;
  for (Index k = 0; k < trials; ++k) {
    double sum_pos = 0.0, sum_neg = 0.0;
    for (Index i = 0; i < n_pos; ++i) sum_pos += rng.normal(0.0, sigma);
    for (Index i = 0; i < n_neg; ++i) sum_neg += rng.normal(0.0, sigma);
    const double stat = sum_pos / static_cast<double>(n_pos) + sum_neg / static_cast<double>(n_neg);
    tail += std::abs(stat) > t;
  }
  const double inv = 1.0 / static_cast<double>(n_pos) + 1.0 / static_cast<double>(n_neg);
  VerificationReport report;
  report.theorem = "gaussian_mean";
  report.params = {{"sigma", sigma}, {"n_pos", n_pos}, {"n_neg", n_neg}, {"t", t}};
  report.trials = trials;
  report.empirical_frequency = static_cast<double>(tail) / static_cast<double>(trials);
  report.theoretical_bound = 2.0 * std::exp(-t * t / (2.0 * sigma * sigma * inv));
  report.margin = report.empirical_frequency - report.theoretical_bound;
  report.seed = seed;
  return report;
}

}  // namespace imba
