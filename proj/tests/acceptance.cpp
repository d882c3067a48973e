// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include "imba/experiment.hpp"
#include "imba/gaussian_models.hpp"
#include "imba/imbalance.hpp"
#include "imba/learner.hpp"
#include "imba/random.hpp"
#include "imba/theory.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace imba;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

ResultTable run_shipped(const std::string& name) {
  return run(load_config_file(std::string(IMBA_CONFIG_DIR) + "/" + name + ".json"));
}

double mean_cell(const ResultTable& t, const std::string& metric, std::size_t point) {
  std::size_t seen = 0;
  for (const auto& r : t.rows) {
    if (r[0] != "mean") continue;
    if (seen++ == point) return parse_real(r[t.column(metric)]);
  }
  throw std::runtime_error("missing mean row " + std::to_string(point));
}

// 1
Outcome linear_error_exactness() {
  const ResultTable t = run_shipped("theory_t2");
  Outcome o{t.rows.size() == 10, ""};
  double worst = 0.0, lowest = 1.0;
  for (const auto& r : t.rows) {
    const double p = parse_real(r[0]), beta = parse_real(r[1]), closed = parse_real(r[3]);
    const double mc = parse_real(r[4]);
    const double n = 1e6;
    const double ratio = std::abs(mc - closed) / (3.0 * std::sqrt(closed * (1 - closed) / n));
    worst = std::max(worst, ratio);
    lowest = std::min(lowest, closed);
    o.pass = o.pass && p <= 0.5 && beta > 3 && beta <= 10 && parse_real(r[2]) > 0;
  }
  o.pass = o.pass && worst <= 1.0 && lowest >= 0.25;
  o.detail = "max |mc-closed|/(3 se)=" + fmt(worst) + " min closed=" + fmt(lowest);
  return o;
}

// 2
Outcome estimator_coverage() {
  const ResultTable t = run_shipped("theory_t1");
  const double emp = parse_real(t.rows.at(0)[t.column("empirical")]);
  const double bound = parse_real(t.rows.at(0)[t.column("bound")]);
  const Index trials = static_cast<Index>(parse_real(t.rows.at(0)[t.column("trials")]));
  const bool params_ok = trials == 2000 && std::abs(bound - 0.99991) < 5e-6;
  return {params_ok && emp >= bound - binomial_slack(bound, trials),
          "empirical=" + fmt(emp) + " bound=" + fmt(bound) + " trials=" + std::to_string(trials)};
}

// 3
Outcome threshold_coverage() {
  const ResultTable t = run_shipped("theory_t3");
  const double emp = parse_real(t.rows.at(0)[t.column("empirical")]);
  const double bound = parse_real(t.rows.at(0)[t.column("bound")]);
  const auto params = json::parse(t.rows.at(0)[t.column("param_json")]);
  return {emp == 1.0, "fraction within error bound=" + fmt(emp) + " probability bound=" + fmt(bound) +
                          " error bound=" + fmt(params.value("error_bound", 0.0))};
}

// 4
Outcome ssp_vs_raw() {
  const MixtureHD spec{100, 1.0, 4.0, 50.0 / 550.0};
  const FeatureMapSpec map{1.0, 1.0};
  Outcome o{true, ""};
  double worst_ssp = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset train = sample_mixture_hd(spec, 50, 500, sub_seed(seed, 0));
    std::vector<double> zp, zn;
    const VectorXr z = ssp_features(train.features(), map);
    for (Index i = 0; i < z.size(); ++i) (train.labels()[static_cast<std::size_t>(i)] == kPositive ? zp : zn).push_back(z(i));
    const double b = ssp_intercept(zp, zn);
    worst_ssp = std::max(worst_ssp, ssp_monte_carlo_error(spec, map, b, 1000000, sub_seed(seed, 1)));
  }
  double floor = 1.0;
  for (double log_m = -8; log_m <= 3; log_m += 0.001) {
    floor = std::min(floor, linear_error_standardized(spec.p_plus, spec.beta, std::pow(10.0, log_m)));
  }
  o.pass = worst_ssp <= 0.01 && floor >= 0.25;
  o.detail = "worst f_ss mc error=" + fmt(worst_ssp) + " min linear closed form=" + fmt(floor);
  return o;
}

// 5
Outcome concentration() {
  const ResultTable t = run_shipped("chi2");
  Outcome o{true, ""};
  int chi2_rows = 0, hoeffding_rows = 0;
  double worst = -1.0;
  for (const auto& r : t.rows) {
    const double emp = parse_real(r[t.column("empirical")]);
    const double bound = parse_real(r[t.column("bound")]);
    const Index trials = static_cast<Index>(parse_real(r[t.column("trials")]));
    chi2_rows += r[0] == "chi2";
    hoeffding_rows += r[0] == "hoeffding";
    o.pass = o.pass && trials == 100000;
    const double excess = emp - bound - binomial_slack(bound, trials);
    worst = std::max(worst, excess);
  }
  o.pass = o.pass && worst <= 0.0 && chi2_rows == 9 && hoeffding_rows == 9;
  o.detail = std::to_string(t.rows.size()) + " cells, max(empirical - bound - slack)=" + fmt(worst);
  return o;
}

struct LearningTables {
  ResultTable supervised, rho_u, relevance;
};

const LearningTables& learning_tables() {
  static const LearningTables tables{run_shipped("supervised"), run_shipped("selftrain_rho_u"),
                                     run_shipped("sweep_relevance")};
  return tables;
}

// 6
Outcome self_training_gain() {
  const auto& t = learning_tables();
  const double sup = mean_cell(t.supervised, "error", 0);
  const double st = mean_cell(t.rho_u, "final_error", 2);  // rho_u = 50
  return {st < sup, "supervised=" + fmt(sup) + " self_train=" + fmt(st)};
}

// 7
Outcome rho_u_ordering() {
  const auto& t = learning_tables();
  std::vector<double> x{1, 25, 50, 100}, y;
  for (std::size_t p = 0; p < 4; ++p) y.push_back(mean_cell(t.rho_u, "final_error", p));
  const double tau = kendall_tau(x, y);
  return {tau >= 0.6, "errors=" + fmt(y[0]) + "," + fmt(y[1]) + "," + fmt(y[2]) + "," + fmt(y[3]) +
                          " tau=" + fmt(tau)};
}

// 8
Outcome relevance_trend() {
  const auto& t = learning_tables();
  const auto& last = t.relevance.rows.back();
  const double rho = parse_real(last[t.relevance.column("final_error")]);
  const double low = mean_cell(t.relevance, "final_error", 0);
  const double baseline = mean_cell(t.supervised, "error", 0);
  return {last[0] == "spearman" && rho <= -0.7 && low >= baseline,
          "spearman=" + fmt(rho) + " relevance0.2=" + fmt(low) + " baseline=" + fmt(baseline)};
}

// 9
Outcome generator_exactness() {
  const auto lt = long_tailed_counts(10, 5000, 100);
  const auto st = step_counts(10, 5000, 100);
  std::vector<Index> expected_step(5, 5000);
  expected_step.resize(10, 50);
  return {lt.front() == 5000 && lt.back() == 50 && st == expected_step,
          "long_tailed endpoints=" + std::to_string(lt.front()) + "," + std::to_string(lt.back())};
}

// 10
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + IMBA_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("imba_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string small_data = R"("data": {"profile": {"n_classes": 5, "n_head": 100, "rho": 10},
      "blobs": {"dim": 6}, "test_per_class": 60}, "train": {"epochs": 4})";
  struct Case {
    std::string command, config;
  };
  const std::vector<Case> cases = {
      {"theory t1", R"({"theory": {"t1": {"trials": 200}}})"},
      {"theory t2", R"({"theory": {"t2": {"param_sets": 3, "samples": 20000}}})"},
      {"theory t3", R"({"theory": {"t3": {"trials": 100, "mc_test_samples": 2000}}})"},
      {"theory chi2", R"({"theory": {"chi2": {"trials": 2000}}})"},
      {"data gen", "{" + small_data + "}"},
      {"train", "{" + small_data + "}"},
      {"selftrain", "{" + small_data + R"(, "grid": {"data.pool.rho_u": [1, 10]}})"},
      {"ssp", "{" + small_data + "}"},
      {"sweep", "{" + small_data + R"(, "grid": {"data.pool.relevance": [0.5, 1.0]}})"},
  };
  Outcome o{true, ""};
  int index = 0;
  for (const auto& c : cases) {
    const fs::path cfg = dir / ("cfg" + std::to_string(index) + ".json");
    std::ofstream(cfg) << c.config;
    const fs::path a = dir / ("a" + std::to_string(index) + ".csv");
    const fs::path b = dir / ("b" + std::to_string(index) + ".csv");
    const std::string base = c.command + " --config " + cfg.string() + " --seeds 0,1 --out ";
    const bool ok = run_cli(base + a.string()) == 0 && run_cli(base + b.string() + " --jobs 2") == 0 &&
                    !slurp(a).empty() && slurp(a) == slurp(b);
    if (!ok) {
      o.pass = false;
      o.detail += c.command + " differs; ";
    }
    ++index;
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = std::to_string(cases.size()) + " subcommands byte-identical";
  return o;
}

// 11
Outcome gradient_oracle() {
  using LongModel = BasicLinearModel<long double>;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(sub_seed(seed, 77));
    const int classes = 2 + static_cast<int>(rng.below(3));
    const Index dim = 1 + static_cast<Index>(rng.below(5));
    const Index n = 1 + static_cast<Index>(rng.below(12));
    LinearModel m = LinearModel::zeros(classes, dim);
    for (int c = 0; c < classes; ++c) {
      m.biases(c) = rng.normal();
      for (Index j = 0; j < dim; ++j) m.weights(c, j) = rng.normal();
    }
    MatrixXr x(n, dim);
    std::vector<int> y;
    std::vector<double> w;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < dim; ++j) x(i, j) = 2.0 * rng.normal();
      y.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
      w.push_back(rng.uniform(0.1, 3.0));
    }
    MatrixXr gw;
    VectorXr gb;
    softmax_cross_entropy(m, x, std::span<const int>(y), std::span<const double>(w), &gw, &gb);

    LongModel ml{m.weights.cast<long double>(), m.biases.cast<long double>()};
    const Matrix<long double> xl = x.cast<long double>();
    const std::vector<long double> wl(w.begin(), w.end());
    auto loss = [&] {
      return softmax_cross_entropy<long double>(ml, xl, std::span<const int>(y),
                                                std::span<const long double>(wl));
    };
    const long double h = 1e-5L;
    long double diff_sq = 0, ref_sq = 0;
    auto probe = [&](long double& param, double analytic) {
      const long double saved = param;
      param = saved + h;
      const long double up = loss();
      param = saved - h;
      const long double down = loss();
      param = saved;
      const long double numeric = (up - down) / (2 * h);
      diff_sq += (numeric - analytic) * (numeric - analytic);
      ref_sq += numeric * numeric;
    };
    for (Index c = 0; c < classes; ++c) {
      for (Index j = 0; j < dim; ++j) probe(ml.weights(c, j), gw(c, j));
      probe(ml.biases(c), gb(c));
    }
    worst = std::max(worst, static_cast<double>(std::sqrt(diff_sq) / std::max(std::sqrt(ref_sq), 1e-12L)));
  }
  return {worst <= 1e-5, "max relative error=" + fmt(worst)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "linear error closed form vs monte carlo", linear_error_exactness},
      {2, "semi-supervised estimator coverage", estimator_coverage},
      {3, "norm threshold classifier coverage", threshold_coverage},
      {4, "ssp vs raw linear separation", ssp_vs_raw},
      {5, "chi2 and hoeffding concentration", concentration},
      {6, "self-training gain", self_training_gain},
      {7, "rho_u ordering", rho_u_ordering},
      {8, "relevance trend", relevance_trend},
      {9, "generator exactness", generator_exactness},
      {10, "cli determinism", determinism},
      {11, "gradient oracle", gradient_oracle},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail
              << " [" << fmt(secs) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
