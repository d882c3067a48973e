#include "imba/experiment.hpp"

#include "imba/gaussian_models.hpp"
#include "imba/parallel.hpp"
#include "imba/random.hpp"
#include "imba/ssl_pipeline.hpp"
#include "imba/ssp_pipeline.hpp"
#include "imba/theory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace imba {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::TheoryT1, "theory_t1"},   {ExperimentKind::TheoryT2, "theory_t2"},
    {ExperimentKind::TheoryT3, "theory_t3"},   {ExperimentKind::Chi2, "chi2"},
    {ExperimentKind::Supervised, "supervised"}, {ExperimentKind::SelfTrain, "self_train"},
    {ExperimentKind::Ssp, "ssp"},               {ExperimentKind::Sweep, "sweep"},
};

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, (path.empty() ? std::string("/") : path) + ": " + what);
}

const char* type_name(const json& j) {
  if (j.is_number()) return "number";
  return j.type_name();
}

bool compatible(const json& def, const json& value) {
  if (def.is_null()) return value.is_null() || value.is_number_integer();
  if (def.is_number()) return value.is_number();
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_string()) return value.is_string();
  if (def.is_array()) return value.is_array();
  return false;
}

// Merges `user` onto `base` in place. Every key must already exist in base
// and leaf types must agree.
void merge_checked(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) config_error(path, "expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string here = path + "/" + key;
    if (!base.contains(key)) config_error(here, "unknown parameter");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_checked(slot, value, here);
    } else if (!compatible(slot, value)) {
      config_error(here, std::string("expected ") + type_name(slot) + ", got " + type_name(value));
    } else {
      slot = value;
    }
  }
}

json::json_pointer dotted_pointer(const std::string& key) {
  std::string pointer;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) config_error("/grid/" + key, "malformed parameter path");
    pointer += "/" + part;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(pointer);
}

double get_number(const json& params, const char* pointer) {
  const json::json_pointer ptr(pointer);
  const json& v = params.at(ptr);
  if (!v.is_number()) config_error(pointer, "expected number");
  return v.get<double>();
}

Index get_index(const json& params, const char* pointer) {
  const double v = get_number(params, pointer);
  if (v != std::floor(v) || !std::isfinite(v)) config_error(pointer, "expected an integer");
  return static_cast<Index>(v);
}

std::string get_string(const json& params, const char* pointer) {
  const json& v = params.at(json::json_pointer(pointer));
  if (!v.is_string()) config_error(pointer, "expected string");
  return v.get<std::string>();
}

std::vector<double> get_number_list(const json& params, const char* pointer) {
  const json& v = params.at(json::json_pointer(pointer));
  if (!v.is_array() || v.empty()) config_error(pointer, "expected a non-empty list");
  std::vector<double> out;
  for (const auto& item : v) {
    if (!item.is_number()) config_error(pointer, "list entries must be numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string cell(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_float()) return format_real(value.get<double>());
  return value.dump();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

bool is_learning(ExperimentKind kind) {
  return kind == ExperimentKind::Supervised || kind == ExperimentKind::SelfTrain ||
         kind == ExperimentKind::Ssp || kind == ExperimentKind::Sweep;
}

using GridPoint = std::vector<std::pair<std::string, json>>;

// ---------------------------------------------------------------------------
// Learning runs

struct RunOutcome {
  bool diverged = false;
  std::vector<double> metrics;
};

std::vector<std::string> metric_names(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Supervised:
      return {"error", "many_error", "medium_error", "few_error"};
    case ExperimentKind::SelfTrain:
    case ExperimentKind::Sweep:
      return {"baseline_error", "final_error", "many_error", "medium_error",
              "few_error",      "pseudo_accuracy", "ood_fraction"};
    case ExperimentKind::Ssp:
      return {"ssp_error", "baseline_error"};
    default:
      return {};
  }
}

double optional_value(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

double nan_mean(const VectorXr& v) {
  double sum = 0.0;
  Index n = 0;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v(i))) continue;
    sum += v(i);
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

RunOutcome run_learning(ExperimentKind kind, const json& params, std::uint64_t seed) {
  const SyntheticTask task = parse_task(params);
  const TaskData data = generate_task_data(task, seed);
  const TrainConfig cfg = parse_train_config(params, seed);
  const std::vector<Index> train_counts = data.labeled.class_counts();

  RunOutcome outcome;
  try {
    switch (kind) {
      case ExperimentKind::Supervised: {
        EvalReport report = evaluate(train_softmax(data.labeled, nullptr, cfg), data.test);
        const ShotGroups shots = shot_group_report(report, train_counts);
        outcome.metrics = {report.top1_error, optional_value(shots.many),
                           optional_value(shots.medium), optional_value(shots.few)};
        break;
      }
      case ExperimentKind::SelfTrain:
      case ExperimentKind::Sweep: {
        const SelfTrainResult result = self_train(data.labeled, data.pool, cfg, cfg, &data.test);
        const EvalReport& final_eval = *result.diagnostics.final_eval;
        const ShotGroups shots = shot_group_report(final_eval, train_counts);
        outcome.metrics = {result.diagnostics.intermediate_eval->top1_error,
                           final_eval.top1_error,
                           optional_value(shots.many),
                           optional_value(shots.medium),
                           optional_value(shots.few),
                           nan_mean(result.diagnostics.quality.per_class_accuracy),
                           result.diagnostics.quality.ood_fraction};
        break;
      }
      case ExperimentKind::Ssp: {
        const TransformKind transform = get_string(params, "/ssp/transform") == "norm_feature"
                                            ? TransformKind::NormFeature
                                            : TransformKind::Standardize;
        const FeatureMapSpec map{get_number(params, "/ssp/k1"), get_number(params, "/ssp/k2")};
        const bool use_pool = params.at(json::json_pointer("/ssp/use_pool")).get<bool>();
        const SspResult result = pretrain_then_train(data.labeled, use_pool ? &data.pool : nullptr,
                                                     transform, cfg, data.test, map);
        outcome.metrics = {result.ssp_eval.top1_error, result.baseline_eval.top1_error};
        break;
      }
      default:
        throw Error(ErrorKind::Unsupported, "not a learning experiment");
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TrainingDiverged) throw;
    outcome.diverged = true;
    outcome.metrics.clear();
  }
  return outcome;
}

ResultTable run_learning_table(const ExperimentConfig& config) {
  const auto points = grid_points(config);
  const auto names = metric_names(config.kind);
  const std::size_t n_seeds = config.seeds.size();

  std::vector<json> point_params;
  point_params.reserve(points.size());
  for (const auto& point : points) point_params.push_back(apply_grid_point(config.params, point));

  std::vector<RunOutcome> outcomes(points.size() * n_seeds);
  parallel_for(static_cast<Index>(outcomes.size()), config.jobs, [&](Index job) {
    const auto p = static_cast<std::size_t>(job) / n_seeds;
    const auto s = static_cast<std::size_t>(job) % n_seeds;
    outcomes[static_cast<std::size_t>(job)] =
        run_learning(config.kind, point_params[p], config.seeds[s]);
  });

  ResultTable table;
  table.header.push_back("row");
  for (const auto& axis : config.grid) table.header.push_back(axis.key);
  table.header.push_back("seed");
  table.header.push_back("status");
  table.header.insert(table.header.end(), names.begin(), names.end());

  auto prefix = [&](const char* row, const GridPoint& point) {
    std::vector<std::string> r{row};
    for (const auto& [key, value] : point) r.push_back(cell(value));
    return r;
  };

  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<std::vector<double>> ok;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const RunOutcome& o = outcomes[p * n_seeds + s];
      auto r = prefix("run", points[p]);
      r.push_back(std::to_string(config.seeds[s]));
      r.push_back(o.diverged ? "diverged" : "ok");
      for (std::size_t m = 0; m < names.size(); ++m) {
        const bool blank = o.diverged || std::isnan(o.metrics[m]);
        r.push_back(blank ? std::string() : format_real(o.metrics[m]));
      }
      table.rows.push_back(std::move(r));
      if (!o.diverged) ok.push_back(o.metrics);
    }
    auto mean_row = prefix("mean", points[p]);
    auto std_row = prefix("std", points[p]);
    for (auto* r : {&mean_row, &std_row}) {
      r->push_back("");
      r->push_back(std::to_string(ok.size()) + "/" + std::to_string(n_seeds));
    }
    for (std::size_t m = 0; m < names.size(); ++m) {
      std::vector<double> values;
      for (const auto& metrics : ok) {
        if (!std::isnan(metrics[m])) values.push_back(metrics[m]);
      }
      if (values.empty()) {
        mean_row.push_back("");
        std_row.push_back("");
        continue;
      }
      const double n = static_cast<double>(values.size());
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      mean_row.push_back(format_real(mean));
      std_row.push_back(format_real(sd));
    }
    table.rows.push_back(std::move(mean_row));
    table.rows.push_back(std::move(std_row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Theory runs

ResultTable verification_table(const ExperimentConfig& config) {
  ResultTable table;
  {
    std::string header = kVerificationCsvHeader;
    std::stringstream ss(header);
    std::string col;
    while (std::getline(ss, col, ',')) table.header.push_back(col);
  }
  auto push = [&](const VerificationReport& report) {
    std::ostringstream line;
    write_csv_row(line, report);
    std::string text = line.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    // Re-split respecting the quoted param_json field.
    std::vector<std::string> cells;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '"') {
        if (quoted && i + 1 < text.size() && text[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = !quoted;
        }
      } else if (c == ',' && !quoted) {
        cells.push_back(std::move(current));
        current.clear();
      } else {
        current += c;
      }
    }
    cells.push_back(std::move(current));
    table.rows.push_back(std::move(cells));
  };

  for (const auto& point : grid_points(config)) {
    const json params = apply_grid_point(config.params, point);
    for (std::uint64_t seed : config.seeds) {
      switch (config.kind) {
        case ExperimentKind::TheoryT1: {
          const Mixture1D spec{get_number(params, "/theory/t1/mu1"),
                               get_number(params, "/theory/t1/mu2"),
                               get_number(params, "/theory/t1/sigma")};
          const PseudoLabelerSpec labeler{get_number(params, "/theory/t1/p"),
                                          get_number(params, "/theory/t1/q")};
          push(verify_theorem1(spec, labeler, get_index(params, "/theory/t1/n_pos"),
                               get_index(params, "/theory/t1/n_neg"),
                               get_number(params, "/theory/t1/delta"),
                               get_index(params, "/theory/t1/trials"), seed, config.jobs));
          break;
        }
        case ExperimentKind::TheoryT3: {
          MixtureHD spec;
          spec.dim = static_cast<int>(get_index(params, "/theory/t3/dim"));
          spec.sigma1_sq = get_number(params, "/theory/t3/sigma1_sq");
          spec.beta = get_number(params, "/theory/t3/beta");
          const Index n_pos = get_index(params, "/theory/t3/n_pos");
          const Index n_neg = get_index(params, "/theory/t3/n_neg");
          if (n_pos < 1 || n_neg < 1) config_error("/theory/t3", "n_pos and n_neg must be >= 1");
          spec.p_plus = static_cast<double>(n_pos) / static_cast<double>(n_pos + n_neg);
          const FeatureMapSpec map{get_number(params, "/theory/t3/k1"),
                                   get_number(params, "/theory/t3/k2")};
          push(verify_theorem3(spec, map, n_pos, n_neg, get_number(params, "/theory/t3/delta"),
                               get_index(params, "/theory/t3/trials"),
                               get_index(params, "/theory/t3/mc_test_samples"), seed,
                               config.jobs));
          break;
        }
        case ExperimentKind::Chi2: {
          const auto ns = get_number_list(params, "/theory/chi2/n");
          const auto deltas = get_number_list(params, "/theory/chi2/delta");
          const auto ts = get_number_list(params, "/theory/chi2/hoeffding_t");
          const double p = get_number(params, "/theory/chi2/hoeffding_p");
          const Index trials = get_index(params, "/theory/chi2/trials");
          std::uint64_t stream = 0;
          for (double n : ns) {
            const auto count = static_cast<Index>(n);
            if (count < 1 || n != std::floor(n)) config_error("/theory/chi2/n", "entries must be positive integers");
            for (double delta : deltas) {
              push(chi2_concentration_check(count, delta, trials, sub_seed(seed, stream++)));
            }
            for (double t : ts) {
              push(hoeffding_check(count, p, t, trials, sub_seed(seed, stream++)));
            }
            for (double delta : deltas) {
              push(gaussian_mean_check(1.0, count, count, delta, trials, sub_seed(seed, stream++)));
            }
          }
          break;
        }
        default:
          throw Error(ErrorKind::Unsupported, "not a verification experiment");
      }
    }
  }
  return table;
}

ResultTable linear_error_table(const ExperimentConfig& config) {
  ResultTable table;
  table.header = {"p_plus", "beta", "b_over_norm_sigma", "closed_form", "mc_estimate", "mc_stderr"};
  for (const auto& point : grid_points(config)) {
    const json params = apply_grid_point(config.params, point);
    const Index sets = get_index(params, "/theory/t2/param_sets");
    const Index samples = get_index(params, "/theory/t2/samples");
    const auto dim = static_cast<int>(get_index(params, "/theory/t2/dim"));
    const double sigma1_sq = get_number(params, "/theory/t2/sigma1_sq");
    const double beta_max = get_number(params, "/theory/t2/beta_max");
    const double margin_max = get_number(params, "/theory/t2/margin_max");
    if (sets < 1) config_error("/theory/t2/param_sets", "must be >= 1");
    if (!(beta_max > 3.0)) config_error("/theory/t2/beta_max", "must exceed 3");
    if (!(margin_max > 0.0)) config_error("/theory/t2/margin_max", "must be positive");
    for (std::uint64_t seed : config.seeds) {
      std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(sets));
      parallel_for(sets, config.jobs, [&](Index k) {
        Rng rng(sub_seed(seed, 2 * static_cast<std::uint64_t>(k)));
        MixtureHD spec;
        spec.dim = dim;
        spec.sigma1_sq = sigma1_sq;
        // p_plus in (0.05, 0.5], beta in (3, beta_max], margin in (0, margin_max].
        spec.p_plus = 0.5 - 0.45 * rng.uniform();
        spec.beta = beta_max - (beta_max - 3.0) * rng.uniform();
        const double margin = margin_max * (1.0 - rng.uniform());
        VectorXr theta(dim);
        for (int j = 0; j < dim; ++j) theta(j) = rng.normal();
        theta *= rng.uniform(0.5, 2.0) / theta.norm();
        const double b = margin * theta.norm() * spec.sigma1();
        const double closed = linear_error_closed_form(spec, theta.norm(), b);
        const MonteCarloError mc = linear_monte_carlo_error(
            spec, theta, b, samples, sub_seed(seed, 2 * static_cast<std::uint64_t>(k) + 1));
        rows[static_cast<std::size_t>(k)] = {format_real(spec.p_plus), format_real(spec.beta),
                                             format_real(margin),      format_real(closed),
                                             format_real(mc.estimate), format_real(mc.stderr_)};
      });
      for (auto& r : rows) table.rows.push_back(std::move(r));
    }
  }
  return table;
}

// Average ranks, 1-based.
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

void require_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "rank correlation needs equal lengths");
  if (x.size() < 2) throw Error(ErrorKind::OutOfRange, "rank correlation needs at least two points");
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  const std::string key = lower(name);
  for (const auto& [k, n] : kKindNames) {
    if (key == n) return k;
  }
  config_error("/experiment", "unknown experiment kind '" + name + "'");
}

json default_parameters() {
  return json::parse(R"({
    "data": {
      "profile": {"kind": "long_tailed", "n_classes": 10, "n_head": 500, "rho": 50},
      "blobs": {"dim": 16, "separation": 4.0, "stddev": 1.0, "scale_spread": 0.0, "model_seed": null},
      "pool": {"multiplier": 5.0, "rho_u": 50.0, "relevance": 1.0, "irrelevant_displacement": 5.0},
      "labeled_fraction": 1.0,
      "test_per_class": 500
    },
    "train": {
      "epochs": 20, "learning_rate": 0.05, "batch_size": 64,
      "weight_scheme": "uniform", "reweight_start_epoch": null, "omega": 1.0
    },
    "ssp": {"transform": "standardize", "k1": 1.0, "k2": 1.0, "use_pool": true},
    "theory": {
      "t1": {"mu1": 1.0, "mu2": -1.0, "sigma": 1.0, "p": 0.9, "q": 0.6,
             "n_pos": 1000, "n_neg": 1000, "delta": 0.3, "trials": 2000},
      "t2": {"param_sets": 10, "samples": 1000000, "dim": 4, "sigma1_sq": 1.0,
             "beta_max": 10.0, "margin_max": 3.0},
      "t3": {"dim": 100, "beta": 4.0, "sigma1_sq": 1.0, "k1": 1.0, "k2": 1.0,
             "n_pos": 50, "n_neg": 500, "delta": 0.3, "trials": 500, "mc_test_samples": 100000},
      "chi2": {"n": [10, 50, 200], "delta": [0.2, 0.4, 0.6], "hoeffding_t": [0.05, 0.1, 0.2],
               "hoeffding_p": 0.5, "trials": 100000}
    }
  })");
}

ExperimentConfig load_config(const json& user, std::optional<ExperimentKind> forced_kind) {
  if (!user.is_object()) config_error("", "config must be a JSON object");
  ExperimentConfig config;
  config.params = default_parameters();

  std::optional<ExperimentKind> declared;
  for (const auto& [key, value] : user.items()) {
    const std::string path = "/" + key;
    if (key == "experiment") {
      if (!value.is_string()) config_error(path, "expected string");
      declared = experiment_kind_from_string(value.get<std::string>());
    } else if (key == "grid") {
      if (!value.is_object()) config_error(path, "expected an object of parameter -> list");
      for (const auto& [gkey, gvalues] : value.items()) {
        const std::string gpath = path + "/" + gkey;
        const auto pointer = dotted_pointer(gkey);
        if (!config.params.contains(pointer)) config_error(gpath, "no such parameter");
        const json& def = config.params.at(pointer);
        if (def.is_object()) config_error(gpath, "grid keys must name a single parameter");
        if (!gvalues.is_array() || gvalues.empty()) config_error(gpath, "expected a non-empty list");
        GridAxis axis{gkey, {}};
        for (const auto& v : gvalues) {
          if (!compatible(def, v)) {
            config_error(gpath, std::string("expected ") + type_name(def) + " values");
          }
          axis.values.push_back(v);
        }
        config.grid.push_back(std::move(axis));
      }
    } else if (key == "seeds") {
      if (!value.is_array() || value.empty()) config_error(path, "expected a non-empty list");
      config.seeds.clear();
      for (const auto& s : value) {
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
          config_error(path, "seeds must be non-negative integers");
        }
        config.seeds.push_back(s.get<std::uint64_t>());
      }
    } else if (key == "jobs") {
      if (!value.is_number_integer() || value.get<int>() < 1) config_error(path, "expected an integer >= 1");
      config.jobs = value.get<int>();
    } else if (key == "out") {
      if (!value.is_string()) config_error(path, "expected string");
      config.out = value.get<std::string>();
    } else if (config.params.contains(key)) {
      merge_checked(config.params[key], value, path);
    } else {
      config_error(path, "unknown key");
    }
  }

  if (forced_kind && declared && *forced_kind != *declared) {
    config_error("/experiment", std::string("config declares '") + to_string(*declared) +
                                    "' but the command runs '" + to_string(*forced_kind) + "'");
  }
  if (forced_kind) {
    config.kind = *forced_kind;
  } else if (declared) {
    config.kind = *declared;
  } else {
    config_error("/experiment", "missing experiment kind");
  }
  std::sort(config.grid.begin(), config.grid.end(),
            [](const GridAxis& a, const GridAxis& b) { return a.key < b.key; });

  if (config.kind == ExperimentKind::Sweep) {
    if (config.grid.size() != 1) config_error("/grid", "sweep needs exactly one grid axis");
    if (config.grid.front().key == "data.pool.relevance") {
      for (const auto& v : config.grid.front().values) {
        const double r = v.get<double>();
        if (!(r >= 0.0 && r <= 1.0)) config_error("/grid/data.pool.relevance", "values must lie in [0, 1]");
      }
    }
    if (config.grid.front().values.size() < 2) config_error("/grid", "sweep needs at least two values");
  }
  // Parse eagerly so bad values surface before any work starts.
  if (is_learning(config.kind)) {
    for (const auto& point : grid_points(config)) {
      const json params = apply_grid_point(config.params, point);
      try {
        const SyntheticTask task = parse_task(params);
        (void)task;
        parse_train_config(params, 0).validate();
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidConfig) throw;
        throw Error(ErrorKind::InvalidConfig, std::string("invalid parameters: ") + e.what());
      }
    }
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path, std::optional<ExperimentKind> forced_kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  json user;
  try {
    user = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path + ": " + e.what());
  }
  return load_config(user, forced_kind);
}

std::vector<GridPoint> grid_points(const ExperimentConfig& config) {
  std::vector<GridPoint> points{GridPoint{}};
  for (const auto& axis : config.grid) {
    std::vector<GridPoint> next;
    for (const auto& point : points) {
      for (const auto& value : axis.values) {
        GridPoint p = point;
        p.emplace_back(axis.key, value);
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

json apply_grid_point(const json& params, std::span<const std::pair<std::string, json>> point) {
  json out = params;
  for (const auto& [key, value] : point) {
    const auto pointer = dotted_pointer(key);
    if (!out.contains(pointer)) config_error("/grid/" + key, "no such parameter");
    out[pointer] = value;
  }
  return out;
}

SyntheticTask parse_task(const json& params) {
  SyntheticTask task;
  const std::string kind = get_string(params, "/data/profile/kind");
  if (kind == "long_tailed") {
    task.profile.kind = ImbalanceKind::LongTailed;
  } else if (kind == "step") {
    task.profile.kind = ImbalanceKind::Step;
  } else if (kind == "uniform") {
    task.profile.kind = ImbalanceKind::Uniform;
  } else {
    config_error("/data/profile/kind", "expected long_tailed, step or uniform");
  }
  task.profile.n_classes = static_cast<int>(get_index(params, "/data/profile/n_classes"));
  task.profile.n_head = get_index(params, "/data/profile/n_head");
  task.profile.rho = get_number(params, "/data/profile/rho");
  if (task.profile.n_classes < 2) config_error("/data/profile/n_classes", "must be >= 2");
  if (task.profile.n_head < 1) config_error("/data/profile/n_head", "must be >= 1");
  (void)task.profile.counts();

  task.dim = get_index(params, "/data/blobs/dim");
  if (task.dim < 1) config_error("/data/blobs/dim", "must be >= 1");
  const json& model_seed = params.at(json::json_pointer("/data/blobs/model_seed"));
  if (!model_seed.is_null()) {
    if (model_seed.get<std::int64_t>() < 0) config_error("/data/blobs/model_seed", "must be >= 0");
    task.model_seed = model_seed.get<std::uint64_t>();
  }
  task.stddev = get_number(params, "/data/blobs/stddev");
  if (!(task.stddev > 0.0)) config_error("/data/blobs/stddev", "must be positive");
  task.scale_spread = get_number(params, "/data/blobs/scale_spread");
  if (!(task.scale_spread >= 0.0)) config_error("/data/blobs/scale_spread", "must be >= 0");
  task.separation = get_number(params, "/data/blobs/separation");
  if (!(task.separation >= 0.0)) config_error("/data/blobs/separation", "must be >= 0");
  task.irrelevant_displacement = get_number(params, "/data/pool/irrelevant_displacement");
  if (!(task.irrelevant_displacement >= 0.0)) {
    config_error("/data/pool/irrelevant_displacement", "must be >= 0");
  }

  task.pool.multiplier = get_number(params, "/data/pool/multiplier");
  task.pool.rho_u = get_number(params, "/data/pool/rho_u");
  task.pool.relevance = get_number(params, "/data/pool/relevance");
  task.pool.validate();

  task.labeled_fraction = get_number(params, "/data/labeled_fraction");
  if (!(task.labeled_fraction > 0.0 && task.labeled_fraction <= 1.0)) {
    config_error("/data/labeled_fraction", "must lie in (0, 1]");
  }
  task.test_per_class = get_index(params, "/data/test_per_class");
  if (task.test_per_class < 1) config_error("/data/test_per_class", "must be >= 1");
  return task;
}

TrainConfig parse_train_config(const json& params, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = static_cast<int>(get_index(params, "/train/epochs"));
  cfg.learning_rate = get_number(params, "/train/learning_rate");
  cfg.batch_size = get_index(params, "/train/batch_size");
  const std::string scheme = get_string(params, "/train/weight_scheme");
  if (scheme == "uniform") {
    cfg.weight_scheme = WeightScheme::Uniform;
  } else if (scheme == "inverse_frequency") {
    cfg.weight_scheme = WeightScheme::InverseFrequency;
  } else {
    config_error("/train/weight_scheme", "expected uniform or inverse_frequency");
  }
  const json& start = params.at(json::json_pointer("/train/reweight_start_epoch"));
  if (!start.is_null()) cfg.reweight_start_epoch = start.get<int>();
  cfg.omega = get_number(params, "/train/omega");
  cfg.seed = sub_seed(seed, 3);
  return cfg;
}

TaskData generate_task_data(const SyntheticTask& task, std::uint64_t seed) {
  const std::uint64_t geometry = task.model_seed ? *task.model_seed : sub_seed(seed, 6);
  BlobModel blobs = BlobModel::random(task.profile.n_classes, task.dim, task.separation,
                                      task.stddev, task.scale_spread, geometry);
  IrrelevantModel irrelevant =
      IrrelevantModel::displaced_from(blobs, task.irrelevant_displacement, sub_seed(geometry, 1));
  Dataset labeled = synthesize_labeled(task.profile, blobs, sub_seed(seed, 1));
  if (task.labeled_fraction < 1.0) {
    labeled = subsample_labeled(labeled, task.labeled_fraction, sub_seed(seed, 5));
  }
  const std::vector<Index> test_counts(static_cast<std::size_t>(task.profile.n_classes),
                                       task.test_per_class);
  Dataset test = synthesize_from_counts(test_counts, blobs, sub_seed(seed, 2));
  UnlabeledPoolConfig pool_cfg = task.pool;
  pool_cfg.seed = sub_seed(seed, 4);
  Dataset pool = synthesize_unlabeled(labeled, pool_cfg, blobs, irrelevant);
  return TaskData{std::move(blobs), std::move(irrelevant), std::move(labeled), std::move(pool),
                  std::move(test)};
}

std::size_t ResultTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::OutOfRange, "no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

void ResultTable::write_csv(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_field(cells[i]);
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

ResultTable run(const ExperimentConfig& config) {
  if (config.seeds.empty()) config_error("/seeds", "expected a non-empty list");
  if (config.jobs < 1) config_error("/jobs", "expected an integer >= 1");
  switch (config.kind) {
    case ExperimentKind::TheoryT1:
    case ExperimentKind::TheoryT3:
    case ExperimentKind::Chi2:
      return verification_table(config);
    case ExperimentKind::TheoryT2:
      return linear_error_table(config);
    case ExperimentKind::Sweep:
      return sweep_relevance(config);
    default:
      return run_learning_table(config);
  }
}

ResultTable sweep_relevance(const ExperimentConfig& config) {
  if (config.grid.size() != 1 || config.grid.front().values.size() < 2) {
    config_error("/grid", "sweep needs exactly one grid axis with at least two values");
  }
  ExperimentConfig inner = config;
  inner.kind = ExperimentKind::Sweep;
  ResultTable table = run_learning_table(inner);

  const std::size_t value_col = 1;
  const std::size_t err_col = table.column("final_error");
  std::vector<double> xs, ys;
  for (const auto& r : table.rows) {
    if (r[0] != "mean" || r[err_col].empty()) continue;
    xs.push_back(parse_real(r[value_col]));
    ys.push_back(parse_real(r[err_col]));
  }
  std::vector<std::string> summary(table.header.size());
  summary[0] = "spearman";
  summary[table.column("status")] = xs.size() == config.grid.front().values.size() ? "ok" : "partial";
  summary[err_col] = xs.size() >= 2 ? format_real(spearman(xs, ys)) : std::string();
  table.rows.push_back(std::move(summary));
  return table;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  double score = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double s = (x[j] - x[i]) * (y[j] - y[i]);
      score += (s > 0.0) - (s < 0.0);
    }
  }
  const double n = static_cast<double>(x.size());
  return score / (n * (n - 1.0) / 2.0);
}

}  // namespace imba
