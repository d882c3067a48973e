// imba: command-line front end for the experiment engine.
//
//   imba theory t1|t2|t3|chi2 [--config f] [--out f] [--seeds 0,1] [--jobs n]
//   imba data gen --config f --out data.csv [--test-out test.csv]
//   imba train|selftrain|ssp|sweep --config f [--out f] [--seeds ..] [--jobs n]
//
// Flags override the config; IMBA_CONFIG, IMBA_OUT, IMBA_SEEDS and IMBA_JOBS
// stand in for missing flags.

#include "imba/experiment.hpp"
#include "imba/ssl_pipeline.hpp"
#include "imba/ssp_pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using imba::ExperimentKind;

struct CommonArgs {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  int jobs = 0;
};

struct ArtifactArgs {
  std::string model_out;
  std::string report_out;
  std::string diagnostics_out;
  std::string transform_out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "JSON experiment config")->envname("IMBA_CONFIG");
  cmd->add_option("--out", args.out, "CSV output path (stdout when omitted)")->envname("IMBA_OUT");
  cmd->add_option("--seeds", args.seeds, "Comma-separated seed list")
      ->delimiter(',')
      ->envname("IMBA_SEEDS");
  cmd->add_option("--jobs", args.jobs, "Worker threads")->check(CLI::PositiveNumber)->envname("IMBA_JOBS");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw imba::Error(imba::ErrorKind::Io, "cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw imba::Error(imba::ErrorKind::InvalidConfig, path + ": " + e.what());
  }
}

// `any_kind` drops the config's declared experiment (data generation reads the
// data block of any learning config).
imba::ExperimentConfig build_config(const CommonArgs& args, ExperimentKind kind,
                                    bool any_kind = false) {
  nlohmann::json user = args.config.empty() ? nlohmann::json::object() : read_json(args.config);
  if (any_kind && user.is_object()) user.erase("experiment");
  imba::ExperimentConfig config = imba::load_config(user, kind);
  if (!args.seeds.empty()) config.seeds = args.seeds;
  if (args.jobs > 0) config.jobs = args.jobs;
  if (!args.out.empty()) config.out = args.out;
  return config;
}

template <typename Writer>
void write_output(const std::string& path, Writer&& writer) {
  if (path.empty() || path == "-") {
    writer(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw imba::Error(imba::ErrorKind::Io, "cannot open " + path + " for writing");
  writer(out);
  if (!out) throw imba::Error(imba::ErrorKind::Io, "write failed for " + path);
}

// Model, report, diagnostics and transform files describe the first grid point
// and the first seed.
void write_artifacts(const imba::ExperimentConfig& config, const ArtifactArgs& art) {
  if (art.model_out.empty() && art.report_out.empty() && art.diagnostics_out.empty() &&
      art.transform_out.empty()) {
    return;
  }
  const auto points = imba::grid_points(config);
  const nlohmann::json params = imba::apply_grid_point(config.params, points.front());
  const std::uint64_t seed = config.seeds.front();
  const auto task = imba::parse_task(params);
  const auto data = imba::generate_task_data(task, seed);
  const auto cfg = imba::parse_train_config(params, seed);

  std::optional<imba::LinearModel> model;
  std::optional<imba::EvalReport> report;
  if (config.kind == ExperimentKind::Supervised) {
    model = imba::train_softmax(data.labeled, nullptr, cfg);
    report = imba::evaluate(*model, data.test);
  } else if (config.kind == ExperimentKind::SelfTrain) {
    auto result = imba::self_train(data.labeled, data.pool, cfg, cfg, &data.test);
    model = result.final_model;
    report = result.diagnostics.final_eval;
    if (!art.diagnostics_out.empty()) {
      write_output(art.diagnostics_out,
                   [&](std::ostream& o) { imba::write_diagnostics_csv(o, result.diagnostics); });
    }
  } else if (config.kind == ExperimentKind::Ssp) {
    const auto kind = params.at("ssp").at("transform").get<std::string>() == "norm_feature"
                          ? imba::TransformKind::NormFeature
                          : imba::TransformKind::Standardize;
    const imba::FeatureMapSpec map{params.at("ssp").at("k1").get<double>(),
                                   params.at("ssp").at("k2").get<double>()};
    const bool use_pool = params.at("ssp").at("use_pool").get<bool>();
    auto result = imba::pretrain_then_train(data.labeled, use_pool ? &data.pool : nullptr, kind,
                                            cfg, data.test, map);
    model = result.model;
    report = result.ssp_eval;
    if (!art.transform_out.empty()) {
      write_output(art.transform_out,
                   [&](std::ostream& o) { o << result.transform.to_json().dump(2) << '\n'; });
    }
  }
  if (model && !art.model_out.empty()) {
    write_output(art.model_out, [&](std::ostream& o) { imba::write_model_csv(o, *model); });
  }
  if (report && !art.report_out.empty()) {
    report->shot_groups = imba::shot_group_report(*report, data.labeled.class_counts());
    write_output(art.report_out, [&](std::ostream& o) { imba::write_report_csv(o, *report); });
  }
}

int run_experiment(const CommonArgs& args, ExperimentKind kind, const ArtifactArgs* art) {
  const auto config = build_config(args, kind);
  const auto table = imba::run(config);
  write_output(config.out, [&](std::ostream& o) { table.write_csv(o); });
  if (art) write_artifacts(config, *art);
  return 0;
}

int generate_data(const CommonArgs& args, const std::string& test_out) {
  const auto config = build_config(args, ExperimentKind::SelfTrain, true);
  if (config.out.empty()) {
    throw imba::Error(imba::ErrorKind::InvalidConfig, "/out: data gen needs an output path");
  }
  const auto points = imba::grid_points(config);
  const auto params = imba::apply_grid_point(config.params, points.front());
  const auto data = imba::generate_task_data(imba::parse_task(params), config.seeds.front());
  // Labeled rows carry their own label as truth so the pool's hidden labels survive concat.
  std::vector<int> labels(data.labeled.labels().begin(), data.labeled.labels().end());
  const imba::Dataset labeled(data.labeled.features(), labels, data.labeled.class_count(), labels);
  const auto combined = imba::concat(labeled, data.pool);
  write_output(config.out, [&](std::ostream& o) { imba::write_csv(o, combined); });
  if (!test_out.empty()) {
    write_output(test_out, [&](std::ostream& o) { imba::write_csv(o, data.test); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-imbalance learning experiments"};
  app.require_subcommand(1);

  CommonArgs common;
  ArtifactArgs artifacts;
  std::string test_out;

  auto* theory = app.add_subcommand("theory", "Monte Carlo checks of the analytic results");
  theory->require_subcommand(1);
  struct TheoryCmd {
    const char* name;
    ExperimentKind kind;
    const char* help;
  };
  const TheoryCmd theory_cmds[] = {
      {"t1", ExperimentKind::TheoryT1, "Pseudo-label estimator coverage"},
      {"t2", ExperimentKind::TheoryT2, "Raw linear classifier error: closed form vs Monte Carlo"},
      {"t3", ExperimentKind::TheoryT3, "Norm-feature threshold classifier error bound"},
      {"chi2", ExperimentKind::Chi2, "Concentration inequality tails"},
  };
  std::optional<ExperimentKind> chosen;
  for (const auto& t : theory_cmds) {
    auto* cmd = theory->add_subcommand(t.name, t.help);
    add_common(cmd, common);
    cmd->callback([&chosen, kind = t.kind] { chosen = kind; });
  }

  auto* data = app.add_subcommand("data", "Synthetic data generation");
  data->require_subcommand(1);
  auto* gen = data->add_subcommand("gen", "Write labeled + unlabeled rows (and optionally a test set)");
  add_common(gen, common);
  gen->add_option("--test-out", test_out, "Balanced test set CSV");

  struct LearnCmd {
    const char* name;
    ExperimentKind kind;
    const char* help;
  };
  const LearnCmd learn_cmds[] = {
      {"train", ExperimentKind::Supervised, "Supervised softmax baseline"},
      {"selftrain", ExperimentKind::SelfTrain, "Two-stage self-training"},
      {"ssp", ExperimentKind::Ssp, "Input-only transform, then softmax"},
      {"sweep", ExperimentKind::Sweep, "Self-training over one grid axis with rank correlation"},
  };
  for (const auto& l : learn_cmds) {
    auto* cmd = app.add_subcommand(l.name, l.help);
    add_common(cmd, common);
    if (l.kind != ExperimentKind::Sweep) {
      cmd->add_option("--model-out", artifacts.model_out, "Trained model CSV (first point, first seed)");
      cmd->add_option("--report-out", artifacts.report_out, "Evaluation report CSV");
    }
    if (l.kind == ExperimentKind::SelfTrain) {
      cmd->add_option("--diagnostics-out", artifacts.diagnostics_out, "Pseudo-label diagnostics CSV");
    }
    if (l.kind == ExperimentKind::Ssp) {
      cmd->add_option("--transform-out", artifacts.transform_out, "Fitted transform JSON");
    }
    cmd->callback([&chosen, kind = l.kind] { chosen = kind; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return generate_data(common, test_out);
    if (!chosen) return 2;
    const bool learning = *chosen == ExperimentKind::Supervised ||
                          *chosen == ExperimentKind::SelfTrain || *chosen == ExperimentKind::Ssp;
    return run_experiment(common, *chosen, learning ? &artifacts : nullptr);
  } catch (const imba::Error& e) {
    std::cerr << "imba: " << e.what() << '\n';
    return e.kind() == imba::ErrorKind::InvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "imba: " << e.what() << '\n';
    return 1;
  }
}
