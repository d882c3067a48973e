#pragma once

#include "imba/dataset.hpp"
#include "imba/imbalance.hpp"
#include "imba/learner.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace imba {

enum class ExperimentKind { TheoryT1, TheoryT2, TheoryT3, Chi2, Supervised, SelfTrain, Ssp, Sweep };

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// One grid axis: a dotted parameter path (e.g. "data.pool.rho_u") and the
/// values it takes.
struct GridAxis {
  std::string key;
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SelfTrain;
  nlohmann::json params;  // full parameter tree: defaults merged with the user's values
  std::vector<GridAxis> grid;
  std::vector<std::uint64_t> seeds{0};
  int jobs = 1;
  std::string out;
};

/// Parameter tree every config is merged onto. Keys absent here are rejected.
nlohmann::json default_parameters();

/// Validates and merges a user config. `forced_kind` (from a CLI subcommand)
/// wins over the config's own "experiment" field, which must agree when present.
/// Errors are InvalidConfig with a JSON-pointer path in the message.
ExperimentConfig load_config(const nlohmann::json& user,
                             std::optional<ExperimentKind> forced_kind = std::nullopt);
ExperimentConfig load_config_file(const std::string& path,
                                  std::optional<ExperimentKind> forced_kind = std::nullopt);

/// Cartesian product of the grid in axis order; a config without a grid has
/// one point. Each point is a list of (key, value).
std::vector<std::vector<std::pair<std::string, nlohmann::json>>> grid_points(
    const ExperimentConfig& config);

/// Parameter tree with one grid point applied.
nlohmann::json apply_grid_point(const nlohmann::json& params,
                                std::span<const std::pair<std::string, nlohmann::json>> point);

// ---------------------------------------------------------------------------
// Synthetic task plumbing shared by the learning experiments.

struct SyntheticTask {
  ImbalanceProfile profile;
  Index dim = 16;
  double separation = 4.0;
  double stddev = 1.0;
  double scale_spread = 0.0;
  double irrelevant_displacement = 5.0;
  /// Fixed class geometry; unset draws a fresh geometry from each run seed.
  std::optional<std::uint64_t> model_seed;
  UnlabeledPoolConfig pool;
  double labeled_fraction = 1.0;
  Index test_per_class = 500;
};

struct TaskData {
  BlobModel blobs;
  IrrelevantModel irrelevant;
  Dataset labeled;
  Dataset pool;
  Dataset test;  // balanced
};

SyntheticTask parse_task(const nlohmann::json& params);
TrainConfig parse_train_config(const nlohmann::json& params, std::uint64_t seed);

/// All randomness derives from `seed` (and model_seed when set): geometry,
/// labeled set, test set, pool and subsampling use independent sub-streams,
/// so grid points sharing a seed share their labeled and test sets.
TaskData generate_task_data(const SyntheticTask& task, std::uint64_t seed);

// ---------------------------------------------------------------------------

struct ResultTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws when absent.
  std::size_t column(const std::string& name) const;
  void write_csv(std::ostream& out) const;
};

/// Executes the configured pipeline per grid point per seed. Learning kinds
/// emit `row,<grid keys>,seed,status,<metrics>` with one `run` row per
/// (point, seed) and `mean` / `std` rows per point; diverged runs are kept
/// with status `diverged` and excluded from the aggregates. Theory kinds emit
/// their fixed verification schemas.
ResultTable run(const ExperimentConfig& config);

/// Self-training across a single relevance-style grid axis, followed by a
/// `spearman` row holding the rank correlation between the axis value and
/// the mean final error.
ResultTable sweep_relevance(const ExperimentConfig& config);

// ---------------------------------------------------------------------------

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);
/// Kendall tau-a.
double kendall_tau(std::span<const double> x, std::span<const double> y);

}  // namespace imba
