#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pod/field.hpp"
#include "pod/metrics.hpp"
#include "pod/runtime.hpp"

namespace pod {

struct MitigationSpec {
  enum class Kind { None, Duplicate, Merge, EarlyTerminate };
  Kind kind = Kind::None;
  std::vector<int> blocks;               // Duplicate
  std::vector<int> ranks;                // Duplicate; empty means every rank
  std::vector<std::vector<int>> groups;  // Merge
  std::vector<int> hosts;                // Merge; -1 entries pick the default host
  int window = 2;                        // EarlyTerminate
};

/// Parsed experiment file. `ranks` and `max_steps` are matrix axes; a run
/// executes their cross product.
struct ExperimentConfig {
  int version = 1;
  std::string name = "experiment";
  SchedulerMode mode = SchedulerMode::DeterministicVirtual;
  std::vector<int> ranks{1, 2, 4, 8};
  std::vector<int> max_steps{50, 100, 500, 1000, 2000};
  GlobalDomain domain{{0, 0, 0}, {1, 1, 1}};
  std::array<int, 3> block_dims{32, 32, 32};
  AnalyticField field = AnalyticField::constant({1, 0, 0});
  SeedSpec seeds;
  AdvectParams advect;  // zero entries resolve to engine defaults
  CostModel costs;
  MitigationSpec mitigation;
  std::optional<std::int64_t> track_particle;
  bool tracing = true;
  bool participation_count_c = false;

  /// Canonical JSON image of the config; echoed into every output file.
  nlohmann::ordered_json canonical() const;
};

/// Parse and validate. Errors name the offending field,
/// e.g. "config field 'seeds.count': must be positive".
ExperimentConfig parse_experiment_config(const nlohmann::ordered_json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Hash of the canonical config with the matrix axes pinned to one cell.
std::string cell_config_hash(const ExperimentConfig& config, int num_ranks,
                             int max_steps);
/// Same, ignoring name, mitigation, tracking and tracing: two runs with equal
/// compat hashes saw the same field, seeds, rng, domain and workload.
std::string cell_compat_hash(const ExperimentConfig& config, int num_ranks,
                             int max_steps);

/// Everything needed to run one (ranks, max_steps) cell.
struct CellSetup {
  BlockLayout layout;
  BlockAssignment assignment;
  std::vector<GridBlock> blocks;
  std::vector<Particle> seeds;
  EngineConfig engine;
};

CellSetup build_cell(const ExperimentConfig& config, int num_ranks, int max_steps);

struct CellResult {
  RunTrace trace;
  RunSummary summary;
};

/// Run one cell in memory; the trace carries the config echo and hashes.
CellResult execute_cell(const ExperimentConfig& config, int num_ranks, int max_steps);

/// File names written into every run directory.
inline constexpr const char* kEventsFile = "trace_events.jsonl";
inline constexpr const char* kParticlesFile = "particles.csv";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kParticipationFile = "participation.csv";
inline constexpr const char* kGanttFile = "gantt.svg";
inline constexpr const char* kConfigFile = "config.json";

/// Execute the full matrix under out_dir. A single-cell config writes its
/// files directly into out_dir; a matrix writes one r{R}_s{S} subdirectory
/// per cell. Returns the per-cell directories.
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config,
                                                  const std::filesystem::path& out_dir);

/// Re-run a previously executed config collecting the detail log for one
/// particle. Throws std::invalid_argument for ids the seed set never
/// contained. Requires a single-cell config.
CellResult rerun_tracked(ExperimentConfig config, std::int64_t particle_id);

struct ComparisonReport {
  std::string baseline_dir;
  std::string variant_dir;
  double t_baseline = 0.0;
  double t_variant = 0.0;
  double speedup = 0.0;  // t_baseline / t_variant
  double participation_baseline = 0.0;
  double participation_variant = 0.0;
  double participation_delta = 0.0;
  long ping_pong_baseline = 0;
  long ping_pong_variant = 0;
  int window = 3;
};

/// Compare two run directories sharing field/seed/rng config modulo
/// mitigation; refuses mismatched compat hashes.
ComparisonReport compare_runs(const std::filesystem::path& baseline_dir,
                              const std::filesystem::path& variant_dir,
                              int window = 3);

nlohmann::ordered_json comparison_to_json(const ComparisonReport& report);

/// Human-readable report for one run directory or a matrix directory (the
/// latter adds weak-scaling efficiency tables per step count).
std::string report_text(const std::filesystem::path& dir);

}  // namespace pod
