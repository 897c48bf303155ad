#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pod/config.hpp"
#include "pod/gantt.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out,
            const std::string& mode, std::optional<std::uint64_t> seed_override,
            std::optional<std::int64_t> track) {
  pod::ExperimentConfig config = pod::load_experiment_config(config_path);
  if (!mode.empty()) {
    if (mode == "virtual")
      config.mode = pod::SchedulerMode::DeterministicVirtual;
    else if (mode == "concurrent")
      config.mode = pod::SchedulerMode::Concurrent;
    else
      throw std::invalid_argument("--mode expects 'virtual' or 'concurrent'");
  }
  if (seed_override) config.seeds.rng_seed = *seed_override;
  if (track) config.track_particle = *track;

  const std::filesystem::path out_dir = out.empty() ? config.name : out;
  const auto dirs = pod::run_experiment(config, out_dir);
  for (const auto& d : dirs) std::cout << d.string() << '\n';
  return 0;
}

int cmd_gantt(const std::string& trace_path, const std::string& out) {
  const std::filesystem::path events = trace_path;
  const std::filesystem::path particles = events.parent_path() / pod::kParticlesFile;
  const pod::RunTrace trace = pod::load_trace(events, particles);
  const std::filesystem::path out_path =
      out.empty() ? events.parent_path() / "gantt_rebuilt.svg" : std::filesystem::path(out);
  pod::write_gantt_svg(trace, out_path);
  std::cout << out_path.string() << '\n';
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, int window) {
  const auto report = pod::compare_runs(dir_a, dir_b, window);
  std::cout << pod::comparison_to_json(report).dump(2) << '\n';
  return 0;
}

int cmd_report(const std::string& dir) {
  std::cout << pod::report_text(dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale simulator for parallelize-over-data particle advection"};
  app.require_subcommand(1);

  std::string config_path, out, mode, trace_path, dir_a, dir_b, report_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::int64_t> track;
  int window = 3;

  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--out", out, "output directory (default: experiment name)");
  run->add_option("--mode", mode, "override scheduler mode: virtual|concurrent");
  run->add_option("--seed-override", seed_override, "override the seeding rng seed");
  run->add_option("--track", track, "collect a detail log for one particle id");

  auto* gantt = app.add_subcommand("gantt", "Render a Gantt SVG from a trace");
  gantt->add_option("trace", trace_path, "trace_events.jsonl path")->required();
  gantt->add_option("--out", out, "output SVG path");

  auto* compare = app.add_subcommand("compare", "Compare two run directories");
  compare->add_option("baseline", dir_a, "baseline run directory")->required();
  compare->add_option("variant", dir_b, "variant run directory")->required();
  compare->add_option("--window", window, "ping-pong detection window");

  auto* report = app.add_subcommand("report", "Summarize a run or matrix directory");
  report->add_option("dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out, mode, seed_override, track);
    if (gantt->parsed()) return cmd_gantt(trace_path, out);
    if (compare->parsed()) return cmd_compare(dir_a, dir_b, window);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
