#include "pod/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pod/gantt.hpp"

namespace pod {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config field '" + path + "': " + what);
}

const nlohmann::ordered_json& require(const nlohmann::ordered_json& j,
                                      const std::string& key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) fail(path + key, "missing");
  return *it;
}

Vec3 parse_vec3(const nlohmann::ordered_json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail(path, "expected an [x, y, z] array");
  for (const auto& c : j)
    if (!c.is_number()) fail(path, "expected numeric components");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

std::vector<int> parse_int_axis(const nlohmann::ordered_json& j, const std::string& path) {
  std::vector<int> values;
  if (j.is_number_integer()) {
    values.push_back(j.get<int>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number_integer()) fail(path, "expected integers");
      values.push_back(v.get<int>());
    }
  } else {
    fail(path, "expected an integer or an array of integers");
  }
  if (values.empty()) fail(path, "must not be empty");
  for (int v : values)
    if (v <= 0) fail(path, "entries must be positive");
  return values;
}

nlohmann::ordered_json vec3_json(const Vec3& v) {
  return nlohmann::ordered_json::array({v.x, v.y, v.z});
}

AnalyticField parse_field(const nlohmann::ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::string kind = require(j, "kind", path + ".").get<std::string>();
  auto vec_or = [&](const char* key, const Vec3& fallback) {
    return j.contains(key) ? parse_vec3(j.at(key), path + "." + key) : fallback;
  };
  auto num_or = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) fail(path + "." + key, "expected a number");
    return j.at(key).get<double>();
  };

  AnalyticField field;
  if (kind == "cylindrical") {
    field = AnalyticField::cylindrical(vec_or("center", {}), vec_or("axis", {0, 0, 1}),
                                       num_or("strength", 1.0), vec_or("drift", {}));
  } else if (kind == "sink") {
    field = AnalyticField::sink(vec_or("center", {}), num_or("strength", 1.0));
  } else if (kind == "outflow") {
    field = AnalyticField::outflow(vec_or("center", {}), num_or("strength", 1.0),
                                   vec_or("drift", {}));
  } else if (kind == "constant") {
    field = AnalyticField::constant(
        parse_vec3(require(j, "velocity", path + "."), path + ".velocity"));
  } else if (kind == "boundary_vortex") {
    field = AnalyticField::boundary_vortex(
        parse_vec3(require(j, "center", path + "."), path + ".center"),
        vec_or("axis", {0, 0, 1}), num_or("strength", 1.0), num_or("decay", 0.0),
        static_cast<int>(num_or("plane_axis", 0)), num_or("plane_coord", 0.0),
        num_or("plane_delta", 0.0));
    field.drift = vec_or("drift", {});
  } else if (kind == "composite") {
    std::vector<AnalyticField> terms;
    const auto& jt = require(j, "terms", path + ".");
    if (!jt.is_array() || jt.empty()) fail(path + ".terms", "expected a non-empty array");
    for (std::size_t i = 0; i < jt.size(); ++i)
      terms.push_back(parse_field(jt.at(i), path + ".terms[" + std::to_string(i) + "]"));
    field = AnalyticField::composite(std::move(terms));
    field.drift = vec_or("drift", {});
  } else {
    fail(path + ".kind", "unknown field kind '" + kind + "'");
  }
  try {
    field.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return field;
}

nlohmann::ordered_json field_json(const AnalyticField& f) {
  nlohmann::ordered_json j;
  switch (f.kind) {
    case AnalyticField::Kind::Cylindrical: j["kind"] = "cylindrical"; break;
    case AnalyticField::Kind::Sink: j["kind"] = "sink"; break;
    case AnalyticField::Kind::Outflow: j["kind"] = "outflow"; break;
    case AnalyticField::Kind::BoundaryVortex: j["kind"] = "boundary_vortex"; break;
    case AnalyticField::Kind::Composite: j["kind"] = "composite"; break;
  }
  j["center"] = vec3_json(f.center);
  j["axis"] = vec3_json(f.axis);
  j["strength"] = f.strength;
  j["decay"] = f.decay;
  j["drift"] = vec3_json(f.drift);
  j["plane_axis"] = f.plane_axis;
  j["plane_coord"] = f.plane_coord;
  j["plane_delta"] = f.plane_delta;
  auto terms = nlohmann::ordered_json::array();
  for (const auto& t : f.terms) terms.push_back(field_json(t));
  j["terms"] = std::move(terms);
  return j;
}

SeedSpec parse_seeds(const nlohmann::ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  SeedSpec spec;
  const std::string kind = require(j, "kind", path + ".").get<std::string>();
  if (kind == "per_block_random")
    spec.kind = SeedSpec::Kind::PerBlockRandom;
  else if (kind == "box_fraction")
    spec.kind = SeedSpec::Kind::BoxFraction;
  else if (kind == "line")
    spec.kind = SeedSpec::Kind::Line;
  else if (kind == "plane")
    spec.kind = SeedSpec::Kind::Plane;
  else
    fail(path + ".kind", "unknown seed kind '" + kind + "'");

  spec.count = require(j, "count", path + ".").get<long>();
  if (spec.count <= 0) fail(path + ".count", "must be positive");
  if (j.contains("rng_seed")) spec.rng_seed = j.at("rng_seed").get<std::uint64_t>();

  switch (spec.kind) {
    case SeedSpec::Kind::BoxFraction:
      spec.fraction = require(j, "fraction", path + ".").get<double>();
      if (spec.fraction <= 0.0 || spec.fraction > 1.0)
        fail(path + ".fraction", "must lie in (0, 1]");
      if (j.contains("center") && !j.at("center").is_null())
        spec.box_center = parse_vec3(j.at("center"), path + ".center");
      break;
    case SeedSpec::Kind::Line:
      spec.line_a = parse_vec3(require(j, "a", path + "."), path + ".a");
      spec.line_b = parse_vec3(require(j, "b", path + "."), path + ".b");
      break;
    case SeedSpec::Kind::Plane:
      spec.plane_origin = parse_vec3(require(j, "origin", path + "."), path + ".origin");
      spec.plane_u = parse_vec3(require(j, "u", path + "."), path + ".u");
      spec.plane_v = parse_vec3(require(j, "v", path + "."), path + ".v");
      break;
    case SeedSpec::Kind::PerBlockRandom:
      break;
  }
  return spec;
}

nlohmann::ordered_json seeds_json(const SeedSpec& s) {
  nlohmann::ordered_json j;
  switch (s.kind) {
    case SeedSpec::Kind::PerBlockRandom: j["kind"] = "per_block_random"; break;
    case SeedSpec::Kind::BoxFraction: j["kind"] = "box_fraction"; break;
    case SeedSpec::Kind::Line: j["kind"] = "line"; break;
    case SeedSpec::Kind::Plane: j["kind"] = "plane"; break;
  }
  j["count"] = s.count;
  j["fraction"] = s.fraction;
  j["center"] = s.box_center ? vec3_json(*s.box_center) : nlohmann::ordered_json{};
  j["a"] = vec3_json(s.line_a);
  j["b"] = vec3_json(s.line_b);
  j["origin"] = vec3_json(s.plane_origin);
  j["u"] = vec3_json(s.plane_u);
  j["v"] = vec3_json(s.plane_v);
  j["rng_seed"] = s.rng_seed;
  return j;
}

MitigationSpec parse_mitigation(const nlohmann::ordered_json& j, const std::string& path) {
  MitigationSpec spec;
  if (!j.is_object()) fail(path, "expected an object");
  const std::string kind = require(j, "kind", path + ".").get<std::string>();
  if (kind == "none") {
    spec.kind = MitigationSpec::Kind::None;
  } else if (kind == "duplicate") {
    spec.kind = MitigationSpec::Kind::Duplicate;
    for (const auto& b : require(j, "blocks", path + "."))
      spec.blocks.push_back(b.get<int>());
    if (spec.blocks.empty()) fail(path + ".blocks", "must not be empty");
    if (j.contains("ranks") && !j.at("ranks").is_string())
      for (const auto& r : j.at("ranks")) spec.ranks.push_back(r.get<int>());
  } else if (kind == "merge") {
    spec.kind = MitigationSpec::Kind::Merge;
    for (const auto& g : require(j, "groups", path + ".")) {
      std::vector<int> group;
      for (const auto& b : g) group.push_back(b.get<int>());
      if (group.empty()) fail(path + ".groups", "groups must not be empty");
      spec.groups.push_back(std::move(group));
    }
    if (spec.groups.empty()) fail(path + ".groups", "must not be empty");
    if (j.contains("hosts"))
      for (const auto& h : j.at("hosts")) spec.hosts.push_back(h.get<int>());
    if (!spec.hosts.empty() && spec.hosts.size() != spec.groups.size())
      fail(path + ".hosts", "must match the number of groups");
  } else if (kind == "early_terminate") {
    spec.kind = MitigationSpec::Kind::EarlyTerminate;
    spec.window = require(j, "window", path + ".").get<int>();
    if (spec.window < 2) fail(path + ".window", "must be >= 2");
  } else {
    fail(path + ".kind", "unknown mitigation kind '" + kind + "'");
  }
  return spec;
}

nlohmann::ordered_json mitigation_json(const MitigationSpec& m) {
  nlohmann::ordered_json j;
  switch (m.kind) {
    case MitigationSpec::Kind::None: j["kind"] = "none"; break;
    case MitigationSpec::Kind::Duplicate: j["kind"] = "duplicate"; break;
    case MitigationSpec::Kind::Merge: j["kind"] = "merge"; break;
    case MitigationSpec::Kind::EarlyTerminate: j["kind"] = "early_terminate"; break;
  }
  j["blocks"] = m.blocks;
  j["ranks"] = m.ranks;
  j["groups"] = m.groups;
  j["hosts"] = m.hosts;
  j["window"] = m.window;
  return j;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json ExperimentConfig::canonical() const {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["name"] = name;
  j["mode"] = mode == SchedulerMode::DeterministicVirtual ? "virtual" : "concurrent";
  j["ranks"] = ranks;
  j["max_steps"] = max_steps;
  j["domain"] = {{"lower", vec3_json(domain.lo)}, {"upper", vec3_json(domain.hi)}};
  j["block_dims"] = block_dims;
  j["field"] = field_json(field);
  j["seeds"] = seeds_json(seeds);
  j["advect"] = {{"step_size", advect.step_size},
                 {"v_zero", advect.v_zero},
                 {"epsilon_push", advect.epsilon_push},
                 {"bisection_eps", advect.bisection_eps},
                 {"use_bisection", advect.use_bisection},
                 {"bisection_cap", advect.bisection_cap}};
  j["costs"] = {{"per_step", costs.per_step},
                {"per_particle_bo", costs.per_particle_bo},
                {"per_particle_eo", costs.per_particle_eo},
                {"per_bundle_c", costs.per_bundle_c}};
  j["mitigation"] = mitigation_json(mitigation);
  j["track_particle"] =
      track_particle ? nlohmann::ordered_json(*track_particle) : nlohmann::ordered_json{};
  j["tracing"] = tracing;
  j["participation_count_c"] = participation_count_c;
  return j;
}

ExperimentConfig parse_experiment_config(const nlohmann::ordered_json& j) {
  if (!j.is_object()) fail("(root)", "expected a JSON object");
  ExperimentConfig cfg;
  cfg.version = require(j, "version", "").get<int>();
  if (cfg.version != 1) fail("version", "unsupported config version");
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();

  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "virtual")
      cfg.mode = SchedulerMode::DeterministicVirtual;
    else if (mode == "concurrent")
      cfg.mode = SchedulerMode::Concurrent;
    else
      fail("mode", "expected 'virtual' or 'concurrent'");
  }

  if (j.contains("ranks")) cfg.ranks = parse_int_axis(j.at("ranks"), "ranks");
  for (int r : cfg.ranks)
    if ((r & (r - 1)) != 0) fail("ranks", "rank counts must be powers of two");
  if (j.contains("max_steps")) cfg.max_steps = parse_int_axis(j.at("max_steps"), "max_steps");

  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    cfg.domain.lo = parse_vec3(require(d, "lower", "domain."), "domain.lower");
    cfg.domain.hi = parse_vec3(require(d, "upper", "domain."), "domain.upper");
  }
  if (!(cfg.domain.lo.x < cfg.domain.hi.x && cfg.domain.lo.y < cfg.domain.hi.y &&
        cfg.domain.lo.z < cfg.domain.hi.z))
    fail("domain", "lower must be strictly below upper on every axis");

  if (j.contains("block_dims")) {
    const auto& d = j.at("block_dims");
    if (d.is_number_integer()) {
      const int n = d.get<int>();
      cfg.block_dims = {n, n, n};
    } else {
      const auto dims = parse_int_axis(d, "block_dims");
      if (dims.size() != 3) fail("block_dims", "expected one integer or three");
      cfg.block_dims = {dims[0], dims[1], dims[2]};
    }
  }
  for (int d : cfg.block_dims)
    if (d < 2) fail("block_dims", "needs at least 2 points per axis");

  if (j.contains("field")) cfg.field = parse_field(j.at("field"), "field");
  cfg.seeds = parse_seeds(require(j, "seeds", ""), "seeds");

  if (j.contains("advect")) {
    const auto& a = j.at("advect");
    if (a.contains("step_size")) cfg.advect.step_size = a.at("step_size").get<double>();
    if (a.contains("v_zero")) cfg.advect.v_zero = a.at("v_zero").get<double>();
    if (a.contains("epsilon_push"))
      cfg.advect.epsilon_push = a.at("epsilon_push").get<double>();
    if (a.contains("bisection_eps"))
      cfg.advect.bisection_eps = a.at("bisection_eps").get<double>();
    if (a.contains("use_bisection"))
      cfg.advect.use_bisection = a.at("use_bisection").get<bool>();
    if (a.contains("bisection_cap"))
      cfg.advect.bisection_cap = a.at("bisection_cap").get<int>();
    if (cfg.advect.step_size < 0.0) fail("advect.step_size", "must be non-negative");
  }

  if (j.contains("costs")) {
    const auto& c = j.at("costs");
    if (c.contains("per_step")) cfg.costs.per_step = c.at("per_step").get<double>();
    if (c.contains("per_particle_bo"))
      cfg.costs.per_particle_bo = c.at("per_particle_bo").get<double>();
    if (c.contains("per_particle_eo"))
      cfg.costs.per_particle_eo = c.at("per_particle_eo").get<double>();
    if (c.contains("per_bundle_c"))
      cfg.costs.per_bundle_c = c.at("per_bundle_c").get<double>();
    try {
      cfg.costs.validate();
    } catch (const std::exception& e) {
      fail("costs", e.what());
    }
  }

  if (j.contains("mitigation"))
    cfg.mitigation = parse_mitigation(j.at("mitigation"), "mitigation");
  if (j.contains("track_particle") && !j.at("track_particle").is_null())
    cfg.track_particle = j.at("track_particle").get<std::int64_t>();
  if (j.contains("tracing")) cfg.tracing = j.at("tracing").get<bool>();
  if (j.contains("participation_count_c"))
    cfg.participation_count_c = j.at("participation_count_c").get<bool>();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(j);
}

namespace {

nlohmann::ordered_json cell_canonical(const ExperimentConfig& config, int num_ranks,
                                      int max_steps) {
  auto j = config.canonical();
  j["ranks"] = std::vector<int>{num_ranks};
  j["max_steps"] = std::vector<int>{max_steps};
  return j;
}

}  // namespace

std::string cell_config_hash(const ExperimentConfig& config, int num_ranks,
                             int max_steps) {
  return fnv1a64_hex(cell_canonical(config, num_ranks, max_steps).dump());
}

std::string cell_compat_hash(const ExperimentConfig& config, int num_ranks,
                             int max_steps) {
  auto j = cell_canonical(config, num_ranks, max_steps);
  j.erase("name");
  j.erase("mitigation");
  j.erase("track_particle");
  j.erase("tracing");
  return fnv1a64_hex(j.dump());
}

CellSetup build_cell(const ExperimentConfig& config, int num_ranks, int max_steps) {
  CellSetup setup;
  setup.layout = make_layout(num_ranks);
  setup.blocks.reserve(setup.layout.num_blocks());
  for (int b = 0; b < setup.layout.num_blocks(); ++b) {
    const Extent ext = block_extent(config.domain, setup.layout, b);
    BlockSpec spec;
    spec.block_id = b;
    spec.origin = ext.lo;
    spec.spacing = {ext.size().x / (config.block_dims[0] - 1),
                    ext.size().y / (config.block_dims[1] - 1),
                    ext.size().z / (config.block_dims[2] - 1)};
    spec.dims = config.block_dims;
    setup.blocks.push_back(sample_field(config.field, spec));
  }

  setup.assignment = BlockAssignment::baseline(setup.layout);
  switch (config.mitigation.kind) {
    case MitigationSpec::Kind::None:
      break;
    case MitigationSpec::Kind::Duplicate: {
      std::vector<int> ranks = config.mitigation.ranks;
      if (ranks.empty())
        for (int r = 0; r < num_ranks; ++r) ranks.push_back(r);
      setup.assignment =
          apply_duplication(std::move(setup.assignment), config.mitigation.blocks, ranks);
      break;
    }
    case MitigationSpec::Kind::Merge:
      for (std::size_t g = 0; g < config.mitigation.groups.size(); ++g) {
        const int host =
            config.mitigation.hosts.empty() ? -1 : config.mitigation.hosts[g];
        setup.assignment =
            apply_merge(std::move(setup.assignment), config.mitigation.groups[g], host);
      }
      break;
    case MitigationSpec::Kind::EarlyTerminate:
      setup.engine.early_termination = {true, config.mitigation.window};
      break;
  }

  setup.seeds = generate_seeds(config.seeds, setup.layout, config.domain);
  for (auto& seed : setup.seeds) seed.max_steps = max_steps;

  setup.engine.mode = config.mode;
  setup.engine.costs = config.costs;
  setup.engine.advect = config.advect;
  setup.engine.tracing = config.tracing;
  setup.engine.track_id = config.track_particle;
  return setup;
}

CellResult execute_cell(const ExperimentConfig& config, int num_ranks, int max_steps) {
  CellSetup setup = build_cell(config, num_ranks, max_steps);
  RunInputs inputs;
  inputs.domain = config.domain;
  inputs.layout = setup.layout;
  inputs.assignment = setup.assignment;
  inputs.blocks = &setup.blocks;
  inputs.seeds = std::move(setup.seeds);

  CellResult result;
  result.trace = run(setup.engine, std::move(inputs));
  result.trace.config_hash = cell_config_hash(config, num_ranks, max_steps);
  result.trace.compat_hash = cell_compat_hash(config, num_ranks, max_steps);
  result.trace.config_echo = cell_canonical(config, num_ranks, max_steps);
  result.summary =
      build_summary(result.trace, 50, ParticipationOptions{config.participation_count_c, true});
  return result;
}

namespace {

void write_participation_csv(const RunTrace& trace, const std::filesystem::path& path,
                             const ParticipationOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# podsim participation v1 config_hash=" << trace.config_hash << '\n';
  out << "t,value\n";
  const auto series = participation_series(trace, 1000, opts);
  for (std::size_t i = 0; i < series.times.size(); ++i)
    out << fmt_double(series.times[i]) << ',' << fmt_double(series.values[i]) << '\n';
}

void write_cell_outputs(const ExperimentConfig& config, const CellResult& result,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / kConfigFile, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write config echo");
    out << result.trace.config_echo.dump(2) << '\n';
  }
  write_events_jsonl(result.trace, dir / kEventsFile);
  write_particles_csv(result.trace, dir / kParticlesFile);
  {
    std::ofstream out(dir / kSummaryFile, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write summary");
    out << summary_to_json(result.summary).dump(2) << '\n';
  }
  write_participation_csv(result.trace, dir / kParticipationFile,
                          ParticipationOptions{config.participation_count_c, true});
  write_gantt_svg(result.trace, dir / kGanttFile);
}

}  // namespace

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& config,
                                                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const bool single = config.ranks.size() == 1 && config.max_steps.size() == 1;
  std::vector<std::filesystem::path> dirs;
  for (int r : config.ranks)
    for (int s : config.max_steps) {
      const auto dir =
          single ? out_dir
                 : out_dir / ("r" + std::to_string(r) + "_s" + std::to_string(s));
      const CellResult result = execute_cell(config, r, s);
      write_cell_outputs(config, result, dir);
      dirs.push_back(dir);
    }
  return dirs;
}

CellResult rerun_tracked(ExperimentConfig config, std::int64_t particle_id) {
  if (config.ranks.size() != 1 || config.max_steps.size() != 1)
    throw std::invalid_argument("tracked reruns need a single-cell config");
  const long total =
      config.seeds.kind == SeedSpec::Kind::PerBlockRandom
          ? config.seeds.count * make_layout(config.ranks[0]).num_blocks()
          : config.seeds.count;
  if (particle_id < 0 || particle_id >= total)
    throw std::invalid_argument("unknown particle id " + std::to_string(particle_id));
  config.track_particle = particle_id;
  return execute_cell(config, config.ranks[0], config.max_steps[0]);
}

namespace {

nlohmann::ordered_json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  return nlohmann::ordered_json::parse(in);
}

}  // namespace

ComparisonReport compare_runs(const std::filesystem::path& baseline_dir,
                              const std::filesystem::path& variant_dir, int window) {
  const RunSummary base = summary_from_json(load_json_file(baseline_dir / kSummaryFile));
  const RunSummary variant =
      summary_from_json(load_json_file(variant_dir / kSummaryFile));
  if (base.compat_hash != variant.compat_hash)
    throw std::invalid_argument(
        "runs are not comparable: field/seed/rng/workload configs differ "
        "(compat hash " +
        base.compat_hash + " vs " + variant.compat_hash + ")");
  if (variant.total_time <= 0.0)
    throw std::invalid_argument("variant run has non-positive total time");

  const RunTrace base_trace = load_trace(baseline_dir / kEventsFile,
                                         baseline_dir / kParticlesFile);
  const RunTrace variant_trace =
      load_trace(variant_dir / kEventsFile, variant_dir / kParticlesFile);

  ComparisonReport report;
  report.baseline_dir = baseline_dir.string();
  report.variant_dir = variant_dir.string();
  report.t_baseline = base.total_time;
  report.t_variant = variant.total_time;
  report.speedup = base.total_time / variant.total_time;
  report.participation_baseline = base.aggregated_participation;
  report.participation_variant = variant.aggregated_participation;
  report.participation_delta =
      variant.aggregated_participation - base.aggregated_participation;
  report.window = window;
  report.ping_pong_baseline =
      static_cast<long>(detect_ping_pong_particles(base_trace.particles, window).size());
  report.ping_pong_variant = static_cast<long>(
      detect_ping_pong_particles(variant_trace.particles, window).size());
  return report;
}

nlohmann::ordered_json comparison_to_json(const ComparisonReport& r) {
  nlohmann::ordered_json j;
  j["baseline"] = r.baseline_dir;
  j["variant"] = r.variant_dir;
  j["t_baseline"] = r.t_baseline;
  j["t_variant"] = r.t_variant;
  j["speedup"] = r.speedup;
  j["participation_baseline"] = r.participation_baseline;
  j["participation_variant"] = r.participation_variant;
  j["participation_delta"] = r.participation_delta;
  j["ping_pong_window"] = r.window;
  j["ping_pong_baseline"] = r.ping_pong_baseline;
  j["ping_pong_variant"] = r.ping_pong_variant;
  return j;
}

namespace {

std::string single_report(const std::filesystem::path& dir) {
  const RunSummary s = summary_from_json(load_json_file(dir / kSummaryFile));
  std::ostringstream out;
  char line[256];
  out << "run: " << dir.string() << "\n";
  out << "mode: " << s.mode << "  config: " << s.config_hash << "\n";
  std::snprintf(line, sizeof line, "total time: %.6g\n", s.total_time);
  out << line;
  std::snprintf(line, sizeof line, "aggregated rank participation: %.4f\n",
                s.aggregated_participation);
  out << line;
  out << "seeded particles: " << s.seeded << "\n\n";

  const auto frac = s.breakdown.fractions();
  out << "termination breakdown:\n";
  out << "  out of bounds  zero velocity  max steps  early terminated\n";
  std::snprintf(line, sizeof line, "  %12.1f%%  %12.1f%%  %8.1f%%  %15.1f%%\n",
                100.0 * frac[0], 100.0 * frac[1], 100.0 * frac[2], 100.0 * frac[3]);
  out << line;

  out << "\nslowest particle:\n";
  out << "  id  n_p  BO%  EO%  A%  C%  W%  CW%  T_p\n";
  std::snprintf(line, sizeof line,
                "  %lld  %d  %.1f  %.1f  %.1f  %.1f  %.1f  %.1f  %.6g\n",
                static_cast<long long>(s.slowest.id), s.slowest.np, s.slowest.pct_bo,
                s.slowest.pct_eo, s.slowest.pct_a, s.slowest.pct_c, s.slowest.pct_w,
                s.slowest.pct_cw, s.slowest.t_p);
  out << line;
  return out.str();
}

}  // namespace

std::string report_text(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / kSummaryFile)) return single_report(dir);

  // Matrix directory: collect (ranks, steps) -> total time from the cells.
  std::map<int, std::map<int, double>> times_by_steps;  // steps -> ranks -> time
  std::vector<std::filesystem::path> cells;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / kSummaryFile))
      cells.push_back(entry.path());
  if (cells.empty())
    throw std::invalid_argument("no run outputs under " + dir.string());
  std::sort(cells.begin(), cells.end());

  std::ostringstream out;
  for (const auto& cell : cells) {
    const auto cfg = load_json_file(cell / kConfigFile);
    const int ranks = cfg.at("ranks").at(0).get<int>();
    const int steps = cfg.at("max_steps").at(0).get<int>();
    const RunSummary s = summary_from_json(load_json_file(cell / kSummaryFile));
    times_by_steps[steps][ranks] = s.total_time;
    out << single_report(cell) << "\n";
  }

  out << "weak scaling efficiency (baseline = smallest rank count):\n";
  for (const auto& [steps, times] : times_by_steps) {
    if (times.size() < 2) continue;
    const auto eff = weak_scaling_efficiency(times);
    out << "  max_steps=" << steps << ":";
    char cellbuf[64];
    for (const auto& [n, e] : eff) {
      std::snprintf(cellbuf, sizeof cellbuf, "  N=%d: %.3f", n, e);
      out << cellbuf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace pod
