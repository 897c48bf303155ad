#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pod/advect.hpp"

namespace pod {

/// Work categories of the per-rank round loop. C and W are recorded
/// separately where measurable and reported merged as CW.
enum class Category { I, BO, A, EO, C, W };

const char* to_string(Category c);
Category category_from_string(const std::string& s);

struct TraceEvent {
  int rank = 0;
  Category category = Category::I;
  double t_start = 0.0;
  double t_end = 0.0;
  long round = 0;
  long particles = 0;  // batch size (BO/A/EO) or particles moved (C)
  long steps = 0;      // steps executed (A)
  long bundles = 0;    // bundles sent+received (C)

  bool operator==(const TraceEvent&) const = default;
};

/// Append-only per-rank event log; events must be time-ordered and
/// non-overlapping.
class RankCollector {
 public:
  explicit RankCollector(int rank, bool enabled = true)
      : rank_(rank), enabled_(enabled) {}

  void record(Category category, double t_start, double t_end, long round,
              long particles = 0, long steps = 0, long bundles = 0);

  bool enabled() const { return enabled_; }
  int rank() const { return rank_; }
  double last_end() const { return last_end_; }
  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<TraceEvent> take_events() { return std::move(events_); }

 private:
  int rank_;
  bool enabled_;
  double last_end_ = 0.0;
  std::vector<TraceEvent> events_;
};

/// Final per-particle record distilled from a terminated Particle.
struct ParticleStats {
  std::int64_t id = 0;
  ParticleStatus status = ParticleStatus::Active;
  double termination_time = 0.0;
  Vec3 position;  // where the particle stopped
  int np = 0;     // number of block entries
  int steps = 0;
  double t_bo = 0.0;
  double t_a = 0.0;
  double t_eo = 0.0;
  double t_cw = 0.0;
  double t_c = 0.0;  // communication slice of t_cw; 0 when not measurable
  long accumulated_group_size = 0;
  std::vector<Visit> history;

  bool operator==(const ParticleStats&) const = default;
};

ParticleStats make_stats(const Particle& p);

struct TrackedRecord {
  int rank = 0;
  std::string event;  // seeded, batch_begin, advected, exited, sent, received, terminated
  double time = 0.0;
  bool operator==(const TrackedRecord&) const = default;
};

struct TrackedParticleLog {
  std::int64_t id = 0;
  std::vector<TrackedRecord> records;
  bool operator==(const TrackedParticleLog&) const = default;
};

struct RankCounters {
  long rounds = 0;
  long particles_processed = 0;
  long particles_sent = 0;
  long particles_received = 0;
  bool operator==(const RankCounters&) const = default;
};

/// Everything one engine run produces.
struct RunTrace {
  std::string mode;       // "virtual" | "concurrent"
  std::string time_unit;  // "virtual_seconds" | "seconds"
  int num_ranks = 0;
  double total_time = 0.0;
  std::string config_hash;
  std::string compat_hash;
  nlohmann::ordered_json config_echo;

  std::vector<std::vector<TraceEvent>> rank_events;  // indexed by rank, time-ordered
  std::vector<RankCounters> rank_counters;
  std::vector<ParticleStats> particles;  // ordered by id
  std::optional<TrackedParticleLog> tracked;

  long seeded_count() const { return static_cast<long>(particles.size()); }
};

/// Particle with the latest termination time; ties go to the lowest id.
/// Throws std::invalid_argument on empty input.
const ParticleStats& find_slowest_particle(std::span<const ParticleStats> stats);

/// True when the last 2*window entries exist and alternate strictly between
/// exactly two block ids, e.g. a,b,a,b,a,b for window 3.
bool is_two_block_alternation(std::span<const Visit> history, int window);

/// FNV-1a 64-bit over a byte string; used for config identity hashes.
std::string fnv1a64_hex(const std::string& bytes);

enum class TraceFormat { JSONL, CSV };

/// JSONL event stream: a header line with run metadata and the config echo,
/// then one event per line, then per-rank counters and the optional tracked
/// log.
void write_events_jsonl(const RunTrace& trace, const std::filesystem::path& path);

/// Per-particle stats, one CSV row per particle, stable column order.
void write_particles_csv(const RunTrace& trace, const std::filesystem::path& path);

/// Write the file kind matching `format` to `path`.
void serialize(const RunTrace& trace, TraceFormat format,
               const std::filesystem::path& path);

/// Rebuild a RunTrace from the two files written above.
RunTrace load_trace(const std::filesystem::path& events_path,
                    const std::filesystem::path& particles_path);

}  // namespace pod
