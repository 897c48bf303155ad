#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "pod/trace.hpp"

namespace pod {

/// Which categories count a rank as "participating". The advection-stage
/// categories always do; C is excluded by default but toggleable;
/// initialization is counted as setup work.
struct ParticipationOptions {
  bool count_c = false;
  bool count_i = true;
};

bool counts_as_participating(Category c, const ParticipationOptions& opts);

/// Fraction of ranks whose covering event at time t (half-open intervals
/// [t_start, t_end)) is a participating category.
double rank_participation(const RunTrace& trace, double t,
                          const ParticipationOptions& opts = {});

struct ParticipationSeries {
  std::vector<double> times;
  std::vector<double> values;  // in [0,1]
};

/// Uniformly sampled participation curve for plotting.
ParticipationSeries participation_series(const RunTrace& trace, int samples = 1000,
                                         const ParticipationOptions& opts = {});

/// Time-weighted mean of the participation step function, computed from
/// exact interval sums: sum of participating durations / (N * total_time).
double aggregated_participation(const RunTrace& trace,
                                const ParticipationOptions& opts = {});

/// Weak-scaling efficiency T(base)/T(N) for each measured rank count.
/// `base` defaults to the smallest key; efficiency(base) is exactly 1.
/// Throws std::invalid_argument when the baseline is missing or times are
/// not positive.
std::map<int, double> weak_scaling_efficiency(const std::map<int, double>& times,
                                              std::optional<int> base = std::nullopt);

/// Counts per termination reason, reported in the fixed column order
/// out-of-bounds / zero-velocity / max-steps / early-terminated.
struct TerminationBreakdown {
  long out_of_bounds = 0;
  long zero_velocity = 0;
  long max_steps = 0;
  long early_terminated = 0;

  long total() const {
    return out_of_bounds + zero_velocity + max_steps + early_terminated;
  }
  std::array<long, 4> counts() const {
    return {out_of_bounds, zero_velocity, max_steps, early_terminated};
  }
  /// counts()/total() in the same column order.
  std::array<double, 4> fractions() const;
};

TerminationBreakdown termination_breakdown(std::span<const ParticleStats> stats);

/// Histogram of terminations by reason over equal time bins plus the
/// non-increasing survivor curve (active particles after each bin).
struct ActiveParticleSeries {
  std::vector<double> bin_edges;                  // bins + 1 entries
  std::vector<std::array<long, 4>> terminations;  // per bin, breakdown order
  std::vector<long> survivors;                    // after each bin
};

ActiveParticleSeries active_particle_series(std::span<const ParticleStats> stats,
                                            int bins, double total_time);

/// Lifetime decomposition of the slowest particle, percentages of T_p.
/// C and W are split only when the per-particle communication slice was
/// measurable (virtual mode); otherwise cw_split is false and pct_cw holds
/// the merged value.
struct SlowestDecomposition {
  std::int64_t id = 0;
  int np = 0;
  double t_p = 0.0;
  double pct_bo = 0.0;
  double pct_eo = 0.0;
  double pct_a = 0.0;
  double pct_c = 0.0;
  double pct_w = 0.0;
  double pct_cw = 0.0;
  bool cw_split = false;
};

SlowestDecomposition slowest_decomposition(std::span<const ParticleStats> stats,
                                           const RunTrace& trace);

/// Offline ping-pong detector: flags particles whose history contains any
/// run of 2*window consecutive visits alternating between exactly two
/// blocks. Applies the same predicate the engine uses online.
std::set<std::int64_t> detect_ping_pong_particles(std::span<const ParticleStats> stats,
                                                  int window);

/// Total BO/A/EO (+I) event time per rank.
std::vector<double> rank_busy_times(const RunTrace& trace,
                                    const ParticipationOptions& opts = {});

/// Per-run metrics bundle for reports and comparisons.
struct RunSummary {
  double total_time = 0.0;
  double aggregated_participation = 0.0;
  long seeded = 0;
  TerminationBreakdown breakdown;
  SlowestDecomposition slowest;
  ActiveParticleSeries active_series;
  std::vector<double> busy_times;
  double max_busy_time = 0.0;
  std::string mode;
  std::string config_hash;
  std::string compat_hash;
};

RunSummary build_summary(const RunTrace& trace, int active_bins = 50,
                         const ParticipationOptions& opts = {});

nlohmann::ordered_json summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const nlohmann::ordered_json& j);

}  // namespace pod
