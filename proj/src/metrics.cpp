#include "pod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pod {

bool counts_as_participating(Category c, const ParticipationOptions& opts) {
  switch (c) {
    case Category::BO:
    case Category::A:
    case Category::EO:
      return true;
    case Category::I:
      return opts.count_i;
    case Category::C:
      return opts.count_c;
    case Category::W:
      return false;
  }
  return false;
}

double rank_participation(const RunTrace& trace, double t,
                          const ParticipationOptions& opts) {
  if (trace.num_ranks <= 0) throw std::invalid_argument("trace has no ranks");
  if (t < 0.0 || t > trace.total_time)
    throw std::invalid_argument("participation query outside the run interval");
  int active = 0;
  for (const auto& events : trace.rank_events) {
    // Covering event: t_start <= t < t_end.
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double value, const TraceEvent& e) {
                                 return value < e.t_start;
                               });
    if (it == events.begin()) continue;
    const TraceEvent& e = *(it - 1);
    if (t < e.t_end && counts_as_participating(e.category, opts)) ++active;
  }
  return static_cast<double>(active) / trace.num_ranks;
}

ParticipationSeries participation_series(const RunTrace& trace, int samples,
                                         const ParticipationOptions& opts) {
  if (samples < 2) throw std::invalid_argument("need at least 2 samples");
  ParticipationSeries series;
  series.times.reserve(samples);
  series.values.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double t = trace.total_time * static_cast<double>(i) / (samples - 1);
    series.times.push_back(t);
    series.values.push_back(rank_participation(trace, t, opts));
  }
  return series;
}

double aggregated_participation(const RunTrace& trace,
                                const ParticipationOptions& opts) {
  if (trace.num_ranks <= 0) throw std::invalid_argument("trace has no ranks");
  if (trace.total_time <= 0.0) return 0.0;
  double busy = 0.0;
  for (const auto& events : trace.rank_events)
    for (const auto& e : events)
      if (counts_as_participating(e.category, opts)) busy += e.t_end - e.t_start;
  return busy / (trace.num_ranks * trace.total_time);
}

std::map<int, double> weak_scaling_efficiency(const std::map<int, double>& times,
                                              std::optional<int> base) {
  if (times.empty()) throw std::invalid_argument("no timings given");
  const int base_n = base.value_or(times.begin()->first);
  const auto it = times.find(base_n);
  if (it == times.end())
    throw std::invalid_argument("baseline rank count " + std::to_string(base_n) +
                                " missing from timings");
  const double t_base = it->second;
  if (t_base <= 0.0) throw std::invalid_argument("baseline time must be positive");
  std::map<int, double> eff;
  for (const auto& [n, t] : times) {
    if (t <= 0.0) throw std::invalid_argument("run times must be positive");
    eff[n] = n == base_n ? 1.0 : t_base / t;
  }
  return eff;
}

std::array<double, 4> TerminationBreakdown::fractions() const {
  const double n = static_cast<double>(total());
  if (n == 0.0) return {0.0, 0.0, 0.0, 0.0};
  return {out_of_bounds / n, zero_velocity / n, max_steps / n, early_terminated / n};
}

TerminationBreakdown termination_breakdown(std::span<const ParticleStats> stats) {
  if (stats.empty()) throw std::invalid_argument("no particle stats");
  TerminationBreakdown b;
  for (const auto& s : stats) {
    switch (s.status) {
      case ParticleStatus::OutOfBounds: ++b.out_of_bounds; break;
      case ParticleStatus::ZeroVelocity: ++b.zero_velocity; break;
      case ParticleStatus::MaxSteps: ++b.max_steps; break;
      case ParticleStatus::EarlyTerminated: ++b.early_terminated; break;
      case ParticleStatus::Active:
        throw std::invalid_argument("active particle in termination stats");
    }
  }
  return b;
}

ActiveParticleSeries active_particle_series(std::span<const ParticleStats> stats,
                                            int bins, double total_time) {
  if (bins < 1) throw std::invalid_argument("need at least one bin");
  if (stats.empty()) throw std::invalid_argument("no particle stats");
  ActiveParticleSeries series;
  series.bin_edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i)
    series.bin_edges[i] = total_time * static_cast<double>(i) / bins;
  series.terminations.assign(bins, {0, 0, 0, 0});

  for (const auto& s : stats) {
    int bin = total_time > 0.0
                  ? static_cast<int>(s.termination_time / total_time * bins)
                  : 0;
    bin = std::clamp(bin, 0, bins - 1);
    int column = 0;
    switch (s.status) {
      case ParticleStatus::OutOfBounds: column = 0; break;
      case ParticleStatus::ZeroVelocity: column = 1; break;
      case ParticleStatus::MaxSteps: column = 2; break;
      case ParticleStatus::EarlyTerminated: column = 3; break;
      case ParticleStatus::Active:
        throw std::invalid_argument("active particle in termination stats");
    }
    series.terminations[bin][column] += 1;
  }

  long alive = static_cast<long>(stats.size());
  series.survivors.resize(bins);
  for (int i = 0; i < bins; ++i) {
    for (long c : series.terminations[i]) alive -= c;
    series.survivors[i] = alive;
  }
  return series;
}

SlowestDecomposition slowest_decomposition(std::span<const ParticleStats> stats,
                                           const RunTrace& trace) {
  const ParticleStats& slowest = find_slowest_particle(stats);
  SlowestDecomposition d;
  d.id = slowest.id;
  d.np = slowest.np;
  d.t_p = slowest.termination_time;
  if (d.t_p <= 0.0) return d;
  d.pct_bo = 100.0 * slowest.t_bo / d.t_p;
  d.pct_eo = 100.0 * slowest.t_eo / d.t_p;
  d.pct_a = 100.0 * slowest.t_a / d.t_p;
  d.pct_cw = 100.0 * slowest.t_cw / d.t_p;
  d.cw_split = trace.mode == "virtual";
  if (d.cw_split) {
    const double c = std::min(slowest.t_c, slowest.t_cw);
    d.pct_c = 100.0 * c / d.t_p;
    d.pct_w = 100.0 * (slowest.t_cw - c) / d.t_p;
  }
  return d;
}

std::set<std::int64_t> detect_ping_pong_particles(std::span<const ParticleStats> stats,
                                                  int window) {
  if (window < 2) throw std::invalid_argument("alternation window must be >= 2");
  std::set<std::int64_t> flagged;
  const std::size_t need = static_cast<std::size_t>(2 * window);
  for (const auto& s : stats) {
    if (s.history.size() < need) continue;
    const std::span<const Visit> h{s.history};
    for (std::size_t end = need; end <= h.size(); ++end) {
      if (is_two_block_alternation(h.first(end), window)) {
        flagged.insert(s.id);
        break;
      }
    }
  }
  return flagged;
}

std::vector<double> rank_busy_times(const RunTrace& trace,
                                    const ParticipationOptions& opts) {
  std::vector<double> busy(trace.num_ranks, 0.0);
  for (int r = 0; r < trace.num_ranks; ++r)
    for (const auto& e : trace.rank_events[r])
      if (counts_as_participating(e.category, opts)) busy[r] += e.t_end - e.t_start;
  return busy;
}

RunSummary build_summary(const RunTrace& trace, int active_bins,
                         const ParticipationOptions& opts) {
  RunSummary s;
  s.total_time = trace.total_time;
  s.aggregated_participation = aggregated_participation(trace, opts);
  s.seeded = trace.seeded_count();
  s.breakdown = termination_breakdown(trace.particles);
  s.slowest = slowest_decomposition(trace.particles, trace);
  s.active_series = active_particle_series(trace.particles, active_bins, trace.total_time);
  s.busy_times = rank_busy_times(trace, opts);
  s.max_busy_time = *std::max_element(s.busy_times.begin(), s.busy_times.end());
  s.mode = trace.mode;
  s.config_hash = trace.config_hash;
  s.compat_hash = trace.compat_hash;
  return s;
}

nlohmann::ordered_json summary_to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["config_hash"] = s.config_hash;
  j["compat_hash"] = s.compat_hash;
  j["mode"] = s.mode;
  j["total_time"] = s.total_time;
  j["aggregated_participation"] = s.aggregated_participation;
  j["seeded"] = s.seeded;
  // Column order is fixed: out of bounds / zero velocity / max steps, with
  // early termination reported as a fourth column.
  j["termination_breakdown"] = {
      {"columns", {"out_of_bounds", "zero_velocity", "max_steps", "early_terminated"}},
      {"counts", s.breakdown.counts()},
      {"fractions", s.breakdown.fractions()}};
  j["slowest_particle"] = {{"id", s.slowest.id},       {"np", s.slowest.np},
                           {"t_p", s.slowest.t_p},     {"pct_bo", s.slowest.pct_bo},
                           {"pct_eo", s.slowest.pct_eo}, {"pct_a", s.slowest.pct_a},
                           {"pct_c", s.slowest.pct_c},   {"pct_w", s.slowest.pct_w},
                           {"pct_cw", s.slowest.pct_cw}, {"cw_split", s.slowest.cw_split}};
  j["active_particles"] = {{"bin_edges", s.active_series.bin_edges},
                           {"terminations", s.active_series.terminations},
                           {"survivors", s.active_series.survivors}};
  j["rank_busy_times"] = s.busy_times;
  j["max_busy_time"] = s.max_busy_time;
  return j;
}

RunSummary summary_from_json(const nlohmann::ordered_json& j) {
  RunSummary s;
  s.config_hash = j.at("config_hash");
  s.compat_hash = j.at("compat_hash");
  s.mode = j.at("mode");
  s.total_time = j.at("total_time");
  s.aggregated_participation = j.at("aggregated_participation");
  s.seeded = j.at("seeded");
  const auto& b = j.at("termination_breakdown").at("counts");
  s.breakdown.out_of_bounds = b.at(0);
  s.breakdown.zero_velocity = b.at(1);
  s.breakdown.max_steps = b.at(2);
  s.breakdown.early_terminated = b.at(3);
  const auto& sl = j.at("slowest_particle");
  s.slowest.id = sl.at("id");
  s.slowest.np = sl.at("np");
  s.slowest.t_p = sl.at("t_p");
  s.slowest.pct_bo = sl.at("pct_bo");
  s.slowest.pct_eo = sl.at("pct_eo");
  s.slowest.pct_a = sl.at("pct_a");
  s.slowest.pct_c = sl.at("pct_c");
  s.slowest.pct_w = sl.at("pct_w");
  s.slowest.pct_cw = sl.at("pct_cw");
  s.slowest.cw_split = sl.at("cw_split");
  const auto& a = j.at("active_particles");
  s.active_series.bin_edges = a.at("bin_edges").get<std::vector<double>>();
  for (const auto& row : a.at("terminations")) {
    std::array<long, 4> counts{row.at(0), row.at(1), row.at(2), row.at(3)};
    s.active_series.terminations.push_back(counts);
  }
  s.active_series.survivors = a.at("survivors").get<std::vector<long>>();
  s.busy_times = j.at("rank_busy_times").get<std::vector<double>>();
  s.max_busy_time = j.at("max_busy_time");
  return s;
}

}  // namespace pod
