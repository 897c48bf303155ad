#include "pod/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <thread>

namespace pod {

void CostModel::validate() const {
  if (per_step < 0.0 || per_particle_bo < 0.0 || per_particle_eo < 0.0 ||
      per_bundle_c < 0.0)
    throw std::invalid_argument("virtual costs must be non-negative");
}

void ChannelMatrix::send(ParticleBundle bundle) {
  if (bundle.particles.empty())
    throw std::invalid_argument("bundles must carry at least one particle");
  if (bundle.source_rank < 0 || bundle.source_rank >= n_ || bundle.dest_rank < 0 ||
      bundle.dest_rank >= n_)
    throw std::invalid_argument("bundle addressed to nonexistent rank " +
                                std::to_string(bundle.dest_rank));
  std::lock_guard lock(mutex_);
  channel(bundle.source_rank, bundle.dest_rank).push_back(std::move(bundle));
  in_flight_.fetch_add(1, std::memory_order_release);
}

std::vector<ParticleBundle> ChannelMatrix::receive(int dst, double now) {
  std::vector<ParticleBundle> out;
  std::lock_guard lock(mutex_);
  for (int src = 0; src < n_; ++src) {
    auto& q = channel(src, dst);
    while (!q.empty() && q.front().send_timestamp <= now) {
      out.push_back(std::move(q.front()));
      q.pop_front();
      in_flight_.fetch_sub(1, std::memory_order_release);
    }
  }
  return out;
}

std::optional<double> ChannelMatrix::earliest_pending(int dst) const {
  std::lock_guard lock(mutex_);
  std::optional<double> best;
  for (int src = 0; src < n_; ++src) {
    const auto& q = channel(src, dst);
    if (!q.empty() && (!best || q.front().send_timestamp < *best))
      best = q.front().send_timestamp;
  }
  return best;
}

double VirtualClock::advance(Category category, double amount, long round,
                             long particles, long steps, long bundles) {
  if (amount < 0.0) throw std::invalid_argument("negative virtual clock advance");
  const double start = now_;
  now_ += amount;
  if (collector_) collector_->record(category, start, now_, round, particles, steps, bundles);
  return now_;
}

bool check_ping_pong(const Particle& particle, const PingPongPolicy& policy) {
  if (!policy.enabled) return false;
  return is_two_block_alternation(particle.visit_history, policy.window);
}

AdvectParams resolved_params(AdvectParams params, const GlobalDomain& domain,
                             const std::vector<GridBlock>& blocks) {
  double min_spacing = std::numeric_limits<double>::infinity();
  double block_diag = 0.0;
  for (const auto& b : blocks) {
    min_spacing = std::min({min_spacing, b.spacing.x, b.spacing.y, b.spacing.z});
    block_diag = std::max(block_diag, b.extent().diagonal());
  }
  if (params.step_size <= 0.0) params.step_size = 0.25 * min_spacing;
  if (params.epsilon_push <= 0.0) params.epsilon_push = 1e-6 * domain.diagonal();
  if (params.bisection_eps <= 0.0) params.bisection_eps = 1e-8 * block_diag;
  return params;
}

namespace {

struct RankRegions {
  std::vector<AdvectionRegion> storage;
  std::vector<const AdvectionRegion*> ptrs;
};

struct Prepared {
  AdvectParams advect;
  int num_ranks = 0;
  long long total_seeds = 0;
  std::vector<RankRegions> regions;
  std::vector<std::vector<Particle>> queues;
};

Prepared prepare(const EngineConfig& config, RunInputs& inputs) {
  config.costs.validate();
  if (config.early_termination.enabled && config.early_termination.window < 2)
    throw std::invalid_argument("ping-pong window must be >= 2");
  if (!inputs.blocks) throw std::invalid_argument("no block data");
  const int num_blocks = inputs.layout.num_blocks();
  if (static_cast<int>(inputs.blocks->size()) != num_blocks)
    throw std::invalid_argument("block data does not match the layout");
  if (static_cast<int>(inputs.assignment.owner.size()) != num_blocks)
    throw std::invalid_argument("assignment does not match the layout");
  if (inputs.seeds.empty()) throw std::invalid_argument("no seeds");

  Prepared prep;
  prep.num_ranks = inputs.assignment.num_ranks;
  prep.total_seeds = static_cast<long long>(inputs.seeds.size());
  prep.advect = resolved_params(config.advect, inputs.domain, *inputs.blocks);

  // Advection regions per rank: merged groups become one multi-block region
  // on their host; every other block becomes a single-block region on each
  // rank holding a copy of it.
  prep.regions.resize(prep.num_ranks);
  const auto& blocks = *inputs.blocks;
  for (const auto& group : inputs.assignment.merged_groups) {
    AdvectionRegion region;
    region.region_id = group.blocks.front();
    for (int b : group.blocks) region.blocks.push_back(&blocks[b]);
    prep.regions.at(group.host_rank).storage.push_back(std::move(region));
  }
  for (int b = 0; b < num_blocks; ++b) {
    if (inputs.assignment.merged_group_of(b) >= 0) continue;
    for (int r : inputs.assignment.ranks_holding(b))
      prep.regions.at(r).storage.push_back({b, {&blocks[b]}});
  }
  for (auto& rr : prep.regions) {
    std::sort(rr.storage.begin(), rr.storage.end(),
              [](const auto& a, const auto& b) { return a.region_id < b.region_id; });
    for (const auto& region : rr.storage) rr.ptrs.push_back(&region);
  }

  prep.queues.resize(prep.num_ranks);
  for (Particle& seed : inputs.seeds) {
    if (seed.max_steps <= 0)
      throw std::invalid_argument("seed particles need a positive max_steps");
    if (seed.status != ParticleStatus::Active)
      throw std::invalid_argument("seed particles must be active");
    const auto route = route_particle(seed.position, seed.id, inputs.domain,
                                      inputs.layout, inputs.assignment);
    if (!route)
      throw std::invalid_argument("seed " + std::to_string(seed.id) +
                                  " lies outside the domain");
    prep.queues.at(route->target_rank).push_back(std::move(seed));
  }
  inputs.seeds.clear();
  return prep;
}

struct TrackSink {
  std::optional<std::int64_t> id;
  std::vector<TrackedRecord>* records = nullptr;

  bool watches(std::int64_t candidate) const { return id && *id == candidate; }
  void note(int rank, const char* event, double time, std::int64_t candidate) const {
    if (watches(candidate)) records->push_back({rank, event, time});
  }
};

RunTrace finalize_trace(const Prepared& prep, std::vector<RankCollector>& collectors,
                        std::vector<RankState>& ranks, std::vector<Particle> finished,
                        std::vector<TrackedRecord> tracked_records,
                        const EngineConfig& config) {
  RunTrace trace;
  trace.num_ranks = prep.num_ranks;
  trace.rank_events.resize(prep.num_ranks);
  trace.rank_counters.resize(prep.num_ranks);
  double total = 0.0;
  for (int r = 0; r < prep.num_ranks; ++r) {
    total = std::max(total, collectors[r].last_end());
    trace.rank_events[r] = collectors[r].take_events();
    trace.rank_counters[r] = ranks[r].counters;
  }
  trace.total_time = total;

  std::sort(finished.begin(), finished.end(),
            [](const Particle& a, const Particle& b) { return a.id < b.id; });
  trace.particles.reserve(finished.size());
  for (const Particle& p : finished) trace.particles.push_back(make_stats(p));

  if (config.track_id) {
    TrackedParticleLog log;
    log.id = *config.track_id;
    log.records = std::move(tracked_records);
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const TrackedRecord& a, const TrackedRecord& b) {
                       return a.time < b.time;
                     });
    trace.tracked = std::move(log);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Deterministic virtual-time engine: ranks step round-robin, each carrying
// its own clock; bundles become visible to a receiver once its clock reaches
// the send timestamp.

class VirtualEngine {
 public:
  VirtualEngine(const EngineConfig& config, const RunInputs& inputs, Prepared& prep)
      : config_(config),
        inputs_(inputs),
        prep_(prep),
        channels_(prep.num_ranks),
        counter_(prep.total_seeds) {
    track_.id = config.track_id;
    track_.records = &tracked_records_;
    for (int r = 0; r < prep.num_ranks; ++r) {
      collectors_.emplace_back(r, config.tracing);
      ranks_.push_back(RankState{r, {}, std::move(prep.queues[r]), 0, {}});
      for (const auto& region : prep.regions[r].storage)
        ranks_.back().owned_blocks.push_back(region.region_id);
    }
    for (auto& c : collectors_) clocks_.emplace_back(&c);
    for (const auto& st : ranks_)
      for (const auto& p : st.active_queue) track_.note(st.rank_id, "seeded", 0.0, p.id);
  }

  RunTrace execute() {
    for (int r = 0; r < prep_.num_ranks; ++r)
      collectors_[r].record(Category::I, 0.0, 0.0, 0,
                            static_cast<long>(ranks_[r].active_queue.size()));
    while (counter_.remaining() > 0) {
      bool progress = false;
      for (int r = 0; r < prep_.num_ranks; ++r) progress |= step_rank(r);
      if (!progress && counter_.remaining() > 0)
        throw LostParticleError(
            counter_.remaining(),
            "engine stalled with " + std::to_string(counter_.remaining()) +
                " particles unaccounted for (all ranks idle, no bundles in flight)");
    }
    return finalize_trace(prep_, collectors_, ranks_, std::move(finished_),
                          std::move(tracked_records_), config_);
  }

 private:
  void finalize_particle(Particle& p, double eo_end, int rank) {
    p.termination_time = eo_end;
    p.t_cw = eo_end - p.seed_time - p.t_bo - p.t_a - p.t_eo;
    if (p.t_cw < 0.0) p.t_cw = 0.0;  // only possible with non-dyadic custom costs
    track_.note(rank, "terminated", eo_end, p.id);
    finished_.push_back(std::move(p));
  }

  bool step_rank(int r) {
    RankState& st = ranks_[r];
    VirtualClock& clock = clocks_[r];
    bool did = false;
    long n_term = 0;
    std::map<int, std::vector<Particle>> outgoing;
    std::vector<Particle> self_returns;

    if (!st.active_queue.empty()) {
      did = true;
      st.round_index += 1;
      st.counters.rounds += 1;
      const long batch_size = static_cast<long>(st.active_queue.size());
      st.counters.particles_processed += batch_size;
      for (const auto& p : st.active_queue)
        track_.note(r, "batch_begin", clock.now(), p.id);

      const double d_bo = batch_size * config_.costs.per_particle_bo;
      clock.advance(Category::BO, d_bo, st.round_index, batch_size);

      std::vector<Particle> batch = std::move(st.active_queue);
      st.active_queue.clear();
      KernelResult kr = advect_batch(std::move(batch), prep_.regions[r].ptrs,
                                     inputs_.domain, prep_.advect);
      const double d_a = kr.steps_executed * config_.costs.per_step;
      clock.advance(Category::A, d_a, st.round_index, batch_size, kr.steps_executed);

      const double d_eo = batch_size * config_.costs.per_particle_eo;
      const double eo_end =
          clock.advance(Category::EO, d_eo, st.round_index, batch_size);

      // Equal division of the batch overhead is exact here: the batch
      // interval is batch_size * cost, so each share is the cost itself.
      attribute_batch_times(kr, config_.costs.per_particle_bo, d_a,
                            config_.costs.per_particle_eo);

      for (Particle& p : kr.terminated) {
        finalize_particle(p, eo_end, r);
        ++n_term;
      }
      for (Particle& p : kr.exited) {
        if (check_ping_pong(p, config_.early_termination)) {
          p.status = ParticleStatus::EarlyTerminated;
          finalize_particle(p, eo_end, r);
          ++n_term;
          continue;
        }
        const auto route = route_particle(p.position, p.id, inputs_.domain,
                                          inputs_.layout, inputs_.assignment);
        if (!route)
          throw std::logic_error("exited particle has no destination block");
        track_.note(r, "exited", eo_end, p.id);
        if (route->target_rank == r)
          self_returns.push_back(std::move(p));
        else
          outgoing[route->target_rank].push_back(std::move(p));
      }
    }

    // Communication: send, update the counter, then probe for arrivals.
    const double comm_start = clock.now();
    const long bundles_out = static_cast<long>(outgoing.size());
    const double send_complete = comm_start + bundles_out * config_.costs.per_bundle_c;
    long particles_moved = 0;
    for (auto& [dest, plist] : outgoing) {
      st.counters.particles_sent += static_cast<long>(plist.size());
      particles_moved += static_cast<long>(plist.size());
      for (auto& p : plist) {
        p.t_c += config_.costs.per_bundle_c;
        track_.note(r, "sent", send_complete, p.id);
      }
      channels_.send({r, dest, std::move(plist), send_complete});
    }
    counter_.decrement(n_term);

    auto received = channels_.receive(r, send_complete);
    const long bundles_in = static_cast<long>(received.size());
    long particles_received = 0;
    for (const auto& b : received) particles_received += static_cast<long>(b.particles.size());
    if (bundles_out + bundles_in > 0) {
      did = true;
      clock.advance(Category::C,
                    (bundles_out + bundles_in) * config_.costs.per_bundle_c,
                    st.round_index, particles_moved + particles_received, 0,
                    bundles_out + bundles_in);
    }
    for (auto& p : self_returns) st.active_queue.push_back(std::move(p));
    for (auto& bundle : received) {
      st.counters.particles_received += static_cast<long>(bundle.particles.size());
      for (auto& p : bundle.particles) {
        track_.note(r, "received", std::max(bundle.send_timestamp, comm_start), p.id);
        st.active_queue.push_back(std::move(p));
      }
    }

    if (!did) {
      if (const auto pending = channels_.earliest_pending(r)) {
        if (*pending > clock.now()) {
          clock.advance(Category::W, *pending - clock.now(), st.round_index);
          did = true;
        }
      }
    }
    return did;
  }

  const EngineConfig& config_;
  const RunInputs& inputs_;
  Prepared& prep_;
  std::vector<RankCollector> collectors_;
  std::vector<VirtualClock> clocks_;
  std::vector<RankState> ranks_;
  ChannelMatrix channels_;
  TerminationCounter counter_;
  std::vector<Particle> finished_;
  std::vector<TrackedRecord> tracked_records_;
  TrackSink track_;
};

// ---------------------------------------------------------------------------
// Concurrent engine: one worker thread per rank on a shared monotonic clock.

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

class ConcurrentEngine {
 public:
  ConcurrentEngine(const EngineConfig& config, const RunInputs& inputs, Prepared& prep)
      : config_(config),
        inputs_(inputs),
        prep_(prep),
        channels_(prep.num_ranks),
        counter_(prep.total_seeds),
        finished_(prep.num_ranks),
        tracked_(prep.num_ranks) {
    for (int r = 0; r < prep.num_ranks; ++r) {
      collectors_.emplace_back(r, config.tracing);
      ranks_.push_back(RankState{r, {}, std::move(prep.queues[r]), 0, {}});
      for (const auto& region : prep.regions[r].storage)
        ranks_.back().owned_blocks.push_back(region.region_id);
    }
  }

  RunTrace execute() {
    std::vector<std::thread> workers;
    workers.reserve(prep_.num_ranks);
    for (int r = 0; r < prep_.num_ranks; ++r)
      workers.emplace_back([this, r] { worker(r); });
    for (auto& t : workers) t.join();

    if (lost_.load())
      throw LostParticleError(
          counter_.remaining(),
          "engine stalled with " + std::to_string(counter_.remaining()) +
              " particles unaccounted for (all ranks idle, no bundles in flight)");
    if (timed_out_.load())
      throw std::runtime_error("concurrent run exceeded the watchdog limit");

    // Mark idle periods: every gap between recorded events becomes a W event
    // so per-rank timelines tile their span.
    std::vector<Particle> finished;
    for (auto& part : finished_)
      for (auto& p : part) finished.push_back(std::move(p));
    std::vector<TrackedRecord> tracked;
    for (auto& part : tracked_)
      for (auto& rec : part) tracked.push_back(std::move(rec));

    RunTrace trace = finalize_trace(prep_, collectors_, ranks_, std::move(finished),
                                    std::move(tracked), config_);
    for (auto& events : trace.rank_events) events = fill_idle_gaps(std::move(events));
    return trace;
  }

 private:
  static std::vector<TraceEvent> fill_idle_gaps(std::vector<TraceEvent> events) {
    std::vector<TraceEvent> out;
    out.reserve(events.size());
    double cursor = 0.0;
    long round = 0;
    for (const auto& e : events) {
      if (e.t_start > cursor)
        out.push_back({e.rank, Category::W, cursor, e.t_start, round, 0, 0, 0});
      out.push_back(e);
      cursor = e.t_end;
      round = e.round;
    }
    return out;
  }

  void worker(int r) {
    RankState& st = ranks_[r];
    RankCollector& col = collectors_[r];
    TrackSink track{config_.track_id, &tracked_[r]};
    {
      const double t = timer_.now();
      col.record(Category::I, t, t, 0, static_cast<long>(st.active_queue.size()));
      for (const auto& p : st.active_queue) track.note(r, "seeded", t, p.id);
    }

    bool was_idle = false;
    while (!abort_.load(std::memory_order_acquire) && counter_.remaining() > 0) {
      bool did = false;
      long n_term = 0;
      std::map<int, std::vector<Particle>> outgoing;
      std::vector<Particle> self_returns;

      if (!st.active_queue.empty()) {
        did = true;
        st.round_index += 1;
        st.counters.rounds += 1;
        const long batch_size = static_cast<long>(st.active_queue.size());
        st.counters.particles_processed += batch_size;

        const double t0 = timer_.now();
        for (const auto& p : st.active_queue) track.note(r, "batch_begin", t0, p.id);
        std::vector<Particle> batch = std::move(st.active_queue);
        st.active_queue.clear();
        const double t1 = timer_.now();
        col.record(Category::BO, t0, t1, st.round_index, batch_size);

        KernelResult kr = advect_batch(std::move(batch), prep_.regions[r].ptrs,
                                       inputs_.domain, prep_.advect);
        const double t2 = timer_.now();
        col.record(Category::A, t1, t2, st.round_index, batch_size, kr.steps_executed);

        for (Particle& p : kr.exited) {
          if (check_ping_pong(p, config_.early_termination)) {
            p.status = ParticleStatus::EarlyTerminated;
            kr.terminated.push_back(std::move(p));
            continue;
          }
          const auto route = route_particle(p.position, p.id, inputs_.domain,
                                            inputs_.layout, inputs_.assignment);
          if (!route)
            throw std::logic_error("exited particle has no destination block");
          if (route->target_rank == r)
            self_returns.push_back(std::move(p));
          else
            outgoing[route->target_rank].push_back(std::move(p));
        }
        kr.exited.clear();
        const double t3 = timer_.now();
        col.record(Category::EO, t2, t3, st.round_index, batch_size);
        attribute_batch_times(kr, (t1 - t0) / batch_size, t2 - t1,
                              (t3 - t2) / batch_size);
        for (Particle& p : kr.terminated) {
          p.termination_time = t3;
          p.t_cw = t3 - p.seed_time - p.t_bo - p.t_a - p.t_eo;
          if (p.t_cw < 0.0) p.t_cw = 0.0;
          track.note(r, "terminated", t3, p.id);
          finished_[r].push_back(std::move(p));
          ++n_term;
        }
      }

      const double c0 = timer_.now();
      const long bundles_out = static_cast<long>(outgoing.size());
      long particles_moved = 0;
      for (auto& [dest, plist] : outgoing) {
        st.counters.particles_sent += static_cast<long>(plist.size());
        particles_moved += static_cast<long>(plist.size());
        const double ts = timer_.now();
        for (auto& p : plist) track.note(r, "sent", ts, p.id);
        channels_.send({r, dest, std::move(plist), ts});
      }
      counter_.decrement(n_term);

      auto received =
          channels_.receive(r, std::numeric_limits<double>::infinity());
      const long bundles_in = static_cast<long>(received.size());
      long particles_received = 0;
      for (auto& bundle : received) {
        st.counters.particles_received += static_cast<long>(bundle.particles.size());
        particles_received += static_cast<long>(bundle.particles.size());
        const double ta = timer_.now();
        for (auto& p : bundle.particles) {
          track.note(r, "received", ta, p.id);
          st.active_queue.push_back(std::move(p));
        }
      }
      for (auto& p : self_returns) st.active_queue.push_back(std::move(p));
      if (bundles_out + bundles_in > 0) {
        did = true;
        col.record(Category::C, c0, timer_.now(), st.round_index,
                   particles_moved + particles_received, 0, bundles_out + bundles_in);
      }

      if (!did) {
        if (!was_idle) {
          was_idle = true;
          idle_ranks_.fetch_add(1, std::memory_order_acq_rel);
        }
        if (timer_.now() > config_.watchdog_seconds) {
          timed_out_.store(true);
          abort_.store(true, std::memory_order_release);
          break;
        }
        if (idle_ranks_.load(std::memory_order_acquire) == prep_.num_ranks &&
            channels_.in_flight() == 0 && counter_.remaining() > 0) {
          std::this_thread::sleep_for(std::chrono::milliseconds(2));
          if (idle_ranks_.load(std::memory_order_acquire) == prep_.num_ranks &&
              channels_.in_flight() == 0 && counter_.remaining() > 0) {
            lost_.store(true);
            abort_.store(true, std::memory_order_release);
            break;
          }
        }
        std::this_thread::sleep_for(std::chrono::microseconds(20));
      } else if (was_idle) {
        was_idle = false;
        idle_ranks_.fetch_sub(1, std::memory_order_acq_rel);
      }
    }
    if (was_idle) idle_ranks_.fetch_sub(1, std::memory_order_acq_rel);
  }

  const EngineConfig& config_;
  const RunInputs& inputs_;
  Prepared& prep_;
  std::vector<RankCollector> collectors_;
  std::vector<RankState> ranks_;
  ChannelMatrix channels_;
  TerminationCounter counter_;
  WallTimer timer_;
  std::vector<std::vector<Particle>> finished_;
  std::vector<std::vector<TrackedRecord>> tracked_;
  std::atomic<int> idle_ranks_{0};
  std::atomic<bool> abort_{false};
  std::atomic<bool> lost_{false};
  std::atomic<bool> timed_out_{false};
};

}  // namespace

RunTrace run(const EngineConfig& config, RunInputs inputs) {
  Prepared prep = prepare(config, inputs);
  RunTrace trace;
  if (config.mode == SchedulerMode::DeterministicVirtual) {
    VirtualEngine engine(config, inputs, prep);
    trace = engine.execute();
    trace.mode = "virtual";
    trace.time_unit = "virtual_seconds";
  } else {
    ConcurrentEngine engine(config, inputs, prep);
    trace = engine.execute();
    trace.mode = "concurrent";
    trace.time_unit = "seconds";
  }
  return trace;
}

}  // namespace pod
