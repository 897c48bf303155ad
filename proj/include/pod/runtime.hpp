#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pod/advect.hpp"
#include "pod/decomp.hpp"
#include "pod/trace.hpp"

namespace pod {

/// Virtual-time costs per unit of work. The defaults are binary fractions so
/// every virtual timestamp is an exact dyadic rational and the Eq-style
/// accounting identities hold bit-exactly. End overhead defaults to twice
/// begin overhead, matching the measured asymmetry between the two phases.
struct CostModel {
  double per_step = 0x1p-20;         // advection, per RK4 step
  double per_particle_bo = 0x1p-22;  // kernel setup, per batch particle
  double per_particle_eo = 0x1p-21;  // status partitioning, per batch particle
  double per_bundle_c = 0x1p-18;     // serialize+send or receive, per bundle

  void validate() const;
};

/// Early termination of particles whose visit history alternates between two
/// adjacent blocks for `window` round trips.
struct PingPongPolicy {
  bool enabled = false;
  int window = 2;
};

enum class SchedulerMode { DeterministicVirtual, Concurrent };

struct EngineConfig {
  SchedulerMode mode = SchedulerMode::DeterministicVirtual;
  CostModel costs;
  PingPongPolicy early_termination;
  AdvectParams advect;
  bool tracing = true;
  std::optional<std::int64_t> track_id;
  double watchdog_seconds = 300.0;  // concurrent-mode wall clock cap
};

struct ParticleBundle {
  int source_rank = 0;
  int dest_rank = 0;
  std::vector<Particle> particles;
  double send_timestamp = 0.0;
};

/// Count of particles still alive anywhere in the system. The engine halts
/// when it reaches zero.
class TerminationCounter {
 public:
  explicit TerminationCounter(long long total) : remaining_(total) {}
  long long remaining() const { return remaining_.load(std::memory_order_acquire); }
  void decrement(long long n) {
    if (n < 0) throw std::invalid_argument("negative termination count");
    if (remaining_.fetch_sub(n, std::memory_order_acq_rel) < n)
      throw std::logic_error("termination counter went negative");
  }

 private:
  std::atomic<long long> remaining_;
};

/// Per source->destination FIFO bundle channels. Bundles on one channel are
/// always received in send order; ordering across channels is up to the
/// receiver's probe order.
class ChannelMatrix {
 public:
  explicit ChannelMatrix(int num_ranks) : n_(num_ranks), queues_(num_ranks * num_ranks) {}

  /// Validates rank ids and rejects empty bundles.
  void send(ParticleBundle bundle);

  /// Pop every bundle destined to `dst` whose send timestamp is <= now,
  /// probing sources in ascending rank order. Pass +inf to drain.
  std::vector<ParticleBundle> receive(int dst, double now);

  /// Earliest pending send timestamp on any channel into `dst`.
  std::optional<double> earliest_pending(int dst) const;

  long in_flight() const { return in_flight_.load(std::memory_order_acquire); }

 private:
  std::deque<ParticleBundle>& channel(int src, int dst) {
    return queues_[static_cast<std::size_t>(src) * n_ + dst];
  }
  const std::deque<ParticleBundle>& channel(int src, int dst) const {
    return queues_[static_cast<std::size_t>(src) * n_ + dst];
  }

  int n_;
  mutable std::mutex mutex_;
  std::vector<std::deque<ParticleBundle>> queues_;
  std::atomic<long> in_flight_{0};
};

/// Per-rank virtual clock; advancing it records the interval with the rank's
/// collector. Rejects negative amounts.
class VirtualClock {
 public:
  explicit VirtualClock(RankCollector* collector) : collector_(collector) {}
  double now() const { return now_; }
  double advance(Category category, double amount, long round, long particles = 0,
                 long steps = 0, long bundles = 0);

 private:
  double now_ = 0.0;
  RankCollector* collector_;
};

struct RankState {
  int rank_id = 0;
  std::vector<int> owned_blocks;  // blocks whose data this rank holds
  std::vector<Particle> active_queue;
  long round_index = 0;
  RankCounters counters;
};

/// True when the policy is enabled and the particle's last 2*window visits
/// alternate strictly between exactly two blocks.
bool check_ping_pong(const Particle& particle, const PingPongPolicy& policy);

/// All ranks idle, nothing in flight, but the counter never reached zero.
struct LostParticleError : std::runtime_error {
  LostParticleError(long long remaining, std::string what)
      : std::runtime_error(std::move(what)), remaining(remaining) {}
  long long remaining;
};

struct RunInputs {
  GlobalDomain domain;
  BlockLayout layout;
  BlockAssignment assignment;
  const std::vector<GridBlock>* blocks = nullptr;  // indexed by block id
  std::vector<Particle> seeds;                     // max_steps already assigned
};

/// Fill zero-valued advection parameters with the standard defaults:
/// step_size = 0.25 * min grid spacing, epsilon_push = 1e-6 * domain
/// diagonal, bisection_eps = 1e-8 * block diagonal.
AdvectParams resolved_params(AdvectParams params, const GlobalDomain& domain,
                             const std::vector<GridBlock>& blocks);

/// Execute the per-rank advect/communicate loop until every particle has
/// terminated. DeterministicVirtual mode steps ranks round-robin on virtual
/// clocks and is bit-reproducible; Concurrent mode runs one thread per rank
/// on the wall clock. Throws LostParticleError if the system goes quiet with
/// particles unaccounted for.
RunTrace run(const EngineConfig& config, RunInputs inputs);

}  // namespace pod
