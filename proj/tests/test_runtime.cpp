#include <doctest.h>

#include <stdexcept>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "pod/metrics.hpp"
#include "pod/runtime.hpp"
#include "scenarios.hpp"

using namespace pod;

namespace {

std::map<std::int64_t, const ParticleStats*> by_id(const RunTrace& trace) {
  std::map<std::int64_t, const ParticleStats*> m;
  for (const auto& p : trace.particles) m[p.id] = &p;
  return m;
}

long bundles_sent_by(const RunTrace& trace, int rank) {
  long n = 0;
  for (const auto& e : trace.rank_events[rank])
    if (e.category == Category::C) n += e.bundles;
  return n;
}

}  // namespace

TEST_CASE("termination counter") {
  TerminationCounter counter(10);
  counter.decrement(4);
  CHECK(counter.remaining() == 6);
  counter.decrement(0);
  CHECK(counter.remaining() == 6);
  CHECK_THROWS_AS(counter.decrement(-1), std::invalid_argument);
  CHECK_THROWS_AS(counter.decrement(7), std::logic_error);
}

TEST_CASE("channels preserve per-pair FIFO order") {
  ChannelMatrix channels(3);

  SUBCASE("two bundles on one channel arrive in send order") {
    Particle a, b;
    a.id = 1;
    b.id = 2;
    channels.send({0, 1, {a}, 1.0});
    channels.send({0, 1, {b}, 2.0});
    auto got = channels.receive(1, 10.0);
    REQUIRE(got.size() == 2);
    CHECK(got[0].particles[0].id == 1);
    CHECK(got[1].particles[0].id == 2);
  }

  SUBCASE("nothing pending yields an empty list") {
    CHECK(channels.receive(2, 100.0).empty());
  }

  SUBCASE("timestamps gate visibility") {
    Particle a;
    channels.send({0, 1, {a}, 5.0});
    CHECK(channels.receive(1, 4.9).empty());
    CHECK(channels.earliest_pending(1) == 5.0);
    CHECK(channels.receive(1, 5.0).size() == 1);
    CHECK(channels.in_flight() == 0);
  }

  SUBCASE("interleavings keep each source's internal order") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
      ChannelMatrix m(3);
      int next0 = 0, next1 = 100;
      for (int i = 0; i < 20; ++i) {
        Particle p;
        const bool from0 = (rng() & 1) != 0;
        p.id = from0 ? next0++ : next1++;
        m.send({from0 ? 0 : 1, 2, {p}, static_cast<double>(i)});
      }
      std::int64_t last0 = -1, last1 = 99;
      for (const auto& bundle : m.receive(2, 1e9)) {
        const auto id = bundle.particles[0].id;
        if (bundle.source_rank == 0) {
          CHECK(id > last0);
          last0 = id;
        } else {
          CHECK(id > last1);
          last1 = id;
        }
      }
    }
  }

  SUBCASE("nonexistent destinations and empty bundles are config errors") {
    Particle p;
    CHECK_THROWS_AS(channels.send({0, 7, {p}, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(channels.send({0, 1, {}, 0.0}), std::invalid_argument);
  }
}

TEST_CASE("virtual clock") {
  RankCollector collector(0);
  VirtualClock clock(&collector);

  SUBCASE("advances by the cost of the work item") {
    // batch of 10 particles x 100 steps at 1e-6 per step
    const double t = clock.advance(Category::A, 10 * 100 * 1e-6, 1, 10, 1000);
    CHECK(t == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(collector.events().size() == 1);
    CHECK(collector.events()[0].t_end == t);
  }

  SUBCASE("rejects negative amounts") {
    CHECK_THROWS_AS(clock.advance(Category::A, -1.0, 1), std::invalid_argument);
  }
}

TEST_CASE("check_ping_pong alternation predicate") {
  PingPongPolicy policy{true, 3};
  Particle p;

  auto with_history = [&](std::vector<int> blocks) {
    p.visit_history.clear();
    for (int b : blocks) p.visit_history.push_back({b, 1});
    return p;
  };

  CHECK(check_ping_pong(with_history({1, 2, 1, 2, 1, 2}), policy));
  CHECK_FALSE(check_ping_pong(with_history({1, 2, 3, 1, 2, 3}), policy));
  CHECK_FALSE(check_ping_pong(with_history({1, 2, 1, 2}), policy));        // too short
  CHECK_FALSE(check_ping_pong(with_history({1, 1, 1, 1, 1, 1}), policy));  // one block
  // only the suffix matters
  CHECK(check_ping_pong(with_history({7, 3, 1, 2, 1, 2, 1, 2}), policy));
  CHECK_FALSE(check_ping_pong(with_history({1, 2, 1, 2, 1, 2}), PingPongPolicy{false, 3}));
}

TEST_CASE("single rank sink run halts after one round") {
  const auto cfg = testing::sink_scenario(8);
  const auto result = execute_cell(cfg, 1, 100000);
  const RunTrace& trace = result.trace;
  CHECK(trace.num_ranks == 1);
  CHECK(trace.particles.size() == 8);
  for (const auto& p : trace.particles) CHECK(p.status == ParticleStatus::ZeroVelocity);
  CHECK(trace.rank_counters[0].rounds == 1);
  CHECK(trace.rank_counters[0].particles_sent == 0);
}

TEST_CASE("constant flow across two blocks sends exactly one bundle") {
  const auto cfg = testing::crossing_scenario(32);
  const auto result = execute_cell(cfg, 2, 4000);
  const RunTrace& trace = result.trace;

  CHECK(bundles_sent_by(trace, 0) == 1);
  CHECK(bundles_sent_by(trace, 1) == 1);  // the receive shows up on rank 1's C event
  CHECK(trace.rank_counters[0].particles_sent == 32);
  CHECK(trace.rank_counters[1].particles_received == 32);
  CHECK(trace.rank_counters[1].particles_sent == 0);
  for (const auto& p : trace.particles) {
    CHECK(p.status == ParticleStatus::OutOfBounds);
    CHECK(p.np == 2);
  }

  // The idle receiver waits in a W interval that spans until the arrival.
  const auto& r1 = trace.rank_events[1];
  REQUIRE(r1.size() >= 2);
  CHECK(r1[0].category == Category::I);
  CHECK(r1[1].category == Category::W);
  // arrival = send completion on rank 0's clock
  double send_done = 0.0;
  for (const auto& e : trace.rank_events[0])
    if (e.category == Category::C) send_done = e.t_start + e.bundles * 0x1p-18;
  CHECK(r1[1].t_end == send_done);
}

TEST_CASE("merging both blocks removes all sends") {
  auto cfg = testing::crossing_scenario(32);
  cfg.mitigation.kind = MitigationSpec::Kind::Merge;
  cfg.mitigation.groups = {{0, 1}};
  const auto result = execute_cell(cfg, 2, 4000);
  for (int r = 0; r < 2; ++r) {
    CHECK(result.trace.rank_counters[r].particles_sent == 0);
    CHECK(bundles_sent_by(result.trace, r) == 0);
  }
  for (const auto& p : result.trace.particles) {
    CHECK(p.status == ParticleStatus::OutOfBounds);
    CHECK(p.np == 1);  // one region visit: the merged pair acts as one block
  }
}

TEST_CASE("virtual mode is bit-reproducible") {
  const auto cfg = testing::vortex_scenario(8, 200, 200);
  const auto a = execute_cell(cfg, 8, 200);
  const auto b = execute_cell(cfg, 8, 200);

  std::ostringstream sa, sb;
  write_events_jsonl(a.trace, "/tmp/podsim_repro_a.jsonl");
  write_events_jsonl(b.trace, "/tmp/podsim_repro_b.jsonl");
  std::ifstream fa("/tmp/podsim_repro_a.jsonl"), fb("/tmp/podsim_repro_b.jsonl");
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(a.trace.total_time == b.trace.total_time);
}

TEST_CASE("virtual-mode accounting identities are exact") {
  const auto cfg = testing::vortex_scenario(8, 300, 400);
  const auto result = execute_cell(cfg, 8, 300);
  const RunTrace& trace = result.trace;

  // Per-rank timelines tile [0, finish] with no gaps or overlaps.
  for (const auto& events : trace.rank_events) {
    double cursor = 0.0;
    for (const auto& e : events) {
      CHECK(e.t_start == cursor);
      CHECK(e.t_end >= e.t_start);
      cursor = e.t_end;
    }
  }

  // Per-particle: the four categories partition the lifetime exactly.
  for (const auto& p : trace.particles) {
    CHECK(p.t_bo + p.t_a + p.t_eo + p.t_cw == p.termination_time);
    CHECK(p.t_cw >= 0.0);
    CHECK(p.t_c <= p.t_cw);
  }

  // Total time equals both the slowest rank and the slowest particle.
  double max_rank = 0.0;
  for (const auto& events : trace.rank_events)
    if (!events.empty()) max_rank = std::max(max_rank, events.back().t_end);
  CHECK(trace.total_time == max_rank);
  CHECK(trace.total_time == find_slowest_particle(trace.particles).termination_time);
}

TEST_CASE("concurrent mode agrees with virtual mode on order-insensitive outputs") {
  auto cfg = testing::vortex_scenario(4, 150, 120);
  const auto virt = execute_cell(cfg, 4, 150);
  cfg.mode = SchedulerMode::Concurrent;
  const auto conc = execute_cell(cfg, 4, 150);

  REQUIRE(virt.trace.particles.size() == conc.trace.particles.size());
  const auto vm = by_id(virt.trace);
  const auto cm = by_id(conc.trace);
  for (const auto& [id, vp] : vm) {
    const auto* cp = cm.at(id);
    CHECK(vp->status == cp->status);
    CHECK(vp->steps == cp->steps);
    CHECK(vp->np == cp->np);
  }
  const auto vb = termination_breakdown(virt.trace.particles);
  const auto cb = termination_breakdown(conc.trace.particles);
  CHECK(vb.counts() == cb.counts());
}

TEST_CASE("early termination policy only fires on alternating histories") {
  auto cfg = testing::vortex_scenario(8, 2000, 300);
  cfg.mitigation.kind = MitigationSpec::Kind::EarlyTerminate;
  cfg.mitigation.window = 2;
  const auto result = execute_cell(cfg, 8, 2000);
  long early = 0;
  for (const auto& p : result.trace.particles) {
    if (p.status != ParticleStatus::EarlyTerminated) continue;
    ++early;
    CHECK(is_two_block_alternation(p.history, 2));
  }
  CHECK(early > 0);
}

TEST_CASE("particle conservation across the scenario suite") {
  const std::vector<ExperimentConfig> suite = {
      testing::sink_scenario(32),
      testing::crossing_scenario(32),
      testing::vortex_scenario(8, 200, 200),
      testing::spiral_scenario(8, 100, 2000),
  };
  for (const auto& cfg : suite) {
    const auto result = execute_cell(cfg, cfg.ranks[0], cfg.max_steps[0]);
    const long seeded = cfg.seeds.kind == SeedSpec::Kind::PerBlockRandom
                            ? cfg.seeds.count * make_layout(cfg.ranks[0]).num_blocks()
                            : cfg.seeds.count;
    CHECK(result.trace.seeded_count() == seeded);
    const auto breakdown = termination_breakdown(result.trace.particles);
    CHECK(breakdown.total() == seeded);

    long sent = 0, received = 0;
    for (const auto& c : result.trace.rank_counters) {
      sent += c.particles_sent;
      received += c.particles_received;
    }
    CHECK(sent == received);

    // Step-count conservation: particle steps match the A-event payloads.
    long particle_steps = 0;
    for (const auto& p : result.trace.particles) particle_steps += p.steps;
    long event_steps = 0;
    for (const auto& events : result.trace.rank_events)
      for (const auto& e : events) event_steps += e.steps;
    CHECK(particle_steps == event_steps);
  }
}

TEST_CASE("engine rejects inconsistent inputs") {
  auto cfg = testing::sink_scenario(4);
  auto setup = build_cell(cfg, 1, 100);
  RunInputs inputs;
  inputs.domain = cfg.domain;
  inputs.layout = setup.layout;
  inputs.assignment = setup.assignment;
  inputs.blocks = &setup.blocks;

  SUBCASE("no seeds") {
    inputs.seeds.clear();
    CHECK_THROWS_AS(run(setup.engine, std::move(inputs)), std::invalid_argument);
  }

  SUBCASE("seed outside the domain") {
    inputs.seeds = setup.seeds;
    inputs.seeds[0].position = {5, 5, 5};
    CHECK_THROWS_AS(run(setup.engine, std::move(inputs)), std::invalid_argument);
  }

  SUBCASE("missing max_steps") {
    inputs.seeds = setup.seeds;
    inputs.seeds[0].max_steps = 0;
    CHECK_THROWS_AS(run(setup.engine, std::move(inputs)), std::invalid_argument);
  }

  SUBCASE("negative virtual costs") {
    inputs.seeds = setup.seeds;
    setup.engine.costs.per_step = -1.0;
    CHECK_THROWS_AS(run(setup.engine, std::move(inputs)), std::invalid_argument);
  }
}
