#pragma once

// Scenario builders shared across the test suites. All of them run on the
// unit cube with dyadic grid spacings so virtual-mode timestamps stay exact.

#include "pod/config.hpp"

namespace pod::testing {

/// Single rank, all particles spiral into a central sink.
inline ExperimentConfig sink_scenario(long seed_count = 64, int max_steps = 100000) {
  ExperimentConfig cfg;
  cfg.name = "sink";
  cfg.ranks = {1};
  cfg.max_steps = {max_steps};
  cfg.block_dims = {17, 17, 17};
  cfg.field = AnalyticField::sink({0.5, 0.5, 0.5}, 4.0);
  cfg.seeds.kind = SeedSpec::Kind::BoxFraction;
  cfg.seeds.count = seed_count;
  cfg.seeds.fraction = 0.5;
  cfg.seeds.rng_seed = 21;
  return cfg;
}

/// A vortex centered on the x=0.5 face of a 2x2x2 decomposition; particles
/// seeded around it circulate between blocks 0 and 4 until max_steps.
inline ExperimentConfig vortex_scenario(int ranks = 8, int max_steps = 2000,
                                        long seed_count = 1600) {
  ExperimentConfig cfg;
  cfg.name = "boundary-vortex";
  cfg.ranks = {ranks};
  cfg.max_steps = {max_steps};
  cfg.block_dims = {33, 33, 33};
  cfg.field = AnalyticField::boundary_vortex({0.5, 0.25, 0.25}, {0, 0, 1},
                                             4.0 * 3.14159265358979323846, 0.22, 0, 0.5,
                                             1e-9);
  cfg.seeds.kind = SeedSpec::Kind::BoxFraction;
  cfg.seeds.count = seed_count;
  cfg.seeds.fraction = 0.35;
  cfg.seeds.box_center = Vec3{0.5, 0.25, 0.25};
  cfg.seeds.rng_seed = 42;
  return cfg;
}

/// Outward spiral: cylindrical circulation plus radial outflow; every seed
/// on the line leaves the domain well before max_steps.
inline ExperimentConfig spiral_scenario(int ranks, long seed_count = 1600,
                                        int max_steps = 2000) {
  ExperimentConfig cfg;
  cfg.name = "spiral-out";
  cfg.ranks = {ranks};
  cfg.max_steps = {max_steps};
  cfg.block_dims = {33, 33, 33};
  cfg.field = AnalyticField::composite(
      {AnalyticField::cylindrical({0.5, 0.5, 0.5}, {0, 0, 1}, 2.0 * 3.14159265358979323846),
       AnalyticField::outflow({0.5, 0.5, 0.5}, 0.5)});
  cfg.seeds.kind = SeedSpec::Kind::Line;
  cfg.seeds.count = seed_count;
  cfg.seeds.line_a = {0.55, 0.5, 0.3};
  cfg.seeds.line_b = {0.9, 0.5, 0.7};
  return cfg;
}

/// Two blocks along z, constant +z flow, all seeds in the lower block: one
/// bundle crosses rank 0 -> 1 and every particle exits the domain.
inline ExperimentConfig crossing_scenario(long seed_count = 32) {
  ExperimentConfig cfg;
  cfg.name = "crossing";
  cfg.ranks = {2};
  cfg.max_steps = {4000};
  cfg.block_dims = {9, 9, 9};
  cfg.field = AnalyticField::constant({0, 0, 1});
  cfg.seeds.kind = SeedSpec::Kind::BoxFraction;
  cfg.seeds.count = seed_count;
  cfg.seeds.fraction = 0.25;
  cfg.seeds.box_center = Vec3{0.5, 0.5, 0.2};  // inside block 0 (z < 0.5)
  cfg.seeds.rng_seed = 9;
  return cfg;
}

}  // namespace pod::testing
