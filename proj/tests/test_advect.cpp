#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "pod/advect.hpp"

using namespace pod;

namespace {

GridBlock constant_block(const Vec3& v) {
  return sample_field(AnalyticField::constant(v), {0, {0, 0, 0}, {0.25, 0.25, 0.25},
                                                   {5, 5, 5}});  // extent [0,1]^3
}

AdvectParams test_params(double h) {
  AdvectParams p;
  p.step_size = h;
  p.epsilon_push = 1e-6;
  p.bisection_eps = 1e-8;
  return p;
}

Particle make_particle(std::int64_t id, const Vec3& pos, int max_steps) {
  Particle p;
  p.id = id;
  p.position = pos;
  p.max_steps = max_steps;
  return p;
}

}  // namespace

TEST_CASE("rk4_step") {
  SUBCASE("exact for a constant field") {
    const GridBlock block = constant_block({1, 0, 0});
    const auto r = rk4_step(block, {0, 0, 0}, 0.1);
    const Vec3* next = std::get_if<Vec3>(&r);
    REQUIRE(next != nullptr);
    CHECK(next->x == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(next->y == 0.0);
    CHECK(next->z == 0.0);
  }

  SUBCASE("keeps a circulating particle on the unit circle") {
    // Cylindrical flow is linear, so trilinear sampling reproduces it exactly
    // and the only error is the integrator's.
    const auto field = AnalyticField::cylindrical({0, 0, 0}, {0, 0, 1}, 1.0);
    const GridBlock block =
        sample_field(field, {0, {-1.2, -1.2, -1.2}, {0.1, 0.1, 0.1}, {25, 25, 25}});
    const auto r = rk4_step(block, {1, 0, 0}, 0.01);
    const Vec3* next = std::get_if<Vec3>(&r);
    REQUIRE(next != nullptr);
    CHECK(std::abs(next->norm() - 1.0) < 1e-8);
  }

  SUBCASE("fourth-order endpoint convergence against the analytic circle") {
    const auto field = AnalyticField::cylindrical({0, 0, 0}, {0, 0, 1}, 1.0);
    const GridBlock block =
        sample_field(field, {0, {-1.2, -1.2, -1.2}, {0.1, 0.1, 0.1}, {25, 25, 25}});
    auto drift = [&](double h, int steps) {
      Vec3 p{1, 0, 0};
      for (int i = 0; i < steps; ++i) {
        const auto r = rk4_step(block, p, h);
        p = std::get<Vec3>(r);
      }
      return std::abs(p.norm() - 1.0);
    };
    const double coarse = drift(0.01, 1000);
    const double fine = drift(0.005, 2000);
    CHECK(coarse < 1e-6);
    CHECK(coarse / fine > 10.0);  // theoretical factor 16
  }

  SUBCASE("fails with the offending stage when a stage point leaves the block") {
    const GridBlock block = constant_block({1, 0, 0});
    const auto r = rk4_step(block, {0.75, 0.5, 0.5}, 1.0);
    const Rk4Failure* failure = std::get_if<Rk4Failure>(&r);
    REQUIRE(failure != nullptr);
    CHECK(failure->stage >= 0);
    CHECK(failure->stage <= 4);
  }
}

TEST_CASE("push_across_boundary") {
  const AdvectParams params = test_params(0.1);

  SUBCASE("closed-form crossing for a constant field") {
    const GridBlock block = constant_block({1, 0, 0});
    const Vec3 p{0.95, 0.5, 0.5};  // face at x=1 within one step
    REQUIRE(std::holds_alternative<Rk4Failure>(rk4_step(block, p, params.step_size)));
    const PushResult r = push_across_boundary(block, p, params.step_size, params);
    CHECK_FALSE(r.zero_velocity);
    CHECK(r.exit_position.x > 1.0);
    CHECK(std::abs(r.exit_position.x - (1.0 + params.epsilon_push)) <
          params.bisection_eps + 1e-12);
    CHECK(r.exit_position.y == doctest::Approx(0.5));
  }

  SUBCASE("zero velocity reported instead of an exit") {
    const GridBlock block = constant_block({0, 0, 0});
    const PushResult r = push_across_boundary(block, {0.5, 0.5, 0.5}, 0.1, params);
    CHECK(r.zero_velocity);
  }

  SUBCASE("a point already within eps of the face pushes without bisecting") {
    const GridBlock block = constant_block({1, 0, 0});
    AdvectParams wide = params;
    wide.bisection_eps = 1e-3;
    const Vec3 p{1.0 - 1e-4, 0.5, 0.5};
    const PushResult r = push_across_boundary(block, p, 0.1, wide);
    CHECK(r.bisection_iters == 0);
    CHECK(r.exit_position.x > 1.0);
  }
}

TEST_CASE("advect_batch") {
  const GlobalDomain domain{{0, 0, 0}, {1, 1, 1}};

  SUBCASE("a particle in a sink terminates with zero velocity") {
    const auto field = AnalyticField::sink({0.5, 0.5, 0.5}, 4.0);
    const GridBlock block =
        sample_field(field, {0, {0, 0, 0}, {1.0 / 16, 1.0 / 16, 1.0 / 16}, {17, 17, 17}});
    const AdvectionRegion region{0, {&block}};
    auto result = advect_batch({make_particle(0, {0.3, 0.5, 0.5}, 100000)}, region,
                               domain, test_params(0.01));
    CHECK(result.exited.empty());
    REQUIRE(result.terminated.size() == 1);
    CHECK(result.terminated[0].status == ParticleStatus::ZeroVelocity);
    CHECK(result.terminated_count[termination_index(ParticleStatus::ZeroVelocity)] == 1);
  }

  SUBCASE("constant flow toward the domain boundary goes out of bounds") {
    const GridBlock block = constant_block({1, 0, 0});
    const AdvectionRegion region{0, {&block}};
    auto result = advect_batch({make_particle(0, {0.5, 0.5, 0.5}, 1000)}, region, domain,
                               test_params(0.01));
    REQUIRE(result.terminated.size() == 1);
    const Particle& p = result.terminated[0];
    CHECK(p.status == ParticleStatus::OutOfBounds);
    // distance / (h |v|) = 50 steps, plus at most one boundary push step
    CHECK(p.steps_taken >= 50);
    CHECK(p.steps_taken <= 51);
    CHECK(p.position.x > 1.0);
  }

  SUBCASE("k identical particles follow identical trajectories") {
    const GridBlock block = constant_block({1, 0, 0});
    const AdvectionRegion region{0, {&block}};
    auto single = advect_batch({make_particle(0, {0.5, 0.5, 0.5}, 1000)}, region, domain,
                               test_params(0.01));
    std::vector<Particle> batch;
    for (int i = 0; i < 7; ++i) batch.push_back(make_particle(i, {0.5, 0.5, 0.5}, 1000));
    auto result = advect_batch(std::move(batch), region, domain, test_params(0.01));
    CHECK(result.steps_executed == 7 * single.steps_executed);
    REQUIRE(result.terminated.size() == 7);
    for (const auto& p : result.terminated) {
      CHECK(p.position == single.terminated[0].position);
      CHECK(p.steps_taken == single.terminated[0].steps_taken);
      CHECK(p.visit_history.size() == 1);
      CHECK(p.visit_history[0].group_size == 7);
    }
  }

  SUBCASE("max steps stops active particles") {
    const auto field = AnalyticField::cylindrical({0.5, 0.5, 0.5}, {0, 0, 1}, 1.0);
    const GridBlock block =
        sample_field(field, {0, {0, 0, 0}, {0.25, 0.25, 0.25}, {5, 5, 5}});
    const AdvectionRegion region{0, {&block}};
    auto result = advect_batch({make_particle(0, {0.6, 0.5, 0.5}, 25)}, region, domain,
                               test_params(0.001));
    REQUIRE(result.terminated.size() == 1);
    CHECK(result.terminated[0].status == ParticleStatus::MaxSteps);
    CHECK(result.terminated[0].steps_taken == 25);
  }

  SUBCASE("every input particle is accounted for exactly once") {
    // Mix of exits (fast lane toward the face) and max-steps terminations.
    const auto field = AnalyticField::constant({1, 0, 0});
    const GridBlock left =
        sample_field(field, {0, {0, 0, 0}, {0.125, 0.25, 0.25}, {5, 5, 5}});
    const AdvectionRegion region{0, {&left}};  // extent [0,0.5]x[0,1]^2
    std::vector<Particle> batch;
    for (int i = 0; i < 10; ++i)
      batch.push_back(make_particle(i, {0.05 + 0.04 * i, 0.5, 0.5}, i < 5 ? 3 : 2000));
    const std::size_t total = batch.size();
    auto result = advect_batch(std::move(batch), region, domain, test_params(0.01));
    long terminated = 0;
    for (long c : result.terminated_count) terminated += c;
    CHECK(result.exited.size() + terminated == total);
    CHECK(result.terminated.size() == static_cast<std::size_t>(terminated));
    // step-count conservation at the batch level
    long steps = 0;
    for (const auto& p : result.exited) steps += p.steps_taken;
    for (const auto& p : result.terminated) steps += p.steps_taken;
    CHECK(steps == result.steps_executed);
  }

  SUBCASE("non-active or misplaced particles violate the contract") {
    const GridBlock block = constant_block({1, 0, 0});
    const AdvectionRegion region{0, {&block}};
    auto dead = make_particle(0, {0.5, 0.5, 0.5}, 10);
    dead.status = ParticleStatus::MaxSteps;
    CHECK_THROWS_AS(advect_batch({dead}, region, domain, test_params(0.01)),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        advect_batch({make_particle(0, {2, 2, 2}, 10)}, region, domain, test_params(0.01)),
        std::invalid_argument);
  }

  SUBCASE("merged regions hand particles between member blocks internally") {
    const auto field = AnalyticField::constant({1, 0, 0});
    const GridBlock left =
        sample_field(field, {0, {0, 0, 0}, {0.125, 0.25, 0.25}, {5, 5, 5}});
    const GridBlock right =
        sample_field(field, {1, {0.5, 0, 0}, {0.125, 0.25, 0.25}, {5, 5, 5}});
    const AdvectionRegion region{0, {&left, &right}};
    auto result = advect_batch({make_particle(0, {0.25, 0.5, 0.5}, 1000)}, region,
                               domain, test_params(0.01));
    REQUIRE(result.terminated.size() == 1);
    CHECK(result.terminated[0].status == ParticleStatus::OutOfBounds);
    // one region visit despite crossing the internal face
    CHECK(result.terminated[0].visit_history.size() == 1);
    CHECK(result.terminated[0].position.x > 1.0);
  }
}
