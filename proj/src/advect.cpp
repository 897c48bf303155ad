#include "pod/advect.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pod {

const char* to_string(ParticleStatus s) {
  switch (s) {
    case ParticleStatus::Active: return "active";
    case ParticleStatus::OutOfBounds: return "out_of_bounds";
    case ParticleStatus::ZeroVelocity: return "zero_velocity";
    case ParticleStatus::MaxSteps: return "max_steps";
    case ParticleStatus::EarlyTerminated: return "early_terminated";
  }
  return "?";
}

ParticleStatus particle_status_from_string(const std::string& s) {
  if (s == "active") return ParticleStatus::Active;
  if (s == "out_of_bounds") return ParticleStatus::OutOfBounds;
  if (s == "zero_velocity") return ParticleStatus::ZeroVelocity;
  if (s == "max_steps") return ParticleStatus::MaxSteps;
  if (s == "early_terminated") return ParticleStatus::EarlyTerminated;
  throw std::invalid_argument("unknown particle status: " + s);
}

Rk4Result rk4_step(const GridBlock& block, const Vec3& p, double h) {
  const auto k1 = interpolate(block, p);
  if (!k1) return Rk4Failure{0};
  const auto k2 = interpolate(block, p + *k1 * (h / 2.0));
  if (!k2) return Rk4Failure{1};
  const auto k3 = interpolate(block, p + *k2 * (h / 2.0));
  if (!k3) return Rk4Failure{2};
  const auto k4 = interpolate(block, p + *k3 * h);
  if (!k4) return Rk4Failure{3};
  const Vec3 next = p + (*k1 + (*k2 + *k3) * 2.0 + *k4) * (h / 6.0);
  if (!block.extent().contains(next)) return Rk4Failure{4};
  return next;
}

PushResult push_across_boundary(const GridBlock& block, const Vec3& p, double h,
                                const AdvectParams& params) {
  const Extent ext = block.extent();
  if (!ext.contains(p)) throw std::invalid_argument("push point must start inside block");

  PushResult result;
  Vec3 landing = p;

  if (params.use_bisection && ext.distance_to_boundary(p) > params.bisection_eps) {
    // Largest sub-step that still lands inside, until within eps of a face.
    double lo = 0.0;
    double hi = h;
    for (int iter = 0; iter < params.bisection_cap; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const Rk4Result step = rk4_step(block, p, mid);
      if (const Vec3* next = std::get_if<Vec3>(&step)) {
        landing = *next;
        lo = mid;
        ++result.bisection_iters;
        if (ext.distance_to_boundary(landing) <= params.bisection_eps) break;
      } else {
        hi = mid;
        ++result.bisection_iters;
      }
    }
  }

  const auto vel = interpolate(block, landing);
  if (!vel) throw std::runtime_error("bisection landing left the block");
  const double speed = vel->norm();
  if (speed < params.v_zero) {
    result.zero_velocity = true;
    result.exit_position = landing;
    return result;
  }

  // Nudge along the flow until the point clears the inclusive extent.
  const Vec3 dir = *vel / speed;
  double push = params.epsilon_push;
  for (int iter = 0; iter < params.bisection_cap; ++iter) {
    const Vec3 candidate = landing + dir * push;
    if (!ext.contains(candidate)) {
      result.exit_position = candidate;
      return result;
    }
    push *= 2.0;
  }
  throw std::runtime_error("boundary push failed to leave block " +
                           std::to_string(block.block_id));
}

namespace {

enum class StepKind { Moved, Exited, ZeroVelocity };

struct StepOutcome {
  StepKind kind;
  Vec3 position;
};

StepOutcome advance_one_step(const GridBlock& block, const Vec3& p,
                             const AdvectParams& params) {
  const Rk4Result step = rk4_step(block, p, params.step_size);
  if (const Vec3* next = std::get_if<Vec3>(&step))
    return {StepKind::Moved, *next};
  const PushResult push = push_across_boundary(block, p, params.step_size, params);
  if (push.zero_velocity) return {StepKind::ZeroVelocity, push.exit_position};
  return {StepKind::Exited, push.exit_position};
}

}  // namespace

KernelResult advect_batch(std::vector<Particle> batch,
                          std::span<const AdvectionRegion* const> regions,
                          const GlobalDomain& domain, const AdvectParams& params) {
  if (params.step_size <= 0.0) throw std::invalid_argument("step_size must be positive");

  KernelResult result;
  const int group_size = static_cast<int>(batch.size());

  for (Particle& particle : batch) {
    if (particle.status != ParticleStatus::Active)
      throw std::invalid_argument("advect_batch received a non-active particle");

    const AdvectionRegion* region = nullptr;
    for (const AdvectionRegion* r : regions)
      if (r->find(particle.position)) {
        region = r;
        break;
      }
    if (!region)
      throw std::invalid_argument("particle " + std::to_string(particle.id) +
                                  " lies outside every region of this batch");

    particle.visit_history.push_back({region->region_id, group_size});

    const GridBlock* block = region->find(particle.position);
    bool exited = false;
    while (true) {
      if (particle.steps_taken >= particle.max_steps) {
        particle.status = ParticleStatus::MaxSteps;
        break;
      }
      const auto vel = interpolate(*block, particle.position);
      if (vel && vel->norm() < params.v_zero) {
        particle.status = ParticleStatus::ZeroVelocity;
        break;
      }
      const StepOutcome step = advance_one_step(*block, particle.position, params);
      particle.position = step.position;
      particle.steps_taken += 1;
      result.steps_executed += 1;
      if (step.kind == StepKind::ZeroVelocity) {
        particle.status = ParticleStatus::ZeroVelocity;
        break;
      }
      if (step.kind == StepKind::Exited) {
        if (!domain.contains(particle.position)) {
          particle.status = ParticleStatus::OutOfBounds;
          break;
        }
        const GridBlock* next_block = region->find(particle.position);
        if (next_block) {
          block = next_block;  // merged-group internal handoff, no new visit
          continue;
        }
        exited = true;
        break;
      }
    }

    if (exited) {
      result.exited.push_back(std::move(particle));
    } else {
      result.terminated_count[termination_index(particle.status)] += 1;
      result.terminated.push_back(std::move(particle));
    }
  }
  return result;
}

KernelResult advect_batch(std::vector<Particle> batch, const AdvectionRegion& region,
                          const GlobalDomain& domain, const AdvectParams& params) {
  const AdvectionRegion* ptr = &region;
  return advect_batch(std::move(batch), std::span<const AdvectionRegion* const>{&ptr, 1},
                      domain, params);
}

void attribute_batch_times(KernelResult& result, double bo_share, double a_duration,
                           double eo_share) {
  auto apply = [&](Particle& p) {
    p.t_bo += bo_share;
    p.t_a += a_duration;
    p.t_eo += eo_share;
  };
  for (Particle& p : result.exited) apply(p);
  for (Particle& p : result.terminated) apply(p);
}

}  // namespace pod
