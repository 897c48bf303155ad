#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pod/field.hpp"
#include "pod/geometry.hpp"

namespace pod {

enum class ParticleStatus { Active, OutOfBounds, ZeroVelocity, MaxSteps, EarlyTerminated };

constexpr int kTerminationReasons = 4;  // non-Active statuses

/// 0-based index into termination count arrays.
constexpr int termination_index(ParticleStatus s) { return static_cast<int>(s) - 1; }

const char* to_string(ParticleStatus s);
ParticleStatus particle_status_from_string(const std::string& s);

/// One entry of a particle's block-visit history: which block region it was
/// advected in and how many particles shared that batch.
struct Visit {
  int block_id = 0;
  int group_size = 0;
  bool operator==(const Visit&) const = default;
};

struct Particle {
  std::int64_t id = 0;
  Vec3 position;
  int steps_taken = 0;
  int max_steps = 0;
  ParticleStatus status = ParticleStatus::Active;
  std::vector<Visit> visit_history;

  // Lifetime accounting. t_cw is derived at termination as
  // lifetime - (t_bo + t_a + t_eo) so the four categories partition the
  // lifetime; t_c is the communication slice of t_cw that is directly
  // measurable (virtual mode only).
  double t_init = 0.0;
  double t_bo = 0.0;
  double t_a = 0.0;
  double t_eo = 0.0;
  double t_cw = 0.0;
  double t_c = 0.0;
  double seed_time = 0.0;
  double termination_time = 0.0;
  double last_progress_time = 0.0;  // engine bookkeeping

  long accumulated_group_size() const {
    long total = 0;
    for (const auto& v : visit_history) total += v.group_size;
    return total;
  }
};

/// Advection tolerances and step control, all in world units.
struct AdvectParams {
  double step_size = 0.0;        // h; callers default this to 0.25 * min spacing
  double v_zero = 1e-10;         // zero-velocity (sink) threshold
  double epsilon_push = 1e-6;    // Euler push length across a block face
  double bisection_eps = 1e-8;   // accepted distance to the face before pushing
  bool use_bisection = true;     // false: single Euler push from the failed point
  int bisection_cap = 64;
};

struct Rk4Failure {
  int stage;  // 0..3: stage evaluation left the block; 4: final point left it
};

using Rk4Result = std::variant<Vec3, Rk4Failure>;

/// Classic fourth-order Runge-Kutta step using trilinear samples of `block`.
Rk4Result rk4_step(const GridBlock& block, const Vec3& p, double h);

/// RK4 against a velocity callable; used by oracles and analytic checks.
template <class VelocityFn>
Vec3 rk4_step_fn(VelocityFn&& vel, const Vec3& p, double h) {
  const Vec3 k1 = vel(p);
  const Vec3 k2 = vel(p + k1 * (h / 2.0));
  const Vec3 k3 = vel(p + k2 * (h / 2.0));
  const Vec3 k4 = vel(p + k3 * h);
  return p + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
}

struct PushResult {
  bool zero_velocity = false;
  Vec3 exit_position;
  int bisection_iters = 0;
};

/// Handle an RK4 boundary failure: bisect the step size until the particle
/// lands inside the block within bisection_eps of the face, then take one
/// Euler step of epsilon_push along the local velocity so the point ends up
/// strictly outside the block. Reports zero_velocity instead when |v| drops
/// below v_zero. Throws std::runtime_error if the push cannot escape the
/// block within the iteration cap.
PushResult push_across_boundary(const GridBlock& block, const Vec3& p, double h,
                                const AdvectParams& params);

/// The set of grid blocks a batch may move through without leaving its host
/// rank. A single owned block in the baseline configuration; all members of a
/// merged group when blocks are merged. Visits are recorded against
/// region_id once per region entry, so internal member-to-member crossings
/// add no per-visit overhead.
struct AdvectionRegion {
  int region_id = 0;
  std::vector<const GridBlock*> blocks;

  const GridBlock* find(const Vec3& p) const {
    for (const GridBlock* b : blocks)
      if (b->extent().contains(p)) return b;
    return nullptr;
  }
};

struct KernelResult {
  std::vector<Particle> exited;      // left every region; position is the exit point
  std::vector<Particle> terminated;  // status != Active
  std::array<long, kTerminationReasons> terminated_count{};
  long steps_executed = 0;
};

/// Advance every particle of the batch until it terminates or exits the
/// region containing it. Appends one (region_id, batch size) visit per
/// particle. Throws std::invalid_argument when a particle is not Active or
/// lies outside every region.
KernelResult advect_batch(std::vector<Particle> batch,
                          std::span<const AdvectionRegion* const> regions,
                          const GlobalDomain& domain, const AdvectParams& params);

/// Convenience overload for the common one-region case.
KernelResult advect_batch(std::vector<Particle> batch, const AdvectionRegion& region,
                          const GlobalDomain& domain, const AdvectParams& params);

/// Add one round's time shares to every particle of a kernel result.
/// bo_share/eo_share are the per-particle slices of the batch overhead
/// intervals (total overhead divided equally across the batch); a_duration is
/// the full batch advection interval, which every member spends waiting for
/// the group to finish.
void attribute_batch_times(KernelResult& result, double bo_share, double a_duration,
                           double eo_share);

}  // namespace pod
