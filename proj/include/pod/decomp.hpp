#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pod/advect.hpp"
#include "pod/geometry.hpp"

namespace pod {

/// Blocks-per-axis decomposition of the global domain. Block ids increase
/// z-fastest: id = iz + splits.z * (iy + splits.y * ix).
struct BlockLayout {
  std::array<int, 3> splits{1, 1, 1};

  int num_blocks() const { return splits[0] * splits[1] * splits[2]; }
  int id_of(int ix, int iy, int iz) const {
    return iz + splits[2] * (iy + splits[1] * ix);
  }
  std::array<int, 3> coords_of(int block_id) const {
    const int iz = block_id % splits[2];
    const int rest = block_id / splits[2];
    return {rest / splits[1], rest % splits[1], iz};
  }
  bool face_adjacent(int a, int b) const;
};

/// Standard layout for a power-of-two rank count: starting from (1,1,1) the
/// split count doubles along z, then y, then x, cyclically. Yields
/// 8 -> 2x2x2, 16 -> 2x2x4, 32 -> 2x4x4, 64 -> 4x4x4, 128 -> 4x4x8.
/// Rejects rank counts that are not powers of two.
BlockLayout make_layout(int num_ranks);

/// World-space extent of one block; adjacent blocks share face coordinates
/// bit-exactly.
Extent block_extent(const GlobalDomain& domain, const BlockLayout& layout, int block_id);

struct RoutingDecision {
  int target_rank = 0;
  int target_block = 0;
  bool operator==(const RoutingDecision&) const = default;
};

struct MergedGroup {
  std::vector<int> blocks;  // sorted
  int host_rank = 0;
};

/// Block-to-rank ownership plus the duplication / merge overlays.
struct BlockAssignment {
  BlockLayout layout;
  int num_ranks = 0;
  std::vector<int> owner;                    // block_id -> rank
  std::map<int, std::vector<int>> replicas;  // block_id -> sorted ranks holding a copy
  std::vector<MergedGroup> merged_groups;

  /// One block per rank, rank i owns block i.
  static BlockAssignment baseline(const BlockLayout& layout);

  /// Index into merged_groups, or -1.
  int merged_group_of(int block_id) const;

  /// Ranks that hold block data: owner, replicas, merge hosts.
  std::vector<int> ranks_holding(int block_id) const;
};

/// Duplicate `blocks` across `ranks`: every listed rank receives one of the
/// duplicated blocks, assigned round-robin in rank order, so each rank loads
/// at most one extra block. Replica sets always keep the owner.
BlockAssignment apply_duplication(BlockAssignment assignment,
                                  const std::vector<int>& blocks,
                                  const std::vector<int>& ranks);

/// Merge a connected group of face-adjacent blocks onto one host rank
/// (default: the owner of the lowest block id). Particles entering any
/// member stay on the host until they terminate. Rejects disconnected
/// groups.
BlockAssignment apply_merge(BlockAssignment assignment, const std::vector<int>& group,
                            int host_rank = -1);

/// Block containing p; points exactly on a shared face resolve to the lowest
/// block id. nullopt when p is outside the domain.
std::optional<int> block_containing(const Vec3& p, const GlobalDomain& domain,
                                    const BlockLayout& layout);

/// Baseline + merge routing: where a point belongs, ignoring duplication.
std::optional<RoutingDecision> owner_of(const Vec3& p, const GlobalDomain& domain,
                                        const BlockLayout& layout,
                                        const BlockAssignment& assignment);

/// Full routing for a particle. For duplicated blocks the replica is chosen
/// as particle_id mod |replicas| over the sorted replica list, spreading
/// repeat visitors across all holders.
std::optional<RoutingDecision> route_particle(const Vec3& p, std::int64_t particle_id,
                                              const GlobalDomain& domain,
                                              const BlockLayout& layout,
                                              const BlockAssignment& assignment);

struct SeedSpec {
  enum class Kind { PerBlockRandom, BoxFraction, Line, Plane };

  Kind kind = Kind::PerBlockRandom;
  long count = 0;  // per block for PerBlockRandom, total otherwise
  double fraction = 1.0;                // BoxFraction: per-axis extent fraction
  std::optional<Vec3> box_center;       // BoxFraction: defaults to domain center
  Vec3 line_a, line_b;                  // Line endpoints
  Vec3 plane_origin, plane_u, plane_v;  // Plane patch: origin + s*u + t*v
  std::uint64_t rng_seed = 0;
};

/// Deterministic seed generation: positions come from mt19937_64 streams with
/// uniform doubles built by 53-bit mantissa scaling, so identical specs
/// reproduce bit-identical particles on any platform. Particle ids are dense
/// from 0 in generation order. max_steps is left 0 for the caller to assign.
std::vector<Particle> generate_seeds(const SeedSpec& spec, const BlockLayout& layout,
                                     const GlobalDomain& domain);

}  // namespace pod
