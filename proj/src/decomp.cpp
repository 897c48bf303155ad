#include "pod/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace pod {

bool BlockLayout::face_adjacent(int a, int b) const {
  const auto ca = coords_of(a);
  const auto cb = coords_of(b);
  int diff = 0;
  for (int axis = 0; axis < 3; ++axis) diff += std::abs(ca[axis] - cb[axis]);
  return diff == 1;
}

BlockLayout make_layout(int num_ranks) {
  if (num_ranks < 1 || (num_ranks & (num_ranks - 1)) != 0)
    throw std::invalid_argument("rank count must be a power of two, got " +
                                std::to_string(num_ranks));
  BlockLayout layout;
  int axis = 2;  // double z, then y, then x
  for (int n = 1; n < num_ranks; n *= 2) {
    layout.splits[axis] *= 2;
    axis = (axis == 0) ? 2 : axis - 1;
  }
  return layout;
}

namespace {

double axis_face(double lo, double size, int index, int splits) {
  return lo + size * (static_cast<double>(index) / splits);
}

int locate_axis(double v, double lo, double size, int splits) {
  const double width = size / splits;
  int i = static_cast<int>(std::floor((v - lo) / width));
  i = std::clamp(i, 0, splits - 1);
  // Shared faces belong to the lower-indexed block; also repairs any
  // floor/extent rounding mismatch near faces.
  while (i > 0 && v <= axis_face(lo, size, i, splits)) --i;
  while (i < splits - 1 && v > axis_face(lo, size, i + 1, splits)) ++i;
  return i;
}

}  // namespace

Extent block_extent(const GlobalDomain& domain, const BlockLayout& layout,
                    int block_id) {
  const auto c = layout.coords_of(block_id);
  const Vec3 size = domain.size();
  Extent e;
  e.lo = {axis_face(domain.lo.x, size.x, c[0], layout.splits[0]),
          axis_face(domain.lo.y, size.y, c[1], layout.splits[1]),
          axis_face(domain.lo.z, size.z, c[2], layout.splits[2])};
  e.hi = {axis_face(domain.lo.x, size.x, c[0] + 1, layout.splits[0]),
          axis_face(domain.lo.y, size.y, c[1] + 1, layout.splits[1]),
          axis_face(domain.lo.z, size.z, c[2] + 1, layout.splits[2])};
  return e;
}

BlockAssignment BlockAssignment::baseline(const BlockLayout& layout) {
  BlockAssignment a;
  a.layout = layout;
  a.num_ranks = layout.num_blocks();
  a.owner.resize(a.num_ranks);
  for (int i = 0; i < a.num_ranks; ++i) a.owner[i] = i;
  return a;
}

int BlockAssignment::merged_group_of(int block_id) const {
  for (std::size_t g = 0; g < merged_groups.size(); ++g)
    if (std::binary_search(merged_groups[g].blocks.begin(), merged_groups[g].blocks.end(),
                           block_id))
      return static_cast<int>(g);
  return -1;
}

std::vector<int> BlockAssignment::ranks_holding(int block_id) const {
  std::set<int> ranks;
  const int g = merged_group_of(block_id);
  if (g >= 0)
    ranks.insert(merged_groups[g].host_rank);
  else
    ranks.insert(owner[block_id]);
  if (auto it = replicas.find(block_id); it != replicas.end())
    ranks.insert(it->second.begin(), it->second.end());
  return {ranks.begin(), ranks.end()};
}

BlockAssignment apply_duplication(BlockAssignment assignment,
                                  const std::vector<int>& blocks,
                                  const std::vector<int>& ranks) {
  if (blocks.empty()) return assignment;
  if (ranks.empty()) throw std::invalid_argument("duplication rank set is empty");
  for (int b : blocks)
    if (b < 0 || b >= static_cast<int>(assignment.owner.size()))
      throw std::invalid_argument("duplicated block " + std::to_string(b) +
                                  " does not exist");
  for (int r : ranks)
    if (r < 0 || r >= assignment.num_ranks)
      throw std::invalid_argument("duplication rank " + std::to_string(r) +
                                  " does not exist");

  std::vector<int> sorted_blocks = blocks;
  std::sort(sorted_blocks.begin(), sorted_blocks.end());
  std::vector<int> sorted_ranks = ranks;
  std::sort(sorted_ranks.begin(), sorted_ranks.end());

  std::map<int, std::set<int>> sets;
  for (int b : sorted_blocks) {
    sets[b].insert(assignment.owner[b]);
    if (auto it = assignment.replicas.find(b); it != assignment.replicas.end())
      sets[b].insert(it->second.begin(), it->second.end());
  }
  // Round-robin in rank order: each rank loads one of the duplicated blocks.
  for (std::size_t j = 0; j < sorted_ranks.size(); ++j)
    sets[sorted_blocks[j % sorted_blocks.size()]].insert(sorted_ranks[j]);

  for (auto& [b, s] : sets) assignment.replicas[b] = {s.begin(), s.end()};
  return assignment;
}

BlockAssignment apply_merge(BlockAssignment assignment, const std::vector<int>& group,
                            int host_rank) {
  if (group.empty()) throw std::invalid_argument("merge group is empty");
  std::vector<int> sorted = group;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int b : sorted) {
    if (b < 0 || b >= static_cast<int>(assignment.owner.size()))
      throw std::invalid_argument("merge block " + std::to_string(b) +
                                  " does not exist");
    if (assignment.merged_group_of(b) >= 0)
      throw std::invalid_argument("block " + std::to_string(b) +
                                  " is already part of a merged group");
  }

  // Connectivity over the face-adjacency graph of the group.
  const BlockLayout* layout = &assignment.layout;
  if (sorted.size() > 1) {
    std::set<int> seen{sorted.front()};
    std::vector<int> stack{sorted.front()};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      for (int other : sorted)
        if (!seen.count(other) && layout->face_adjacent(cur, other)) {
          seen.insert(other);
          stack.push_back(other);
        }
    }
    if (seen.size() != sorted.size())
      throw std::invalid_argument("merge group is not face-connected");
  }

  MergedGroup mg;
  mg.blocks = sorted;
  mg.host_rank = host_rank >= 0 ? host_rank : assignment.owner[sorted.front()];
  if (mg.host_rank >= assignment.num_ranks)
    throw std::invalid_argument("merge host rank does not exist");
  assignment.merged_groups.push_back(std::move(mg));
  return assignment;
}

std::optional<int> block_containing(const Vec3& p, const GlobalDomain& domain,
                                    const BlockLayout& layout) {
  if (!domain.contains(p)) return std::nullopt;
  const Vec3 size = domain.size();
  const int ix = locate_axis(p.x, domain.lo.x, size.x, layout.splits[0]);
  const int iy = locate_axis(p.y, domain.lo.y, size.y, layout.splits[1]);
  const int iz = locate_axis(p.z, domain.lo.z, size.z, layout.splits[2]);
  return layout.id_of(ix, iy, iz);
}

std::optional<RoutingDecision> owner_of(const Vec3& p, const GlobalDomain& domain,
                                        const BlockLayout& layout,
                                        const BlockAssignment& assignment) {
  const auto block = block_containing(p, domain, layout);
  if (!block) return std::nullopt;
  const int g = assignment.merged_group_of(*block);
  const int rank = g >= 0 ? assignment.merged_groups[g].host_rank
                          : assignment.owner[*block];
  return RoutingDecision{rank, *block};
}

std::optional<RoutingDecision> route_particle(const Vec3& p, std::int64_t particle_id,
                                              const GlobalDomain& domain,
                                              const BlockLayout& layout,
                                              const BlockAssignment& assignment) {
  auto decision = owner_of(p, domain, layout, assignment);
  if (!decision) return std::nullopt;
  if (assignment.merged_group_of(decision->target_block) >= 0) return decision;
  if (auto it = assignment.replicas.find(decision->target_block);
      it != assignment.replicas.end() && !it->second.empty()) {
    const auto& reps = it->second;
    decision->target_rank =
        reps[static_cast<std::size_t>(particle_id % static_cast<std::int64_t>(reps.size()))];
  }
  return decision;
}

namespace {

// Uniform double in [0,1) from the top 53 bits; implementation-independent,
// unlike std::uniform_real_distribution.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec3 uniform_in(std::mt19937_64& rng, const Extent& box) {
  const Vec3 s = box.size();
  return box.lo + Vec3{s.x * next_unit(rng), s.y * next_unit(rng), s.z * next_unit(rng)};
}

}  // namespace

std::vector<Particle> generate_seeds(const SeedSpec& spec, const BlockLayout& layout,
                                     const GlobalDomain& domain) {
  if (spec.count <= 0) throw std::invalid_argument("seed count must be positive");

  std::vector<Particle> seeds;
  auto emit = [&seeds](const Vec3& p) {
    Particle particle;
    particle.id = static_cast<std::int64_t>(seeds.size());
    particle.position = p;
    seeds.push_back(std::move(particle));
  };

  switch (spec.kind) {
    case SeedSpec::Kind::PerBlockRandom: {
      std::mt19937_64 rng(spec.rng_seed);
      for (int b = 0; b < layout.num_blocks(); ++b) {
        const Extent ext = block_extent(domain, layout, b);
        for (long i = 0; i < spec.count; ++i) emit(uniform_in(rng, ext));
      }
      break;
    }
    case SeedSpec::Kind::BoxFraction: {
      if (spec.fraction <= 0.0 || spec.fraction > 1.0)
        throw std::invalid_argument("box fraction must lie in (0, 1]");
      const Vec3 center = spec.box_center.value_or(domain.center());
      const Vec3 half = domain.size() * (0.5 * spec.fraction);
      Extent box{center - half, center + half};
      box.lo = {std::max(box.lo.x, domain.lo.x), std::max(box.lo.y, domain.lo.y),
                std::max(box.lo.z, domain.lo.z)};
      box.hi = {std::min(box.hi.x, domain.hi.x), std::min(box.hi.y, domain.hi.y),
                std::min(box.hi.z, domain.hi.z)};
      std::mt19937_64 rng(spec.rng_seed);
      for (long i = 0; i < spec.count; ++i) emit(uniform_in(rng, box));
      break;
    }
    case SeedSpec::Kind::Line: {
      if (!domain.contains(spec.line_a) || !domain.contains(spec.line_b))
        throw std::invalid_argument("line endpoints must lie inside the domain");
      for (long i = 0; i < spec.count; ++i) {
        const double t = spec.count == 1
                             ? 0.0
                             : static_cast<double>(i) / static_cast<double>(spec.count - 1);
        emit(spec.line_a + (spec.line_b - spec.line_a) * t);
      }
      break;
    }
    case SeedSpec::Kind::Plane: {
      std::mt19937_64 rng(spec.rng_seed);
      for (long i = 0; i < spec.count; ++i) {
        const double s = next_unit(rng);
        const double t = next_unit(rng);
        const Vec3 p = spec.plane_origin + spec.plane_u * s + spec.plane_v * t;
        if (!domain.contains(p))
          throw std::invalid_argument("plane patch leaves the domain");
        emit(p);
      }
      break;
    }
  }
  return seeds;
}

}  // namespace pod
