#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pod/geometry.hpp"

namespace pod {

/// Closed-form velocity field. All experiment fields are analytic so tests
/// can compare against exact trajectories.
struct AnalyticField {
  enum class Kind { Cylindrical, BoundaryVortex, Sink, Outflow, Composite };

  Kind kind = Kind::Outflow;
  Vec3 center{0, 0, 0};   // axis point / sink center / vortex center
  Vec3 axis{0, 0, 1};     // rotation axis for Cylindrical and BoundaryVortex
  double strength = 1.0;  // angular speed [rad/time] or radial rate [1/time]
  double decay = 0.0;     // Gaussian decay length for BoundaryVortex; 0 = none
  Vec3 drift{0, 0, 0};    // additive uniform velocity (ignored by Sink)

  // BoundaryVortex placement metadata: the vortex center must sit within
  // `plane_delta` of the plane {p[plane_axis] == plane_coord}, which callers
  // line up with a block face to provoke cross-block circulation.
  int plane_axis = 0;
  double plane_coord = 0.0;
  double plane_delta = 0.0;

  std::vector<AnalyticField> terms;  // Composite only

  static AnalyticField cylindrical(const Vec3& axis_point, const Vec3& axis_dir,
                                   double omega, const Vec3& drift = {});
  static AnalyticField sink(const Vec3& center, double rate);
  static AnalyticField outflow(const Vec3& center, double rate, const Vec3& drift = {});
  static AnalyticField boundary_vortex(const Vec3& center, const Vec3& axis_dir,
                                       double omega, double decay, int plane_axis,
                                       double plane_coord, double plane_delta);
  static AnalyticField constant(const Vec3& v) { return outflow({}, 0.0, v); }
  static AnalyticField composite(std::vector<AnalyticField> terms);

  /// Throws std::invalid_argument on violated parameter constraints
  /// (e.g. non-positive sink rate, vortex center too far from its plane).
  void validate() const;
};

/// Evaluate the closed form at p. Total and deterministic.
Vec3 eval_analytic(const AnalyticField& field, const Vec3& p);

/// One uniform grid of velocity samples covering a block of the domain.
struct GridBlock {
  int block_id = 0;
  Vec3 origin;
  Vec3 spacing;
  std::array<int, 3> dims{2, 2, 2};  // points per axis
  std::vector<Vec3> samples;         // x-fastest, dims.x*dims.y*dims.z entries

  Extent extent() const {
    return {origin, origin + Vec3{spacing.x * (dims[0] - 1), spacing.y * (dims[1] - 1),
                                  spacing.z * (dims[2] - 1)}};
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  const Vec3& at(int i, int j, int k) const { return samples[index(i, j, k)]; }
};

/// Geometry of a block to be sampled.
struct BlockSpec {
  int block_id = 0;
  Vec3 origin;
  Vec3 spacing;
  std::array<int, 3> dims{2, 2, 2};
};

/// Sample an arbitrary velocity function onto a uniform lattice. Lattice point
/// (0,0,0) maps to spec.origin. Rejects non-positive spacing and dims < 2.
GridBlock sample_fn(const std::function<Vec3(const Vec3&)>& fn, const BlockSpec& spec);

GridBlock sample_field(const AnalyticField& field, const BlockSpec& spec);

/// Trilinear reconstruction from the 8 surrounding samples. Exact at lattice
/// points and for linear fields. Returns nullopt when p is outside the block
/// extent (inclusive bounds); callers treat that as a block handoff, never as
/// a hard error.
std::optional<Vec3> interpolate(const GridBlock& block, const Vec3& p);

}  // namespace pod
