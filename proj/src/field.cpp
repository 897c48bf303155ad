#include "pod/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pod {

AnalyticField AnalyticField::cylindrical(const Vec3& axis_point, const Vec3& axis_dir,
                                         double omega, const Vec3& drift) {
  AnalyticField f;
  f.kind = Kind::Cylindrical;
  f.center = axis_point;
  f.axis = axis_dir.normalized();
  f.strength = omega;
  f.drift = drift;
  return f;
}

AnalyticField AnalyticField::sink(const Vec3& center, double rate) {
  AnalyticField f;
  f.kind = Kind::Sink;
  f.center = center;
  f.strength = rate;
  return f;
}

AnalyticField AnalyticField::outflow(const Vec3& center, double rate, const Vec3& drift) {
  AnalyticField f;
  f.kind = Kind::Outflow;
  f.center = center;
  f.strength = rate;
  f.drift = drift;
  return f;
}

AnalyticField AnalyticField::boundary_vortex(const Vec3& center, const Vec3& axis_dir,
                                             double omega, double decay, int plane_axis,
                                             double plane_coord, double plane_delta) {
  AnalyticField f;
  f.kind = Kind::BoundaryVortex;
  f.center = center;
  f.axis = axis_dir.normalized();
  f.strength = omega;
  f.decay = decay;
  f.plane_axis = plane_axis;
  f.plane_coord = plane_coord;
  f.plane_delta = plane_delta;
  return f;
}

AnalyticField AnalyticField::composite(std::vector<AnalyticField> terms) {
  AnalyticField f;
  f.kind = Kind::Composite;
  f.terms = std::move(terms);
  return f;
}

void AnalyticField::validate() const {
  switch (kind) {
    case Kind::Sink:
      if (strength <= 0.0) throw std::invalid_argument("sink rate must be positive");
      break;
    case Kind::Cylindrical:
      if (axis.norm2() == 0.0) throw std::invalid_argument("cylindrical axis is zero");
      break;
    case Kind::BoundaryVortex: {
      if (axis.norm2() == 0.0) throw std::invalid_argument("vortex axis is zero");
      if (plane_axis < 0 || plane_axis > 2)
        throw std::invalid_argument("vortex plane_axis must be 0, 1 or 2");
      const double dist = std::abs(center[plane_axis] - plane_coord);
      if (dist > plane_delta)
        throw std::invalid_argument("vortex center lies " + std::to_string(dist) +
                                    " from its plane, beyond delta=" +
                                    std::to_string(plane_delta));
      break;
    }
    case Kind::Outflow:
      break;
    case Kind::Composite:
      for (const auto& t : terms) t.validate();
      break;
  }
}

Vec3 eval_analytic(const AnalyticField& field, const Vec3& p) {
  switch (field.kind) {
    case AnalyticField::Kind::Cylindrical:
      return field.strength * field.axis.cross(p - field.center) + field.drift;
    case AnalyticField::Kind::Sink:
      return -field.strength * (p - field.center);
    case AnalyticField::Kind::Outflow:
      return field.strength * (p - field.center) + field.drift;
    case AnalyticField::Kind::BoundaryVortex: {
      const Vec3 r = p - field.center;
      const Vec3 perp = r - field.axis * r.dot(field.axis);
      double gain = field.strength;
      if (field.decay > 0.0) {
        const double q = perp.norm2() / (field.decay * field.decay);
        gain *= std::exp(-q);
      }
      return gain * field.axis.cross(r) + field.drift;
    }
    case AnalyticField::Kind::Composite: {
      Vec3 v = field.drift;
      for (const auto& t : field.terms) v += eval_analytic(t, p);
      return v;
    }
  }
  return {};
}

GridBlock sample_fn(const std::function<Vec3(const Vec3&)>& fn, const BlockSpec& spec) {
  if (spec.spacing.x <= 0.0 || spec.spacing.y <= 0.0 || spec.spacing.z <= 0.0)
    throw std::invalid_argument("block spacing must be strictly positive");
  if (spec.dims[0] < 2 || spec.dims[1] < 2 || spec.dims[2] < 2)
    throw std::invalid_argument("block dims must be at least 2 per axis");

  GridBlock block;
  block.block_id = spec.block_id;
  block.origin = spec.origin;
  block.spacing = spec.spacing;
  block.dims = spec.dims;
  block.samples.resize(static_cast<std::size_t>(spec.dims[0]) * spec.dims[1] *
                       spec.dims[2]);
  for (int k = 0; k < spec.dims[2]; ++k)
    for (int j = 0; j < spec.dims[1]; ++j)
      for (int i = 0; i < spec.dims[0]; ++i) {
        const Vec3 p = spec.origin + Vec3{spec.spacing.x * i, spec.spacing.y * j,
                                          spec.spacing.z * k};
        block.samples[block.index(i, j, k)] = fn(p);
      }
  return block;
}

GridBlock sample_field(const AnalyticField& field, const BlockSpec& spec) {
  return sample_fn([&field](const Vec3& p) { return eval_analytic(field, p); }, spec);
}

std::optional<Vec3> interpolate(const GridBlock& block, const Vec3& p) {
  const Extent ext = block.extent();
  if (!ext.contains(p)) return std::nullopt;

  // Cell index; points exactly on the top face land in the last cell.
  auto locate = [](double t, int n) {
    int i = static_cast<int>(t);
    if (i > n - 2) i = n - 2;
    if (i < 0) i = 0;
    return i;
  };
  const double tx = (p.x - block.origin.x) / block.spacing.x;
  const double ty = (p.y - block.origin.y) / block.spacing.y;
  const double tz = (p.z - block.origin.z) / block.spacing.z;
  const int i = locate(tx, block.dims[0]);
  const int j = locate(ty, block.dims[1]);
  const int k = locate(tz, block.dims[2]);
  const double fx = tx - i;
  const double fy = ty - j;
  const double fz = tz - k;

  const Vec3 c000 = block.at(i, j, k);
  const Vec3 c100 = block.at(i + 1, j, k);
  const Vec3 c010 = block.at(i, j + 1, k);
  const Vec3 c110 = block.at(i + 1, j + 1, k);
  const Vec3 c001 = block.at(i, j, k + 1);
  const Vec3 c101 = block.at(i + 1, j, k + 1);
  const Vec3 c011 = block.at(i, j + 1, k + 1);
  const Vec3 c111 = block.at(i + 1, j + 1, k + 1);

  const Vec3 x00 = c000 + (c100 - c000) * fx;
  const Vec3 x10 = c010 + (c110 - c010) * fx;
  const Vec3 x01 = c001 + (c101 - c001) * fx;
  const Vec3 x11 = c011 + (c111 - c011) * fx;
  const Vec3 y0 = x00 + (x10 - x00) * fy;
  const Vec3 y1 = x01 + (x11 - x01) * fy;
  return y0 + (y1 - y0) * fz;
}

}  // namespace pod
