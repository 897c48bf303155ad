#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "pod/field.hpp"

using namespace pod;

namespace {

double max_interp_error(const std::function<Vec3(const Vec3&)>& fn, double spacing,
                        const std::vector<Vec3>& probes) {
  BlockSpec spec;
  spec.origin = {0, 0, 0};
  spec.spacing = {spacing, spacing, spacing};
  const int n = static_cast<int>(std::lround(1.0 / spacing)) + 1;
  spec.dims = {n, n, n};
  const GridBlock block = sample_fn(fn, spec);
  double worst = 0.0;
  for (const auto& p : probes) {
    const auto v = interpolate(block, p);
    REQUIRE(v.has_value());
    worst = std::max(worst, (*v - fn(p)).norm());
  }
  return worst;
}

}  // namespace

TEST_CASE("analytic field closed forms") {
  SUBCASE("sink is exactly zero at its center") {
    const auto f = AnalyticField::sink({0, 0, 0}, 1.0);
    CHECK(eval_analytic(f, {0, 0, 0}) == Vec3{0, 0, 0});
    // and points straight back toward the center elsewhere
    const Vec3 v = eval_analytic(f, {2, 0, 0});
    CHECK(v.x == doctest::Approx(-2.0));
    CHECK(v.y == 0.0);
  }

  SUBCASE("cylindrical flow is tangent to circles about the axis") {
    const auto f = AnalyticField::cylindrical({0, 0, 0}, {0, 0, 1}, 1.0);
    const Vec3 v = eval_analytic(f, {1, 0, 0});
    CHECK(v.x == doctest::Approx(0.0));
    CHECK(v.y == doctest::Approx(1.0));
    CHECK(v.z == doctest::Approx(0.0));
    // speed grows with radius, never zero off-axis
    CHECK(eval_analytic(f, {3, 0, 0}).norm() == doctest::Approx(3.0));
  }

  SUBCASE("boundary vortex circulates across its plane") {
    const auto f = AnalyticField::boundary_vortex({0.5, 0, 0}, {0, 0, 1}, 2.0, 0.0, 0,
                                                  0.5, 1e-6);
    // Just above the center in y, the flow crosses the x=0.5 plane leftwards.
    const Vec3 v = eval_analytic(f, {0.5, 0.1, 0});
    CHECK(v.x < 0.0);
    CHECK(v.y == doctest::Approx(0.0));
  }

  SUBCASE("vortex centers far from their plane are rejected") {
    auto f = AnalyticField::boundary_vortex({0.7, 0, 0}, {0, 0, 1}, 1.0, 0.0, 0, 0.5,
                                            0.01);
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  }

  SUBCASE("composite sums its terms") {
    const auto f = AnalyticField::composite(
        {AnalyticField::constant({1, 0, 0}), AnalyticField::constant({0, 2, 0})});
    CHECK(eval_analytic(f, {5, 5, 5}) == Vec3{1, 2, 0});
  }
}

TEST_CASE("sample_field") {
  SUBCASE("constant field samples are all equal") {
    const auto f = AnalyticField::constant({1, 0, 0});
    const GridBlock block =
        sample_field(f, {0, {0, 0, 0}, {0.5, 0.5, 0.5}, {3, 3, 3}});
    CHECK(block.samples.size() == 27);
    for (const auto& s : block.samples) CHECK(s == Vec3{1, 0, 0});
  }

  SUBCASE("2x2x2 sampling evaluates the analytic field at each corner") {
    const auto f = AnalyticField::cylindrical({0, 0, 0}, {0, 0, 1}, 1.0);
    const GridBlock block = sample_field(f, {0, {0, 0, 0}, {1, 1, 1}, {2, 2, 2}});
    CHECK(block.samples.size() == 8);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) {
          const Vec3 p{static_cast<double>(i), static_cast<double>(j),
                       static_cast<double>(k)};
          CHECK(block.at(i, j, k) == eval_analytic(f, p));
        }
  }

  SUBCASE("rejects degenerate specs") {
    const auto f = AnalyticField::constant({1, 0, 0});
    CHECK_THROWS_AS(sample_field(f, {0, {0, 0, 0}, {0, 1, 1}, {2, 2, 2}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_field(f, {0, {0, 0, 0}, {1, 1, 1}, {1, 2, 2}}),
                    std::invalid_argument);
  }
}

TEST_CASE("trilinear interpolation") {
  const auto linear = [](const Vec3& p) { return p; };
  BlockSpec spec{0, {0, 0, 0}, {0.25, 0.25, 0.25}, {5, 5, 5}};
  const GridBlock block = sample_fn(linear, spec);

  SUBCASE("exact at lattice points") {
    const auto v = interpolate(block, {0.5, 0.25, 0.75});
    REQUIRE(v.has_value());
    CHECK(*v == block.at(2, 1, 3));
  }

  SUBCASE("reproduces linear fields at interior points") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p{(rng() >> 11) * 0x1.0p-53, (rng() >> 11) * 0x1.0p-53,
                   (rng() >> 11) * 0x1.0p-53};
      const auto v = interpolate(block, p);
      REQUIRE(v.has_value());
      CHECK((*v - p).norm() < 1e-14);
    }
  }

  SUBCASE("cell center is the mean of the 8 corner samples") {
    // Hand-expanded trilinear weights at the center are 1/8 each.
    const auto f = [](const Vec3& p) {
      return Vec3{p.x * p.x, p.y + 2 * p.z, std::sin(p.x)};
    };
    const GridBlock g = sample_fn(f, spec);
    const Vec3 center{0.125, 0.125, 0.125};
    Vec3 mean;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) mean += g.at(i, j, k);
    mean = mean / 8.0;
    const auto v = interpolate(g, center);
    REQUIRE(v.has_value());
    CHECK((*v - mean).norm() < 1e-15);
  }

  SUBCASE("outside the extent is a distinct handoff signal") {
    CHECK_FALSE(interpolate(block, {1.0001, 0.5, 0.5}).has_value());
    CHECK_FALSE(interpolate(block, {0.5, -0.0001, 0.5}).has_value());
    // inclusive on the faces themselves
    CHECK(interpolate(block, {1.0, 0.5, 0.5}).has_value());
  }
}

TEST_CASE("interpolation error converges at second order") {
  const auto quadratic = [](const Vec3& p) {
    return Vec3{p.x * p.x + p.y * p.z, p.y * p.y, p.z * p.z - p.x * p.y};
  };
  std::vector<Vec3> probes;
  std::mt19937_64 rng(11);
  auto unit = [&rng] { return 0.05 + 0.9 * ((rng() >> 11) * 0x1.0p-53); };
  for (int i = 0; i < 200; ++i) probes.push_back({unit(), unit(), unit()});

  const double coarse = max_interp_error(quadratic, 1.0 / 8, probes);
  const double fine = max_interp_error(quadratic, 1.0 / 16, probes);
  CHECK(coarse / fine > 3.0);  // ~4x for a quadratic field
  CHECK(coarse / fine < 6.0);
}

TEST_CASE("sampled field agrees with the analytic form on random points") {
  const auto f = AnalyticField::boundary_vortex({0.5, 0.5, 0.5}, {0, 0, 1}, 2.0, 0.3, 0,
                                                0.5, 1e-9);
  BlockSpec spec{0, {0, 0, 0}, {1.0 / 32, 1.0 / 32, 1.0 / 32}, {33, 33, 33}};
  const GridBlock block = sample_field(f, spec);

  // Second-order bound: c * s^2 with the constant measured at half spacing.
  BlockSpec fine_spec{0, {0, 0, 0}, {1.0 / 64, 1.0 / 64, 1.0 / 64}, {65, 65, 65}};
  const GridBlock fine = sample_field(f, fine_spec);

  std::mt19937_64 rng(3);
  auto unit = [&rng] { return (rng() >> 11) * 0x1.0p-53; };
  double worst = 0.0;
  double worst_fine = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p{unit(), unit(), unit()};
    const Vec3 exact = eval_analytic(f, p);
    const auto coarse_v = interpolate(block, p);
    const auto fine_v = interpolate(fine, p);
    REQUIRE(coarse_v.has_value());
    REQUIRE(fine_v.has_value());
    worst = std::max(worst, (*coarse_v - exact).norm());
    worst_fine = std::max(worst_fine, (*fine_v - exact).norm());
  }
  CHECK(worst < 5e-3);                // loose absolute bound for this field
  CHECK(worst / worst_fine > 3.0);    // and second-order behavior
}

TEST_CASE("sink magnitude stays below the zero-velocity tolerance at its center") {
  const Vec3 center{0.5, 0.5, 0.5};
  const auto f = AnalyticField::sink(center, 2.0);
  // Center on a lattice point: 0.5 = 16 * (1/32).
  BlockSpec spec{0, {0, 0, 0}, {1.0 / 32, 1.0 / 32, 1.0 / 32}, {33, 33, 33}};
  const GridBlock block = sample_field(f, spec);
  const auto v = interpolate(block, center);
  REQUIRE(v.has_value());
  CHECK(v->norm() < 1e-10);
}
