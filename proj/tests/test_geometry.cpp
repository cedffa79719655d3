#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common.hpp"
#include "mdfe/errors.hpp"
#include "mdfe/harness.hpp"
#include "mdfe/predicates.hpp"

using namespace mdfe;

namespace {

// Orientation sign on points with coordinates k * 2^-52, evaluated in 128-bit integers.
int orient_int(std::array<long long, 6> q)
{
  const __int128 abx = q[2] - q[0], aby = q[3] - q[1], acx = q[4] - q[0], acy = q[5] - q[1];
  const __int128 det = abx * acy - aby * acx;
  return (det > 0) - (det < 0);
}

double shoelace(const MixedDomain& d, const std::vector<CurvePiece>& cycle)
{
  const auto vs = d.cycle_vertices(cycle);
  double a = 0.0;
  for (std::size_t k = 0; k < vs.size(); ++k)
    a += cross(d.vertices[vs[k]], d.vertices[vs[(k + 1) % vs.size()]]);
  return 0.5 * a;
}

std::vector<double> sorted_areas(const MixedDomain& d)
{
  std::vector<double> a;
  for (const auto& r : d.bulk_regions)
    a.push_back(r.area);
  std::sort(a.begin(), a.end());
  return a;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("orient2d agrees with integer arithmetic near degeneracy")
{
  const double u = std::ldexp(1.0, -52);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<long long> jitter(-64, 64);
  const long long base = 1LL << 51; // 0.5
  for (int trial = 0; trial < 2000; ++trial) {
    // Points in [0.5, 1) so every coordinate is exact; c sits near the midpoint of ab.
    std::array<long long, 6> q{base + jitter(rng), base + jitter(rng), 3 * base / 2, 3 * base / 2,
                               5 * base / 4 + jitter(rng), 5 * base / 4 + jitter(rng)};
    const Point2 a{q[0] * u, q[1] * u}, b{q[2] * u, q[3] * u}, c{q[4] * u, q[5] * u};
    REQUIRE(predicates::orient2d(a, b, c) == orient_int(q));
  }
}

TEST_CASE("incircle on lattice points")
{
  const Point2 a{0, 0}, b{1, 0}, c{1, 1};
  CHECK(predicates::incircle(a, b, c, {0, 1}) == 0);
  CHECK(predicates::incircle(a, b, c, {0.5, 0.5}) > 0);
  CHECK(predicates::incircle(a, b, c, {2, 2}) < 0);
  CHECK(predicates::orient2d(a, b, c) > 0);
  CHECK(predicates::orient2d(a, c, b) < 0);
  CHECK(predicates::orient2d(a, c, {3, 3}) == 0);
}

TEST_CASE("empty arrangement")
{
  const auto d = testing::domain_of({});
  CHECK(d.num_regions() == 1);
  CHECK(d.num_segments() == 0);
  CHECK(d.junction_points.empty());
  CHECK(d.bulk_regions[0].area == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(boundary_touching_regions(d) == std::vector<int>{0});
}

TEST_CASE("crossing chords")
{
  const auto d = testing::domain_of(testing::cross());
  CHECK(d.num_regions() == 4);
  CHECK(d.num_segments() == 4);
  CHECK(d.junction_points.size() == 1);
  CHECK(d.E0.size() == 8);
  CHECK(d.E1.size() == 4);
  // Euler: V - E + F = 2 with the outer face; E counts boundary pieces and segments.
  const long V = static_cast<long>(d.vertices.size());
  const long E = static_cast<long>(d.boundary_pieces.size() + d.num_segments());
  CHECK(V - E + static_cast<long>(d.num_regions()) + 1 == 2);
  CHECK(boundary_touching_regions(d).size() == 4);
  for (const auto& r : d.bulk_regions)
    CHECK(r.area == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("slit does not disconnect the square")
{
  const auto d = testing::domain_of(testing::slit());
  CHECK(d.num_regions() == 1);
  CHECK(d.num_segments() == 1);
  CHECK(d.free_tips.size() == 2);
  CHECK(d.E0.size() == 1);
  CHECK(d.interface_segments[0].left_region == d.interface_segments[0].right_region);
}

TEST_CASE("enclosed triangle is not boundary touching")
{
  const auto d = testing::domain_of(testing::enclosed_triangle());
  REQUIRE(d.num_regions() == 2);
  const auto touching = boundary_touching_regions(d);
  REQUIRE(touching.size() == 1);
  const int inner = 1 - touching[0];
  CHECK(d.bulk_regions[inner].area == doctest::Approx(0.08).epsilon(1e-13));
  CHECK_FALSE(d.bulk_regions[inner].touches_boundary);
  for (const auto& s : d.interface_segments) {
    CHECK(s.left_region != s.right_region);
    CHECK((s.left_region == inner || s.right_region == inner));
  }
}

TEST_CASE("random arrangements: areas, lengths, adjacency")
{
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    const auto segs = seed % 2 ? gen_infinite_chords(12, seed) : gen_finite_segments(30, 0.3, seed);
    const auto d = testing::domain_of(segs);

    double area = 0.0;
    for (const auto& r : d.bulk_regions) {
      double s = 0.0;
      for (const auto& c : r.cycles)
        s += shoelace(d, c);
      CHECK(s == doctest::Approx(r.area).epsilon(1e-12));
      area += r.area;
    }
    CHECK(std::abs(area - 1.0) <= 1e-12);

    double in_len = 0.0, out_len = 0.0;
    for (const auto& s : segs)
      in_len += distance(s.a, s.b);
    for (std::size_t j = 0; j < d.num_segments(); ++j)
      out_len += d.segment_length(static_cast<int>(j));
    CHECK(std::abs(in_len - out_len) <= 1e-9 * in_len);

    std::vector<int> e0_count(d.num_segments(), 0);
    for (const auto& [i, j] : d.E0) {
      ++e0_count[j];
      bool found = false;
      for (const auto& c : d.bulk_regions[i].cycles)
        for (const auto& p : c)
          found |= p.kind == PieceKind::Interface && p.index == j;
      CHECK(found);
    }
    for (std::size_t j = 0; j < d.num_segments(); ++j) {
      const auto& s = d.interface_segments[j];
      CHECK(e0_count[j] == (s.left_region == s.right_region ? 1 : 2));
    }
    std::vector<int> e1_count(d.junction_points.size(), 0);
    for (const auto& e : d.E1)
      ++e1_count[e.second];
    for (int c : e1_count)
      CHECK(c >= 3);
  }
}

TEST_CASE("reordering segments gives the same arrangement up to labels")
{
  auto segs = gen_infinite_chords(10, 4);
  const auto a = testing::domain_of(segs);
  std::reverse(segs.begin(), segs.end());
  std::swap(segs[0].a, segs[0].b);
  const auto b = testing::domain_of(segs);
  CHECK(a.num_regions() == b.num_regions());
  CHECK(a.num_segments() == b.num_segments());
  CHECK(a.junction_points.size() == b.junction_points.size());
  const auto sa = sorted_areas(a), sb = sorted_areas(b);
  for (std::size_t k = 0; k < sa.size(); ++k)
    CHECK(sa[k] == doctest::Approx(sb[k]).epsilon(1e-12));
}

TEST_CASE("collinear overlapping segments are merged")
{
  const auto d = testing::domain_of({{{0.2, 0.5}, {0.6, 0.5}}, {{0.4, 0.5}, {0.8, 0.5}}});
  double len = 0.0;
  for (std::size_t j = 0; j < d.num_segments(); ++j)
    len += d.segment_length(static_cast<int>(j));
  CHECK(len == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(d.free_tips.size() == 2);
}

TEST_CASE("invalid input")
{
  CHECK_THROWS_AS(testing::domain_of({{{0.5, 0.5}, {1.5, 0.5}}}), GeometryError);
  CHECK_THROWS_AS(testing::domain_of({{{0.5, 0.5}, {0.5, 0.5}}}), GeometryError);
  try {
    testing::domain_of({{{0.1, 0.1}, {0.2, 0.2}}, {{0.5, 0.5}, {0.5, -0.5}}});
    FAIL("expected GeometryError");
  }
  catch (const GeometryError& e) {
    CHECK(e.segment_index() == 1);
  }
  const std::vector<Point2> l_shape{{0, 0}, {1, 0}, {1, 1}, {0.5, 0.5}, {0, 1}};
  CHECK_THROWS_AS(build_arrangement(l_shape, std::vector<Segment2D>{}), GeometryError);
}

TEST_CASE("segment file round trip")
{
  const auto segs = gen_finite_segments(7, 0.2, 11);
  std::stringstream s;
  write_segments(s, segs);
  const auto back = read_segments(s);
  REQUIRE(back.size() == segs.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    CHECK(back[k].a == segs[k].a);
    CHECK(back[k].b == segs[k].b);
  }
  std::stringstream bad("0.1 0.2 0.3\n");
  CHECK_THROWS_AS(read_segments(bad), GeometryError);
}

}
