#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "common.hpp"
#include "mdfe/analysis.hpp"
#include "mdfe/harness.hpp"

using namespace mdfe;

namespace {

bool on_boundary(Point2 p)
{
  const double t = 1e-12;
  return std::abs(p.x) < t || std::abs(p.y) < t || std::abs(p.x - 1) < t || std::abs(p.y - 1) < t;
}

bool inside(Point2 p) { return p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1; }

ExperimentConfig small_config()
{
  ExperimentConfig c;
  c.geometry = GeometrySpec::parse("chords:6");
  c.geometry.seed = 3;
  c.h_target = 1.0 / 24;
  c.H = {0.25, 0.5};
  c.B = {0.1, 10.0};
  c.A_iface = {IfaceCoefficient::parse("const:1"), IfaceCoefficient::parse("uniform:0.01,1")};
  return c;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("infinite chords")
{
  const auto one = gen_infinite_chords(1, 5);
  REQUIRE(one.size() == 1);
  CHECK(on_boundary(one[0].a));
  CHECK(on_boundary(one[0].b));

  const auto eight = gen_infinite_chords(8, 1);
  for (const auto& s : eight) {
    CHECK(on_boundary(s.a));
    CHECK(on_boundary(s.b));
    CHECK(inside(s.a));
    CHECK(inside(s.b));
  }
  // Chords through the whole square cut it into convex cells.
  for (const auto& c : classify_corners(testing::domain_of(eight)))
    CHECK(c.omega <= std::numbers::pi + 1e-9);

  const auto again = gen_infinite_chords(8, 1);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(again[k].a == eight[k].a);
    CHECK(again[k].b == eight[k].b);
  }
  CHECK_FALSE(gen_infinite_chords(8, 2)[0].a == eight[0].a);
  CHECK_THROWS_AS(gen_infinite_chords(0, 1), std::invalid_argument);
}

TEST_CASE("finite segments")
{
  const auto one = gen_finite_segments(1, 0.2, 4);
  REQUIRE(one.size() == 1);
  CHECK(inside(one[0].a));
  CHECK(inside(one[0].b));

  const auto many = gen_finite_segments(200, 0.2, 9);
  for (const auto& s : many) {
    CHECK(distance(s.a, s.b) <= 0.2 + 1e-15);
    CHECK(distance(s.a, s.b) > 0.0);
    CHECK(inside(s.a));
    CHECK(inside(s.b));
  }
  const auto again = gen_finite_segments(200, 0.2, 9);
  CHECK(again.back().a == many.back().a);
  CHECK_THROWS_AS(gen_finite_segments(5, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_finite_segments(5, 2.0, 1), std::invalid_argument);
}

TEST_CASE("spec parsing")
{
  const auto c = GeometrySpec::parse("chords:12");
  CHECK(c.kind == GeometryKind::InfiniteChords);
  CHECK(c.count == 12);
  const auto f = GeometrySpec::parse("finite:27,0.15");
  CHECK(f.kind == GeometryKind::FiniteSegments);
  CHECK(f.count == 27);
  CHECK(f.max_length == 0.15);
  CHECK(GeometrySpec::parse("finite:5").max_length == 0.2);
  CHECK(GeometrySpec::parse("net.txt").kind == GeometryKind::File);
  CHECK_THROWS(GeometrySpec::parse("finite:1,2,3"));

  const auto k = IfaceCoefficient::parse("const:2.5");
  CHECK_FALSE(k.uniform);
  CHECK(k.value == 2.5);
  const auto u = IfaceCoefficient::parse("uniform:0.01,1");
  CHECK(u.uniform);
  CHECK(u.lo == 0.01);
  CHECK(u.hi == 1.0);
  CHECK(u.describe() == "uniform:0.01,1");
  CHECK_THROWS_AS(IfaceCoefficient::parse("uniform:1"), std::invalid_argument);
  CHECK_THROWS_AS(IfaceCoefficient::parse("uniform:0,1"), std::invalid_argument);
  CHECK_THROWS_AS(IfaceCoefficient::parse("gauss:1"), std::invalid_argument);
}

TEST_CASE("random interface coefficients")
{
  const auto mc = testing::mesh_case(gen_infinite_chords(4, 1), 0.1);
  const auto c = make_coefficients(*mc.mesh, 1.0, IfaceCoefficient::parse("uniform:0.01,1"), 2.0, 5);
  for (double a : c.A_iface) {
    CHECK(a >= 0.01);
    CHECK(a < 1.0);
  }
  CHECK(c.beta_max == 2.0);
  CHECK(c.alpha_max == 1.0);
  CHECK(c.alpha_min == *std::min_element(c.A_iface.begin(), c.A_iface.end()));
  const auto d = make_coefficients(*mc.mesh, 1.0, IfaceCoefficient::parse("uniform:0.01,1"), 2.0, 5);
  CHECK(c.A_iface == d.A_iface);
}

TEST_CASE("config validation")
{
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.levels = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.B = {-1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.geometry.count = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.H.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("log-log slope")
{
  CHECK(loglog_slope({0.1, 0.05, 0.025}, {0.3, 0.075, 0.01875}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("zero source gives zero errors")
{
  ExperimentConfig c;
  c.geometry = GeometrySpec::parse("chords:3");
  c.h_target = 0.25;
  c.levels = 1;
  c.source = [](Point2) { return 0.0; };
  const auto r = run_convergence(c);
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows)
    CHECK(row.energy_error == 0.0);
  CHECK(r.reference_energy == 0.0);
}

TEST_CASE("convergence study errors decrease")
{
  ExperimentConfig c;
  c.geometry = GeometrySpec::parse("chords:4");
  c.h_target = 0.25;
  c.levels = 2;
  const auto r = run_convergence(c);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[1].energy_error < r.rows[0].energy_error);
  CHECK(r.rows[2].energy_error < r.rows[1].energy_error);
  CHECK(r.slope > 0.5);
  std::stringstream s;
  write_convergence_csv(s, c, r);
  CHECK(s.str().find("level,h,dofs,energy_error\n") != std::string::npos);
}

TEST_CASE("iteration study is deterministic")
{
  const ExperimentConfig c = small_config();
  const auto a = run_iteration_study(c);
  const auto b = run_iteration_study(c);
  REQUIRE(a.size() == 2 * 2 * 2);
  std::stringstream sa, sb;
  write_iterations_csv(sa, c, a);
  write_iterations_csv(sb, c, b);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("seed=3") != std::string::npos);
  for (const auto& r : a) {
    CHECK(r.converged);
    CHECK(r.unpreconditioned_iterations == -1);
  }
}

TEST_CASE("iteration study cells")
{
  ExperimentConfig c = small_config();
  c.A_iface.resize(1);
  c.B = {1.0};
  c.H = {2.0};
  c.unpreconditioned = true;
  const auto one = run_iteration_study(c);
  REQUIRE(one.size() == 1);
  CHECK(one[0].iterations == 1);
  CHECK(one[0].unpreconditioned_iterations > 1);

  c.H = {0.25};
  c.unpreconditioned = false;
  c.rtol = 1e-4;
  const int loose = run_iteration_study(c)[0].iterations;
  c.rtol = 1e-8;
  const int tight = run_iteration_study(c)[0].iterations;
  CHECK(loose <= tight);
}

TEST_CASE("gnuplot scripts reference the csv")
{
  std::stringstream a, b;
  write_convergence_gnuplot(a, "conv.csv");
  write_iterations_gnuplot(b, "it.csv");
  CHECK(a.str().find("'conv.csv'") != std::string::npos);
  CHECK(b.str().find("'it.csv'") != std::string::npos);
}

}
