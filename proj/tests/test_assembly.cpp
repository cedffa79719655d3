#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "mdfe/assembly.hpp"
#include "mdfe/errors.hpp"
#include "mdfe/harness.hpp"
#include "mdfe/solver.hpp"

using namespace mdfe;

namespace {

Coefficients random_coefficients(const FittedMesh& m, std::uint64_t seed, double b_scale = 1.0)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Coefficients c = Coefficients::constant(m, 1, 1, 1);
  for (auto& a : c.A_bulk)
    a = u(rng);
  for (auto& a : c.A_iface)
    a = u(rng);
  for (auto& b : c.B_iface)
    b = b_scale * u(rng);
  c.update_bounds();
  return c;
}

// a(U, U) summed element by element from coordinates, bulk dofs first then interface dofs.
double energy_oracle(const FittedMesh& m, const DofMap& d, const Coefficients& c, const Eigen::VectorXd& U)
{
  const Eigen::Index nb = static_cast<Eigen::Index>(d.num_bulk());
  double e = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& T = m.triangles[t];
    const Point2 p0 = m.vertices[T[0]], p1 = m.vertices[T[1]], p2 = m.vertices[T[2]];
    const double u0 = U[d.corner_dof[t][0]], u1 = U[d.corner_dof[t][1]], u2 = U[d.corner_dof[t][2]];
    const double det = cross(p1 - p0, p2 - p0);
    // grad u solves [p1-p0; p2-p0] g = [u1-u0; u2-u0]
    const double gx = ((u1 - u0) * (p2.y - p0.y) - (u2 - u0) * (p1.y - p0.y)) / det;
    const double gy = ((u2 - u0) * (p1.x - p0.x) - (u1 - u0) * (p2.x - p0.x)) / det;
    e += c.A_bulk[t] * 0.5 * det * (gx * gx + gy * gy);
  }
  for (std::size_t k = 0; k < m.interface_edges.size(); ++k) {
    const double L = distance(m.vertices[m.interface_edges[k][0]], m.vertices[m.interface_edges[k][1]]);
    const double a = U[nb + d.edge_iface_dofs[k][0]], b = U[nb + d.edge_iface_dofs[k][1]];
    e += c.A_iface[k] * (b - a) * (b - a) / L;
    for (int side = 0; side < 2; ++side) {
      const double wa = U[d.edge_trace[k][side][0]] - a, wb = U[d.edge_trace[k][side][1]] - b;
      e += c.B_iface[k] * L / 3.0 * (wa * wa + wa * wb + wb * wb);
    }
  }
  return e;
}

Eigen::VectorXd full_solution(const BlockSystem& sys, const DofMap& d, const Eigen::VectorXd& U)
{
  const Eigen::Index n0 = sys.n0();
  Eigen::VectorXd out(static_cast<Eigen::Index>(d.num_bulk() + d.num_iface()));
  out << expand_bulk(U.head(n0), d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.num_bulk()))),
      expand_iface(U.tail(sys.n1()), d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.num_iface())));
  return out;
}

Eigen::VectorXd free_part(const Eigen::VectorXd& full, const DofMap& d)
{
  const Eigen::Index nb = static_cast<Eigen::Index>(d.num_bulk());
  Eigen::VectorXd out(static_cast<Eigen::Index>(d.n0() + d.n1()));
  out << restrict_bulk(full.head(nb), d), restrict_iface(full.tail(full.size() - nb), d);
  return out;
}

double linear_load(Point2 p) { return 1.0 + p.x - 2.0 * p.y; }

} // namespace

TEST_SUITE("assembly") {

TEST_CASE("energy matches element-by-element evaluation")
{
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto segs = seed == 2 ? gen_finite_segments(12, 0.3, seed) : gen_infinite_chords(5, seed);
    const auto c = testing::mesh_case(segs, 0.1);
    const Coefficients coef = random_coefficients(*c.mesh, seed);
    const SparseMatrix K = assemble_unreduced(*c.mesh, c.dofs, coef);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::VectorXd U(K.rows());
    for (Eigen::Index k = 0; k < U.size(); ++k)
      U[k] = n(rng);
    const double oracle = energy_oracle(*c.mesh, c.dofs, coef, U);
    CHECK(U.dot(K * U) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(energy_norm(K, U) == doctest::Approx(std::sqrt(oracle)).epsilon(1e-12));
  }
}

TEST_CASE("coupling mass block of one interface edge")
{
  const auto c = testing::mesh_case({{{0.0, 0.5}, {1.0, 0.5}}}, 1.0);
  const FittedMesh& m = *c.mesh;
  const DofMap& d = c.dofs;
  REQUIRE(m.interface_edges.size() == 1);
  const SparseMatrix K1 = assemble_unreduced(m, d, Coefficients::constant(m, 1, 1, 1));
  const Eigen::MatrixXd C = Eigen::MatrixXd(K1 - assemble_unreduced(m, d, Coefficients::constant(m, 1, 1, 0)));
  const double L = 1.0;
  const double mass[2][2] = {{2 * L / 6, L / 6}, {L / 6, 2 * L / 6}};
  const Eigen::Index nb = static_cast<Eigen::Index>(d.num_bulk());
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const Eigen::Index ia = nb + d.edge_iface_dofs[0][a], ib = nb + d.edge_iface_dofs[0][b];
      CHECK(C(ia, ib) == doctest::Approx(2 * mass[a][b]).epsilon(1e-15));
      for (int side = 0; side < 2; ++side) {
        const int ta = d.edge_trace[0][side][a], tb = d.edge_trace[0][side][b];
        CHECK(C(ta, tb) == doctest::Approx(mass[a][b]).epsilon(1e-15));
        CHECK(C(ta, ib) == doctest::Approx(-mass[a][b]).epsilon(1e-15));
        CHECK(C(ib, ta) == doctest::Approx(-mass[a][b]).epsilon(1e-15));
      }
    }
  CHECK(C.cwiseAbs().sum() == doctest::Approx(8 * (2 + 1 + 1 + 2) * L / 6).epsilon(1e-14));
}

TEST_CASE("constants lie in the kernel")
{
  const auto c = testing::mesh_case(gen_infinite_chords(6, 3), 0.1);
  const SparseMatrix K = assemble_unreduced(*c.mesh, c.dofs, random_coefficients(*c.mesh, 4));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(K.rows());
  CHECK((K * one).lpNorm<Eigen::Infinity>() <= 1e-12 * K.coeffs().cwiseAbs().maxCoeff());
  CHECK(energy_norm(K, one) <= 1e-6);
}

TEST_CASE("constant boundary data gives the constant solution")
{
  const auto c = testing::mesh_case(testing::cross(), 0.15);
  AssemblyOptions opt;
  opt.dirichlet = [](Point2) { return 1.0; };
  auto zero = [](Point2) { return 0.0; };
  const BlockSystem sys = assemble(*c.mesh, c.dofs, random_coefficients(*c.mesh, 2), zero, zero, opt);
  const Eigen::VectorXd U = solve_monolithic(sys);
  CHECK((U.array() - 1.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("structure of the block system")
{
  const auto c = testing::mesh_case(gen_infinite_chords(6, 5), 0.1);
  const FittedMesh& m = *c.mesh;
  const BlockSystem sys = assemble(m, c.dofs, random_coefficients(m, 5), exp_source, exp_source);
  const SparseMatrix A = sys.full_matrix();
  CHECK(SparseMatrix(A - SparseMatrix(A.transpose())).coeffs().cwiseAbs().sum() == 0.0);
  CHECK(SparseMatrix(sys.A10 - SparseMatrix(sys.A01.transpose())).coeffs().cwiseAbs().sum() == 0.0);

  const auto& off = sys.region_offsets;
  REQUIRE(off.size() == m.num_regions + 1);
  auto region_of = [&](Eigen::Index i) {
    return static_cast<int>(std::upper_bound(off.begin(), off.end(), static_cast<int>(i)) - off.begin()) - 1;
  };
  for (Eigen::Index col = 0; col < sys.A00.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(sys.A00, col); it; ++it)
      CHECK(region_of(it.row()) == region_of(col));
  for (std::size_t r = 0; r < m.num_regions; ++r) {
    const int n = off[r + 1] - off[r];
    if (n == 0)
      continue;
    const Eigen::MatrixXd block = Eigen::MatrixXd(sys.A00).block(off[r], off[r], n, n);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(block).info() == Eigen::Success);
  }
  const Eigen::MatrixXd dense(A);
  REQUIRE(dense.rows() <= 1500);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("zero coupling decouples the blocks")
{
  const auto c = testing::mesh_case(testing::cross(), 0.2);
  const BlockSystem sys =
      assemble(*c.mesh, c.dofs, Coefficients::constant(*c.mesh, 1, 1, 0), exp_source, exp_source);
  CHECK(sys.A01.nonZeros() == 0);
  CHECK(sys.A10.nonZeros() == 0);
}

TEST_CASE("scaling all coefficients scales the matrix")
{
  const auto c = testing::mesh_case(gen_finite_segments(10, 0.3, 6), 0.1);
  const Coefficients base = random_coefficients(*c.mesh, 6);
  const SparseMatrix K = assemble_unreduced(*c.mesh, c.dofs, base);
  for (double s : {0.5, 4.0}) {
    Coefficients scaled = base;
    for (auto* v : {&scaled.A_bulk, &scaled.A_iface, &scaled.B_iface})
      for (auto& x : *v)
        x *= s;
    scaled.update_bounds();
    const SparseMatrix Ks = assemble_unreduced(*c.mesh, c.dofs, scaled);
    CHECK(SparseMatrix(Ks - s * K).coeffs().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Galerkin orthogonality across one refinement")
{
  const auto d = testing::domain_of(gen_infinite_chords(4, 8));
  auto m0 = std::make_shared<const FittedMesh>(triangulate(d, 0.125));
  auto m1 = std::make_shared<const FittedMesh>(refine(m0));
  const DofMap d0 = build_dofmap(*m0), d1 = build_dofmap(*m1);
  const BlockSystem s0 =
      assemble(*m0, d0, Coefficients::constant(*m0, 1.5, 0.7, 2.0), linear_load, linear_load);
  const BlockSystem s1 =
      assemble(*m1, d1, Coefficients::constant(*m1, 1.5, 0.7, 2.0), linear_load, linear_load);
  const SparseMatrix A1 = s1.full_matrix();

  auto prolong = [&](const Eigen::VectorXd& U) {
    const Eigen::VectorXd full = full_solution(s0, d0, U);
    const Eigen::Index nb = static_cast<Eigen::Index>(d0.num_bulk());
    Eigen::VectorXd out(static_cast<Eigen::Index>(d1.num_bulk() + d1.num_iface()));
    out << prolongate_bulk(full.head(nb), d0, d1, *m1), prolongate_iface(full.tail(full.size() - nb), d0, d1, *m1);
    return free_part(out, d1);
  };

  const Eigen::VectorXd uH = prolong(solve_monolithic(s0));
  const Eigen::VectorXd uh = solve_monolithic(s1);
  const Eigen::VectorXd e = uh - uH;
  const double scale = std::sqrt(uh.dot(A1 * uh));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd v(s0.size()), w(s0.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      v[k] = n(rng);
      w[k] = n(rng);
    }
    const Eigen::VectorXd Pv = prolong(v), Pw = prolong(w);
    const double vnorm = std::sqrt(Pv.dot(A1 * Pv));
    CHECK(std::abs(Pv.dot(A1 * e)) <= 1e-10 * vnorm * scale);
    // Nested spaces: the coarse matrix is the Galerkin projection of the fine one.
    const SparseMatrix A0 = s0.full_matrix();
    CHECK(Pv.dot(A1 * Pw) == doctest::Approx(v.dot(A0 * w)).epsilon(1e-11));
  }
}

TEST_CASE("coefficient validation")
{
  const auto c = testing::mesh_case(testing::slit(), 0.2);
  Coefficients bad = Coefficients::constant(*c.mesh, 1, 1, 1);
  bad.A_iface[0] = 0.0;
  CHECK_THROWS_AS(assemble_unreduced(*c.mesh, c.dofs, bad), AssemblyError);
  bad = Coefficients::constant(*c.mesh, 1, 1, -1);
  CHECK_THROWS_AS(assemble_unreduced(*c.mesh, c.dofs, bad), AssemblyError);
  bad = Coefficients::constant(*c.mesh, 1, 1, 1);
  bad.A_bulk.pop_back();
  CHECK_THROWS_AS(assemble_unreduced(*c.mesh, c.dofs, bad), AssemblyError);
}

TEST_CASE("energy norm edge cases")
{
  const auto c = testing::mesh_case(testing::cross(), 0.25);
  const BlockSystem sys =
      assemble(*c.mesh, c.dofs, Coefficients::constant(*c.mesh, 1, 1, 1), exp_source, exp_source);
  CHECK(energy_norm(sys, Eigen::VectorXd::Zero(sys.size())) == 0.0);
  CHECK_THROWS_AS(energy_norm(sys, Eigen::VectorXd::Zero(sys.size() + 1)), AssemblyError);
  SparseMatrix neg = -sys.full_matrix();
  CHECK_THROWS_AS(energy_norm(neg, Eigen::VectorXd::Ones(sys.size())), SpdViolation);
  std::stringstream s;
  write_coo(s, sys.A11);
  std::string line;
  Eigen::Index lines = 0;
  while (std::getline(s, line))
    if (!line.empty() && line[0] != '#')
      ++lines;
  CHECK(lines == sys.A11.nonZeros());
}

TEST_CASE("exp source")
{
  CHECK(exp_source({0.5, 0.5}) == 1.0);
  CHECK(exp_source({0.8, 0.9}) == doctest::Approx(std::exp(-5.0)).epsilon(1e-15));
}

}
