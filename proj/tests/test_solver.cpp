#include <doctest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "mdfe/errors.hpp"
#include "mdfe/harness.hpp"
#include "mdfe/solver.hpp"

using namespace mdfe;

namespace {

BlockSystem system_for(const testing::MeshCase& c, double b = 1.0)
{
  return assemble(*c.mesh, c.dofs, Coefficients::constant(*c.mesh, 1.0, 1.0, b), exp_source, exp_source);
}

Eigen::MatrixXd dense_schur(const BlockSystem& sys)
{
  const Eigen::MatrixXd A00(sys.A00), A01(sys.A01), A11(sys.A11);
  return A11 - A01.transpose() * Eigen::LLT<Eigen::MatrixXd>(A00).solve(A01);
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k)
    v[k] = d(rng);
  return v;
}

} // namespace

TEST_SUITE("solver") {

TEST_CASE("Schur action matches the dense oracle on crossing chords")
{
  const auto c = testing::mesh_case(testing::cross(), 0.1);
  const BlockSystem sys = system_for(c);
  REQUIRE(sys.size() <= 600);
  const SchurOperator op(sys);
  CHECK(op.num_region_factors() == 4);
  const Eigen::MatrixXd S = dense_schur(sys);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const Eigen::VectorXd x = random_vector(sys.n1(), s);
    CHECK((op * x - S * x).norm() <= 1e-10 * (S * x).norm());
  }
  const Eigen::VectorXd rhs = Eigen::VectorXd(sys.b1) -
                              Eigen::MatrixXd(sys.A10) * Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(sys.A00)).solve(sys.b0);
  CHECK((op.reduced_rhs() - rhs).norm() <= 1e-10 * rhs.norm());
}

TEST_CASE("one region gives one factor")
{
  const auto c = testing::mesh_case(testing::slit(), 0.1);
  const BlockSystem sys = system_for(c);
  CHECK(SchurOperator(sys).num_region_factors() == 1);
}

TEST_CASE("zero coupling: Schur complement is A11 and the bulk decouples")
{
  const auto c = testing::mesh_case(gen_infinite_chords(3, 2), 0.1);
  const BlockSystem sys = system_for(c, 0.0);
  const SchurOperator op(sys);
  const Eigen::VectorXd x = random_vector(sys.n1(), 3);
  CHECK((op * x - sys.A11 * x).norm() == 0.0);
  const Eigen::VectorXd u0 = op.recover_bulk(x), u0b = op.recover_bulk(Eigen::VectorXd::Zero(sys.n1()));
  CHECK((u0 - u0b).norm() == 0.0);
}

TEST_CASE("explicit and dense Schur complements")
{
  const auto c = testing::mesh_case(gen_infinite_chords(5, 4), 0.08);
  const BlockSystem sys = system_for(c);
  const SchurOperator op(sys);
  const DenseSchur ds = assemble_schur_dense(op);
  CHECK(ds.asymmetry <= 1e-10);
  CHECK((ds.S - ds.S.transpose()).norm() == 0.0);
  double asym = 1.0;
  const SparseMatrix S = op.assemble_explicit(&asym);
  CHECK(asym <= 1e-10);
  CHECK((Eigen::MatrixXd(S) - ds.S).norm() <= 1e-10 * ds.S.norm());
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Eigen::VectorXd x = random_vector(sys.n1(), s);
    const Eigen::VectorXd y = op * x;
    CHECK((ds.S * x - y).norm() <= 1e-10 * y.norm());
    // S <= A11 in the quadratic-form sense.
    CHECK(x.dot(y) <= x.dot(sys.A11 * x) * (1 + 1e-14));
    CHECK(x.dot(y) > 0.0);
  }
  CHECK_THROWS_AS(assemble_schur_dense(op, sys.n1() - 1), std::length_error);
}

TEST_CASE("Schur with PCG matches the monolithic solve and recovers the bulk")
{
  const auto c = testing::mesh_case(gen_finite_segments(20, 0.3, 7), 0.08);
  const BlockSystem sys = system_for(c);
  const SchurOperator op(sys);
  const PcgResult r = pcg(op, IdentityOperator(sys.n1()), op.reduced_rhs(), Eigen::VectorXd::Zero(sys.n1()),
                          PcgOptions{1e-12, 5000, {}});
  REQUIRE(r.converged);
  Eigen::VectorXd U(sys.size());
  U << op.recover_bulk(r.x), r.x;
  const Eigen::VectorXd ref = solve_monolithic(sys);
  CHECK(energy_norm(sys, Eigen::VectorXd(U - ref)) <= 1e-8);
  const SparseMatrix A = sys.full_matrix();
  const Eigen::VectorXd b = sys.full_rhs();
  CHECK((A * U - b).norm() <= 1e-10 * b.norm());
  CHECK(op.recover_bulk(Eigen::VectorXd::Zero(sys.n1())).size() == sys.n0());
}

TEST_CASE("zero data gives zero bulk")
{
  const auto c = testing::mesh_case(testing::cross(), 0.2);
  auto zero = [](Point2) { return 0.0; };
  const BlockSystem sys = assemble(*c.mesh, c.dofs, Coefficients::constant(*c.mesh, 1, 1, 1), zero, zero);
  const SchurOperator op(sys);
  CHECK(op.recover_bulk(Eigen::VectorXd::Zero(sys.n1())).norm() == 0.0);
  CHECK(op.reduced_rhs().norm() == 0.0);
}

TEST_CASE("exact preconditioner converges in one iteration")
{
  const auto c = testing::mesh_case(testing::cross(), 0.1);
  const BlockSystem sys = system_for(c);
  const SchurOperator op(sys);
  const Eigen::MatrixXd S = assemble_schur_dense(op).S;
  const Eigen::MatrixXd Sinv = S.inverse();
  const PcgResult r = pcg(op, DenseOperator(Sinv), op.reduced_rhs(), Eigen::VectorXd::Zero(sys.n1()));
  CHECK(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("CG energy error decreases and the Lanczos extremes bracket the spectrum")
{
  const auto c = testing::mesh_case(gen_infinite_chords(4, 6), 0.1);
  const BlockSystem sys = system_for(c);
  const SchurOperator op(sys);
  const Eigen::MatrixXd S = assemble_schur_dense(op).S;
  const Eigen::VectorXd x_star = S.llt().solve(op.reduced_rhs());
  std::vector<double> err;
  PcgOptions opt;
  opt.rtol = 1e-12;
  opt.on_iterate = [&](int, const Eigen::VectorXd& x) {
    const Eigen::VectorXd e = x - x_star;
    err.push_back(std::sqrt(e.dot(S * e)));
  };
  const PcgResult r = pcg(DenseOperator(S), IdentityOperator(sys.n1()), op.reduced_rhs(),
                          Eigen::VectorXd::Zero(sys.n1()), opt);
  REQUIRE(r.converged);
  REQUIRE(static_cast<int>(err.size()) == r.iterations);
  for (std::size_t k = 1; k < err.size(); ++k)
    CHECK(err[k] <= err[k - 1] * (1 + 1e-12));
  CHECK(r.residual_history.size() == static_cast<std::size_t>(r.iterations) + 1);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues();
  CHECK(r.lambda_min >= ev.minCoeff() * (1 - 1e-8));
  CHECK(r.lambda_max <= ev.maxCoeff() * (1 + 1e-8));
  CHECK(r.lambda_max == doctest::Approx(ev.maxCoeff()).epsilon(1e-6));
}

TEST_CASE("Lanczos extremes of a diagonal matrix")
{
  Eigen::MatrixXd A = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal();
  const PcgResult r =
      pcg(DenseOperator(A), IdentityOperator(3), Eigen::Vector3d::Ones(), Eigen::Vector3d::Zero(), PcgOptions{1e-14, 10, {}});
  CHECK(r.iterations == 3);
  CHECK(r.lambda_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.lambda_max == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.kappa() == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("PCG failure modes")
{
  Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(pcg(DenseOperator(neg), IdentityOperator(4), Eigen::VectorXd::Ones(4), Eigen::VectorXd::Zero(4)),
                  SpdViolation);
  Eigen::MatrixXd A = Eigen::VectorXd::LinSpaced(50, 1.0, 1000.0).asDiagonal();
  const PcgResult r =
      pcg(DenseOperator(A), IdentityOperator(50), Eigen::VectorXd::Ones(50), Eigen::VectorXd::Zero(50), PcgOptions{1e-10, 3, {}});
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  const Eigen::VectorXd x = A.diagonal().cwiseInverse();
  const PcgResult z = pcg(DenseOperator(A), IdentityOperator(50), Eigen::VectorXd::Zero(50), Eigen::VectorXd::Zero(50));
  CHECK(z.converged);
  CHECK(z.iterations == 0);
  CHECK_THROWS_AS(pcg(DenseOperator(A), IdentityOperator(49), Eigen::VectorXd::Ones(50), x), std::invalid_argument);
}

TEST_CASE("residual history csv")
{
  Eigen::MatrixXd A = Eigen::Vector2d(1.0, 4.0).asDiagonal();
  const PcgResult r = pcg(DenseOperator(A), IdentityOperator(2), Eigen::Vector2d::Ones(), Eigen::Vector2d::Zero());
  std::stringstream s;
  write_residual_history(s, r);
  std::string line;
  std::getline(s, line);
  CHECK(line == "iteration,residual");
  int rows = 0;
  while (std::getline(s, line))
    ++rows;
  CHECK(rows == r.iterations + 1);
}

}
