#pragma once

/** @file assembly.hpp
    @brief Block system of the coupled bulk / interface problem.

    a(u, v) = sum_T A_T (grad u0, grad v0)_T
            + sum_e A_e (u1', v1')_e
            + sum_e sum_sides B_e (u0 - u1, v0 - v1)_e
*/

#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mdfe/space.hpp"

namespace mdfe {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct Coefficients {
  std::vector<double> A_bulk;  ///< per triangle
  std::vector<double> A_iface; ///< per interface edge
  std::vector<double> B_iface; ///< per interface edge
  double alpha_min = 0.0, alpha_max = 0.0; ///< bounds of A_bulk and A_iface together
  double beta_min = 0.0, beta_max = 0.0;

  static Coefficients constant(const FittedMesh& m, double a_bulk, double a_iface, double b);
  void update_bounds();
  /// Throws AssemblyError on size mismatch, non-positive A or negative B.
  void validate(const FittedMesh& m) const;
};

struct BlockSystem {
  SparseMatrix A00, A01, A10, A11;
  Eigen::VectorXd b0, b1;
  std::vector<int> region_offsets; ///< free bulk index range of each region

  Eigen::Index n0() const { return A00.rows(); }
  Eigen::Index n1() const { return A11.rows(); }
  Eigen::Index size() const { return n0() + n1(); }
  SparseMatrix full_matrix() const;
  Eigen::VectorXd full_rhs() const;
};

struct AssemblyOptions {
  ScalarField dirichlet;   ///< boundary data g, nodally interpolated; zero if empty
  int threads = 1;
};

/// Matrix of a over all dofs (bulk dofs first, then interface dofs), no boundary conditions.
SparseMatrix assemble_unreduced(const FittedMesh& m, const DofMap& d, const Coefficients& c, int threads = 1);

/// Reduced system on free dofs; Dirichlet values are lifted into the load.
BlockSystem assemble(const FittedMesh& m, const DofMap& d, const Coefficients& c, const ScalarField& f_bulk,
                     const ScalarField& f_iface, const AssemblyOptions& options = {});

/// Nodal Dirichlet data over all bulk and interface dofs (zero away from the boundary).
Eigen::VectorXd dirichlet_bulk_values(const DofMap& d, const FittedMesh& m, const ScalarField& g);
Eigen::VectorXd dirichlet_iface_values(const DofMap& d, const FittedMesh& m, const ScalarField& g);

/// sqrt(U^T A U) for a free-dof vector U = [U0; U1]. Throws SpdViolation if
/// the quadratic form is negative beyond round-off.
double energy_norm(const BlockSystem& sys, const Eigen::VectorXd& U);
double energy_norm(const SparseMatrix& A, const Eigen::VectorXd& U);

/// f(x) = exp(-10 |x - (1/2, 1/2)|).
double exp_source(Point2 p);

/// Coordinate export, one `row col value` line per stored entry (0-based).
void write_coo(std::ostream& out, const SparseMatrix& A);

} // namespace mdfe
