#pragma once

/** @file solver.hpp
    @brief Bulk elimination, Schur complement on the interface, PCG.
*/

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "mdfe/assembly.hpp"

namespace mdfe {

class LinearOperator {
public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index size() const = 0;
  virtual void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const = 0;
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const
  {
    Eigen::VectorXd y;
    apply(x, y);
    return y;
  }
};

class IdentityOperator final : public LinearOperator {
public:
  explicit IdentityOperator(Eigen::Index n) : n_(n) {}
  Eigen::Index size() const override { return n_; }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = x; }

private:
  Eigen::Index n_;
};

class SparseOperator final : public LinearOperator {
public:
  explicit SparseOperator(const SparseMatrix& A) : A_(&A) {}
  Eigen::Index size() const override { return A_->rows(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y = *A_ * x; }

private:
  const SparseMatrix* A_;
};

class DenseOperator final : public LinearOperator {
public:
  explicit DenseOperator(const Eigen::MatrixXd& A) : A_(&A) {}
  Eigen::Index size() const override { return A_->rows(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override { y.noalias() = *A_ * x; }

private:
  const Eigen::MatrixXd* A_;
};

/// Matrix-free S = A11 - A10 A00^{-1} A01 with A00 factored region by region.
/// Keeps a pointer to the block system, which must outlive the operator.
class SchurOperator final : public LinearOperator {
public:
  /// Throws SpdViolation carrying the region index if a block is not SPD.
  explicit SchurOperator(const BlockSystem& sys, int threads = 1);

  Eigen::Index size() const override { return sys_->n1(); }
  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const override;

  /// b1 - A10 A00^{-1} b0
  const Eigen::VectorXd& reduced_rhs() const { return rhs_; }
  /// A00^{-1} v, region by region.
  Eigen::VectorXd solve_bulk(const Eigen::VectorXd& v) const;
  /// U0 = A00^{-1} (b0 - A01 U1)
  Eigen::VectorXd recover_bulk(const Eigen::VectorXd& U1) const;

  std::size_t num_region_factors() const { return blocks_.size(); }
  const BlockSystem& system() const { return *sys_; }
  int threads() const { return threads_; }

  /// Explicit S as a sparse matrix, built from per-region local Schur
  /// complements (only interface dofs touching a region couple through it),
  /// then symmetrized. `asymmetry` receives max |S - S^T| / max |S|.
  SparseMatrix assemble_explicit(double* asymmetry = nullptr) const;

private:
  struct RegionBlock {
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>> factor;
    SparseMatrix A01; ///< rows of A01 belonging to the region
  };
  const BlockSystem* sys_;
  int threads_;
  std::vector<RegionBlock> blocks_;
  Eigen::VectorXd rhs_;
};

struct DenseSchur {
  Eigen::MatrixXd S;
  double asymmetry = 0.0; ///< max |S - S^T| / max |S| before symmetrization
};

/// Dense S assembled column by column with the matrix-free action.
/// Throws std::length_error if n1 exceeds max_dofs.
DenseSchur assemble_schur_dense(const SchurOperator& op, Eigen::Index max_dofs = 20000);

struct PcgOptions {
  double rtol = 1e-8;
  int max_iterations = 20000;
  /// Called with (iteration, current iterate) after every update.
  std::function<void(int, const Eigen::VectorXd&)> on_iterate;
};

struct PcgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history; ///< sqrt(r^T T r), starting with the initial residual
  std::vector<double> alpha, beta;      ///< CG coefficients
  /// Extreme eigenvalues of T A from the Lanczos matrix of the CG recurrence.
  double lambda_min = 0.0, lambda_max = 0.0;
  double kappa() const { return lambda_min > 0.0 ? lambda_max / lambda_min : 0.0; }
};

/// Preconditioned CG for A x = b. Stops when sqrt(r^T T r) <= rtol times its
/// initial value. Throws SpdViolation on p^T A p <= 0.
PcgResult pcg(const LinearOperator& A, const LinearOperator& T, const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
              const PcgOptions& options = {});

/// Extreme eigenvalues of the Lanczos tridiagonal built from CG coefficients.
std::pair<double, double> lanczos_extremes(const std::vector<double>& alpha, const std::vector<double>& beta);

/// Sparse Cholesky solve of the full free-dof system; returns [U0; U1].
Eigen::VectorXd solve_monolithic(const BlockSystem& sys);

/// CSV: iteration,residual
void write_residual_history(std::ostream& out, const PcgResult& r);

} // namespace mdfe
