#pragma once

/** @file precond.hpp
    @brief Two-level additive Schwarz preconditioner on the interface space.

    T r = Q0 (Q0^T S Q0)^{-1} Q0^T r + sum_j R_j^T (R_j S R_j^T)^{-1} R_j r

    Q0 interpolates the hat functions of a uniform coarse grid at the
    interface vertices. R_j selects the interface dofs whose basis function
    is supported inside the patch of coarse node j.
*/

#include <algorithm>
#include <memory>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "mdfe/solver.hpp"
#include "mdfe/space.hpp"

namespace mdfe {

/// Uniform grid of N x N squares, each cut along its lower-left to
/// upper-right diagonal, covering the bounding square of the domain.
struct CoarseGrid {
  Point2 origin;
  double side = 1.0;
  int cells = 1;

  double H() const { return side / cells; }
  int num_nodes() const { return (cells + 1) * (cells + 1); }
  Point2 node(int k) const;
  /// Hat function of node k at p (may be negative outside its patch).
  double hat_raw(int k, Point2 p) const;
  double hat(int k, Point2 p) const { return std::max(0.0, hat_raw(k, p)); }
};

CoarseGrid make_coarse_grid(const FittedMesh& m, double H);

struct PreconditionerStats {
  Eigen::Index coarse_dim = 0;
  Eigen::Index coarse_rank = 0; ///< below coarse_dim when interface hats are dependent
  std::size_t num_local = 0;
  std::size_t max_local_size = 0;
  int max_overlap = 0;   ///< largest number of local subspaces sharing a dof
  bool collapsed = false; ///< a single local subspace spans everything
};

class SubspacePreconditioner final : public LinearOperator {
public:
  /// Generic form: coarse prolongation (n1 x nc, may be empty) and local
  /// index sets. Galerkin matrices come from the explicit operator S.
  SubspacePreconditioner(const SparseMatrix& S, const SparseMatrix& Q0, std::vector<std::vector<int>> local,
                         int threads = 1);

  Eigen::Index size() const override { return n_; }
  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& y) const override;

  const PreconditionerStats& stats() const { return stats_; }
  const SparseMatrix& coarse_prolongation() const { return Q0_; }
  const std::vector<std::vector<int>>& local_subspaces() const { return local_; }

private:
  Eigen::Index n_ = 0;
  int threads_ = 1;
  SparseMatrix Q0_;
  Eigen::LLT<Eigen::MatrixXd> coarse_;
  Eigen::MatrixXd coarse_pinv_;
  bool coarse_singular_ = false;
  std::vector<std::vector<int>> local_;
  std::vector<std::unique_ptr<Eigen::SimplicialLLT<SparseMatrix>>> local_factors_;
  PreconditionerStats stats_;
};

/// Columns of Q0 over free interface dofs; empty columns dropped.
SparseMatrix coarse_prolongation(const CoarseGrid& grid, const DofMap& d, const FittedMesh& m);

/// Local index sets (free interface numbering) of all coarse patches, empty ones dropped.
/// Throws AssemblyError if some free dof lies in no patch.
std::vector<std::vector<int>> local_subspaces(const CoarseGrid& grid, const DofMap& d, const FittedMesh& m);

/// Builds the preconditioner on an explicit Schur complement S. If one
/// local subspace contains every free dof, it is used alone.
SubspacePreconditioner build_preconditioner(const SparseMatrix& S, const DofMap& d, const FittedMesh& m, double H,
                                            int threads = 1);

} // namespace mdfe
