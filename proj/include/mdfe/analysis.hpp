#pragma once

/** @file analysis.hpp
    @brief Diagnostics on the interface graph, the Schur complement and the geometry.
*/

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mdfe/assembly.hpp"
#include "mdfe/geometry.hpp"

namespace mdfe {

/// Graph of interface mesh vertices and edges.
struct InterfaceGraph {
  std::vector<Point2> nodes;
  std::vector<std::array<int, 2>> edges;
  std::vector<double> lengths;
  std::vector<bool> dirichlet;
  std::vector<int> free_index; ///< -1 on Dirichlet nodes

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_free() const;
};

/// Nodes are the interface dofs of d, in the same order.
InterfaceGraph interface_graph(const FittedMesh& m, const DofMap& d);
InterfaceGraph make_graph(std::vector<Point2> nodes, std::vector<std::array<int, 2>> edges,
                          std::vector<bool> dirichlet = {});

/// (Lv, v) = sum over edges (v(x) - v(y))^2 / |x - y|. With reduce, rows and
/// columns of Dirichlet nodes are removed.
SparseMatrix graph_laplacian(const InterfaceGraph& g, bool reduce = false);

/// Diagonal of M: half the total length of the edges at each node.
Eigen::VectorXd mass_matrix(const InterfaceGraph& g, bool reduce = false);

struct PoincareResult {
  double D = 0.0;
  bool infinite = false;
  std::vector<std::vector<int>> floating_components; ///< row indices of components without Dirichlet nodes
  int iterations = 0;
};

/// Largest generalized eigenvalue of (M, L), by inverse power iteration with
/// L solves (relative tolerance tol). L must be the reduced Laplacian.
PoincareResult poincare_constant(const SparseMatrix& L, const Eigen::VectorXd& M, double tol = 1e-6,
                                 int max_iterations = 10000);

struct SpectralBounds {
  double c1 = 0.0;
  double c2 = 0.0;
  double bound = 0.0;  ///< alpha_max + D beta_max
  bool bound_holds = false;
  bool dense = true;   ///< false: Lanczos estimate
};

/// Extreme generalized eigenvalues of (S, L) on free interface dofs. Dense
/// solve up to dense_limit dofs, Lanczos on L^{-1} S beyond.
SpectralBounds spectral_equivalence(const SparseMatrix& S, const SparseMatrix& L, const Coefficients& c, double D,
                                    Eigen::Index dense_limit = 2000);
SpectralBounds spectral_equivalence(const Eigen::MatrixXd& S, const SparseMatrix& L, const Coefficients& c, double D);

struct WalkStep {
  bool is_region;
  int index;
};

struct CoercivityWalk {
  bool ok = false;
  std::vector<WalkStep> walk;          ///< i_N, j_N, ..., j_1, i_0
  int length = 0;                      ///< N, the number of interface steps
  std::vector<int> unreachable_segments;
  std::vector<int> unreachable_regions;
};

CoercivityWalk coercivity_walk(const MixedDomain& d);
/// Same on an explicit bipartite graph (regions, segments, E0 pairs).
CoercivityWalk coercivity_walk(std::size_t num_regions, std::size_t num_segments,
                               const std::vector<std::pair<int, int>>& E0, const std::vector<int>& boundary_regions);

enum class CornerKind { S, M };

struct ExponentResult {
  std::vector<double> lambdas;        ///< exponents in (0, 1), ascending
  double sobolev_index = 2.0;         ///< min(2, 1 + min lambda)
  std::vector<std::string> warnings;
};

/// lambda_l = l pi / omega (S) or (l - 1/2) pi / omega (M), l = 1, 2, ...
/// Throws std::invalid_argument outside 0 < omega < 2 pi or at the
/// excluded angles (omega / 2pi integer for S, omega / 2pi + 1/2 integer for M).
ExponentResult singular_exponents(double omega, CornerKind kind);

struct Corner {
  int region;
  int vertex;
  double omega;
  CornerKind kind;
  bool dirichlet_dirichlet;
  bool tip;
  ExponentResult exponents;
};

/// Corners of every region boundary cycle with their classification:
/// boundary pieces are Dirichlet, interface pieces Robin. Slit tips
/// (omega = 2 pi) are reported with a warning instead of exponents.
std::vector<Corner> classify_corners(const MixedDomain& d);

/// Proxy statistics for the coarse-scale assumptions: longest interface
/// edge, interface length per coarse cell (mean and variance), and the
/// number of cells whose interface pieces are disconnected.
struct NetworkStats {
  double max_edge = 0.0;
  double mean_cell_length = 0.0;
  double cell_length_variance = 0.0;
  int disconnected_cells = 0;
  int empty_cells = 0;
};
NetworkStats network_statistics(const FittedMesh& m, double H);

/// key = value lines.
void write_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries);

} // namespace mdfe
