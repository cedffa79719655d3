#pragma once

/** @file space.hpp
    @brief Degrees of freedom of the bulk and interface P1 spaces.

    Bulk dofs are duplicated across interfaces: a vertex carries one bulk dof
    per fan, i.e. per maximal group of incident triangles connected through
    edges that are not interface edges. Interface dofs sit on the vertices of
    interface edges and are shared by all segments meeting at a vertex.
*/

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "mdfe/mesh.hpp"

namespace mdfe {

using ScalarField = std::function<double(Point2)>;

struct DofMap {
  // Bulk dofs, ordered by (region, vertex) so that the free dofs of a region
  // are contiguous.
  std::vector<int> bulk_vertex;
  std::vector<int> bulk_region;
  std::vector<std::array<int, 3>> corner_dof; ///< per triangle and local corner

  std::vector<int> iface_vertex;     ///< mesh vertex of each interface dof, ascending
  std::vector<int> vertex_iface_dof; ///< per mesh vertex, -1 if not on an interface
  std::vector<std::array<int, 2>> edge_iface_dofs; ///< per interface edge (v0, v1)

  /// Per interface edge and side (0: left of v0 -> v1, 1: right): the bulk
  /// dofs whose traces live at the edge endpoints, and the triangle on that side.
  std::vector<std::array<std::array<int, 2>, 2>> edge_trace;
  std::vector<std::array<int, 2>> edge_side_triangle;

  std::vector<bool> dirichlet_bulk;
  std::vector<bool> dirichlet_iface;

  // Free numbering: bulk_free[k] / iface_free[k] -> dof; *_free_index inverse (-1 on Dirichlet dofs).
  std::vector<int> bulk_free;
  std::vector<int> iface_free;
  std::vector<int> bulk_free_index;
  std::vector<int> iface_free_index;
  std::vector<int> region_offsets; ///< free bulk dofs of region r: [region_offsets[r], region_offsets[r + 1])

  std::size_t num_bulk() const { return bulk_vertex.size(); }
  std::size_t num_iface() const { return iface_vertex.size(); }
  std::size_t n0() const { return bulk_free.size(); }
  std::size_t n1() const { return iface_free.size(); }
  int fans_at(int vertex) const;
};

DofMap build_dofmap(const FittedMesh& m);

/// Nodal values over all interface dofs, zero on Dirichlet dofs.
Eigen::VectorXd interpolate_nodal(const ScalarField& fn, const DofMap& d, const FittedMesh& m);

/// Nodal values over all bulk dofs (every dof of a vertex gets the same value).
Eigen::VectorXd interpolate_bulk(const ScalarField& fn, const DofMap& d, const FittedMesh& m);

/// Exact prolongation of full-length bulk / interface vectors from the parent
/// of `fine` to `fine`.
Eigen::VectorXd prolongate_bulk(const Eigen::VectorXd& coarse, const DofMap& coarse_dofs, const DofMap& fine_dofs,
                                const FittedMesh& fine);
Eigen::VectorXd prolongate_iface(const Eigen::VectorXd& coarse, const DofMap& coarse_dofs, const DofMap& fine_dofs,
                                 const FittedMesh& fine);

/// Splits free-dof vectors back to full length and vice versa.
Eigen::VectorXd expand_bulk(const Eigen::VectorXd& free_values, const DofMap& d, const Eigen::VectorXd& dirichlet);
Eigen::VectorXd expand_iface(const Eigen::VectorXd& free_values, const DofMap& d, const Eigen::VectorXd& dirichlet);
Eigen::VectorXd restrict_bulk(const Eigen::VectorXd& full, const DofMap& d);
Eigen::VectorXd restrict_iface(const Eigen::VectorXd& full, const DofMap& d);

} // namespace mdfe
