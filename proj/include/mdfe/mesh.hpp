#pragma once

/** @file mesh.hpp
    @brief Interface-fitted triangulations and their nested regular refinement.
*/

#include <array>
#include <iosfwd>
#include <memory>
#include <vector>

#include "mdfe/geometry.hpp"

namespace mdfe {

struct FittedMesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles; ///< counterclockwise
  std::vector<int> triangle_region;          ///< bulk region i of each triangle
  std::vector<std::array<int, 2>> interface_edges;
  std::vector<int> interface_edge_segment; ///< interface segment j of each interface edge
  std::vector<std::array<int, 2>> boundary_edges;
  std::vector<int> boundary_vertices; ///< sorted
  std::size_t num_regions = 0;
  double h = 0.0;             ///< largest triangle diameter
  double min_angle_deg = 0.0; ///< smallest interior angle over all triangles

  // Nested hierarchy. Empty for an initial mesh. Parent vertices keep their
  // ids; vertex v >= parent->vertices.size() is the midpoint of the parent
  // edge vertex_parent_edge[v - parent->vertices.size()].
  std::shared_ptr<const FittedMesh> parent;
  std::vector<int> triangle_parent;
  std::vector<int> interface_edge_parent;
  std::vector<std::array<int, 2>> vertex_parent_edge;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  int level() const { return parent ? parent->level() + 1 : 0; }
  bool is_boundary_vertex(int v) const;
  double triangle_area(int t) const;
};

struct MeshOptions {
  double min_angle_deg = 20.0;
  std::size_t max_vertices = 4'000'000;
};

/// Conforming triangulation whose edges cover every interface segment.
/// Interface and boundary pieces are first split into equal chains of edges
/// no longer than h_target; triangles get longest edge <= sqrt(2) * h_target.
/// Throws MeshingError if a vertex lies within snap_tol of a non-incident
/// interface or if refinement does not terminate within the vertex budget.
FittedMesh triangulate(const MixedDomain& d, double h_target, const MeshOptions& options = {});

/// Regular (red) refinement: every triangle is split into four similar ones.
FittedMesh refine(const std::shared_ptr<const FittedMesh>& m);
FittedMesh refine(const FittedMesh& m);

/// Structured mesh of the unit square with n x n cells, each cut along the
/// diagonal from its lower-left corner. No interfaces, one region.
FittedMesh structured_unit_square(int n);

/// Plain-text export: a header line, then vertex, triangle and interface-edge tables.
void write_mesh(std::ostream& out, const FittedMesh& m);

} // namespace mdfe
