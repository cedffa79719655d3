#pragma once

#include <memory>
#include <random>
#include <vector>

#include "mdfe/geometry.hpp"
#include "mdfe/mesh.hpp"
#include "mdfe/space.hpp"

namespace testing {

inline mdfe::MixedDomain domain_of(const std::vector<mdfe::Segment2D>& segments)
{
  const auto square = mdfe::unit_square();
  return mdfe::build_arrangement(square, segments);
}

inline std::vector<mdfe::Segment2D> cross()
{
  return {{{0.5, 0.0}, {0.5, 1.0}}, {{0.0, 0.5}, {1.0, 0.5}}};
}

inline std::vector<mdfe::Segment2D> slit() { return {{{0.4, 0.5}, {0.6, 0.5}}}; }

// Three segments bounding the triangle (0.3,0.3), (0.7,0.3), (0.5,0.7).
inline std::vector<mdfe::Segment2D> enclosed_triangle()
{
  return {{{0.3, 0.3}, {0.7, 0.3}}, {{0.7, 0.3}, {0.5, 0.7}}, {{0.5, 0.7}, {0.3, 0.3}}};
}

struct MeshCase {
  mdfe::MixedDomain domain;
  std::shared_ptr<const mdfe::FittedMesh> mesh;
  mdfe::DofMap dofs;
};

inline MeshCase mesh_case(const std::vector<mdfe::Segment2D>& segments, double h)
{
  MeshCase c;
  c.domain = domain_of(segments);
  c.mesh = std::make_shared<const mdfe::FittedMesh>(mdfe::triangulate(c.domain, h));
  c.dofs = mdfe::build_dofmap(*c.mesh);
  return c;
}

inline int vertex_at(const mdfe::FittedMesh& m, mdfe::Point2 p, double tol = 1e-12)
{
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (mdfe::distance(m.vertices[v], p) < tol)
      return static_cast<int>(v);
  return -1;
}

} // namespace testing
