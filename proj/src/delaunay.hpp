#pragma once

// Conforming Delaunay refinement of a planar straight-line graph. Internal to
// the mesh module.

#include <array>
#include <cstddef>
#include <vector>

#include "mdfe/point.hpp"

namespace mdfe::detail {

struct PslgSegment {
  int v0;
  int v1;
  int tag;
};

struct RefineOptions {
  double max_edge = 1.0;           ///< longest admissible triangle edge
  double min_angle_deg = 20.0;     ///< quality floor (not enforced inside small input angles)
  std::size_t max_vertices = 4'000'000;
};

struct RefinedMesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles; ///< counterclockwise
  std::vector<PslgSegment> subsegments;      ///< every one is an edge of the triangulation
};

/// `points[0 .. num_input)` are PSLG corners; further points are Steiner
/// points already placed on segments (their segment tag in `point_tag`).
/// Segments are chains of consecutive points that are split further as needed.
RefinedMesh refine_pslg(std::vector<Point2> points, std::vector<int> point_tag, std::size_t num_input,
                        std::vector<PslgSegment> subsegments, std::vector<std::array<int, 2>> segment_ends,
                        const RefineOptions& options);

} // namespace mdfe::detail
