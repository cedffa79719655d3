#pragma once

/** @file geometry.hpp
    @brief Planar arrangement of straight interfaces inside a convex polygon.

    The arrangement splits the input segments at every intersection and
    classifies the pieces of the resulting planar graph into bulk regions
    (faces), interface segments (maximal straight edges between junctions,
    tips or boundary points) and junction points.
*/

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mdfe/point.hpp"

namespace mdfe {

struct Segment2D {
  Point2 a;
  Point2 b;
};

enum class PieceKind { Interface, Boundary };

/// Oriented reference to a piece of a region boundary. `reversed` means the
/// piece is traversed from its v1 to its v0.
struct CurvePiece {
  PieceKind kind;
  int index;
  bool reversed;
};

struct BulkRegion {
  /// Boundary walks with the region on the left. cycles[0] is the outer
  /// boundary; further entries are holes (walks around enclosed interface
  /// clusters, possibly of zero area for tree-like clusters).
  std::vector<std::vector<CurvePiece>> cycles;
  double area = 0.0;
  bool touches_boundary = false;
};

struct InterfaceSegment {
  int v0;
  int v1;
  int left_region;  ///< region on the left of v0 -> v1
  int right_region; ///< region on the right of v0 -> v1 (equal to left for slits)
};

/// Piece of the polygon boundary between consecutive arrangement vertices,
/// oriented counterclockwise.
struct BoundaryPiece {
  int v0;
  int v1;
  int region;
};

struct MixedDomain {
  std::vector<Point2> polygon; ///< counterclockwise, convex
  std::vector<Point2> vertices;
  std::vector<bool> on_boundary; ///< per vertex
  std::vector<InterfaceSegment> interface_segments;
  std::vector<BoundaryPiece> boundary_pieces;
  std::vector<BulkRegion> bulk_regions;
  std::vector<int> junction_points;      ///< vertex ids of interior points where >= 2 segments meet
  std::vector<std::pair<int, int>> E0;   ///< (region i, segment j) adjacency
  std::vector<std::pair<int, int>> E1;   ///< (segment j, junction k) adjacency, k indexes junction_points
  std::vector<int> free_tips;            ///< vertex ids of interface endpoints strictly inside a region
  double snap_tol = 0.0;

  std::size_t num_regions() const { return bulk_regions.size(); }
  std::size_t num_segments() const { return interface_segments.size(); }
  double segment_length(int j) const;
  double polygon_area() const;
  double diameter() const;
  /// Vertex ids along a region boundary cycle, in walk order.
  std::vector<int> cycle_vertices(const std::vector<CurvePiece>& cycle) const;
};

std::vector<Point2> unit_square();

/// Default snapping tolerance: 1e-9 times the polygon diameter.
double default_snap_tolerance(std::span<const Point2> polygon);

/// Builds the arrangement. Endpoints within snap_tol of each other or of the
/// polygon boundary are identified; collinear overlaps are merged.
/// Throws GeometryError for a non-convex polygon, an endpoint outside the
/// polygon, or a segment that degenerates to a point after snapping.
MixedDomain build_arrangement(std::span<const Point2> polygon, std::span<const Segment2D> segments,
                              double snap_tol);
MixedDomain build_arrangement(std::span<const Point2> polygon, std::span<const Segment2D> segments);

/// Regions whose boundary shares a piece of positive length with the polygon.
std::vector<int> boundary_touching_regions(const MixedDomain& d);

/// Reads `x1 y1 x2 y2` per line; `#` starts a comment.
std::vector<Segment2D> read_segments(std::istream& in);
void write_segments(std::ostream& out, std::span<const Segment2D> segments);

} // namespace mdfe
