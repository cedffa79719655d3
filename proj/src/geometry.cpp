#include "mdfe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "mdfe/errors.hpp"

namespace mdfe {

namespace {

double signed_area(std::span<const Point2> poly)
{
  double a = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k)
    a += cross(poly[k], poly[(k + 1) % poly.size()]);
  return 0.5 * a;
}

/// Grid-hashed vertex pool that identifies points closer than `tol`.
class VertexPool {
public:
  explicit VertexPool(double tol) : tol_(tol), cell_(std::max(4.0 * tol, 1e-300)) {}

  int find_or_add(Point2 p)
  {
    const auto [cx, cy] = cell_of(p);
    int best = -1;
    double best_d = tol_;
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find(key(cx + dx, cy + dy));
        if (it == grid_.end())
          continue;
        for (int v : it->second) {
          const double d = distance(points_[v], p);
          if (d <= best_d) {
            best_d = d;
            best = v;
          }
        }
      }
    if (best >= 0)
      return best;
    points_.push_back(p);
    grid_[key(cx, cy)].push_back(static_cast<int>(points_.size()) - 1);
    return static_cast<int>(points_.size()) - 1;
  }

  const std::vector<Point2>& points() const { return points_; }

private:
  std::pair<long, long> cell_of(Point2 p) const
  {
    return {static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_))};
  }
  static std::uint64_t key(long x, long y)
  {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
           static_cast<std::uint32_t>(y);
  }

  double tol_;
  double cell_;
  std::vector<Point2> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x)
  {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

/// Winding number of p around the closed polygon `poly`.
int winding_number(Point2 p, const std::vector<Point2>& poly)
{
  int wn = 0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point2 a = poly[k], b = poly[(k + 1) % poly.size()];
    const double side = cross(b - a, p - a);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0)
        ++wn;
    }
    else if (b.y <= p.y && side < 0) {
      --wn;
    }
  }
  return wn;
}

struct Polygon {
  std::vector<Point2> corners;

  double distance_to_boundary(Point2 p, int* edge = nullptr) const
  {
    double best = INFINITY;
    for (std::size_t k = 0; k < corners.size(); ++k) {
      const double d = distance_to_segment(p, corners[k], corners[(k + 1) % corners.size()]);
      if (d < best) {
        best = d;
        if (edge)
          *edge = static_cast<int>(k);
      }
    }
    return best;
  }

  bool contains(Point2 p) const
  {
    for (std::size_t k = 0; k < corners.size(); ++k)
      if (cross(corners[(k + 1) % corners.size()] - corners[k], p - corners[k]) < 0.0)
        return false;
    return true;
  }

  Point2 project(Point2 p, int edge) const
  {
    const Point2 a = corners[edge], b = corners[(edge + 1) % corners.size()];
    const Point2 d = b - a;
    double t = dot(p - a, d) / dot(d, d);
    t = std::clamp(t, 0.0, 1.0);
    return a + t * d;
  }
};

Polygon validate_polygon(std::span<const Point2> input)
{
  Polygon poly;
  for (const Point2& p : input)
    if (poly.corners.empty() || !(poly.corners.back() == p))
      poly.corners.push_back(p);
  if (poly.corners.size() > 1 && poly.corners.front() == poly.corners.back())
    poly.corners.pop_back();
  if (poly.corners.size() < 3)
    throw GeometryError("domain polygon needs at least three distinct corners");
  if (signed_area(poly.corners) < 0.0)
    std::reverse(poly.corners.begin(), poly.corners.end());
  if (signed_area(poly.corners) <= 0.0)
    throw GeometryError("domain polygon has zero area");
  const std::size_t n = poly.corners.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 e0 = poly.corners[(k + 1) % n] - poly.corners[k];
    const Point2 e1 = poly.corners[(k + 2) % n] - poly.corners[(k + 1) % n];
    if (cross(e0, e1) < -1e-12 * norm(e0) * norm(e1))
      throw GeometryError("domain polygon is not convex at corner " + std::to_string((k + 1) % n));
  }
  return poly;
}

struct HalfEdgeGraph {
  // Edge e has half-edges 2e (v0 -> v1) and 2e + 1 (v1 -> v0).
  std::vector<std::array<int, 2>> edge_vertices;
  std::vector<CurvePiece> edge_piece;
  std::vector<int> next;

  int origin(int h) const { return edge_vertices[h / 2][h % 2]; }
  int target(int h) const { return edge_vertices[h / 2][1 - h % 2]; }
};

} // namespace

double MixedDomain::segment_length(int j) const
{
  const auto& s = interface_segments.at(j);
  return distance(vertices[s.v0], vertices[s.v1]);
}

double MixedDomain::polygon_area() const { return signed_area(polygon); }

double MixedDomain::diameter() const
{
  double d = 0.0;
  for (const auto& p : polygon)
    for (const auto& q : polygon)
      d = std::max(d, distance(p, q));
  return d;
}

std::vector<int> MixedDomain::cycle_vertices(const std::vector<CurvePiece>& cycle) const
{
  std::vector<int> out;
  out.reserve(cycle.size());
  for (const CurvePiece& piece : cycle) {
    int v0, v1;
    if (piece.kind == PieceKind::Interface) {
      v0 = interface_segments[piece.index].v0;
      v1 = interface_segments[piece.index].v1;
    }
    else {
      v0 = boundary_pieces[piece.index].v0;
      v1 = boundary_pieces[piece.index].v1;
    }
    out.push_back(piece.reversed ? v1 : v0);
  }
  return out;
}

std::vector<Point2> unit_square() { return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}; }

double default_snap_tolerance(std::span<const Point2> polygon)
{
  double d = 0.0;
  for (const auto& p : polygon)
    for (const auto& q : polygon)
      d = std::max(d, distance(p, q));
  return 1e-9 * d;
}

MixedDomain build_arrangement(std::span<const Point2> polygon, std::span<const Segment2D> segments)
{
  return build_arrangement(polygon, segments, default_snap_tolerance(polygon));
}

MixedDomain build_arrangement(std::span<const Point2> polygon_in, std::span<const Segment2D> segments,
                              double snap_tol)
{
  if (!(snap_tol > 0.0))
    throw GeometryError("snap tolerance must be positive");
  const Polygon poly = validate_polygon(polygon_in);
  const std::size_t ncorners = poly.corners.size();

  // Snap endpoints onto the boundary, orient each segment lexicographically and
  // sort, so that the result does not depend on the input order.
  struct Input {
    Point2 a, b;
    int index;
  };
  std::vector<Input> input;
  input.reserve(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    std::array<Point2, 2> ends = {segments[s].a, segments[s].b};
    for (Point2& p : ends) {
      int edge = -1;
      const double dist = poly.distance_to_boundary(p, &edge);
      if (!poly.contains(p) && dist > snap_tol)
        throw GeometryError("segment " + std::to_string(s) + " has an endpoint outside the domain",
                            static_cast<int>(s));
      if (dist <= snap_tol) {
        p = poly.project(p, edge);
        for (const Point2& c : poly.corners)
          if (distance(p, c) <= snap_tol)
            p = c;
      }
    }
    if (distance(ends[0], ends[1]) <= snap_tol)
      throw GeometryError("segment " + std::to_string(s) + " has zero length after snapping", static_cast<int>(s));
    if (ends[1] < ends[0])
      std::swap(ends[0], ends[1]);
    input.push_back({ends[0], ends[1], static_cast<int>(s)});
  }
  std::sort(input.begin(), input.end(), [](const Input& l, const Input& r) {
    return std::tie(l.a, l.b, l.index) < std::tie(r.a, r.b, r.index);
  });

  // Candidate vertices: corners first, then endpoints and pairwise
  // intersections in lexicographic order.
  std::vector<Point2> candidates;
  for (const Input& s : input) {
    candidates.push_back(s.a);
    candidates.push_back(s.b);
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    const Point2 a1 = input[i].a, d1 = input[i].b - input[i].a;
    const double len1 = norm(d1);
    for (std::size_t k = i + 1; k < input.size(); ++k) {
      const Point2 a2 = input[k].a, d2 = input[k].b - input[k].a;
      const double len2 = norm(d2);
      const double denom = cross(d1, d2);
      if (std::fabs(denom) <= 1e-12 * len1 * len2)
        continue; // parallel: overlaps are picked up by the vertex-on-segment pass
      const double t = cross(a2 - a1, d2) / denom;
      const double u = cross(a2 - a1, d1) / denom;
      const double tol_t = snap_tol / len1, tol_u = snap_tol / len2;
      if (t < -tol_t || t > 1.0 + tol_t || u < -tol_u || u > 1.0 + tol_u)
        continue;
      candidates.push_back(a1 + std::clamp(t, 0.0, 1.0) * d1);
    }
  }
  std::sort(candidates.begin(), candidates.end());

  VertexPool pool(snap_tol);
  for (const Point2& c : poly.corners)
    pool.find_or_add(c);
  for (const Point2& c : candidates)
    pool.find_or_add(c);
  const std::vector<Point2>& pts = pool.points();
  const int npool = static_cast<int>(pts.size());

  std::vector<bool> pool_on_boundary(npool);
  for (int v = 0; v < npool; ++v)
    pool_on_boundary[v] = poly.distance_to_boundary(pts[v]) <= snap_tol;

  // Split every segment at all pool vertices lying on it.
  std::map<std::pair<int, int>, bool> atomic; // unordered vertex pair -> present
  for (const Input& s : input) {
    const Point2 d = s.b - s.a;
    const double len2 = dot(d, d);
    std::vector<std::pair<double, int>> splits;
    for (int v = 0; v < npool; ++v)
      if (distance_to_segment(pts[v], s.a, s.b) <= snap_tol)
        splits.emplace_back(dot(pts[v] - s.a, d) / len2, v);
    std::sort(splits.begin(), splits.end());
    for (std::size_t k = 0; k + 1 < splits.size(); ++k) {
      const int u = splits[k].second, w = splits[k + 1].second;
      if (u == w)
        continue;
      // Pieces running along the domain boundary carry no interface.
      if (pool_on_boundary[u] && pool_on_boundary[w] &&
          poly.distance_to_boundary(midpoint(pts[u], pts[w])) <= snap_tol)
        continue;
      atomic[{std::min(u, w), std::max(u, w)}] = true;
    }
  }

  // Merge collinear chains through interior vertices of interface degree two.
  std::vector<std::vector<int>> adj(npool);
  for (const auto& [e, present] : atomic) {
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  auto pass_through = [&](int v) {
    if (pool_on_boundary[v] || adj[v].size() != 2)
      return false;
    const Point2 p = pts[adj[v][0]] - pts[v], q = pts[adj[v][1]] - pts[v];
    return dot(p, q) < 0.0 && std::fabs(cross(p, q)) <= 1e-9 * norm(p) * norm(q);
  };
  std::vector<std::pair<int, int>> merged;
  std::map<std::pair<int, int>, bool> used;
  for (int v = 0; v < npool; ++v) {
    if (adj[v].empty() || pass_through(v))
      continue;
    for (int first : adj[v]) {
      if (used.count({std::min(v, first), std::max(v, first)}))
        continue;
      int prev = v, cur = first;
      used[{std::min(prev, cur), std::max(prev, cur)}] = true;
      while (pass_through(cur)) {
        const int nxt = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
        prev = cur;
        cur = nxt;
        used[{std::min(prev, cur), std::max(prev, cur)}] = true;
      }
      merged.emplace_back(v, cur);
    }
  }

  // Keep corners, interface endpoints; renumber lexicographically.
  std::vector<bool> keep(npool, false);
  for (int c = 0; c < static_cast<int>(ncorners); ++c)
    keep[c] = true;
  for (const auto& [u, w] : merged)
    keep[u] = keep[w] = true;
  std::vector<int> order;
  for (int v = 0; v < npool; ++v)
    if (keep[v])
      order.push_back(v);
  std::sort(order.begin(), order.end(), [&](int l, int r) { return pts[l] < pts[r]; });
  std::vector<int> remap(npool, -1);
  MixedDomain d;
  d.snap_tol = snap_tol;
  d.polygon = poly.corners;
  for (int v : order) {
    remap[v] = static_cast<int>(d.vertices.size());
    d.vertices.push_back(pts[v]);
    d.on_boundary.push_back(pool_on_boundary[v]);
  }
  for (auto& [u, w] : merged) {
    u = remap[u];
    w = remap[w];
    if (w < u)
      std::swap(u, w);
  }
  std::sort(merged.begin(), merged.end());
  for (const auto& [u, w] : merged)
    d.interface_segments.push_back({u, w, -1, -1});

  // Boundary pieces, counterclockwise from corner 0.
  for (std::size_t k = 0; k < ncorners; ++k) {
    const Point2 a = poly.corners[k], b = poly.corners[(k + 1) % ncorners];
    const Point2 e = b - a;
    std::vector<std::pair<double, int>> on_edge;
    for (int v = 0; v < static_cast<int>(d.vertices.size()); ++v)
      if (d.on_boundary[v] && distance_to_segment(d.vertices[v], a, b) <= snap_tol)
        on_edge.emplace_back(dot(d.vertices[v] - a, e) / dot(e, e), v);
    std::sort(on_edge.begin(), on_edge.end());
    for (std::size_t q = 0; q + 1 < on_edge.size(); ++q)
      d.boundary_pieces.push_back({on_edge[q].second, on_edge[q + 1].second, -1});
  }

  // Half-edge structure over interface segments followed by boundary pieces.
  HalfEdgeGraph g;
  for (std::size_t j = 0; j < d.interface_segments.size(); ++j) {
    g.edge_vertices.push_back({d.interface_segments[j].v0, d.interface_segments[j].v1});
    g.edge_piece.push_back({PieceKind::Interface, static_cast<int>(j), false});
  }
  const int first_boundary_edge = static_cast<int>(g.edge_vertices.size());
  for (std::size_t b = 0; b < d.boundary_pieces.size(); ++b) {
    g.edge_vertices.push_back({d.boundary_pieces[b].v0, d.boundary_pieces[b].v1});
    g.edge_piece.push_back({PieceKind::Boundary, static_cast<int>(b), false});
  }
  const int nhalf = 2 * static_cast<int>(g.edge_vertices.size());
  const int nv = static_cast<int>(d.vertices.size());
  std::vector<std::vector<int>> outgoing(nv);
  for (int h = 0; h < nhalf; ++h)
    outgoing[g.origin(h)].push_back(h);
  std::vector<int> slot(nhalf);
  for (int v = 0; v < nv; ++v) {
    auto& out = outgoing[v];
    std::vector<double> angle(out.size());
    for (std::size_t q = 0; q < out.size(); ++q) {
      const Point2 dir = d.vertices[g.target(out[q])] - d.vertices[v];
      angle[q] = std::atan2(dir.y, dir.x);
    }
    std::vector<std::size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return angle[l] < angle[r]; });
    std::vector<int> sorted;
    for (std::size_t q : idx)
      sorted.push_back(out[q]);
    out = sorted;
    for (std::size_t q = 0; q < out.size(); ++q)
      slot[out[q]] = static_cast<int>(q);
  }
  g.next.assign(nhalf, -1);
  for (int h = 0; h < nhalf; ++h) {
    const int twin = h ^ 1;
    const int v = g.target(h);
    const auto& out = outgoing[v];
    const int k = slot[twin];
    g.next[h] = out[(k + static_cast<int>(out.size()) - 1) % out.size()];
  }

  std::vector<int> cycle_of(nhalf, -1);
  std::vector<std::vector<int>> cycles;
  for (int h = 0; h < nhalf; ++h) {
    if (cycle_of[h] >= 0)
      continue;
    std::vector<int> cyc;
    for (int c = h; cycle_of[c] < 0; c = g.next[c]) {
      cycle_of[c] = static_cast<int>(cycles.size());
      cyc.push_back(c);
    }
    cycles.push_back(std::move(cyc));
  }
  const int ncycles = static_cast<int>(cycles.size());
  std::vector<double> cycle_area(ncycles);
  std::vector<std::vector<Point2>> cycle_poly(ncycles);
  for (int c = 0; c < ncycles; ++c) {
    for (int h : cycles[c])
      cycle_poly[c].push_back(d.vertices[g.origin(h)]);
    cycle_area[c] = signed_area(cycle_poly[c]);
  }

  UnionFind comps(nv);
  for (const auto& ev : g.edge_vertices)
    comps.unite(ev[0], ev[1]);
  const int boundary_comp = comps.find(d.boundary_pieces.front().v0);
  const int unbounded_cycle = cycle_of[2 * first_boundary_edge + 1];

  // Outer (hole) cycle of each component not attached to the boundary.
  std::map<int, int> comp_outer;
  for (int c = 0; c < ncycles; ++c) {
    const int comp = comps.find(g.origin(cycles[c].front()));
    if (comp == boundary_comp)
      continue;
    auto it = comp_outer.find(comp);
    if (it == comp_outer.end() || cycle_area[c] < cycle_area[it->second])
      comp_outer[comp] = c;
  }
  std::vector<bool> is_hole(ncycles, false);
  for (const auto& [comp, c] : comp_outer)
    is_hole[c] = true;

  std::vector<int> face_cycles;
  for (int c = 0; c < ncycles; ++c)
    if (c != unbounded_cycle && !is_hole[c])
      face_cycles.push_back(c);
  auto cycle_key = [&](int c) {
    std::pair<int, int> best{nv, nv};
    for (int h : cycles[c])
      best = std::min(best, std::pair<int, int>{g.origin(h), g.target(h)});
    return best;
  };
  std::sort(face_cycles.begin(), face_cycles.end(),
            [&](int l, int r) { return cycle_key(l) < cycle_key(r); });

  std::vector<int> region_of_cycle(ncycles, -1);
  d.bulk_regions.resize(face_cycles.size());
  for (std::size_t i = 0; i < face_cycles.size(); ++i) {
    region_of_cycle[face_cycles[i]] = static_cast<int>(i);
    d.bulk_regions[i].area = cycle_area[face_cycles[i]];
  }
  std::vector<int> hole_cycles;
  for (int c = 0; c < ncycles; ++c)
    if (is_hole[c])
      hole_cycles.push_back(c);
  std::sort(hole_cycles.begin(), hole_cycles.end(), [&](int l, int r) { return cycle_key(l) < cycle_key(r); });
  for (int c : hole_cycles) {
    const Point2 probe = d.vertices[g.origin(cycles[c].front())];
    const int comp = comps.find(g.origin(cycles[c].front()));
    int best = -1;
    for (int f : face_cycles) {
      if (comps.find(g.origin(cycles[f].front())) == comp || winding_number(probe, cycle_poly[f]) == 0)
        continue;
      if (best < 0 || cycle_area[f] < cycle_area[best])
        best = f;
    }
    if (best < 0)
      throw GeometryError("interface cluster is not contained in any bulk region");
    region_of_cycle[c] = region_of_cycle[best];
    d.bulk_regions[region_of_cycle[best]].area += cycle_area[c];
  }

  auto to_pieces = [&](int c) {
    std::vector<CurvePiece> out;
    for (int h : cycles[c]) {
      CurvePiece p = g.edge_piece[h / 2];
      p.reversed = (h % 2) == 1;
      out.push_back(p);
    }
    return out;
  };
  for (std::size_t i = 0; i < face_cycles.size(); ++i)
    d.bulk_regions[i].cycles.push_back(to_pieces(face_cycles[i]));
  for (int c : hole_cycles)
    d.bulk_regions[region_of_cycle[c]].cycles.push_back(to_pieces(c));

  for (std::size_t j = 0; j < d.interface_segments.size(); ++j) {
    auto& s = d.interface_segments[j];
    s.left_region = region_of_cycle[cycle_of[2 * j]];
    s.right_region = region_of_cycle[cycle_of[2 * j + 1]];
    d.E0.emplace_back(s.left_region, static_cast<int>(j));
    if (s.right_region != s.left_region)
      d.E0.emplace_back(s.right_region, static_cast<int>(j));
  }
  std::sort(d.E0.begin(), d.E0.end());
  for (std::size_t b = 0; b < d.boundary_pieces.size(); ++b) {
    const int region = region_of_cycle[cycle_of[2 * (first_boundary_edge + b)]];
    d.boundary_pieces[b].region = region;
    d.bulk_regions[region].touches_boundary = true;
  }

  std::vector<int> iface_degree(nv, 0);
  for (const auto& s : d.interface_segments) {
    ++iface_degree[s.v0];
    ++iface_degree[s.v1];
  }
  std::vector<int> junction_index(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (d.on_boundary[v])
      continue;
    if (iface_degree[v] >= 2) {
      junction_index[v] = static_cast<int>(d.junction_points.size());
      d.junction_points.push_back(v);
    }
    else if (iface_degree[v] == 1) {
      d.free_tips.push_back(v);
    }
  }
  for (std::size_t j = 0; j < d.interface_segments.size(); ++j)
    for (int v : {d.interface_segments[j].v0, d.interface_segments[j].v1})
      if (junction_index[v] >= 0)
        d.E1.emplace_back(static_cast<int>(j), junction_index[v]);
  std::sort(d.E1.begin(), d.E1.end());
  return d;
}

std::vector<int> boundary_touching_regions(const MixedDomain& d)
{
  std::vector<int> out;
  for (std::size_t i = 0; i < d.bulk_regions.size(); ++i)
    if (d.bulk_regions[i].touches_boundary)
      out.push_back(static_cast<int>(i));
  return out;
}

std::vector<Segment2D> read_segments(std::istream& in)
{
  std::vector<Segment2D> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ss(line);
    Segment2D s;
    if (!(ss >> s.a.x)) {
      continue;
    }
    if (!(ss >> s.a.y >> s.b.x >> s.b.y))
      throw GeometryError("malformed segment on line " + std::to_string(lineno));
    std::string rest;
    if (ss >> rest)
      throw GeometryError("trailing data on line " + std::to_string(lineno));
    out.push_back(s);
  }
  return out;
}

void write_segments(std::ostream& out, std::span<const Segment2D> segments)
{
  out.precision(17);
  out << "# x1 y1 x2 y2\n";
  for (const auto& s : segments)
    out << s.a.x << ' ' << s.a.y << ' ' << s.b.x << ' ' << s.b.y << '\n';
}

} // namespace mdfe
