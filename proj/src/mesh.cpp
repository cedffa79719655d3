#include "mdfe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <unordered_map>

#include "delaunay.hpp"
#include "mdfe/errors.hpp"

namespace mdfe {

namespace {

std::uint64_t edge_key(int a, int b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::string where(Point2 p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

void check_separation(const MixedDomain& d)
{
  for (std::size_t v = 0; v < d.vertices.size(); ++v)
    for (const auto& s : d.interface_segments) {
      if (s.v0 == static_cast<int>(v) || s.v1 == static_cast<int>(v))
        continue;
      if (distance_to_segment(d.vertices[v], d.vertices[s.v0], d.vertices[s.v1]) < d.snap_tol)
        throw MeshingError("vertex " + where(d.vertices[v]) + " lies within snap tolerance of interface " +
                           where(d.vertices[s.v0]) + " - " + where(d.vertices[s.v1]) + " without touching it");
    }
}

void finish_metrics(FittedMesh& m)
{
  m.h = 0.0;
  double cos_max = -1.0;
  for (const auto& t : m.triangles) {
    std::array<double, 3> l2;
    for (int i = 0; i < 3; ++i) {
      const Point2 e = m.vertices[t[(i + 2) % 3]] - m.vertices[t[(i + 1) % 3]];
      l2[i] = dot(e, e);
    }
    m.h = std::max(m.h, std::sqrt(*std::max_element(l2.begin(), l2.end())));
    for (int i = 0; i < 3; ++i) {
      const double a2 = l2[(i + 1) % 3], b2 = l2[(i + 2) % 3], c2 = l2[i];
      cos_max = std::max(cos_max, (a2 + b2 - c2) / (2.0 * std::sqrt(a2 * b2)));
    }
  }
  m.min_angle_deg = std::acos(std::clamp(cos_max, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

void collect_boundary(FittedMesh& m)
{
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& t : m.triangles)
    for (int i = 0; i < 3; ++i)
      ++count[edge_key(t[i], t[(i + 1) % 3])];
  m.boundary_edges.clear();
  for (const auto& t : m.triangles)
    for (int i = 0; i < 3; ++i)
      if (count[edge_key(t[i], t[(i + 1) % 3])] == 1)
        m.boundary_edges.push_back({t[i], t[(i + 1) % 3]});
  std::sort(m.boundary_edges.begin(), m.boundary_edges.end());
  m.boundary_vertices.clear();
  for (const auto& e : m.boundary_edges) {
    m.boundary_vertices.push_back(e[0]);
    m.boundary_vertices.push_back(e[1]);
  }
  std::sort(m.boundary_vertices.begin(), m.boundary_vertices.end());
  m.boundary_vertices.erase(std::unique(m.boundary_vertices.begin(), m.boundary_vertices.end()),
                            m.boundary_vertices.end());
}

} // namespace

bool FittedMesh::is_boundary_vertex(int v) const
{
  return std::binary_search(boundary_vertices.begin(), boundary_vertices.end(), v);
}

double FittedMesh::triangle_area(int t) const
{
  const auto& tri = triangles[t];
  return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
}

FittedMesh triangulate(const MixedDomain& d, double h_target, const MeshOptions& options)
{
  if (!(h_target > 0.0))
    throw MeshingError("target mesh size must be positive");
  check_separation(d);

  const int nj = static_cast<int>(d.interface_segments.size());
  std::vector<Point2> points = d.vertices;
  std::vector<int> point_tag(points.size(), -1);
  std::vector<detail::PslgSegment> subsegments;
  std::vector<std::array<int, 2>> segment_ends;

  auto add_chain = [&](int v0, int v1, int tag) {
    const Point2 a = d.vertices[v0], b = d.vertices[v1];
    const int pieces = std::max(1, static_cast<int>(std::ceil(distance(a, b) / h_target - 1e-9)));
    int prev = v0;
    for (int k = 1; k <= pieces; ++k) {
      int cur = v1;
      if (k < pieces) {
        points.push_back(a + (static_cast<double>(k) / pieces) * (b - a));
        point_tag.push_back(tag);
        cur = static_cast<int>(points.size()) - 1;
      }
      subsegments.push_back({prev, cur, tag});
      prev = cur;
    }
    segment_ends.push_back({v0, v1});
  };
  for (int j = 0; j < nj; ++j)
    add_chain(d.interface_segments[j].v0, d.interface_segments[j].v1, j);
  for (std::size_t b = 0; b < d.boundary_pieces.size(); ++b)
    add_chain(d.boundary_pieces[b].v0, d.boundary_pieces[b].v1, nj + static_cast<int>(b));

  detail::RefineOptions ropt;
  ropt.max_edge = std::sqrt(2.0) * h_target * (1.0 + 1e-9);
  ropt.min_angle_deg = options.min_angle_deg;
  ropt.max_vertices = options.max_vertices;
  detail::RefinedMesh raw = detail::refine_pslg(std::move(points), std::move(point_tag), d.vertices.size(),
                                                std::move(subsegments), std::move(segment_ends), ropt);

  FittedMesh m;
  m.vertices = std::move(raw.vertices);
  m.triangles = std::move(raw.triangles);
  m.num_regions = d.bulk_regions.size();

  // Edge -> adjacent (triangle, local edge) pairs.
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> edge_tris;
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t)
    for (int i = 0; i < 3; ++i)
      edge_tris[edge_key(m.triangles[t][i], m.triangles[t][(i + 1) % 3])].push_back({t, i});
  std::unordered_map<std::uint64_t, int> subseg_tag;
  for (const auto& s : raw.subsegments) {
    if (!edge_tris.count(edge_key(s.v0, s.v1)))
      throw MeshingError("constrained edge near " + where(m.vertices[s.v0]) + " missing from triangulation");
    subseg_tag[edge_key(s.v0, s.v1)] = s.tag;
  }

  // Flood fill across unconstrained edges; tag each component with the
  // arrangement region seen on the left of a constrained edge.
  const int nt = static_cast<int>(m.triangles.size());
  m.triangle_region.assign(nt, -1);
  std::vector<int> stack;
  for (int seed = 0; seed < nt; ++seed) {
    if (m.triangle_region[seed] >= 0)
      continue;
    std::vector<int> component{seed};
    m.triangle_region[seed] = -2;
    int region = -1;
    for (std::size_t q = 0; q < component.size(); ++q) {
      const int t = component[q];
      for (int i = 0; i < 3; ++i) {
        const int a = m.triangles[t][i], b = m.triangles[t][(i + 1) % 3];
        const auto key = edge_key(a, b);
        if (auto st = subseg_tag.find(key); st != subseg_tag.end()) {
          int r;
          if (st->second < nj) {
            const auto& seg = d.interface_segments[st->second];
            const bool along = dot(m.vertices[b] - m.vertices[a], d.vertices[seg.v1] - d.vertices[seg.v0]) > 0.0;
            r = along ? seg.left_region : seg.right_region;
          }
          else {
            r = d.boundary_pieces[st->second - nj].region;
          }
          if (region >= 0 && region != r)
            throw MeshingError("triangle near " + where(m.vertices[a]) + " straddles two bulk regions");
          region = r;
          continue;
        }
        for (const auto& [n, ni] : edge_tris[key]) {
          (void)ni;
          if (n != t && m.triangle_region[n] == -1) {
            m.triangle_region[n] = -2;
            component.push_back(n);
          }
        }
      }
    }
    if (region < 0)
      throw MeshingError("mesh component without constrained boundary");
    for (int t : component)
      m.triangle_region[t] = region;
  }

  for (const auto& s : raw.subsegments) {
    if (s.tag >= nj)
      continue;
    const auto& seg = d.interface_segments[s.tag];
    std::array<int, 2> e{s.v0, s.v1};
    if (dot(m.vertices[e[1]] - m.vertices[e[0]], d.vertices[seg.v1] - d.vertices[seg.v0]) < 0.0)
      std::swap(e[0], e[1]);
    m.interface_edges.push_back(e);
    m.interface_edge_segment.push_back(s.tag);
  }
  // Order interface edges along their segment.
  std::vector<std::size_t> order(m.interface_edges.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    order[k] = k;
  auto param = [&](std::size_t k) {
    const auto& seg = d.interface_segments[m.interface_edge_segment[k]];
    return dot(m.vertices[m.interface_edges[k][0]] - d.vertices[seg.v0], d.vertices[seg.v1] - d.vertices[seg.v0]);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (m.interface_edge_segment[l] != m.interface_edge_segment[r])
      return m.interface_edge_segment[l] < m.interface_edge_segment[r];
    return param(l) < param(r);
  });
  std::vector<std::array<int, 2>> edges;
  std::vector<int> segs;
  for (std::size_t k : order) {
    edges.push_back(m.interface_edges[k]);
    segs.push_back(m.interface_edge_segment[k]);
  }
  m.interface_edges = std::move(edges);
  m.interface_edge_segment = std::move(segs);

  collect_boundary(m);
  finish_metrics(m);
  return m;
}

FittedMesh refine(const FittedMesh& m) { return refine(std::make_shared<const FittedMesh>(m)); }

FittedMesh refine(const std::shared_ptr<const FittedMesh>& parent)
{
  const FittedMesh& m = *parent;
  FittedMesh f;
  f.parent = parent;
  f.vertices = m.vertices;
  f.num_regions = m.num_regions;
  std::unordered_map<std::uint64_t, int> mid;
  mid.reserve(m.triangles.size() * 2);
  auto midpoint_of = [&](int a, int b) {
    const auto key = edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end())
      return it->second;
    const int v = static_cast<int>(f.vertices.size());
    f.vertices.push_back(midpoint(m.vertices[a], m.vertices[b]));
    f.vertex_parent_edge.push_back({std::min(a, b), std::max(a, b)});
    mid.emplace(key, v);
    return v;
  };
  f.triangles.reserve(4 * m.triangles.size());
  for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
    const auto [a, b, c] = m.triangles[t];
    const int ab = midpoint_of(a, b), bc = midpoint_of(b, c), ca = midpoint_of(c, a);
    f.triangles.push_back({a, ab, ca});
    f.triangles.push_back({ab, b, bc});
    f.triangles.push_back({ca, bc, c});
    f.triangles.push_back({ab, bc, ca});
    for (int k = 0; k < 4; ++k) {
      f.triangle_region.push_back(m.triangle_region[t]);
      f.triangle_parent.push_back(t);
    }
  }
  for (int e = 0; e < static_cast<int>(m.interface_edges.size()); ++e) {
    const auto [a, b] = m.interface_edges[e];
    const int mv = mid.at(edge_key(a, b));
    f.interface_edges.push_back({a, mv});
    f.interface_edges.push_back({mv, b});
    for (int k = 0; k < 2; ++k) {
      f.interface_edge_segment.push_back(m.interface_edge_segment[e]);
      f.interface_edge_parent.push_back(e);
    }
  }
  for (const auto& [a, b] : m.boundary_edges) {
    const int mv = mid.at(edge_key(a, b));
    f.boundary_edges.push_back({a, mv});
    f.boundary_edges.push_back({mv, b});
  }
  std::sort(f.boundary_edges.begin(), f.boundary_edges.end());
  f.boundary_vertices = m.boundary_vertices;
  for (const auto& [a, b] : m.boundary_edges)
    f.boundary_vertices.push_back(mid.at(edge_key(a, b)));
  std::sort(f.boundary_vertices.begin(), f.boundary_vertices.end());
  f.h = 0.5 * m.h;
  f.min_angle_deg = m.min_angle_deg;
  return f;
}

FittedMesh structured_unit_square(int n)
{
  FittedMesh m;
  m.num_regions = 1;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  m.triangle_region.assign(m.triangles.size(), 0);
  collect_boundary(m);
  finish_metrics(m);
  return m;
}

void write_mesh(std::ostream& out, const FittedMesh& m)
{
  out.precision(17);
  out << "# mdfe mesh: vertices (x y), triangles (v0 v1 v2 region), interface_edges (v0 v1 segment); h="
      << m.h << " level=" << m.level() << '\n';
  out << "vertices " << m.vertices.size() << '\n';
  for (const auto& p : m.vertices)
    out << p.x << ' ' << p.y << '\n';
  out << "triangles " << m.triangles.size() << '\n';
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    out << m.triangles[t][0] << ' ' << m.triangles[t][1] << ' ' << m.triangles[t][2] << ' ' << m.triangle_region[t]
        << '\n';
  out << "interface_edges " << m.interface_edges.size() << '\n';
  for (std::size_t e = 0; e < m.interface_edges.size(); ++e)
    out << m.interface_edges[e][0] << ' ' << m.interface_edges[e][1] << ' ' << m.interface_edge_segment[e] << '\n';
}

} // namespace mdfe
