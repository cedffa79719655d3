#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

#include "mdfe/errors.hpp"
#include "mdfe/predicates.hpp"

namespace mdfe::detail {

namespace {

using predicates::incircle;
using predicates::orient2d;

std::uint64_t edge_key(int a, int b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

Point2 circumcenter(Point2 a, Point2 b, Point2 c)
{
  const Point2 ab = b - a, ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
  return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
}

class Refiner {
public:
  Refiner(std::vector<Point2> points, std::vector<int> point_tag, std::size_t num_input,
          std::vector<std::array<int, 2>> segment_ends, const RefineOptions& opt)
      : opt_(opt), segment_ends_(std::move(segment_ends))
  {
    // Super triangle first so that every real vertex is strictly interior.
    Point2 lo = points.front(), hi = points.front();
    for (const Point2& p : points) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const Point2 c = midpoint(lo, hi);
    const double r = std::max(hi.x - lo.x, hi.y - lo.y) * 1e4 + 1.0;
    pts_ = {{c.x - 2 * r, c.y - r}, {c.x + 2 * r, c.y - r}, {c.x, c.y + 2 * r}};
    tag_ = {-1, -1, -1};
    input_ = {0, 0, 0};
    tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
    vtri_ = {0, 0, 0};
    for (std::size_t k = 0; k < points.size(); ++k) {
      const int v = insert_point(points[k], point_tag[k], k < num_input);
      if (v != static_cast<int>(k) + 3)
        throw MeshingError("duplicate mesh vertex near (" + std::to_string(points[k].x) + ", " +
                           std::to_string(points[k].y) + ")");
    }
  }

  void add_subsegment(int a, int b, int tag)
  {
    subseg_[edge_key(a, b)] = tag;
    encroach_queue_.push_back({a, b});
  }

  void refine()
  {
    split_encroached();
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (tris_[t].alive)
        quality_queue_.push_back({static_cast<int>(t), tris_[t].v});
    while (!quality_queue_.empty()) {
      const auto [t, v] = quality_queue_.front();
      quality_queue_.pop_front();
      if (!tris_[t].alive || tris_[t].v != v || !is_bad(t))
        continue;
      refine_triangle(t);
      split_encroached();
    }
  }

  RefinedMesh result() const
  {
    RefinedMesh out;
    std::vector<int> remap(pts_.size(), -1);
    for (std::size_t v = 3; v < pts_.size(); ++v) {
      remap[v] = static_cast<int>(out.vertices.size());
      out.vertices.push_back(pts_[v]);
    }
    for (const Tri& t : tris_) {
      if (!t.alive || t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3)
        continue;
      out.triangles.push_back({remap[t.v[0]], remap[t.v[1]], remap[t.v[2]]});
    }
    for (const auto& [key, tag] : subseg_) {
      const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
      out.subsegments.push_back({remap[a], remap[b], tag});
    }
    std::sort(out.subsegments.begin(), out.subsegments.end(), [](const PslgSegment& l, const PslgSegment& r) {
      return std::tie(l.v0, l.v1) < std::tie(r.v0, r.v1);
    });
    return out;
  }

private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb; // nb[i] is across the edge opposite v[i]
    bool alive;
  };
  struct QueuedTri {
    int t;
    std::array<int, 3> v;
  };

  int new_tri(const std::array<int, 3>& v)
  {
    int t;
    if (!free_.empty()) {
      t = free_.back();
      free_.pop_back();
      tris_[t] = {v, {-1, -1, -1}, true};
    }
    else {
      t = static_cast<int>(tris_.size());
      tris_.push_back({v, {-1, -1, -1}, true});
    }
    return t;
  }

  bool is_super(int v) const { return v < 3; }

  int locate(Point2 p) const
  {
    int t = last_;
    if (t < 0 || !tris_[t].alive)
      for (t = 0; !tris_[t].alive; ++t) {
      }
    for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
      const Tri& tri = tris_[t];
      int next = -2;
      for (int k = 0; k < 3; ++k) {
        const int i = (k + static_cast<int>(steps)) % 3;
        if (orient2d(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) < 0) {
          next = tri.nb[i];
          break;
        }
      }
      if (next == -2)
        return t;
      if (next == -1)
        return -1; // outside the super triangle
      t = next;
    }
    for (std::size_t s = 0; s < tris_.size(); ++s) {
      const Tri& tri = tris_[s];
      if (tri.alive && orient2d(pts_[tri.v[0]], pts_[tri.v[1]], p) >= 0 &&
          orient2d(pts_[tri.v[1]], pts_[tri.v[2]], p) >= 0 && orient2d(pts_[tri.v[2]], pts_[tri.v[0]], p) >= 0)
        return static_cast<int>(s);
    }
    return -1;
  }

  bool in_circumcircle(int t, Point2 p) const
  {
    const Tri& tri = tris_[t];
    return incircle(pts_[tri.v[0]], pts_[tri.v[1]], pts_[tri.v[2]], p) > 0;
  }

  void cavity(int start, Point2 p, std::vector<int>& cav) const
  {
    cav.clear();
    ++generation_;
    if (stamp_.size() < tris_.size())
      stamp_.resize(tris_.size() + tris_.size() / 2 + 16, 0);
    cav.push_back(start);
    stamp_[start] = generation_;
    for (std::size_t q = 0; q < cav.size(); ++q) {
      const Tri& tri = tris_[cav[q]];
      for (int i = 0; i < 3; ++i) {
        const int n = tri.nb[i];
        if (n < 0 || stamp_[n] == generation_)
          continue;
        if (in_circumcircle(n, p)) {
          stamp_[n] = generation_;
          cav.push_back(n);
        }
      }
    }
  }

  /// Bowyer-Watson insertion. Returns the new vertex id.
  int insert_point(Point2 p, int tag, bool input)
  {
    const int t0 = locate(p);
    if (t0 < 0)
      throw MeshingError("point outside the triangulation");
    for (int v : tris_[t0].v)
      if (pts_[v] == p)
        return v;
    std::vector<int> cav;
    cavity(t0, p, cav);

    const int pv = static_cast<int>(pts_.size());
    pts_.push_back(p);
    tag_.push_back(tag);
    input_.push_back(input ? 1 : 0);
    vtri_.push_back(-1);

    struct Boundary {
      int a, b, outer;
    };
    std::vector<Boundary> boundary;
    for (int t : cav) {
      const Tri& tri = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int n = tri.nb[i];
        const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
        if (n >= 0 && stamp_[n] == generation_) {
          // Interior cavity edge disappears; a subsegment here is now missing.
          if (a < b && subseg_.count(edge_key(a, b)))
            encroach_queue_.push_back({a, b});
          continue;
        }
        if (orient2d(pts_[a], pts_[b], p) <= 0)
          throw MeshingError("non-star-shaped insertion cavity at (" + std::to_string(p.x) + ", " +
                             std::to_string(p.y) + ")");
        boundary.push_back({a, b, n});
      }
    }
    for (int t : cav) {
      tris_[t].alive = false;
      free_.push_back(t);
    }
    std::unordered_map<int, int> starts, ends;
    std::vector<int> created;
    created.reserve(boundary.size());
    for (const Boundary& e : boundary) {
      const int t = new_tri({e.a, e.b, pv});
      created.push_back(t);
      tris_[t].nb[2] = e.outer;
      if (e.outer >= 0) {
        Tri& o = tris_[e.outer];
        for (int i = 0; i < 3; ++i)
          if (o.v[(i + 1) % 3] == e.b && o.v[(i + 2) % 3] == e.a)
            o.nb[i] = t;
      }
      starts[e.a] = t;
      ends[e.b] = t;
      vtri_[e.a] = t;
      vtri_[e.b] = t;
    }
    vtri_[pv] = created.front();
    for (int t : created) {
      Tri& tri = tris_[t];
      tri.nb[0] = starts.at(tri.v[1]); // across edge (b, p)
      tri.nb[1] = ends.at(tri.v[0]);   // across edge (p, a)
    }
    last_ = created.front();
    for (int t : created) {
      quality_queue_.push_back({t, tris_[t].v});
      const int a = tris_[t].v[0], b = tris_[t].v[1];
      if (subseg_.count(edge_key(a, b)))
        encroach_queue_.push_back({a, b});
    }
    return pv;
  }

  /// Triangle containing the directed or reversed edge (a, b), and the index
  /// of the vertex opposite to it; false if (a, b) is not an edge.
  bool find_edge(int a, int b, int& tri_out, int& opp_out) const
  {
    const int start = vtri_[a];
    int t = start;
    for (std::size_t guard = 0; guard < tris_.size() + 1; ++guard) {
      const Tri& tri = tris_[t];
      int ia = 0;
      while (tri.v[ia] != a)
        ++ia;
      if (tri.v[(ia + 1) % 3] == b) {
        tri_out = t;
        opp_out = (ia + 2) % 3;
        return true;
      }
      if (tri.v[(ia + 2) % 3] == b) {
        tri_out = t;
        opp_out = (ia + 1) % 3;
        return true;
      }
      t = tri.nb[(ia + 2) % 3];
      if (t < 0 || t == start)
        return false;
    }
    return false;
  }

  bool encroached(int a, int b) const
  {
    int t, opp;
    if (!find_edge(a, b, t, opp))
      return true;
    auto apex_inside = [&](int c) {
      return !is_super(c) && dot(pts_[a] - pts_[c], pts_[b] - pts_[c]) < 0.0;
    };
    if (apex_inside(tris_[t].v[opp]))
      return true;
    const int n = tris_[t].nb[opp];
    if (n >= 0)
      for (int c : tris_[n].v)
        if (c != a && c != b && apex_inside(c))
          return true;
    return false;
  }

  Point2 split_point(int a, int b) const
  {
    const bool ia = input_[a] != 0, ib = input_[b] != 0;
    if (ia == ib)
      return midpoint(pts_[a], pts_[b]);
    const int o = ia ? a : b, q = ia ? b : a;
    const double len = distance(pts_[o], pts_[q]);
    const double shell = std::exp2(std::floor(std::log2(2.0 * len / 3.0)));
    return pts_[o] + (shell / len) * (pts_[q] - pts_[o]);
  }

  void split_subsegment(int a, int b)
  {
    const auto it = subseg_.find(edge_key(a, b));
    const int tag = it->second;
    subseg_.erase(it);
    const Point2 m = split_point(a, b);
    if (distance(m, pts_[a]) <= 0.0 || distance(m, pts_[b]) <= 0.0)
      throw MeshingError("subsegment too short to split near (" + std::to_string(pts_[a].x) + ", " +
                         std::to_string(pts_[a].y) + ")");
    check_budget();
    const int mv = insert_point(m, tag, false);
    add_subsegment(a, mv, tag);
    add_subsegment(mv, b, tag);
  }

  void split_encroached()
  {
    while (!encroach_queue_.empty()) {
      const auto [a, b] = encroach_queue_.front();
      encroach_queue_.pop_front();
      if (!subseg_.count(edge_key(a, b)))
        continue;
      if (encroached(a, b))
        split_subsegment(a, b);
    }
  }

  /// Apex shared by the input segments carrying p and q when both are Steiner
  /// points equidistant from it, i.e. the edge pq spans a small input angle.
  bool spans_input_angle(int p, int q) const
  {
    const int tp = tag_[p], tq = tag_[q];
    if (tp < 0 || tq < 0 || tp == tq || input_[p] || input_[q])
      return false;
    const auto& ep = segment_ends_[tp];
    const auto& eq = segment_ends_[tq];
    for (int o : ep) {
      if (o != eq[0] && o != eq[1])
        continue;
      const double dp = distance(pts_[o], pts_[p]), dq = distance(pts_[o], pts_[q]);
      if (std::fabs(dp - dq) <= 1e-6 * std::max(dp, dq))
        return true;
    }
    return false;
  }

  bool is_bad(int t) const
  {
    const Tri& tri = tris_[t];
    if (is_super(tri.v[0]) || is_super(tri.v[1]) || is_super(tri.v[2]))
      return false;
    std::array<double, 3> len2;
    for (int i = 0; i < 3; ++i) {
      const Point2 e = pts_[tri.v[(i + 2) % 3]] - pts_[tri.v[(i + 1) % 3]];
      len2[i] = dot(e, e);
    }
    const double longest = std::sqrt(*std::max_element(len2.begin(), len2.end()));
    if (longest > opt_.max_edge)
      return true;
    // Smallest angle is opposite the shortest edge.
    const int s = static_cast<int>(std::min_element(len2.begin(), len2.end()) - len2.begin());
    const double a2 = len2[(s + 1) % 3], b2 = len2[(s + 2) % 3], c2 = len2[s];
    const double cos_min = (a2 + b2 - c2) / (2.0 * std::sqrt(a2 * b2));
    if (cos_min <= cos_floor_)
      return false;
    return !spans_input_angle(tri.v[(s + 1) % 3], tri.v[(s + 2) % 3]);
  }

  void refine_triangle(int t)
  {
    const Tri tri = tris_[t];
    const Point2 c = circumcenter(pts_[tri.v[0]], pts_[tri.v[1]], pts_[tri.v[2]]);
    if (!std::isfinite(c.x) || !std::isfinite(c.y))
      return;
    const int t0 = locate(c);
    if (t0 < 0)
      return;
    std::vector<int> cav;
    cavity(t0, c, cav);
    std::vector<std::array<int, 2>> hit;
    for (int ct : cav)
      for (int i = 0; i < 3; ++i) {
        const int a = tris_[ct].v[(i + 1) % 3], b = tris_[ct].v[(i + 2) % 3];
        if (subseg_.count(edge_key(a, b)) && dot(pts_[a] - c, pts_[b] - c) < 0.0)
          hit.push_back({std::min(a, b), std::max(a, b)});
      }
    if (!hit.empty()) {
      std::sort(hit.begin(), hit.end());
      hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
      for (const auto& [a, b] : hit)
        if (subseg_.count(edge_key(a, b)))
          split_subsegment(a, b);
      if (tris_[t].alive && tris_[t].v == tri.v)
        quality_queue_.push_back({t, tri.v});
      return;
    }
    check_budget();
    insert_point(c, -1, false);
  }

  void check_budget() const
  {
    if (pts_.size() > opt_.max_vertices)
      throw MeshingError("mesh refinement exceeded " + std::to_string(opt_.max_vertices) +
                         " vertices; the geometry has features far below the target size");
  }

  RefineOptions opt_;
  double cos_floor_ = std::cos(opt_.min_angle_deg * std::numbers::pi / 180.0);
  std::vector<std::array<int, 2>> segment_ends_;
  std::vector<Point2> pts_;
  std::vector<int> tag_;
  std::vector<char> input_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::vector<int> vtri_;
  int last_ = 0;
  std::unordered_map<std::uint64_t, int> subseg_;
  std::deque<std::array<int, 2>> encroach_queue_;
  std::deque<QueuedTri> quality_queue_;
  mutable std::vector<unsigned> stamp_;
  mutable unsigned generation_ = 0;
};

} // namespace

RefinedMesh refine_pslg(std::vector<Point2> points, std::vector<int> point_tag, std::size_t num_input,
                        std::vector<PslgSegment> subsegments, std::vector<std::array<int, 2>> segment_ends,
                        const RefineOptions& options)
{
  // Vertex ids shift by the three super-triangle corners.
  for (auto& e : segment_ends) {
    e[0] += 3;
    e[1] += 3;
  }
  Refiner r(std::move(points), std::move(point_tag), num_input, std::move(segment_ends), options);
  for (const PslgSegment& s : subsegments)
    r.add_subsegment(s.v0 + 3, s.v1 + 3, s.tag);
  r.refine();
  return r.result();
}

} // namespace mdfe::detail
