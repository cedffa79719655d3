#include "mdfe/space.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "mdfe/errors.hpp"

namespace mdfe {

namespace {

std::uint64_t edge_key(int a, int b)
{
  if (a > b)
    std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x)
  {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b)
  {
    a = find(a);
    b = find(b);
    if (a != b)
      parent[std::max(a, b)] = std::min(a, b);
  }
};

int local_index(const std::array<int, 3>& tri, int v)
{
  for (int i = 0; i < 3; ++i)
    if (tri[i] == v)
      return i;
  return -1;
}

} // namespace

int DofMap::fans_at(int vertex) const
{
  return static_cast<int>(std::count(bulk_vertex.begin(), bulk_vertex.end(), vertex));
}

DofMap build_dofmap(const FittedMesh& m)
{
  DofMap d;
  const int nt = static_cast<int>(m.num_triangles());
  const int nv = static_cast<int>(m.num_vertices());

  std::unordered_set<std::uint64_t> iface_keys;
  for (const auto& e : m.interface_edges)
    iface_keys.insert(edge_key(e[0], e[1]));

  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  edge_tris.reserve(3 * m.num_triangles());
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i)
      edge_tris[edge_key(m.triangles[t][i], m.triangles[t][(i + 1) % 3])].push_back(t);

  // Corners (t, i) -> 3t + i, joined across interior non-interface edges.
  UnionFind fans(3 * static_cast<std::size_t>(nt));
  for (const auto& [key, tris] : edge_tris) {
    if (tris.size() != 2 || iface_keys.count(key))
      continue;
    const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    for (int v : {a, b})
      fans.unite(3 * tris[0] + local_index(m.triangles[tris[0]], v), 3 * tris[1] + local_index(m.triangles[tris[1]], v));
  }

  // root corner -> (region, vertex, root)
  std::vector<std::tuple<int, int, int>> roots;
  for (int c = 0; c < 3 * nt; ++c)
    if (fans.find(c) == c)
      roots.emplace_back(m.triangle_region[c / 3], m.triangles[c / 3][c % 3], c);
  std::sort(roots.begin(), roots.end());
  std::unordered_map<int, int> dof_of_root;
  dof_of_root.reserve(roots.size());
  for (const auto& [region, vertex, root] : roots) {
    dof_of_root.emplace(root, static_cast<int>(d.bulk_vertex.size()));
    d.bulk_vertex.push_back(vertex);
    d.bulk_region.push_back(region);
  }
  d.corner_dof.resize(nt);
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i)
      d.corner_dof[t][i] = dof_of_root.at(fans.find(3 * t + i));

  d.vertex_iface_dof.assign(nv, -1);
  for (const auto& e : m.interface_edges)
    d.vertex_iface_dof[e[0]] = d.vertex_iface_dof[e[1]] = 0;
  for (int v = 0; v < nv; ++v)
    if (d.vertex_iface_dof[v] == 0) {
      d.vertex_iface_dof[v] = static_cast<int>(d.iface_vertex.size());
      d.iface_vertex.push_back(v);
    }

  for (const auto& e : m.interface_edges) {
    d.edge_iface_dofs.push_back({d.vertex_iface_dof[e[0]], d.vertex_iface_dof[e[1]]});
    const auto& tris = edge_tris.at(edge_key(e[0], e[1]));
    if (tris.size() != 2)
      throw AssemblyError("interface edge without a triangle on both sides");
    std::array<int, 2> side_tri{-1, -1};
    for (int t : tris) {
      const int i = local_index(m.triangles[t], e[0]);
      const bool left = m.triangles[t][(i + 1) % 3] == e[1];
      side_tri[left ? 0 : 1] = t;
    }
    if (side_tri[0] < 0 || side_tri[1] < 0)
      throw AssemblyError("inconsistent triangle orientation along an interface edge");
    std::array<std::array<int, 2>, 2> trace;
    for (int s = 0; s < 2; ++s) {
      const int t = side_tri[s];
      trace[s] = {d.corner_dof[t][local_index(m.triangles[t], e[0])], d.corner_dof[t][local_index(m.triangles[t], e[1])]};
    }
    d.edge_trace.push_back(trace);
    d.edge_side_triangle.push_back(side_tri);
  }

  d.dirichlet_bulk.resize(d.num_bulk());
  for (std::size_t k = 0; k < d.num_bulk(); ++k)
    d.dirichlet_bulk[k] = m.is_boundary_vertex(d.bulk_vertex[k]);
  d.dirichlet_iface.resize(d.num_iface());
  for (std::size_t k = 0; k < d.num_iface(); ++k)
    d.dirichlet_iface[k] = m.is_boundary_vertex(d.iface_vertex[k]);

  d.bulk_free_index.assign(d.num_bulk(), -1);
  d.region_offsets.assign(m.num_regions + 1, 0);
  for (std::size_t k = 0; k < d.num_bulk(); ++k)
    if (!d.dirichlet_bulk[k]) {
      d.bulk_free_index[k] = static_cast<int>(d.bulk_free.size());
      d.bulk_free.push_back(static_cast<int>(k));
      ++d.region_offsets[d.bulk_region[k] + 1];
    }
  std::partial_sum(d.region_offsets.begin(), d.region_offsets.end(), d.region_offsets.begin());
  d.iface_free_index.assign(d.num_iface(), -1);
  for (std::size_t k = 0; k < d.num_iface(); ++k)
    if (!d.dirichlet_iface[k]) {
      d.iface_free_index[k] = static_cast<int>(d.iface_free.size());
      d.iface_free.push_back(static_cast<int>(k));
    }
  return d;
}

Eigen::VectorXd interpolate_nodal(const ScalarField& fn, const DofMap& d, const FittedMesh& m)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d.num_iface());
  for (std::size_t k = 0; k < d.num_iface(); ++k)
    if (!d.dirichlet_iface[k])
      out[k] = fn(m.vertices[d.iface_vertex[k]]);
  return out;
}

Eigen::VectorXd interpolate_bulk(const ScalarField& fn, const DofMap& d, const FittedMesh& m)
{
  Eigen::VectorXd out(d.num_bulk());
  for (std::size_t k = 0; k < d.num_bulk(); ++k)
    out[k] = fn(m.vertices[d.bulk_vertex[k]]);
  return out;
}

Eigen::VectorXd prolongate_bulk(const Eigen::VectorXd& coarse, const DofMap& coarse_dofs, const DofMap& fine_dofs,
                                const FittedMesh& fine)
{
  if (!fine.parent)
    throw AssemblyError("prolongation needs a refined mesh");
  const FittedMesh& parent = *fine.parent;
  const int parent_nv = static_cast<int>(parent.num_vertices());
  Eigen::VectorXd out(fine_dofs.num_bulk());
  for (std::size_t t = 0; t < fine.num_triangles(); ++t) {
    const int pt = fine.triangle_parent[t];
    const auto& ptri = parent.triangles[pt];
    auto coarse_value = [&](int v) { return coarse[coarse_dofs.corner_dof[pt][local_index(ptri, v)]]; };
    for (int i = 0; i < 3; ++i) {
      const int v = fine.triangles[t][i];
      double value;
      if (v < parent_nv) {
        value = coarse_value(v);
      }
      else {
        const auto& pe = fine.vertex_parent_edge[v - parent_nv];
        value = 0.5 * (coarse_value(pe[0]) + coarse_value(pe[1]));
      }
      out[fine_dofs.corner_dof[t][i]] = value;
    }
  }
  return out;
}

Eigen::VectorXd prolongate_iface(const Eigen::VectorXd& coarse, const DofMap& coarse_dofs, const DofMap& fine_dofs,
                                 const FittedMesh& fine)
{
  if (!fine.parent)
    throw AssemblyError("prolongation needs a refined mesh");
  const int parent_nv = static_cast<int>(fine.parent->num_vertices());
  Eigen::VectorXd out(fine_dofs.num_iface());
  for (std::size_t k = 0; k < fine_dofs.num_iface(); ++k) {
    const int v = fine_dofs.iface_vertex[k];
    if (v < parent_nv) {
      out[k] = coarse[coarse_dofs.vertex_iface_dof[v]];
    }
    else {
      const auto& pe = fine.vertex_parent_edge[v - parent_nv];
      out[k] = 0.5 * (coarse[coarse_dofs.vertex_iface_dof[pe[0]]] + coarse[coarse_dofs.vertex_iface_dof[pe[1]]]);
    }
  }
  return out;
}

Eigen::VectorXd expand_bulk(const Eigen::VectorXd& free_values, const DofMap& d, const Eigen::VectorXd& dirichlet)
{
  Eigen::VectorXd out = dirichlet;
  for (std::size_t k = 0; k < d.n0(); ++k)
    out[d.bulk_free[k]] = free_values[k];
  return out;
}

Eigen::VectorXd expand_iface(const Eigen::VectorXd& free_values, const DofMap& d, const Eigen::VectorXd& dirichlet)
{
  Eigen::VectorXd out = dirichlet;
  for (std::size_t k = 0; k < d.n1(); ++k)
    out[d.iface_free[k]] = free_values[k];
  return out;
}

Eigen::VectorXd restrict_bulk(const Eigen::VectorXd& full, const DofMap& d)
{
  Eigen::VectorXd out(d.n0());
  for (std::size_t k = 0; k < d.n0(); ++k)
    out[k] = full[d.bulk_free[k]];
  return out;
}

Eigen::VectorXd restrict_iface(const Eigen::VectorXd& full, const DofMap& d)
{
  Eigen::VectorXd out(d.n1());
  for (std::size_t k = 0; k < d.n1(); ++k)
    out[k] = full[d.iface_free[k]];
  return out;
}

} // namespace mdfe
