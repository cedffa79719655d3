#include "mdfe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "mdfe/errors.hpp"
#include "mdfe/precond.hpp"

namespace mdfe {

namespace {

constexpr double kPi = std::numbers::pi;

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

} // namespace

std::size_t InterfaceGraph::num_free() const
{
  return static_cast<std::size_t>(std::count(dirichlet.begin(), dirichlet.end(), false));
}

InterfaceGraph make_graph(std::vector<Point2> nodes, std::vector<std::array<int, 2>> edges, std::vector<bool> dirichlet)
{
  InterfaceGraph g;
  g.nodes = std::move(nodes);
  g.edges = std::move(edges);
  g.dirichlet = dirichlet.empty() ? std::vector<bool>(g.nodes.size(), false) : std::move(dirichlet);
  for (const auto& e : g.edges) {
    const double len = distance(g.nodes[e[0]], g.nodes[e[1]]);
    if (!(len > 0.0))
      throw std::invalid_argument("interface graph edge of zero length");
    g.lengths.push_back(len);
  }
  g.free_index.assign(g.nodes.size(), -1);
  int next = 0;
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    if (!g.dirichlet[k])
      g.free_index[k] = next++;
  return g;
}

InterfaceGraph interface_graph(const FittedMesh& m, const DofMap& d)
{
  std::vector<Point2> nodes;
  for (int v : d.iface_vertex)
    nodes.push_back(m.vertices[v]);
  return make_graph(std::move(nodes), d.edge_iface_dofs, d.dirichlet_iface);
}

SparseMatrix graph_laplacian(const InterfaceGraph& g, bool reduce)
{
  auto index = [&](int k) { return reduce ? g.free_index[k] : k; };
  const Eigen::Index n = static_cast<Eigen::Index>(reduce ? g.num_free() : g.num_nodes());
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const double w = 1.0 / g.lengths[e];
    const int a = index(g.edges[e][0]), b = index(g.edges[e][1]);
    if (a >= 0)
      t.emplace_back(a, a, w);
    if (b >= 0)
      t.emplace_back(b, b, w);
    if (a >= 0 && b >= 0) {
      t.emplace_back(a, b, -w);
      t.emplace_back(b, a, -w);
    }
  }
  SparseMatrix L(n, n);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

Eigen::VectorXd mass_matrix(const InterfaceGraph& g, bool reduce)
{
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.num_nodes()));
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    full[g.edges[e][0]] += 0.5 * g.lengths[e];
    full[g.edges[e][1]] += 0.5 * g.lengths[e];
  }
  if (!reduce)
    return full;
  Eigen::VectorXd out(static_cast<Eigen::Index>(g.num_free()));
  for (std::size_t k = 0; k < g.num_nodes(); ++k)
    if (g.free_index[k] >= 0)
      out[g.free_index[k]] = full[static_cast<Eigen::Index>(k)];
  return out;
}

PoincareResult poincare_constant(const SparseMatrix& L, const Eigen::VectorXd& M, double tol, int max_iterations)
{
  const Eigen::Index n = L.rows();
  PoincareResult res;
  if (n == 0)
    return res;

  // A connected component of the reduced graph is floating when none of its
  // rows lost an edge to a removed Dirichlet node, i.e. all row sums vanish.
  UnionFind comps(static_cast<std::size_t>(n));
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n), diag = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < L.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(L, c); it; ++it) {
      row_sum[it.row()] += it.value();
      if (it.row() == it.col())
        diag[it.row()] = it.value();
      else
        comps.unite(static_cast<int>(it.row()), static_cast<int>(it.col()));
    }
  std::map<int, std::vector<int>> members;
  std::map<int, bool> anchored;
  for (int k = 0; k < n; ++k) {
    const int r = comps.find(k);
    members[r].push_back(k);
    if (std::abs(row_sum[k]) > 1e-12 * std::max(diag[k], 1e-300))
      anchored[r] = true;
  }
  for (const auto& [root, rows] : members)
    if (!anchored[root])
      res.floating_components.push_back(rows);
  if (!res.floating_components.empty()) {
    res.infinite = true;
    res.D = std::numeric_limits<double>::infinity();
    return res;
  }

  Eigen::SimplicialLLT<SparseMatrix> llt(L);
  if (llt.info() != Eigen::Success)
    throw SpdViolation("reduced graph Laplacian is not positive definite");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double lambda = 0.0;
  for (res.iterations = 1; res.iterations <= max_iterations; ++res.iterations) {
    const Eigen::VectorXd Mx = M.cwiseProduct(x);
    x = llt.solve(Mx);
    x /= x.norm();
    const double next = x.dot(M.cwiseProduct(x)) / x.dot(L * x);
    const bool done = std::abs(next - lambda) <= tol * std::abs(next);
    lambda = next;
    if (done)
      break;
  }
  res.D = lambda;
  return res;
}

SpectralBounds spectral_equivalence(const Eigen::MatrixXd& S, const SparseMatrix& L, const Coefficients& c, double D)
{
  if (S.rows() != L.rows())
    throw std::invalid_argument("spectral_equivalence: dimension mismatch");
  SpectralBounds b;
  const Eigen::MatrixXd Ld = Eigen::MatrixXd(L);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Ld, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw SpdViolation("generalized eigenproblem (S, L) failed; L must be positive definite");
  b.c1 = es.eigenvalues().minCoeff();
  b.c2 = es.eigenvalues().maxCoeff();
  b.bound = c.alpha_max + D * c.beta_max;
  b.bound_holds = b.c1 > 0.0 && b.c2 <= b.bound + 1e-8;
  return b;
}

SpectralBounds spectral_equivalence(const SparseMatrix& S, const SparseMatrix& L, const Coefficients& c, double D,
                                    Eigen::Index dense_limit)
{
  if (S.rows() <= dense_limit)
    return spectral_equivalence(Eigen::MatrixXd(S), L, c, D);

  // Lanczos on L^{-1} S, self-adjoint in the L inner product, with full
  // reorthogonalization.
  const Eigen::Index n = S.rows();
  Eigen::SimplicialLLT<SparseMatrix> llt(L);
  if (llt.info() != Eigen::Success)
    throw SpdViolation("reduced graph Laplacian is not positive definite");
  const Eigen::Index steps = std::min<Eigen::Index>(n, 300);
  Eigen::MatrixXd V(n, steps);
  Eigen::MatrixXd LV(n, steps);
  Eigen::VectorXd alpha(steps), beta(steps);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  v /= std::sqrt(v.dot(L * v));
  Eigen::Index k = 0;
  for (; k < steps; ++k) {
    V.col(k) = v;
    LV.col(k) = L * v;
    Eigen::VectorXd w = llt.solve(S * v);
    alpha[k] = w.dot(LV.col(k));
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(k + 1) * (LV.leftCols(k + 1).transpose() * w);
    const double nb = std::sqrt(std::max(0.0, w.dot(L * w)));
    beta[k] = nb;
    if (nb < 1e-12 * std::abs(alpha[k]) || k + 1 == steps) {
      ++k;
      break;
    }
    v = w / nb;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(alpha.head(k), beta.head(std::max<Eigen::Index>(k - 1, 0)), Eigen::EigenvaluesOnly);
  SpectralBounds b;
  b.dense = false;
  b.c1 = es.eigenvalues().minCoeff();
  b.c2 = es.eigenvalues().maxCoeff();
  b.bound = c.alpha_max + D * c.beta_max;
  b.bound_holds = b.c1 > 0.0 && b.c2 <= b.bound + 1e-8;
  return b;
}

CoercivityWalk coercivity_walk(std::size_t num_regions, std::size_t num_segments,
                               const std::vector<std::pair<int, int>>& E0, const std::vector<int>& boundary_regions)
{
  const int nI = static_cast<int>(num_regions);
  const int n = nI + static_cast<int>(num_segments);
  std::vector<std::vector<int>> adj(n);
  for (const auto& [i, j] : E0) {
    adj[i].push_back(nI + j);
    adj[nI + j].push_back(i);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  CoercivityWalk res;
  if (boundary_regions.empty() || n == 0) {
    for (int j = 0; j < static_cast<int>(num_segments); ++j)
      res.unreachable_segments.push_back(j);
    for (int i = 0; i < nI; ++i)
      res.unreachable_regions.push_back(i);
    return res;
  }
  const int root = *std::min_element(boundary_regions.begin(), boundary_regions.end());
  std::vector<int> parent(n, -2);
  std::vector<std::vector<int>> children(n);
  std::queue<int> q;
  parent[root] = -1;
  q.push(root);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : adj[u])
      if (parent[w] == -2) {
        parent[w] = u;
        children[u].push_back(w);
        q.push(w);
      }
  }
  for (int u = 0; u < n; ++u)
    if (parent[u] == -2) {
      if (u < nI)
        res.unreachable_regions.push_back(u);
      else
        res.unreachable_segments.push_back(u - nI);
    }

  // Euler tour of the BFS tree from the root, cut after the last first visit.
  std::vector<int> tour;
  std::vector<std::size_t> last_new;
  std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
  tour.push_back(root);
  std::size_t cut = 0;
  while (!stack.empty()) {
    auto& [u, next] = stack.back();
    if (next < children[u].size()) {
      const int w = children[u][next++];
      tour.push_back(w);
      cut = tour.size() - 1;
      stack.emplace_back(w, 0);
    }
    else {
      stack.pop_back();
      if (!stack.empty())
        tour.push_back(stack.back().first);
    }
  }
  tour.resize(cut + 1);
  std::reverse(tour.begin(), tour.end());
  if (tour.front() >= nI)
    tour.insert(tour.begin(), adj[tour.front()].front());
  for (int u : tour) {
    const bool region = u < nI;
    res.walk.push_back({region, region ? u : u - nI});
    if (!region)
      ++res.length;
  }
  res.ok = res.unreachable_regions.empty() && res.unreachable_segments.empty();
  return res;
}

CoercivityWalk coercivity_walk(const MixedDomain& d)
{
  return coercivity_walk(d.num_regions(), d.num_segments(), d.E0, boundary_touching_regions(d));
}

ExponentResult singular_exponents(double omega, CornerKind kind)
{
  if (!(omega > 0.0 && omega < 2.0 * kPi))
    throw std::invalid_argument("corner angle must lie in (0, 2 pi)");
  if (kind == CornerKind::M && std::abs(omega - kPi) <= 1e-12 * kPi)
    throw std::invalid_argument("mixed corner with angle pi is excluded");
  ExponentResult r;
  const double shift = kind == CornerKind::S ? 0.0 : 0.5;
  for (int l = 1;; ++l) {
    const double lambda = (l - shift) * kPi / omega;
    if (lambda >= 1.0 - 1e-12)
      break;
    r.lambdas.push_back(lambda);
  }
  if (!r.lambdas.empty()) {
    r.sobolev_index = std::min(2.0, 1.0 + r.lambdas.front());
    if (r.lambdas.front() <= 0.5)
      r.warnings.push_back("exponent " + std::to_string(r.lambdas.front()) + " <= 1/2");
  }
  return r;
}

std::vector<Corner> classify_corners(const MixedDomain& d)
{
  std::vector<Corner> out;
  auto ends = [&](const CurvePiece& p) {
    std::array<int, 2> e = p.kind == PieceKind::Interface
                               ? std::array<int, 2>{d.interface_segments[p.index].v0, d.interface_segments[p.index].v1}
                               : std::array<int, 2>{d.boundary_pieces[p.index].v0, d.boundary_pieces[p.index].v1};
    if (p.reversed)
      std::swap(e[0], e[1]);
    return e;
  };
  for (std::size_t r = 0; r < d.bulk_regions.size(); ++r)
    for (const auto& cycle : d.bulk_regions[r].cycles)
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        const CurvePiece& prev = cycle[k];
        const CurvePiece& next = cycle[(k + 1) % cycle.size()];
        const auto pe = ends(prev), ne = ends(next);
        const int v = pe[1];
        const Point2 in = d.vertices[pe[1]] - d.vertices[pe[0]];
        const Point2 outd = d.vertices[ne[1]] - d.vertices[ne[0]];
        // Interior angle: from the outgoing direction counterclockwise to the reversed incoming one.
        double omega = std::atan2(cross(outd, -1.0 * in), dot(outd, -1.0 * in));
        if (omega <= 1e-12)
          omega += 2.0 * kPi;
        const bool prev_d = prev.kind == PieceKind::Boundary, next_d = next.kind == PieceKind::Boundary;
        Corner c{static_cast<int>(r), v, omega, prev_d == next_d ? CornerKind::S : CornerKind::M, prev_d && next_d,
                 false, {}};
        if (std::abs(omega - 2.0 * kPi) <= 1e-9) {
          c.tip = true;
          c.exponents.sobolev_index = 1.5;
          c.exponents.warnings.push_back("slit tip (omega = 2 pi): outside the admissible corner set");
        }
        else {
          try {
            c.exponents = singular_exponents(omega, c.kind);
          }
          catch (const std::invalid_argument& e) {
            c.exponents.warnings.push_back(e.what());
          }
        }
        out.push_back(std::move(c));
      }
  return out;
}

NetworkStats network_statistics(const FittedMesh& m, double H)
{
  NetworkStats s;
  const CoarseGrid grid = make_coarse_grid(m, H);
  const int n = grid.cells;
  std::vector<double> len(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<std::vector<int>> cell_edges(len.size());
  for (std::size_t e = 0; e < m.interface_edges.size(); ++e) {
    const Point2 a = m.vertices[m.interface_edges[e][0]], b = m.vertices[m.interface_edges[e][1]];
    s.max_edge = std::max(s.max_edge, distance(a, b));
    const Point2 mid = midpoint(a, b);
    const int i = std::clamp(static_cast<int>((mid.x - grid.origin.x) / grid.H()), 0, n - 1);
    const int j = std::clamp(static_cast<int>((mid.y - grid.origin.y) / grid.H()), 0, n - 1);
    len[j * n + i] += distance(a, b);
    cell_edges[j * n + i].push_back(static_cast<int>(e));
  }
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t c = 0; c < len.size(); ++c) {
    sum += len[c];
    sum2 += len[c] * len[c];
    if (cell_edges[c].empty()) {
      ++s.empty_cells;
      continue;
    }
    std::map<int, int> local;
    for (int e : cell_edges[c])
      for (int v : m.interface_edges[e])
        local.emplace(v, static_cast<int>(local.size()));
    UnionFind uf(local.size());
    for (int e : cell_edges[c])
      uf.unite(local[m.interface_edges[e][0]], local[m.interface_edges[e][1]]);
    int roots = 0;
    for (std::size_t k = 0; k < local.size(); ++k)
      roots += uf.find(static_cast<int>(k)) == static_cast<int>(k);
    if (roots > 1)
      ++s.disconnected_cells;
  }
  const double cells = static_cast<double>(len.size());
  s.mean_cell_length = sum / cells;
  s.cell_length_variance = sum2 / cells - s.mean_cell_length * s.mean_cell_length;
  return s;
}

void write_report(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries)
{
  for (const auto& [k, v] : entries)
    out << k << " = " << v << '\n';
}

} // namespace mdfe
