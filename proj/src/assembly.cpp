#include "mdfe/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mdfe/errors.hpp"
#include "mdfe/parallel.hpp"

namespace mdfe {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Splits [0, n) into `chunks` contiguous ranges; concatenating per-chunk
// output in chunk order reproduces the serial order.
template <class Fn>
std::vector<Triplets> chunked(std::size_t n, int threads, Fn&& fn)
{
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(n, std::max(threads, 1)));
  std::vector<Triplets> out(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = n * c / chunks, end = n * (c + 1) / chunks;
    for (std::size_t k = begin; k < end; ++k)
      fn(k, out[c]);
  });
  return out;
}

Triplets element_triplets(const FittedMesh& m, const DofMap& d, const Coefficients& c, int threads)
{
  const int nb = static_cast<int>(d.num_bulk());
  auto bulk = chunked(m.num_triangles(), threads, [&](std::size_t t, Triplets& out) {
    const auto& tri = m.triangles[t];
    const Point2 p0 = m.vertices[tri[0]], p1 = m.vertices[tri[1]], p2 = m.vertices[tri[2]];
    const double area2 = cross(p1 - p0, p2 - p0);
    // grad phi_i = rot90(opposite edge) / (2 area)
    const std::array<Point2, 3> e{p2 - p1, p0 - p2, p1 - p0};
    const double scale = c.A_bulk[t] / (2.0 * area2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out.emplace_back(d.corner_dof[t][i], d.corner_dof[t][j], scale * dot(e[i], e[j]));
  });
  auto iface = chunked(m.interface_edges.size(), threads, [&](std::size_t k, Triplets& out) {
    const auto& e = m.interface_edges[k];
    const double len = distance(m.vertices[e[0]], m.vertices[e[1]]);
    const auto& idof = d.edge_iface_dofs[k];
    const double s = c.A_iface[k] / len;
    const int u0 = nb + idof[0], u1 = nb + idof[1];
    out.emplace_back(u0, u0, s);
    out.emplace_back(u0, u1, -s);
    out.emplace_back(u1, u0, -s);
    out.emplace_back(u1, u1, s);
    const double b = c.B_iface[k];
    if (b == 0.0)
      return;
    const double mass[2][2] = {{b * len / 3.0, b * len / 6.0}, {b * len / 6.0, b * len / 3.0}};
    for (int side = 0; side < 2; ++side) {
      const auto& tr = d.edge_trace[k][side];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          out.emplace_back(tr[i], tr[j], mass[i][j]);
          out.emplace_back(nb + idof[i], nb + idof[j], mass[i][j]);
          out.emplace_back(tr[i], nb + idof[j], -mass[i][j]);
          out.emplace_back(nb + idof[i], tr[j], -mass[i][j]);
        }
    }
  });
  Triplets all;
  for (auto& part : bulk)
    all.insert(all.end(), part.begin(), part.end());
  for (auto& part : iface)
    all.insert(all.end(), part.begin(), part.end());
  return all;
}

Eigen::VectorXd load_vector(const FittedMesh& m, const DofMap& d, const ScalarField& f_bulk, const ScalarField& f_iface)
{
  const int nb = static_cast<int>(d.num_bulk());
  Eigen::VectorXd F = Eigen::VectorXd::Zero(nb + static_cast<Eigen::Index>(d.num_iface()));
  if (f_bulk)
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const auto& tri = m.triangles[t];
      const double area = m.triangle_area(static_cast<int>(t));
      std::array<double, 3> fm; // fm[i]: value at the midpoint opposite corner i
      for (int i = 0; i < 3; ++i)
        fm[i] = f_bulk(midpoint(m.vertices[tri[(i + 1) % 3]], m.vertices[tri[(i + 2) % 3]]));
      for (int i = 0; i < 3; ++i)
        F[d.corner_dof[t][i]] += area / 6.0 * (fm[(i + 1) % 3] + fm[(i + 2) % 3]);
    }
  if (f_iface) {
    const double g = 0.5 / std::sqrt(3.0);
    for (std::size_t k = 0; k < m.interface_edges.size(); ++k) {
      const Point2 a = m.vertices[m.interface_edges[k][0]], b = m.vertices[m.interface_edges[k][1]];
      const double len = distance(a, b);
      const double xi[2] = {0.5 - g, 0.5 + g};
      for (double s : xi) {
        const double fv = f_iface(a + s * (b - a)) * 0.5 * len;
        F[nb + d.edge_iface_dofs[k][0]] += fv * (1.0 - s);
        F[nb + d.edge_iface_dofs[k][1]] += fv * s;
      }
    }
  }
  return F;
}

} // namespace

Coefficients Coefficients::constant(const FittedMesh& m, double a_bulk, double a_iface, double b)
{
  Coefficients c;
  c.A_bulk.assign(m.num_triangles(), a_bulk);
  c.A_iface.assign(m.interface_edges.size(), a_iface);
  c.B_iface.assign(m.interface_edges.size(), b);
  c.update_bounds();
  return c;
}

void Coefficients::update_bounds()
{
  alpha_min = INFINITY;
  alpha_max = -INFINITY;
  for (const auto* v : {&A_bulk, &A_iface})
    for (double a : *v) {
      alpha_min = std::min(alpha_min, a);
      alpha_max = std::max(alpha_max, a);
    }
  beta_min = B_iface.empty() ? 0.0 : *std::min_element(B_iface.begin(), B_iface.end());
  beta_max = B_iface.empty() ? 0.0 : *std::max_element(B_iface.begin(), B_iface.end());
}

void Coefficients::validate(const FittedMesh& m) const
{
  if (A_bulk.size() != m.num_triangles() || A_iface.size() != m.interface_edges.size() ||
      B_iface.size() != m.interface_edges.size())
    throw AssemblyError("coefficient arrays do not match the mesh");
  for (double a : A_bulk)
    if (!(a > 0.0))
      throw AssemblyError("bulk coefficient must be positive");
  for (double a : A_iface)
    if (!(a > 0.0))
      throw AssemblyError("interface coefficient must be positive");
  for (double b : B_iface)
    if (!(b >= 0.0))
      throw AssemblyError("coupling coefficient must be non-negative");
}

SparseMatrix BlockSystem::full_matrix() const
{
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(A00.nonZeros() + A01.nonZeros() + A10.nonZeros() + A11.nonZeros());
  auto add = [&](const SparseMatrix& A, Eigen::Index r0, Eigen::Index c0) {
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it)
        t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  add(A00, 0, 0);
  add(A01, 0, n0());
  add(A10, n0(), 0);
  add(A11, n0(), n0());
  SparseMatrix A(size(), size());
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Eigen::VectorXd BlockSystem::full_rhs() const
{
  Eigen::VectorXd b(size());
  b << b0, b1;
  return b;
}

SparseMatrix assemble_unreduced(const FittedMesh& m, const DofMap& d, const Coefficients& c, int threads)
{
  c.validate(m);
  const Eigen::Index n = static_cast<Eigen::Index>(d.num_bulk() + d.num_iface());
  Triplets t = element_triplets(m, d, c, threads);
  SparseMatrix K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

Eigen::VectorXd dirichlet_bulk_values(const DofMap& d, const FittedMesh& m, const ScalarField& g)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d.num_bulk());
  if (g)
    for (std::size_t k = 0; k < d.num_bulk(); ++k)
      if (d.dirichlet_bulk[k])
        out[k] = g(m.vertices[d.bulk_vertex[k]]);
  return out;
}

Eigen::VectorXd dirichlet_iface_values(const DofMap& d, const FittedMesh& m, const ScalarField& g)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d.num_iface());
  if (g)
    for (std::size_t k = 0; k < d.num_iface(); ++k)
      if (d.dirichlet_iface[k])
        out[k] = g(m.vertices[d.iface_vertex[k]]);
  return out;
}

BlockSystem assemble(const FittedMesh& m, const DofMap& d, const Coefficients& c, const ScalarField& f_bulk,
                     const ScalarField& f_iface, const AssemblyOptions& options)
{
  c.validate(m);
  if (d.n0() + d.n1() == 0)
    throw AssemblyError("no free degrees of freedom");
  const int nb = static_cast<int>(d.num_bulk());
  const Triplets all = element_triplets(m, d, c, options.threads);
  const Eigen::VectorXd F = load_vector(m, d, f_bulk, f_iface);
  Eigen::VectorXd g(F.size());
  g << dirichlet_bulk_values(d, m, options.dirichlet), dirichlet_iface_values(d, m, options.dirichlet);

  // global dof -> (block, free index), block -1 for Dirichlet dofs
  auto locate = [&](int k) -> std::pair<int, int> {
    if (k < nb)
      return {d.bulk_free_index[k] < 0 ? -1 : 0, d.bulk_free_index[k]};
    const int q = d.iface_free_index[k - nb];
    return {q < 0 ? -1 : 1, q};
  };

  BlockSystem sys;
  sys.b0 = Eigen::VectorXd::Zero(d.n0());
  sys.b1 = Eigen::VectorXd::Zero(d.n1());
  for (int k = 0; k < static_cast<int>(F.size()); ++k) {
    const auto [blk, q] = locate(k);
    if (blk == 0)
      sys.b0[q] += F[k];
    else if (blk == 1)
      sys.b1[q] += F[k];
  }
  Triplets blocks[2][2];
  for (const auto& t : all) {
    const auto [bi, qi] = locate(t.row());
    if (bi < 0)
      continue;
    const auto [bj, qj] = locate(t.col());
    if (bj < 0) {
      if (g[t.col()] != 0.0)
        (bi == 0 ? sys.b0 : sys.b1)[qi] -= t.value() * g[t.col()];
      continue;
    }
    blocks[bi][bj].emplace_back(qi, qj, t.value());
  }
  const Eigen::Index n[2] = {static_cast<Eigen::Index>(d.n0()), static_cast<Eigen::Index>(d.n1())};
  SparseMatrix* target[2][2] = {{&sys.A00, &sys.A01}, {&sys.A10, &sys.A11}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      target[i][j]->resize(n[i], n[j]);
      target[i][j]->setFromTriplets(blocks[i][j].begin(), blocks[i][j].end());
    }
  sys.region_offsets = d.region_offsets;
  return sys;
}

double energy_norm(const SparseMatrix& A, const Eigen::VectorXd& U)
{
  if (U.size() != A.rows())
    throw AssemblyError("energy_norm: dimension mismatch");
  const double q = U.dot(A * U);
  const double scale = (A.cwiseAbs() * U.cwiseAbs()).dot(U.cwiseAbs());
  if (q < -1e-12 * scale)
    throw SpdViolation("negative energy " + std::to_string(q));
  return std::sqrt(std::max(q, 0.0));
}

double energy_norm(const BlockSystem& sys, const Eigen::VectorXd& U)
{
  if (U.size() != sys.size())
    throw AssemblyError("energy_norm: dimension mismatch");
  const auto U0 = U.head(sys.n0());
  const auto U1 = U.tail(sys.n1());
  const double q = U0.dot(sys.A00 * U0) + 2.0 * U0.dot(sys.A01 * U1) + U1.dot(sys.A11 * U1);
  const Eigen::VectorXd a0 = U0.cwiseAbs(), a1 = U1.cwiseAbs();
  const double scale = a0.dot(sys.A00.cwiseAbs() * a0) + 2.0 * a0.dot(sys.A01.cwiseAbs() * a1) +
                       a1.dot(sys.A11.cwiseAbs() * a1);
  if (q < -1e-12 * scale)
    throw SpdViolation("negative energy " + std::to_string(q));
  return std::sqrt(std::max(q, 0.0));
}

double exp_source(Point2 p) { return std::exp(-10.0 * distance(p, {0.5, 0.5})); }

void write_coo(std::ostream& out, const SparseMatrix& A)
{
  out.precision(17);
  out << "# " << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

} // namespace mdfe
