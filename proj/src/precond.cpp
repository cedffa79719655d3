#include "mdfe/precond.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mdfe/errors.hpp"
#include "mdfe/parallel.hpp"

namespace mdfe {

namespace {

constexpr double kSupportTol = 1e-12;

std::string where(Point2 p) { return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; }

// Coarse nodes whose patch may contain p.
std::vector<int> candidate_nodes(const CoarseGrid& g, Point2 p)
{
  const double h = g.H();
  const int ci = static_cast<int>(std::floor((p.x - g.origin.x) / h));
  const int cj = static_cast<int>(std::floor((p.y - g.origin.y) / h));
  std::vector<int> out;
  for (int j = cj - 1; j <= cj + 2; ++j)
    for (int i = ci - 1; i <= ci + 2; ++i)
      if (i >= 0 && j >= 0 && i <= g.cells && j <= g.cells)
        out.push_back(j * (g.cells + 1) + i);
  return out;
}

SparseMatrix extract(const SparseMatrix& S, const std::vector<int>& idx, std::vector<int>& pos)
{
  const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
  for (Eigen::Index a = 0; a < k; ++a)
    pos[idx[a]] = static_cast<int>(a);
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index b = 0; b < k; ++b)
    for (SparseMatrix::InnerIterator it(S, idx[b]); it; ++it)
      if (pos[it.row()] >= 0)
        t.emplace_back(pos[it.row()], b, it.value());
  for (int i : idx)
    pos[i] = -1;
  SparseMatrix out(k, k);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

} // namespace

Point2 CoarseGrid::node(int k) const
{
  const int i = k % (cells + 1), j = k / (cells + 1);
  return {origin.x + i * H(), origin.y + j * H()};
}

double CoarseGrid::hat_raw(int k, Point2 p) const
{
  const Point2 n = node(k);
  const double dx = (p.x - n.x) / H(), dy = (p.y - n.y) / H();
  return 1.0 - std::max({std::abs(dx), std::abs(dy), std::abs(dx - dy)});
}

CoarseGrid make_coarse_grid(const FittedMesh& m, double H)
{
  if (!(H > 0.0))
    throw std::invalid_argument("coarse mesh size must be positive");
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const Point2& p : m.vertices) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  CoarseGrid g;
  g.origin = {x0, y0};
  g.side = std::max(x1 - x0, y1 - y0);
  g.cells = std::max(1, static_cast<int>(std::lround(g.side / H)));
  return g;
}

SparseMatrix coarse_prolongation(const CoarseGrid& grid, const DofMap& d, const FittedMesh& m)
{
  std::vector<Eigen::Triplet<double>> t;
  std::vector<std::vector<std::pair<int, double>>> entries(grid.num_nodes());
  for (std::size_t q = 0; q < d.n1(); ++q) {
    const Point2 p = m.vertices[d.iface_vertex[d.iface_free[q]]];
    for (int k : candidate_nodes(grid, p)) {
      const double v = grid.hat(k, p);
      if (v > 0.0)
        entries[k].emplace_back(static_cast<int>(q), v);
    }
  }
  int nc = 0;
  for (int k = 0; k < grid.num_nodes(); ++k) {
    if (entries[k].empty())
      continue;
    for (const auto& [row, v] : entries[k])
      t.emplace_back(row, nc, v);
    ++nc;
  }
  SparseMatrix Q0(static_cast<Eigen::Index>(d.n1()), nc);
  Q0.setFromTriplets(t.begin(), t.end());
  return Q0;
}

std::vector<std::vector<int>> local_subspaces(const CoarseGrid& grid, const DofMap& d, const FittedMesh& m)
{
  std::vector<std::vector<int>> neighbors(d.num_iface());
  for (const auto& e : d.edge_iface_dofs) {
    neighbors[e[0]].push_back(e[1]);
    neighbors[e[1]].push_back(e[0]);
  }
  std::vector<std::vector<int>> patches(grid.num_nodes());
  for (std::size_t q = 0; q < d.n1(); ++q) {
    const int dof = d.iface_free[q];
    const Point2 p = m.vertices[d.iface_vertex[dof]];
    bool covered = false;
    for (int k : candidate_nodes(grid, p)) {
      if (grid.hat_raw(k, p) < -kSupportTol)
        continue;
      bool inside = true;
      for (int nb : neighbors[dof])
        if (grid.hat_raw(k, m.vertices[d.iface_vertex[nb]]) < -kSupportTol) {
          inside = false;
          break;
        }
      if (inside) {
        patches[k].push_back(static_cast<int>(q));
        covered = true;
      }
    }
    if (!covered)
      throw AssemblyError("interface dof at " + where(p) +
                          " lies in no coarse patch; use a finer mesh or a larger coarse size H");
  }
  std::vector<std::vector<int>> out;
  for (auto& p : patches)
    if (!p.empty())
      out.push_back(std::move(p));
  return out;
}

SubspacePreconditioner::SubspacePreconditioner(const SparseMatrix& S, const SparseMatrix& Q0,
                                               std::vector<std::vector<int>> local, int threads)
    : n_(S.rows()), threads_(std::max(threads, 1)), Q0_(Q0), local_(std::move(local))
{
  if (Q0_.cols() > 0) {
    if (Q0_.rows() != n_)
      throw std::invalid_argument("coarse prolongation has the wrong number of rows");
    const Eigen::MatrixXd G = Eigen::MatrixXd(Q0_.transpose() * (S * Q0_));
    const Eigen::MatrixXd Gs = 0.5 * (G + G.transpose());
    coarse_.compute(Gs);
    stats_.coarse_dim = Q0_.cols();
    stats_.coarse_rank = Q0_.cols();
    bool singular = coarse_.info() != Eigen::Success;
    if (!singular) {
      const Eigen::VectorXd piv = Eigen::MatrixXd(coarse_.matrixL()).diagonal().array().square();
      singular = piv.minCoeff() <= 1e-10 * piv.maxCoeff();
    }
    if (singular) {
      // Hats restricted to the interface can be linearly dependent (a short
      // straight piece inside one coarse triangle); use the pseudo-inverse.
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gs);
      const Eigen::VectorXd& ev = es.eigenvalues();
      const double cut = 1e-10 * ev.cwiseAbs().maxCoeff();
      if (ev.minCoeff() < -cut)
        throw SpdViolation("coarse Galerkin matrix is indefinite", 0);
      Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
      stats_.coarse_rank = 0;
      for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev[k] > cut) {
          inv[k] = 1.0 / ev[k];
          ++stats_.coarse_rank;
        }
      coarse_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
      coarse_singular_ = true;
    }
  }
  local_factors_.resize(local_.size());
  std::vector<int> overlap(n_, 0);
  for (const auto& idx : local_) {
    stats_.max_local_size = std::max(stats_.max_local_size, idx.size());
    for (int i : idx)
      ++overlap[i];
  }
  stats_.num_local = local_.size();
  stats_.collapsed = Q0_.cols() == 0 && local_.size() == 1 && static_cast<Eigen::Index>(local_[0].size()) == n_;
  stats_.max_overlap = n_ ? *std::max_element(overlap.begin(), overlap.end()) : 0;
  parallel_for(local_.size(), threads_, [&](std::size_t j) {
    std::vector<int> pos(n_, -1);
    local_factors_[j] = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(extract(S, local_[j], pos));
    if (local_factors_[j]->info() != Eigen::Success)
      throw SpdViolation("local Galerkin matrix " + std::to_string(j + 1) + " is not positive definite",
                         static_cast<int>(j + 1));
  });
  for (int c : overlap)
    if (c == 0 && Q0_.cols() == 0)
      throw AssemblyError("subspaces do not cover the interface space");
}

void SubspacePreconditioner::apply(const Eigen::VectorXd& r, Eigen::VectorXd& y) const
{
  if (r.size() != n_)
    throw std::invalid_argument("preconditioner: dimension mismatch");
  y = Eigen::VectorXd::Zero(n_);
  if (Q0_.cols() > 0)
    y = Q0_ * (coarse_singular_ ? Eigen::VectorXd(coarse_pinv_ * (Q0_.transpose() * r))
                                : Eigen::VectorXd(coarse_.solve(Q0_.transpose() * r)));
  std::vector<Eigen::VectorXd> corr(local_.size());
  parallel_for(local_.size(), threads_, [&](std::size_t j) {
    const auto& idx = local_[j];
    Eigen::VectorXd rj(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a)
      rj[static_cast<Eigen::Index>(a)] = r[idx[a]];
    corr[j] = local_factors_[j]->solve(rj);
  });
  for (std::size_t j = 0; j < local_.size(); ++j)
    for (std::size_t a = 0; a < local_[j].size(); ++a)
      y[local_[j][a]] += corr[j][static_cast<Eigen::Index>(a)];
}

SubspacePreconditioner build_preconditioner(const SparseMatrix& S, const DofMap& d, const FittedMesh& m, double H,
                                            int threads)
{
  if (d.n1() == 0)
    throw AssemblyError("no free interface dofs");
  const CoarseGrid grid = make_coarse_grid(m, H);
  auto local = local_subspaces(grid, d, m);
  for (const auto& idx : local)
    if (idx.size() == d.n1()) {
      return SubspacePreconditioner(S, SparseMatrix(static_cast<Eigen::Index>(d.n1()), 0), {idx}, threads);
    }
  return SubspacePreconditioner(S, coarse_prolongation(grid, d, m), std::move(local), threads);
}

} // namespace mdfe
