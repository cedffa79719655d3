#include "mdfe/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "mdfe/errors.hpp"
#include "mdfe/parallel.hpp"

namespace mdfe {

namespace {

constexpr Eigen::Index kColumnChunk = 64;

} // namespace

SchurOperator::SchurOperator(const BlockSystem& sys, int threads) : sys_(&sys), threads_(std::max(threads, 1))
{
  const Eigen::SparseMatrix<double, Eigen::RowMajor> A01_rows = sys.A01;
  const auto& off = sys.region_offsets;
  std::vector<int> region_ids;
  for (std::size_t r = 0; r + 1 < off.size(); ++r)
    if (off[r + 1] > off[r]) {
      RegionBlock b;
      b.offset = off[r];
      b.size = off[r + 1] - off[r];
      blocks_.push_back(std::move(b));
      region_ids.push_back(static_cast<int>(r));
    }
  if (!off.empty() && off.back() != sys.n0())
    throw AssemblyError("region offsets do not cover the bulk block");
  parallel_for(blocks_.size(), threads_, [&](std::size_t k) {
    RegionBlock& b = blocks_[k];
    const SparseMatrix block = sys.A00.block(b.offset, b.offset, b.size, b.size);
    b.factor = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(block);
    if (b.factor->info() != Eigen::Success)
      throw SpdViolation("bulk block of region " + std::to_string(region_ids[k]) + " is not positive definite",
                         region_ids[k]);
    b.A01 = A01_rows.middleRows(b.offset, b.size);
  });
  rhs_ = sys.b1 - sys.A10 * solve_bulk(sys.b0);
}

Eigen::VectorXd SchurOperator::solve_bulk(const Eigen::VectorXd& v) const
{
  Eigen::VectorXd out(v.size());
  parallel_for(blocks_.size(), threads_, [&](std::size_t k) {
    const RegionBlock& b = blocks_[k];
    out.segment(b.offset, b.size) = b.factor->solve(v.segment(b.offset, b.size));
  });
  return out;
}

void SchurOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const
{
  const Eigen::VectorXd w = solve_bulk(sys_->A01 * x);
  y = sys_->A11 * x - sys_->A10 * w;
}

Eigen::VectorXd SchurOperator::recover_bulk(const Eigen::VectorXd& U1) const
{
  return solve_bulk(sys_->b0 - sys_->A01 * U1);
}

SparseMatrix SchurOperator::assemble_explicit(double* asymmetry) const
{
  using Triplets = std::vector<Eigen::Triplet<double>>;
  std::vector<Triplets> parts(blocks_.size());
  parallel_for(blocks_.size(), threads_, [&](std::size_t k) {
    const RegionBlock& b = blocks_[k];
    std::vector<int> cols;
    for (int c = 0; c < b.A01.outerSize(); ++c)
      if (b.A01.col(c).nonZeros() > 0)
        cols.push_back(c);
    if (cols.empty())
      return;
    const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
    SparseMatrix C(b.size, nc);
    {
      Triplets t;
      for (Eigen::Index q = 0; q < nc; ++q)
        for (SparseMatrix::InnerIterator it(b.A01, cols[q]); it; ++it)
          t.emplace_back(it.row(), q, it.value());
      C.setFromTriplets(t.begin(), t.end());
    }
    const SparseMatrix Ct = C.transpose();
    Triplets& out = parts[k];
    out.reserve(nc * nc);
    for (Eigen::Index c0 = 0; c0 < nc; c0 += kColumnChunk) {
      const Eigen::Index w = std::min(kColumnChunk, nc - c0);
      const Eigen::MatrixXd rhs = Eigen::MatrixXd(C.middleCols(c0, w));
      const Eigen::MatrixXd X = b.factor->solve(rhs);
      const Eigen::MatrixXd P = Ct * X;
      for (Eigen::Index j = 0; j < w; ++j)
        for (Eigen::Index i = 0; i < nc; ++i)
          out.emplace_back(cols[i], cols[c0 + j], -P(i, j));
    }
  });
  Triplets all;
  for (int c = 0; c < sys_->A11.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(sys_->A11, c); it; ++it)
      all.emplace_back(it.row(), it.col(), it.value());
  for (auto& p : parts)
    all.insert(all.end(), p.begin(), p.end());
  SparseMatrix S(size(), size());
  S.setFromTriplets(all.begin(), all.end());
  const SparseMatrix St = S.transpose();
  if (asymmetry) {
    const double scale = S.nonZeros() ? S.coeffs().cwiseAbs().maxCoeff() : 0.0;
    const SparseMatrix diff = S - St;
    const double d = diff.nonZeros() ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
    *asymmetry = scale > 0.0 ? d / scale : 0.0;
  }
  SparseMatrix sym = 0.5 * (S + St);
  sym.makeCompressed();
  return sym;
}

DenseSchur assemble_schur_dense(const SchurOperator& op, Eigen::Index max_dofs)
{
  const Eigen::Index n = op.size();
  if (n > max_dofs)
    throw std::length_error("dense Schur complement with " + std::to_string(n) + " interface dofs exceeds the cap of " +
                            std::to_string(max_dofs) + "; use the sparse explicit or per-subspace path");
  DenseSchur out;
  out.S.resize(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n), col;
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    out.S.col(j) = col;
    e[j] = 0.0;
  }
  const double scale = n ? out.S.cwiseAbs().maxCoeff() : 0.0;
  out.asymmetry = scale > 0.0 ? (out.S - out.S.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  out.S = 0.5 * (out.S + out.S.transpose()).eval();
  return out;
}

std::pair<double, double> lanczos_extremes(const std::vector<double>& alpha, const std::vector<double>& beta)
{
  const Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
  if (m == 0)
    return {0.0, 0.0};
  Eigen::VectorXd diag(m), sub(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 0; k < m; ++k) {
    diag[k] = 1.0 / alpha[k];
    if (k > 0)
      diag[k] += beta[k - 1] / alpha[k - 1];
    if (k + 1 < m)
      sub[k] = std::sqrt(beta[k]) / alpha[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

PcgResult pcg(const LinearOperator& A, const LinearOperator& T, const Eigen::VectorXd& b, const Eigen::VectorXd& x0,
              const PcgOptions& options)
{
  const Eigen::Index n = A.size();
  if (b.size() != n || x0.size() != n || T.size() != n)
    throw std::invalid_argument("pcg: dimension mismatch");
  PcgResult res;
  res.x = x0;
  Eigen::VectorXd r = b - A * x0;
  Eigen::VectorXd z = T * r;
  double rz = r.dot(z);
  if (rz < 0.0)
    throw SpdViolation("preconditioner is not positive definite");
  const double r0 = std::sqrt(rz);
  res.residual_history.push_back(r0);
  if (r0 == 0.0) {
    res.converged = true;
    return res;
  }
  Eigen::VectorXd p = z, q(n);
  while (res.iterations < options.max_iterations) {
    A.apply(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0.0))
      throw SpdViolation("CG breakdown: p^T A p = " + std::to_string(pq));
    const double alpha = rz / pq;
    res.x += alpha * p;
    r -= alpha * q;
    T.apply(r, z);
    const double rz_new = r.dot(z);
    if (rz_new < 0.0)
      throw SpdViolation("preconditioner is not positive definite");
    ++res.iterations;
    res.alpha.push_back(alpha);
    res.residual_history.push_back(std::sqrt(rz_new));
    if (options.on_iterate)
      options.on_iterate(res.iterations, res.x);
    if (std::sqrt(rz_new) <= options.rtol * r0) {
      res.converged = true;
      break;
    }
    const double beta = rz_new / rz;
    res.beta.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }
  std::tie(res.lambda_min, res.lambda_max) = lanczos_extremes(res.alpha, res.beta);
  return res;
}

Eigen::VectorXd solve_monolithic(const BlockSystem& sys)
{
  const SparseMatrix A = sys.full_matrix();
  Eigen::SimplicialLLT<SparseMatrix> llt(A);
  if (llt.info() != Eigen::Success)
    throw SpdViolation("monolithic system is not positive definite");
  return llt.solve(sys.full_rhs());
}

void write_residual_history(std::ostream& out, const PcgResult& r)
{
  out.precision(17);
  out << "iteration,residual\n";
  for (std::size_t k = 0; k < r.residual_history.size(); ++k)
    out << k << ',' << r.residual_history[k] << '\n';
}

} // namespace mdfe
