#include "mdfe/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mdfe/errors.hpp"
#include "mdfe/precond.hpp"
#include "mdfe/solver.hpp"

namespace mdfe {

namespace {

// Parameter interval of p + t d inside the unit square, intersected with [lo, hi].
std::pair<double, double> clip_to_square(Point2 p, Point2 d, double lo, double hi)
{
  auto slab = [&](double x, double dx) {
    if (std::abs(dx) < 1e-15)
      return;
    double t0 = -x / dx, t1 = (1.0 - x) / dx;
    if (t0 > t1)
      std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  };
  slab(p.x, d.x);
  slab(p.y, d.y);
  return {lo, hi};
}

Point2 clamp_unit(Point2 p) { return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)}; }

std::string fmt(double v)
{
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

} // namespace

std::vector<Segment2D> gen_infinite_chords(int count, std::uint64_t seed)
{
  if (count < 1)
    throw std::invalid_argument("chord count must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Segment2D> out;
  while (static_cast<int>(out.size()) < count) {
    const Point2 p{unit(rng), unit(rng)};
    const double theta = std::numbers::pi * unit(rng);
    const Point2 d{std::cos(theta), std::sin(theta)};
    const auto [t0, t1] = clip_to_square(p, d, -1e9, 1e9);
    if (t1 - t0 < 1e-6)
      continue;
    out.push_back({clamp_unit(p + t0 * d), clamp_unit(p + t1 * d)});
  }
  return out;
}

std::vector<Segment2D> gen_finite_segments(int count, double max_length, std::uint64_t seed)
{
  if (count < 1)
    throw std::invalid_argument("segment count must be positive");
  if (!(max_length > 0.0 && max_length <= std::sqrt(2.0)))
    throw std::invalid_argument("max_length must lie in (0, sqrt 2]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Segment2D> out;
  while (static_cast<int>(out.size()) < count) {
    const Point2 c{unit(rng), unit(rng)};
    const double theta = std::numbers::pi * unit(rng);
    const double len = max_length * (1.0 - unit(rng));
    const Point2 d{std::cos(theta), std::sin(theta)};
    const auto [t0, t1] = clip_to_square(c, d, -0.5 * len, 0.5 * len);
    if (t1 - t0 < 1e-6)
      continue;
    out.push_back({clamp_unit(c + t0 * d), clamp_unit(c + t1 * d)});
  }
  return out;
}

GeometrySpec GeometrySpec::parse(const std::string& text)
{
  GeometrySpec g;
  auto number_list = [&](const std::string& rest) {
    std::vector<double> v;
    std::stringstream s(rest);
    std::string item;
    while (std::getline(s, item, ','))
      v.push_back(std::stod(item));
    return v;
  };
  if (text.rfind("chords:", 0) == 0) {
    g.kind = GeometryKind::InfiniteChords;
    g.count = std::stoi(text.substr(7));
  }
  else if (text.rfind("finite:", 0) == 0) {
    g.kind = GeometryKind::FiniteSegments;
    const auto v = number_list(text.substr(7));
    if (v.empty() || v.size() > 2)
      throw std::invalid_argument("expected finite:COUNT[,MAX_LENGTH]");
    g.count = static_cast<int>(v[0]);
    if (v.size() == 2)
      g.max_length = v[1];
  }
  else {
    g.kind = GeometryKind::File;
    g.file = text;
  }
  return g;
}

std::string GeometrySpec::describe() const
{
  switch (kind) {
  case GeometryKind::InfiniteChords:
    return "chords:" + std::to_string(count) + " seed=" + std::to_string(seed);
  case GeometryKind::FiniteSegments:
    return "finite:" + std::to_string(count) + "," + fmt(max_length) + " seed=" + std::to_string(seed);
  case GeometryKind::File:
    break;
  }
  return "file:" + file;
}

std::vector<Segment2D> make_segments(const GeometrySpec& g)
{
  switch (g.kind) {
  case GeometryKind::InfiniteChords:
    return gen_infinite_chords(g.count, g.seed);
  case GeometryKind::FiniteSegments:
    return gen_finite_segments(g.count, g.max_length, g.seed);
  case GeometryKind::File:
    break;
  }
  std::ifstream in(g.file);
  if (!in)
    throw std::runtime_error("cannot open segment file " + g.file);
  return read_segments(in);
}

IfaceCoefficient IfaceCoefficient::parse(const std::string& text)
{
  IfaceCoefficient c;
  if (text.rfind("const:", 0) == 0) {
    c.value = std::stod(text.substr(6));
  }
  else if (text.rfind("uniform:", 0) == 0) {
    const std::string rest = text.substr(8);
    const auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("expected uniform:A,B");
    c.uniform = true;
    c.lo = std::stod(rest.substr(0, comma));
    c.hi = std::stod(rest.substr(comma + 1));
    if (!(c.lo > 0.0 && c.lo <= c.hi))
      throw std::invalid_argument("uniform interface coefficient needs 0 < A <= B");
  }
  else {
    throw std::invalid_argument("interface coefficient must be const:V or uniform:A,B, got " + text);
  }
  return c;
}

std::string IfaceCoefficient::describe() const
{
  return uniform ? "uniform:" + fmt(lo) + "," + fmt(hi) : "const:" + fmt(value);
}

Coefficients make_coefficients(const FittedMesh& m, double a_bulk, const IfaceCoefficient& a_iface, double b,
                               std::uint64_t seed)
{
  Coefficients c = Coefficients::constant(m, a_bulk, a_iface.value, b);
  if (a_iface.uniform) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(a_iface.lo, a_iface.hi);
    for (double& a : c.A_iface)
      a = dist(rng);
    c.update_bounds();
  }
  return c;
}

void ExperimentConfig::validate() const
{
  if (!(A_bulk > 0.0))
    throw std::invalid_argument("A_bulk must be positive");
  if (A_iface.empty() || B.empty() || H.empty())
    throw std::invalid_argument("coefficient and coarse-size lists must not be empty");
  for (double b : B)
    if (!(b >= 0.0))
      throw std::invalid_argument("B must be non-negative");
  for (double h : H)
    if (!(h > 0.0))
      throw std::invalid_argument("H must be positive");
  if (!(h_target > 0.0))
    throw std::invalid_argument("h must be positive");
  if (levels < 1)
    throw std::invalid_argument("levels must be at least 1");
  if (!(rtol > 0.0 && rtol < 1.0))
    throw std::invalid_argument("rtol must lie in (0, 1)");
  for (int l : study_levels)
    if (l < 0)
      throw std::invalid_argument("study levels must be non-negative");
  if (!source)
    throw std::invalid_argument("source must be set");
  if (geometry.count < 1 || !(geometry.max_length > 0.0))
    throw std::invalid_argument("geometry count and max_length must be positive");
}

Hierarchy build_hierarchy(const std::vector<Segment2D>& segments, double h_target, int finest_level)
{
  Hierarchy h;
  const auto square = unit_square();
  h.domain = build_arrangement(square, segments);
  h.meshes.push_back(std::make_shared<const FittedMesh>(triangulate(h.domain, h_target)));
  for (int l = 1; l <= finest_level; ++l)
    h.meshes.push_back(std::make_shared<const FittedMesh>(refine(h.meshes.back())));
  for (const auto& m : h.meshes)
    h.dofs.push_back(build_dofmap(*m));
  return h;
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& err)
{
  const std::size_t n = h.size();
  if (n < 2)
    return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::log(h[k]), y = std::log(err[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg)
{
  cfg.validate();
  GeometrySpec geo = cfg.geometry;
  const Hierarchy hier = build_hierarchy(make_segments(geo), cfg.h_target, cfg.levels + 1);
  const int ref = cfg.levels + 1;

  // Coefficients drawn on the initial mesh and inherited by children.
  std::vector<Coefficients> coef;
  coef.push_back(make_coefficients(*hier.meshes[0], cfg.A_bulk, cfg.A_iface[0], cfg.B[0], cfg.coefficient_seed));
  for (int l = 1; l <= ref; ++l) {
    const FittedMesh& m = *hier.meshes[l];
    Coefficients c = Coefficients::constant(m, cfg.A_bulk, 1.0, cfg.B[0]);
    for (std::size_t e = 0; e < m.interface_edges.size(); ++e) {
      c.A_iface[e] = coef.back().A_iface[m.interface_edge_parent[e]];
      c.B_iface[e] = coef.back().B_iface[m.interface_edge_parent[e]];
    }
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      c.A_bulk[t] = coef.back().A_bulk[m.triangle_parent[t]];
    c.update_bounds();
    coef.push_back(std::move(c));
  }

  AssemblyOptions opt;
  opt.threads = cfg.threads;
  std::vector<Eigen::VectorXd> bulk(ref + 1), iface(ref + 1);
  BlockSystem ref_sys;
  for (int l = 0; l <= ref; ++l) {
    const FittedMesh& m = *hier.meshes[l];
    const DofMap& d = hier.dofs[l];
    BlockSystem sys = assemble(m, d, coef[l], cfg.source, cfg.source, opt);
    const Eigen::VectorXd U = solve_monolithic(sys);
    bulk[l] = expand_bulk(U.head(sys.n0()), d, dirichlet_bulk_values(d, m, opt.dirichlet));
    iface[l] = expand_iface(U.tail(sys.n1()), d, dirichlet_iface_values(d, m, opt.dirichlet));
    if (l == ref)
      ref_sys = std::move(sys);
  }

  ConvergenceResult res;
  const DofMap& dref = hier.dofs[ref];
  res.reference_h = hier.meshes[ref]->h;
  res.reference_dofs = dref.n0() + dref.n1();
  {
    Eigen::VectorXd U(ref_sys.size());
    U << restrict_bulk(bulk[ref], dref), restrict_iface(iface[ref], dref);
    res.reference_energy = energy_norm(ref_sys, U);
  }
  std::vector<double> hs, errs;
  for (int l = 0; l <= cfg.levels; ++l) {
    Eigen::VectorXd b = bulk[l], i = iface[l];
    for (int k = l + 1; k <= ref; ++k) {
      b = prolongate_bulk(b, hier.dofs[k - 1], hier.dofs[k], *hier.meshes[k]);
      i = prolongate_iface(i, hier.dofs[k - 1], hier.dofs[k], *hier.meshes[k]);
    }
    Eigen::VectorXd E(ref_sys.size());
    E << restrict_bulk(bulk[ref] - b, dref), restrict_iface(iface[ref] - i, dref);
    const double err = energy_norm(ref_sys, E);
    res.rows.push_back({l, hier.meshes[l]->h, hier.dofs[l].n0() + hier.dofs[l].n1(), err});
    hs.push_back(hier.meshes[l]->h);
    errs.push_back(err);
  }
  const bool all_zero = std::all_of(errs.begin(), errs.end(), [](double e) { return e == 0.0; });
  res.slope = all_zero ? 0.0 : loglog_slope(hs, errs);
  return res;
}

std::vector<IterationRow> run_iteration_study(const ExperimentConfig& cfg)
{
  cfg.validate();
  const int finest = cfg.study_levels.empty() ? 0 : *std::max_element(cfg.study_levels.begin(), cfg.study_levels.end());
  const Hierarchy hier = build_hierarchy(make_segments(cfg.geometry), cfg.h_target, finest);
  AssemblyOptions opt;
  opt.threads = cfg.threads;
  std::vector<IterationRow> rows;
  for (int level : cfg.study_levels) {
    const FittedMesh& m = *hier.meshes[level];
    const DofMap& d = hier.dofs[level];
    for (const auto& a : cfg.A_iface)
      for (double b : cfg.B) {
        const Coefficients c = make_coefficients(m, cfg.A_bulk, a, b, cfg.coefficient_seed + level);
        const BlockSystem sys = assemble(m, d, c, cfg.source, cfg.source, opt);
        const SchurOperator op(sys, cfg.threads);
        const SparseMatrix S = op.assemble_explicit();
        const SparseOperator Sop(S);
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sys.n1());
        PcgOptions po;
        po.rtol = cfg.rtol;
        int plain = -1;
        if (cfg.unpreconditioned) {
          PcgOptions big = po;
          big.max_iterations = 200000;
          plain = pcg(Sop, IdentityOperator(sys.n1()), op.reduced_rhs(), x0, big).iterations;
        }
        for (double H : cfg.H) {
          const SubspacePreconditioner T = build_preconditioner(S, d, m, H, cfg.threads);
          const PcgResult r = pcg(Sop, T, op.reduced_rhs(), x0, po);
          rows.push_back({level, m.h, d.n1(), H, a.describe(), b, r.iterations, r.converged, r.kappa(), plain});
        }
      }
  }
  return rows;
}

void write_convergence_csv(std::ostream& out, const ExperimentConfig& cfg, const ConvergenceResult& r)
{
  out.precision(12);
  out << "# convergence study: geometry " << cfg.geometry.describe() << ", h_target " << cfg.h_target
      << ", A_bulk " << cfg.A_bulk << ", A_iface " << cfg.A_iface[0].describe() << ", B " << cfg.B[0]
      << ", coefficient_seed " << cfg.coefficient_seed << '\n';
  out << "# load: 3-point mid-edge rule on triangles, 2-point Gauss on interface edges; boundary data g = 0\n";
  out << "# reference: level " << cfg.levels + 1 << ", h " << r.reference_h << ", dofs " << r.reference_dofs
      << ", energy " << r.reference_energy << '\n';
  out << "# fitted slope " << r.slope << '\n';
  out << "level,h,dofs,energy_error\n";
  for (const auto& row : r.rows)
    out << row.level << ',' << row.h << ',' << row.dofs << ',' << row.energy_error << '\n';
}

void write_iterations_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<IterationRow>& rows)
{
  out.precision(12);
  out << "# iteration study: geometry " << cfg.geometry.describe() << ", h_target " << cfg.h_target << ", A_bulk "
      << cfg.A_bulk << ", rtol " << cfg.rtol << ", coefficient_seed " << cfg.coefficient_seed << '\n';
  out << "level,h,n1,H,A_iface,B,iterations,converged,kappa,unpreconditioned_iterations\n";
  for (const auto& r : rows)
    out << r.level << ',' << r.h << ',' << r.n1 << ',' << r.H << ',' << r.A_iface << ',' << r.B << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.kappa << ',' << r.unpreconditioned_iterations
        << '\n';
}

void write_convergence_gnuplot(std::ostream& out, const std::string& csv_name)
{
  out << "set datafile separator ','\n"
         "set logscale xy\n"
         "set xlabel 'h'\n"
         "set ylabel 'energy error'\n"
         "set key top left\n"
         "set terminal pngcairo size 800,600\n"
         "set output 'convergence.png'\n"
         "plot '"
      << csv_name
      << "' using 2:4 skip 5 with linespoints title 'energy error', \\\n"
         "     x title 'O(h)'\n";
}

void write_iterations_gnuplot(std::ostream& out, const std::string& csv_name)
{
  out << "set datafile separator ','\n"
         "set logscale x\n"
         "set xlabel 'B'\n"
         "set ylabel 'PCG iterations'\n"
         "set key top left\n"
         "set terminal pngcairo size 800,600\n"
         "set output 'iterations.png'\n"
         "plot '"
      << csv_name << "' using 6:7 skip 2 with points pointtype 7 title 'iterations'\n";
}

} // namespace mdfe
