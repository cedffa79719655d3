// mdfe: command line driver for meshing, solving and the experiment studies.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdfe/analysis.hpp"
#include "mdfe/errors.hpp"
#include "mdfe/harness.hpp"
#include "mdfe/precond.hpp"
#include "mdfe/solver.hpp"

namespace fs = std::filesystem;
using namespace mdfe;

namespace {

struct Options {
  std::string geometry = "chords:50";
  std::uint64_t seed = 1;
  double h = 1.0 / 128.0;
  int levels = 3;
  int refine = 0;
  std::vector<int> study_levels{0};
  std::vector<double> H{1.0 / 8.0, 1.0 / 16.0};
  double A_bulk = 1.0;
  std::vector<std::string> A_iface{"const:1"};
  std::vector<double> B{1.0};
  double rtol = 1e-8;
  std::uint64_t coefficient_seed = 7;
  bool unpreconditioned = false;
  bool export_matrix = false;
  std::string out = ".";
  int threads = 1;
};

ExperimentConfig to_config(const Options& o)
{
  ExperimentConfig c;
  c.geometry = GeometrySpec::parse(o.geometry);
  c.geometry.seed = o.seed;
  c.A_bulk = o.A_bulk;
  c.A_iface.clear();
  for (const auto& a : o.A_iface)
    c.A_iface.push_back(IfaceCoefficient::parse(a));
  c.B = o.B;
  c.h_target = o.h;
  c.levels = o.levels;
  c.study_levels = o.study_levels;
  c.H = o.H;
  c.rtol = o.rtol;
  c.unpreconditioned = o.unpreconditioned;
  c.threads = o.threads;
  c.coefficient_seed = o.coefficient_seed;
  c.validate();
  return c;
}

std::ofstream open_out(const Options& o, const std::string& name)
{
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / name;
  std::ofstream f(p);
  if (!f)
    throw std::runtime_error("cannot write " + p.string());
  f.precision(15);
  return f;
}

template <class T>
std::string str(const T& v)
{
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

using Report = std::vector<std::pair<std::string, std::string>>;

void print(const Report& r)
{
  write_report(std::cout, r);
}

Hierarchy hierarchy_for(const Options& o, const ExperimentConfig& c)
{
  if (o.refine < 0)
    throw std::invalid_argument("--refine must be non-negative");
  return build_hierarchy(make_segments(c.geometry), c.h_target, o.refine);
}

int cmd_mesh(const Options& o)
{
  const ExperimentConfig c = to_config(o);
  const auto segments = make_segments(c.geometry);
  const Hierarchy hier = build_hierarchy(segments, c.h_target, o.refine);
  const FittedMesh& m = *hier.meshes.back();
  {
    auto f = open_out(o, "segments.txt");
    write_segments(f, segments);
  }
  {
    auto f = open_out(o, "mesh.txt");
    write_mesh(f, m);
  }
  const Report r{{"geometry", c.geometry.describe()},
                 {"segments", str(hier.domain.num_segments())},
                 {"regions", str(hier.domain.num_regions())},
                 {"junctions", str(hier.domain.junction_points.size())},
                 {"free_tips", str(hier.domain.free_tips.size())},
                 {"level", str(o.refine)},
                 {"vertices", str(m.num_vertices())},
                 {"triangles", str(m.num_triangles())},
                 {"interface_edges", str(m.interface_edges.size())},
                 {"h", str(m.h)},
                 {"min_angle_deg", str(m.min_angle_deg)},
                 {"bulk_dofs_free", str(hier.dofs.back().n0())},
                 {"iface_dofs_free", str(hier.dofs.back().n1())}};
  auto f = open_out(o, "mesh_report.txt");
  write_report(f, r);
  print(r);
  return 0;
}

int cmd_solve(const Options& o)
{
  const ExperimentConfig c = to_config(o);
  const Hierarchy hier = hierarchy_for(o, c);
  const FittedMesh& m = *hier.meshes.back();
  const DofMap& d = hier.dofs.back();
  const Coefficients coef = make_coefficients(m, c.A_bulk, c.A_iface[0], c.B[0], c.coefficient_seed + o.refine);
  AssemblyOptions ao;
  ao.threads = c.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const BlockSystem sys = assemble(m, d, coef, exp_source, exp_source, ao);
  if (o.export_matrix) {
    auto f = open_out(o, "matrix.coo");
    write_coo(f, sys.full_matrix());
  }
  const SchurOperator op(sys, c.threads);
  double asym = 0.0;
  const SparseMatrix S = op.assemble_explicit(&asym);
  const SubspacePreconditioner T = build_preconditioner(S, d, m, c.H[0], c.threads);
  PcgOptions po;
  po.rtol = c.rtol;
  const PcgResult res = pcg(SparseOperator(S), T, op.reduced_rhs(), Eigen::VectorXd::Zero(sys.n1()), po);
  const Eigen::VectorXd U0 = op.recover_bulk(res.x);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Eigen::VectorXd U(sys.size());
  U << U0, res.x;
  const Eigen::VectorXd bulk = expand_bulk(U0, d, dirichlet_bulk_values(d, m, ao.dirichlet));
  const Eigen::VectorXd iface = expand_iface(res.x, d, dirichlet_iface_values(d, m, ao.dirichlet));
  {
    auto f = open_out(o, "residual.csv");
    write_residual_history(f, res);
  }
  {
    auto f = open_out(o, "solution_bulk.csv");
    f << "x,y,region,value\n";
    for (std::size_t k = 0; k < d.num_bulk(); ++k) {
      const Point2 p = m.vertices[d.bulk_vertex[k]];
      f << p.x << ',' << p.y << ',' << d.bulk_region[k] << ',' << bulk[static_cast<Eigen::Index>(k)] << '\n';
    }
  }
  {
    auto f = open_out(o, "solution_iface.csv");
    f << "x,y,value\n";
    for (std::size_t k = 0; k < d.num_iface(); ++k) {
      const Point2 p = m.vertices[d.iface_vertex[k]];
      f << p.x << ',' << p.y << ',' << iface[static_cast<Eigen::Index>(k)] << '\n';
    }
  }
  const auto st = T.stats();
  Report r{{"geometry", c.geometry.describe()},
           {"level", str(o.refine)},
           {"h", str(m.h)},
           {"n0", str(sys.n0())},
           {"n1", str(sys.n1())},
           {"H", str(c.H[0])},
           {"A_iface", c.A_iface[0].describe()},
           {"B", str(c.B[0])},
           {"coarse_dim", str(st.coarse_dim)},
           {"coarse_rank", str(st.coarse_rank)},
           {"local_subspaces", str(st.num_local)},
           {"schur_asymmetry", str(asym)},
           {"iterations", str(res.iterations)},
           {"converged", res.converged ? "true" : "false"},
           {"kappa", str(res.kappa())},
           {"energy_norm", str(energy_norm(sys, U))},
           {"seconds", str(seconds)}};
  if (sys.size() <= 200000) {
    const Eigen::VectorXd ref = solve_monolithic(sys);
    r.emplace_back("monolithic_energy_difference", str(energy_norm(sys, Eigen::VectorXd(U - ref))));
  }
  auto f = open_out(o, "solve_report.txt");
  write_report(f, r);
  print(r);
  return res.converged ? 0 : 2;
}

int cmd_convergence(const Options& o)
{
  const ExperimentConfig c = to_config(o);
  const ConvergenceResult r = run_convergence(c);
  {
    auto f = open_out(o, "convergence.csv");
    write_convergence_csv(f, c, r);
  }
  {
    auto f = open_out(o, "convergence.gp");
    write_convergence_gnuplot(f, "convergence.csv");
  }
  write_convergence_csv(std::cout, c, r);
  return 0;
}

int cmd_iterations(const Options& o)
{
  const ExperimentConfig c = to_config(o);
  const auto rows = run_iteration_study(c);
  {
    auto f = open_out(o, "iterations.csv");
    write_iterations_csv(f, c, rows);
  }
  {
    auto f = open_out(o, "iterations.gp");
    write_iterations_gnuplot(f, "iterations.csv");
  }
  write_iterations_csv(std::cout, c, rows);
  for (const auto& row : rows)
    if (!row.converged)
      return 2;
  return 0;
}

int cmd_diagnose(const Options& o)
{
  const ExperimentConfig c = to_config(o);
  const Hierarchy hier = hierarchy_for(o, c);
  const FittedMesh& m = *hier.meshes.back();
  const DofMap& d = hier.dofs.back();
  Report r{{"geometry", c.geometry.describe()},
           {"level", str(o.refine)},
           {"h", str(m.h)},
           {"regions", str(hier.domain.num_regions())},
           {"segments", str(hier.domain.num_segments())},
           {"n1", str(d.n1())}};

  const InterfaceGraph g = interface_graph(m, d);
  const SparseMatrix L = graph_laplacian(g, true);
  const Eigen::VectorXd M = mass_matrix(g, true);
  const PoincareResult P = poincare_constant(L, M);
  r.emplace_back("poincare_D", P.infinite ? "inf" : str(P.D));
  r.emplace_back("floating_components", str(P.floating_components.size()));

  const Coefficients coef = make_coefficients(m, c.A_bulk, c.A_iface[0], c.B[0], c.coefficient_seed + o.refine);
  if (!P.infinite && d.n1() > 0) {
    AssemblyOptions ao;
    ao.threads = c.threads;
    const BlockSystem sys = assemble(m, d, coef, exp_source, exp_source, ao);
    const SchurOperator op(sys, c.threads);
    const SparseMatrix S = op.assemble_explicit();
    const SpectralBounds sb = spectral_equivalence(S, L, coef, P.D);
    r.emplace_back("c1", str(sb.c1));
    r.emplace_back("c2", str(sb.c2));
    r.emplace_back("c2_bound", str(sb.bound));
    r.emplace_back("c2_bound_holds", sb.bound_holds ? "true" : "false");
    r.emplace_back("spectrum", sb.dense ? "dense" : "lanczos");
  }

  const CoercivityWalk w = coercivity_walk(hier.domain);
  r.emplace_back("walk_ok", w.ok ? "true" : "false");
  r.emplace_back("walk_length", str(w.length));
  r.emplace_back("unreachable_segments", str(w.unreachable_segments.size()));

  const auto corners = classify_corners(hier.domain);
  double min_lambda = INFINITY;
  int warnings = 0;
  {
    auto f = open_out(o, "corners.csv");
    f << "region,vertex,x,y,omega,kind,dirichlet_dirichlet,tip,lambda_min,sobolev_index\n";
    for (const auto& k : corners) {
      const Point2 p = hier.domain.vertices[k.vertex];
      const double lam = k.exponents.lambdas.empty() ? NAN : k.exponents.lambdas.front();
      if (!k.exponents.lambdas.empty())
        min_lambda = std::min(min_lambda, lam);
      warnings += static_cast<int>(k.exponents.warnings.size());
      f << k.region << ',' << k.vertex << ',' << p.x << ',' << p.y << ',' << k.omega << ','
        << (k.kind == CornerKind::S ? 'S' : 'M') << ',' << k.dirichlet_dirichlet << ',' << k.tip << ',' << lam << ','
        << k.exponents.sobolev_index << '\n';
    }
  }
  r.emplace_back("corners", str(corners.size()));
  r.emplace_back("min_singular_exponent", std::isfinite(min_lambda) ? str(min_lambda) : "none");
  r.emplace_back("corner_warnings", str(warnings));

  for (double H : c.H) {
    const NetworkStats ns = network_statistics(m, H);
    const std::string k = "H=" + str(H) + ".";
    r.emplace_back(k + "max_edge", str(ns.max_edge));
    r.emplace_back(k + "mean_cell_length", str(ns.mean_cell_length));
    r.emplace_back(k + "cell_length_variance", str(ns.cell_length_variance));
    r.emplace_back(k + "disconnected_cells", str(ns.disconnected_cells));
    r.emplace_back(k + "empty_cells", str(ns.empty_cells));
  }
  auto f = open_out(o, "diagnose.txt");
  write_report(f, r);
  print(r);
  return 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Mixed-dimensional elliptic solver with interface Schur complement and subspace preconditioner"};
  app.set_help_flag("--help", "print help and exit");
  app.set_config("--config", "", "TOML/INI file with option values (keys are the long option names)");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--geometry", o.geometry, "chords:N | finite:N[,MAX_LENGTH] | segment file")->capture_default_str();
  app.add_option("--seed", o.seed, "geometry seed")->capture_default_str();
  app.add_option("--h", o.h, "target edge length of the initial mesh")->capture_default_str();
  app.add_option("--levels", o.levels, "convergence: finest compared level, reference one above")
      ->capture_default_str();
  app.add_option("--refine", o.refine, "mesh/solve/diagnose: uniform refinements of the initial mesh")
      ->capture_default_str();
  app.add_option("--study-levels", o.study_levels, "iterations: refinement levels")->delimiter(',');
  app.add_option("--H", o.H, "coarse mesh sizes")->delimiter(',');
  app.add_option("--A-bulk", o.A_bulk, "bulk coefficient")->capture_default_str();
  app.add_option("--A-iface", o.A_iface, "interface coefficients: const:V | uniform:A,B")->delimiter(';');
  app.add_option("--B", o.B, "coupling coefficients")->delimiter(',');
  app.add_option("--rtol", o.rtol, "PCG tolerance on the preconditioned residual")->capture_default_str();
  app.add_option("--coefficient-seed", o.coefficient_seed, "seed for random interface coefficients")
      ->capture_default_str();
  app.add_flag("--unpreconditioned", o.unpreconditioned, "iterations: also run plain CG");
  app.add_flag("--export-matrix", o.export_matrix, "solve: write the full matrix as matrix.coo");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  int (*run)(const Options&) = nullptr;
  app.add_subcommand("mesh", "build and write the fitted mesh")->callback([&] { run = cmd_mesh; });
  app.add_subcommand("solve", "solve one problem with Schur complement PCG")->callback([&] { run = cmd_solve; });
  app.add_subcommand("convergence", "energy error against a refined reference")->callback([&] {
    run = cmd_convergence;
  });
  app.add_subcommand("iterations", "PCG iteration counts over H, A_iface and B")->callback([&] {
    run = cmd_iterations;
  });
  app.add_subcommand("diagnose", "graph constants, spectral bounds, walk and corner exponents")->callback([&] {
    run = cmd_diagnose;
  });

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run(o);
  }
  catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
  }
  catch (const MeshingError& e) {
    std::cerr << "meshing error: " << e.what() << '\n';
  }
  catch (const SpdViolation& e) {
    std::cerr << "not positive definite: " << e.what() << '\n';
  }
  catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
