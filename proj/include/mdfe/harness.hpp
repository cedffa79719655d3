#pragma once

/** @file harness.hpp
    @brief Random geometries and the convergence / iteration-count studies.
*/

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mdfe/assembly.hpp"
#include "mdfe/geometry.hpp"
#include "mdfe/mesh.hpp"
#include "mdfe/space.hpp"

namespace mdfe {

/// Chords through a uniform random interior point with uniform random
/// direction, clipped to the unit square.
std::vector<Segment2D> gen_infinite_chords(int count, std::uint64_t seed);

/// Segments with uniform random center, direction and length in
/// (0, max_length], clipped to the unit square.
std::vector<Segment2D> gen_finite_segments(int count, double max_length, std::uint64_t seed);

enum class GeometryKind { File, InfiniteChords, FiniteSegments };

struct GeometrySpec {
  GeometryKind kind = GeometryKind::InfiniteChords;
  std::string file;
  int count = 50;
  double max_length = 0.2;
  std::uint64_t seed = 1;

  /// "chords:COUNT", "finite:COUNT[,MAX_LENGTH]" or a path to a segment file.
  static GeometrySpec parse(const std::string& text);
  std::string describe() const;
};

std::vector<Segment2D> make_segments(const GeometrySpec& g);

/// Interface coefficient: a constant, or independent uniform draws per interface edge.
struct IfaceCoefficient {
  bool uniform = false;
  double value = 1.0;
  double lo = 0.01, hi = 1.0;

  /// "const:V" or "uniform:A,B"
  static IfaceCoefficient parse(const std::string& text);
  std::string describe() const;
};

Coefficients make_coefficients(const FittedMesh& m, double a_bulk, const IfaceCoefficient& a_iface, double b,
                               std::uint64_t seed);

struct ExperimentConfig {
  GeometrySpec geometry;
  double A_bulk = 1.0;
  std::vector<IfaceCoefficient> A_iface{IfaceCoefficient{}};
  std::vector<double> B{1.0};
  double h_target = 1.0 / 128.0;
  int levels = 3;                 ///< convergence: finest compared level; the reference uses levels + 1
  std::vector<int> study_levels{0}; ///< iteration study: refinement levels to run
  std::vector<double> H{1.0 / 8.0, 1.0 / 16.0};
  double rtol = 1e-8;
  bool unpreconditioned = false;
  int threads = 1;
  std::uint64_t coefficient_seed = 7;
  ScalarField source = exp_source; ///< load on bulk and interfaces

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

/// Initial mesh and its nested refinements.
struct Hierarchy {
  MixedDomain domain;
  std::vector<std::shared_ptr<const FittedMesh>> meshes;
  std::vector<DofMap> dofs;
};

Hierarchy build_hierarchy(const std::vector<Segment2D>& segments, double h_target, int finest_level);

struct ConvergenceRow {
  int level;
  double h;
  std::size_t dofs;
  double energy_error;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double reference_h = 0.0;
  std::size_t reference_dofs = 0;
  double reference_energy = 0.0;
  double slope = 0.0; ///< least-squares slope of log(error) against log(h)
};

/// Uses A_iface[0] and B[0].
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

struct IterationRow {
  int level;
  double h;
  std::size_t n1;
  double H;
  std::string A_iface;
  double B;
  int iterations;
  bool converged;
  double kappa;
  int unpreconditioned_iterations; ///< -1 when not requested
};

std::vector<IterationRow> run_iteration_study(const ExperimentConfig& cfg);

double loglog_slope(const std::vector<double>& h, const std::vector<double>& err);

void write_convergence_csv(std::ostream& out, const ExperimentConfig& cfg, const ConvergenceResult& r);
void write_iterations_csv(std::ostream& out, const ExperimentConfig& cfg, const std::vector<IterationRow>& rows);
void write_convergence_gnuplot(std::ostream& out, const std::string& csv_name);
void write_iterations_gnuplot(std::ostream& out, const std::string& csv_name);

} // namespace mdfe
