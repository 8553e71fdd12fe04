#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "noisebound/bifurcation.hpp"
#include "noisebound/manifolds.hpp"
#include "noisebound/set_valued.hpp"

namespace noisebound {

enum class SweepKind { real_to_complex, fold, heteroclinic, topological, cascade };

std::string to_string(SweepKind k);

struct BoundarySettings {
  // Orbit guesses; each is one or more chart points (a periodic orbit guess).
  std::vector<std::vector<BoundaryPoint>> orbits;
  bool stable_targets = true;   // stable orbits found stop unstable branches
  bool stable_manifolds = true;  // also grow stable manifolds of saddle-2u orbits
  bool prune = true;             // prune projections against the attractor cover
  double near_radius = 0.1;      // wedges counted near stable orbit points
  double min_sharpness = 0.0;
};

struct SweepSettings {
  SweepKind kind = SweepKind::topological;
  ParamName parameter = ParamName::a;
  double from = 0.0;
  double to = 0.0;
  int count = 0;                // topological: number of values from..to
  std::vector<double> values;   // topological: explicit values (override count)
  std::vector<BoundaryPoint> orbit;    // real-to-complex start; fold branch A; heteroclinic unstable saddle
  std::vector<BoundaryPoint> orbit_b;  // fold branch B; heteroclinic stable saddle
  std::vector<BoundaryPoint> stable;   // cascade stable orbit
  double tol = 1e-9;
  StepPolicy step;
  int scan_samples = 8;
  StaircaseOptions staircase;
};

struct RunConfig {
  std::string source;
  std::string map = "henon";  // henon | affine
  Params params;
  Mat2 affine_matrix = Mat2::identity();
  Point2 affine_offset;
  GridSpec grid;
  SamplingSpec sampling;
  AttractorOptions attractor;
  Point2 seed;
  int collar = kDefaultCollar;
  std::optional<std::string> previous;  // BoxSet CSV of an earlier attractor
  GrowthConfig growth;
  BoundarySettings boundary;
  SweepSettings sweep;
  std::optional<std::string> fit_input;
  std::string out = "out";
  int workers = 1;

  std::shared_ptr<const PlanarMap> make_map() const;
  EngineConfig engine() const;
  // Cross-field checks; every failure is an Error of kind config.
  void validate() const;
};

// Sections and keys:
//   [map] kind, a, b, eps, matrix (4 numbers, row-major), offset (2 numbers)
//   [grid] xmin, ymin, xmax, ymax, depth
//   [sampling] k, bloat, pad, mode (outer | centre)
//   [attractor] seed (x y), transient, max_iterations, rng_seed, collar, previous
//   [growth] delta0, max_arc, max_points, min_step, max_step, max_turn, theta_weight, target_tol
//   [boundary] orbit (repeatable; points "x y theta" separated by ';'), stable_targets,
//              stable_manifolds, prune, near_radius, min_sharpness
//   [sweep] kind, parameter, from, to, count, values, orbit, orbit_b, stable, tol,
//           step_initial, step_min, step_max, scan_samples, grid_step, jump_threshold,
//           bisection_tol, max_count
//   [fit] input
//   [run] out, workers
// '#' and ';' at the start of a line begin comments. Unknown sections or keys,
// repeated non-repeatable keys and malformed values raise Error(config) with
// "source:line:" in the message.
RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig load_config(const std::string& path);

}  // namespace noisebound
