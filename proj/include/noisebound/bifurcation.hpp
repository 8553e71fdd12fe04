#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "noisebound/manifolds.hpp"
#include "noisebound/periodic.hpp"
#include "noisebound/set_valued.hpp"
#include "noisebound/singularities.hpp"

namespace noisebound {

struct StepPolicy {
  double initial = 1e-3;
  double min = 1e-7;
  double max = 1e-2;
  int halve_at = 8;    // Newton iterations at or above this halve the next step
  int double_at = 3;   // at or below this double it
  double max_jump = 0.05;  // chart distance a sample may move from the predictor
  std::size_t max_samples = 20000;

  void validate() const;
};

struct BranchSample {
  double value = 0.0;
  PeriodicOrbit orbit;
  bool arclength = false;  // produced by the pseudo-arclength stage
  bool fold = false;       // the parameter direction reversed just before this sample
};

struct Branch {
  ParamName parameter = ParamName::a;
  MapFamily family;
  std::vector<BranchSample> samples;

  bool has_fold() const;
};

class LostBranch : public Error {
public:
  LostBranch(const std::string& what, Branch partial)
      : Error(ErrorKind::lost_branch, what), partial_(std::move(partial)) {}
  // Samples up to the last good one.
  const Branch& partial() const { return partial_; }

private:
  Branch partial_;
};

// Natural continuation from `from` to `to` with Newton warm starts and a
// secant predictor. When the step collapses below policy.min the branch is
// continued by pseudo-arclength, which rounds folds; it then ends where the
// parameter leaves [from, to]. Every sample is converged to newton.tol.
Branch continue_orbit(const PeriodicOrbit& start, const MapFamily& family, ParamName parameter, double from,
                      double to, const StepPolicy& policy = {}, const NewtonOptions& newton = {});
Branch continue_orbit(const PeriodicOrbit& start, std::shared_ptr<const PlanarMap> map, const Params& base,
                      ParamName parameter, double to, const StepPolicy& policy = {},
                      const NewtonOptions& newton = {});

enum class EventKind { real_to_complex, fold, heteroclinic_tangency, topological_collision, cascade_birth };

std::string to_string(EventKind k);

struct BifurcationEvent {
  EventKind kind = EventKind::fold;
  ParamName parameter = ParamName::a;
  double value = 0.0;
  double uncertainty = 0.0;  // half-width of the final bracket
  std::optional<PeriodicOrbit> orbit;
  std::vector<std::complex<double>> eigenvalues;
  std::map<std::string, double> diagnostics;
};

inline constexpr double kDefaultEventTol = 1e-9;

// Bisects the sign of the characteristic-cubic discriminant between the first
// pair of samples whose spectrum kind differs. The witness orbit is taken on
// the all-real side.
BifurcationEvent locate_real_to_complex(const Branch& branch, double tol = kDefaultEventTol,
                                        const NewtonOptions& newton = {});

// Fold of two branches of equal period that approach each other: the last
// parameter at which either orbit exists is bracketed by bisection on
// existence (Newton from the nearest known pair), then checked against the
// fold condition of a real multiplier within 1e-3 of +1. Branches that
// already round the fold by pseudo-arclength are accepted as well.
BifurcationEvent locate_fold(const Branch& a, const Branch& b, double tol = kDefaultEventTol,
                             const NewtonOptions& newton = {});

// Signed transversal side of a closest approach: (on_a - on_b) . (t_a x t_b).
double transversal_side(const ClosestApproach& c);

struct IndicatorSample {
  double value = 0.0;
  double indicator = 0.0;
  double distance = 0.0;
};

struct TangencyConfig {
  GrowthConfig growth;
  // Branch sides; when unset the pair with the smallest chart distance at the
  // range start is used.
  std::optional<Side> side_u;
  std::optional<Side> side_s;
  double tol = 1e-6;
  int scan_samples = 8;

  void validate() const;
};

// Crossing of two manifolds located from a closest-approach witness per
// parameter: samples the range, requires exactly one sign change of the
// transversal side and bisects it. Throws no_transition when the sign never
// changes and indicator_not_monotone (listing every sample) when it changes
// more than once.
BifurcationEvent locate_crossing(const std::function<ClosestApproach(double)>& witness, ParamName parameter,
                                 double from, double to, double tol, int scan_samples,
                                 std::vector<IndicatorSample>* samples = nullptr);

// Unstable manifold of saddle_u against the stable manifold of saddle_s; the
// saddles are continued by Newton warm starts from the nearest evaluated
// parameter.
BifurcationEvent locate_heteroclinic_tangency(const PeriodicOrbit& saddle_u, const PeriodicOrbit& saddle_s,
                                              std::shared_ptr<const PlanarMap> map, const Params& base,
                                              ParamName parameter, double from, double to,
                                              const TangencyConfig& cfg = {},
                                              std::vector<IndicatorSample>* samples = nullptr);

struct EngineConfig {
  GridSpec grid;
  SamplingSpec sampling;
  AttractorOptions attractor;
  Point2 seed;
  int collar = kDefaultCollar;
  int workers = 1;

  void validate() const;
};

struct ScanRecord {
  double value = 0.0;
  bool escaped = false;
  std::string error;
  BoxSet attractor;
  BoxSet domain;
  std::size_t repeller_boxes = 0;
  int components = 0;
  double collision_distance = 0.0;
  double hausdorff_to_previous = 0.0;  // NaN for the first record or after a failure
};

struct TopologicalScan {
  ParamName parameter = ParamName::a;
  std::vector<ScanRecord> records;
  std::vector<BifurcationEvent> events;
};

// Events: a change in component count, a Hausdorff step more than ten times
// the median step with the collision distance within two box diagonals, or
// the seed escaping the grid after a successful record.
TopologicalScan topological_bifurcation_scan(const std::vector<double>& values, std::shared_ptr<const PlanarMap> map,
                                             const Params& base, ParamName parameter, const EngineConfig& cfg);

// Parameters at which a piecewise smooth, decreasing-in-value staircase level
// function jumps up by more than threshold. The grid from top down to bottom
// is refined by bisection to width tol; at most max_count jumps are returned,
// largest parameter first.
struct StaircaseOptions {
  double grid_step = 1e-3;
  double tol = 1e-7;
  double threshold = 0.6;
  std::size_t max_count = 5;
};
std::vector<double> locate_disappearances(const std::function<double(double)>& level, double top, double bottom,
                                          const StaircaseOptions& opts = {});

struct CascadeConfig {
  BoundaryPoint saddle;                    // fixed-point guess at the range top
  Side side = Side::plus;
  std::vector<BoundaryPoint> stable_orbit;  // stable periodic orbit guess, used as targets
  GrowthConfig growth;
  double min_sharpness = 0.0;
  double top = 0.49;
  double bottom = 0.4548;
  StaircaseOptions staircase;

  CascadeConfig();
  void validate() const;
};

struct CascadeEstimate {
  BifurcationEvent event;
  CascadeFit fit;
  std::vector<std::pair<double, double>> levels;  // (parameter, outermost wedge level)
};

// Growth level of the first concave wedge on the unstable branch of the
// saddle, +inf when there is none.
double outermost_wedge_level(const PeriodicOrbit& saddle, const std::vector<BoundaryPoint>& targets,
                             const ChartMap& beta, const CascadeConfig& cfg);

// Disappearance parameters of the outermost wedge followed by scaling_fit;
// the event value is a_inf with the fit residual as uncertainty.
CascadeEstimate cascade_birth_estimate(std::shared_ptr<const PlanarMap> map, const Params& base, ParamName parameter,
                                       const CascadeConfig& cfg);

// One row of a sweep report: the parameter value, named numbers and a note
// (failure message or classification).
struct SweepRecord {
  double value = 0.0;
  std::map<std::string, double> fields;
  std::string note;
};

struct SweepReport {
  std::string kind;
  ParamName parameter = ParamName::a;
  Params base;
  std::vector<SweepRecord> records;
  std::vector<BifurcationEvent> events;
  std::vector<std::string> errors;
};

std::vector<SweepRecord> branch_records(const Branch& branch);
std::vector<SweepRecord> scan_records(const TopologicalScan& scan);

void write_branch_csv(std::ostream& out, const Branch& branch);
void write_sweep_report(std::ostream& out, const SweepReport& report);
void write_events_csv(std::ostream& out, const std::vector<BifurcationEvent>& events);
void write_events_json(std::ostream& out, const std::vector<BifurcationEvent>& events);

}  // namespace noisebound
