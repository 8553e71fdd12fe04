#include "noisebound/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

#ifdef NOISEBOUND_HAVE_OPENMP
#include <omp.h>
#endif

namespace noisebound {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument:
    case ErrorKind::empty_input:
    case ErrorKind::non_monotone_input:
    case ErrorKind::insufficient_data:
      return kExitConfig;
    case ErrorKind::escape:
    case ErrorKind::divergence:
    case ErrorKind::divergent_series:
      return kExitEscape;
    default:
      return kExitNumerical;
  }
}

std::vector<std::pair<int, double>> read_disappearances_csv(std::istream& in) {
  std::vector<std::pair<int, double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string s = line;
    for (char& c : s) {
      if (c == ',') c = ' ';
    }
    std::istringstream fields(s);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    auto number = [&](const std::string& t, double& v) {
      std::istringstream ts(t);
      return static_cast<bool>(ts >> v) && ts.eof();
    };
    double x = 0.0, y = 0.0;
    if (tok.size() == 1 && number(tok[0], x)) {
      rows.emplace_back(static_cast<int>(rows.size()), x);
    } else if (tok.size() == 2 && number(tok[0], x) && number(tok[1], y)) {
      if (x != std::floor(x)) throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": index is not an integer");
      rows.emplace_back(static_cast<int>(x), y);
    } else if (rows.empty() && lineno == 1) {
      continue;  // header
    } else {
      throw Error(ErrorKind::config, "line " + std::to_string(lineno) + ": expected 'a' or 'i,a'");
    }
  }
  return rows;
}

namespace {

class Output {
public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {}

  void prepare() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  std::ofstream open(const std::string& name) const {
    std::ofstream f(dir_ / name);
    if (!f) throw Error(ErrorKind::io, "cannot write " + (dir_ / name).string());
    return f;
  }
  void write_json(const std::string& name, json j) const {
    detail::round_floats(j);
    open(name) << j.dump(2) << '\n';
  }
  const fs::path& dir() const { return dir_; }

private:
  fs::path dir_;
};

json params_json(const Params& p) { return {{"a", p.a}, {"b", p.b}, {"eps", p.eps}}; }

json orbit_points(const std::vector<BoundaryPoint>& pts) {
  json out = json::array();
  for (const auto& z : pts) out.push_back({z.pos.x, z.pos.y, z.theta});
  return out;
}

json spectrum_json(const EigenStructure& e) {
  json out = json::array();
  for (const auto& mu : e.eigenvalues()) out.push_back({mu.real(), mu.imag()});
  return out;
}

json engine_json(const RunConfig& cfg) {
  return {{"map", cfg.map},
          {"params", params_json(cfg.params)},
          {"grid",
           {{"xmin", cfg.grid.lo.x},
            {"ymin", cfg.grid.lo.y},
            {"xmax", cfg.grid.hi.x},
            {"ymax", cfg.grid.hi.y},
            {"depth", cfg.grid.depth}}},
          {"sampling",
           {{"k", cfg.sampling.k},
            {"bloat", cfg.sampling.bloat},
            {"pad", cfg.sampling.pad},
            {"mode", cfg.sampling.mode == CoverMode::outer ? "outer" : "centre"}}},
          {"seed", {cfg.seed.x, cfg.seed.y}},
          {"rng_seed", cfg.attractor.rng_seed}};
}

BoxSet read_boxset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, path + ": cannot open previous attractor");
  try {
    return read_boxset_csv(in);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what());
  }
}

int cmd_attractor(const RunConfig& cfg, const Output& out, std::ostream& log) {
  std::optional<BoxSet> previous;
  if (cfg.previous) previous = read_boxset_file(*cfg.previous);
  const auto map = cfg.make_map();
  log << "attractor: " << cfg.map << ", depth " << cfg.grid.depth << '\n';
  const BoxSet att = minimal_attractor(cfg.seed, cfg.params, *map, cfg.grid, cfg.sampling, cfg.attractor);
  const BoxSet dom = domain_of_attraction(att, cfg.params, *map, cfg.sampling, cfg.collar);
  const BoxSet rep = dual_repeller(dom);
  const int components = count_components(att);
  const double collision = rep.empty() ? std::numeric_limits<double>::infinity() : collision_distance(att, rep);

  json summary = engine_json(cfg);
  summary["command"] = "attractor";
  summary["attractor_boxes"] = att.size();
  summary["domain_boxes"] = dom.size();
  summary["repeller_boxes"] = rep.size();
  summary["components"] = components;
  summary["collision_distance"] = collision;
  summary["collision_diagonals"] = collision / cfg.grid.cell_diagonal();
  summary["hausdorff_to_previous"] = previous ? json(hausdorff_boxes(*previous, att)) : json(nullptr);

  out.prepare();
  {
    auto f = out.open("attractor.csv");
    write_boxset_csv(f, att);
  }
  {
    auto f = out.open("domain.csv");
    write_boxset_csv(f, dom);
  }
  {
    auto f = out.open("repeller.csv");
    write_boxset_csv(f, rep);
  }
  out.write_json("summary.json", summary);
  log << "attractor: " << att.size() << " boxes, " << components << " component(s)\n";
  return kExitOk;
}

int cmd_boundary(const RunConfig& cfg, const Output& out, std::ostream& log) {
  if (cfg.boundary.orbits.empty()) throw Error(ErrorKind::config, cfg.source + ": [boundary] needs at least one orbit");
  const auto map = cfg.make_map();
  const BoundaryMap beta(map, cfg.params);

  json orbits = json::array();
  std::vector<PeriodicOrbit> found;
  std::vector<std::size_t> found_index;
  for (std::size_t g = 0; g < cfg.boundary.orbits.size(); ++g) {
    json rec = {{"guess", orbit_points(cfg.boundary.orbits[g])}};
    try {
      PeriodicOrbit o = find_periodic_orbit(beta, cfg.boundary.orbits[g]);
      rec["converged"] = true;
      rec["period"] = o.period;
      rec["points"] = orbit_points(o.points);
      rec["stability"] = to_string(o.stability);
      rec["spectrum"] = to_string(o.eigen.kind);
      rec["eigenvalues"] = spectrum_json(o.eigen);
      rec["residual"] = o.residual;
      try {
        const EigenRelationReport r = check_eigen_relations(beta, o);
        rec["relations"] = {{"lambda1", r.lambda1},
                            {"eigenvalue_residual", r.eigenvalue_residual},
                            {"product_residual", r.product_residual},
                            {"projection_ratio", r.projection_ratio},
                            {"projection_angle", r.projection_angle}};
      } catch (const Error& e) {
        rec["relations"] = {{"error", e.what()}};
      }
      found.push_back(std::move(o));
      found_index.push_back(g);
    } catch (const Error& e) {
      rec["converged"] = false;
      rec["error"] = e.what();
      log << "boundary: guess " << g << " failed: " << e.what() << '\n';
    }
    orbits.push_back(rec);
  }

  std::vector<BoundaryPoint> stable_points;
  for (const auto& o : found) {
    if (o.stability == Stability::stable) stable_points.insert(stable_points.end(), o.points.begin(), o.points.end());
  }
  const std::vector<BoundaryPoint> targets = cfg.boundary.stable_targets ? stable_points : std::vector<BoundaryPoint>{};

  std::vector<ManifoldBranch> branches;
  std::vector<std::size_t> branch_orbit;
  json errors = json::array();
  for (std::size_t i = 0; i < found.size(); ++i) {
    const PeriodicOrbit& o = found[i];
    std::optional<ManifoldKind> kind;
    if (o.stability == Stability::saddle_1u) kind = ManifoldKind::unstable;
    if (o.stability == Stability::saddle_2u && cfg.boundary.stable_manifolds) kind = ManifoldKind::stable;
    if (!kind) continue;
    try {
      for (auto& b : grow_all(*kind, o, beta, cfg.growth, *kind == ManifoldKind::unstable ? targets
                                                                                         : std::vector<BoundaryPoint>{})) {
        branches.push_back(std::move(b));
        branch_orbit.push_back(found_index[i]);
      }
    } catch (const Error& e) {
      errors.push_back("orbit " + std::to_string(found_index[i]) + ": " + e.what());
    }
  }

  std::optional<BoxSet> attractor, domain;
  if (cfg.boundary.prune && !branches.empty()) {
    try {
      attractor = minimal_attractor(cfg.seed, cfg.params, *map, cfg.grid, cfg.sampling, cfg.attractor);
      domain = domain_of_attraction(*attractor, cfg.params, *map, cfg.sampling, cfg.collar);
    } catch (const Error& e) {
      errors.push_back(std::string("pruning skipped: ") + e.what());
    }
  }

  out.prepare();
  out.write_json("orbits.json", orbits);

  json sing = json::object();
  sing["branches"] = json::array();
  std::size_t total = 0, near_total = 0, wedge_total = 0, cascades = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const ManifoldBranch& b = branches[k];
    const std::string stem = "manifold_" + std::to_string(k);
    {
      auto f = out.open(stem + ".csv");
      write_manifold_csv(f, b);
    }
    {
      auto f = out.open(stem + ".json");
      write_manifold_sidecar(f, b);
    }
    const Polyline2 proj = project(b);
    {
      auto f = out.open("projected_" + std::to_string(k) + ".csv");
      write_polyline_csv(f, proj);
    }
    const std::optional<BoxSet>& cover = b.kind == ManifoldKind::unstable ? attractor : domain;
    std::size_t pieces = 0;
    if (cover) {
      std::vector<Polyline2> kept;
      try {
        kept = prune_noncontributing(proj, *cover);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::empty_input) throw;
      }
      for (const auto& piece : kept) {
        auto f = out.open("pruned_" + std::to_string(k) + "_" + std::to_string(pieces++) + ".csv");
        write_polyline_csv(f, piece);
      }
    }

    const auto crossings = self_intersections(proj);
    std::optional<Point2> reference;
    if (b.reached_target) reference = targets[*b.reached_target].pos;
    const auto wedges = detect_wedges(b, reference, cfg.boundary.min_sharpness);
    std::size_t near = 0;
    for (const auto& x : crossings) {
      for (const auto& s : stable_points) {
        if (distance(x.point, s.pos) <= cfg.boundary.near_radius) {
          ++near;
          break;
        }
      }
    }
    std::optional<CascadeFit> cascade;
    if (reference) {
      const auto close = wedges_near(wedges, *reference, cfg.boundary.near_radius);
      if (close.size() >= 3) cascade = detect_cascade(close, *reference);
    }
    std::ostringstream report;
    write_singularity_report(report, crossings, wedges, cascade, std::nullopt);
    sing["branches"].push_back({{"index", k},
                                {"orbit", branch_orbit[k]},
                                {"kind", to_string(b.kind)},
                                {"side", to_string(b.side)},
                                {"base_index", b.base_index},
                                {"pruned_pieces", pieces},
                                {"near_intersections", near},
                                {"report", json::parse(report.str())}});
    total += crossings.size();
    near_total += near;
    wedge_total += wedges.size();
    if (cascade && cascade->geometric) ++cascades;
  }
  sing["total_intersections"] = total;
  sing["near_intersections"] = near_total;
  sing["concave_wedges"] = wedge_total;
  sing["cascades"] = cascades;
  sing["near_radius"] = cfg.boundary.near_radius;
  sing["errors"] = errors;
  out.write_json("singularities.json", sing);
  log << "boundary: " << found.size() << " orbit(s), " << branches.size() << " branch(es), " << total
      << " self-intersection(s)\n";
  return found.empty() ? kExitNumerical : kExitOk;
}

void require(bool ok, const RunConfig& cfg, const std::string& what) {
  if (!ok) throw Error(ErrorKind::config, cfg.source + ": [sweep] " + what);
}

int cmd_sweep(const RunConfig& cfg, const Output& out, std::ostream& log) {
  const SweepSettings& sw = cfg.sweep;
  switch (sw.kind) {
    case SweepKind::real_to_complex: require(!sw.orbit.empty(), cfg, "real-to-complex needs orbit"); break;
    case SweepKind::fold: require(!sw.orbit.empty() && !sw.orbit_b.empty(), cfg, "fold needs orbit and orbit_b"); break;
    case SweepKind::heteroclinic:
      require(!sw.orbit.empty() && !sw.orbit_b.empty(), cfg, "heteroclinic needs orbit and orbit_b");
      break;
    case SweepKind::cascade:
      require(sw.orbit.size() == 1 && !sw.stable.empty(), cfg, "cascade needs a one-point orbit and stable");
      require(sw.from > sw.to || sw.from == sw.to, cfg, "cascade runs from a larger to a smaller value");
      break;
    case SweepKind::topological: break;
  }
  const auto map = cfg.make_map();
  const Params base = with_param(cfg.params, sw.parameter, sw.from);
  const MapFamily family = boundary_map_family(map, cfg.params, sw.parameter);
  SweepReport report;
  report.kind = to_string(sw.kind);
  report.parameter = sw.parameter;
  report.base = base;
  std::vector<std::pair<std::string, Branch>> branches;
  const bool empty_range = sw.from == sw.to && sw.values.empty() && !(sw.kind == SweepKind::topological && sw.count > 0);

  auto note = [&](const Error& e) {
    report.errors.push_back(e.what());
    log << "sweep: " << e.what() << '\n';
  };
  auto continued = [&](const std::vector<BoundaryPoint>& guess) {
    const PeriodicOrbit start = find_periodic_orbit(*family(sw.from), guess);
    try {
      return continue_orbit(start, family, sw.parameter, sw.from, sw.to, sw.step);
    } catch (const LostBranch& e) {
      note(e);
      return e.partial();
    }
  };

  if (!empty_range) {
    switch (sw.kind) {
      case SweepKind::real_to_complex: {
        Branch br = continued(sw.orbit);
        report.records = branch_records(br);
        try {
          report.events.push_back(locate_real_to_complex(br, sw.tol));
        } catch (const Error& e) {
          note(e);
        }
        branches.emplace_back("branch.csv", std::move(br));
        break;
      }
      case SweepKind::fold: {
        Branch a = continued(sw.orbit), b = continued(sw.orbit_b);
        report.records = branch_records(a);
        const auto rb = branch_records(b);
        report.records.insert(report.records.end(), rb.begin(), rb.end());
        try {
          report.events.push_back(locate_fold(a, b, sw.tol));
        } catch (const Error& e) {
          note(e);
        }
        branches.emplace_back("branch_a.csv", std::move(a));
        branches.emplace_back("branch_b.csv", std::move(b));
        break;
      }
      case SweepKind::heteroclinic: {
        const BoundaryMap beta(map, base);
        const PeriodicOrbit u = find_periodic_orbit(beta, sw.orbit), s = find_periodic_orbit(beta, sw.orbit_b);
        TangencyConfig tc;
        tc.growth = cfg.growth;
        tc.tol = sw.tol;
        tc.scan_samples = sw.scan_samples;
        std::vector<IndicatorSample> samples;
        try {
          report.events.push_back(
              locate_heteroclinic_tangency(u, s, map, base, sw.parameter, sw.from, sw.to, tc, &samples));
        } catch (const Error& e) {
          note(e);
        }
        for (const auto& x : samples) report.records.push_back({x.value, {{"side", x.indicator}, {"distance", x.distance}}, ""});
        std::sort(report.records.begin(), report.records.end(),
                  [](const SweepRecord& p, const SweepRecord& q) { return p.value < q.value; });
        break;
      }
      case SweepKind::topological: {
        std::vector<double> values = sw.values;
        if (values.empty()) {
          for (int i = 0; i < sw.count; ++i) {
            values.push_back(sw.count == 1 ? sw.from : sw.from + (sw.to - sw.from) * i / (sw.count - 1));
          }
        }
        const TopologicalScan scan = topological_bifurcation_scan(values, map, cfg.params, sw.parameter, cfg.engine());
        report.records = scan_records(scan);
        report.events = scan.events;
        for (const auto& r : scan.records) {
          if (!r.error.empty()) log << "sweep: " << to_string(sw.parameter) << " = " << r.value << ": " << r.error << '\n';
        }
        break;
      }
      case SweepKind::cascade: {
        CascadeConfig cc;
        cc.saddle = sw.orbit.front();
        cc.stable_orbit = sw.stable;
        cc.growth = cfg.growth;
        cc.min_sharpness = cfg.boundary.min_sharpness;
        cc.top = sw.from;
        cc.bottom = sw.to;
        cc.staircase = sw.staircase;
        try {
          const CascadeEstimate est = cascade_birth_estimate(map, cfg.params, sw.parameter, cc);
          for (const auto& [v, l] : est.levels) report.records.push_back({v, {{"level", l}}, ""});
          BifurcationEvent ev = est.event;
          for (std::size_t i = 0; i < est.fit.disappearances.size(); ++i) {
            ev.diagnostics["a_" + std::to_string(i)] = est.fit.disappearances[i];
          }
          report.events.push_back(ev);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::insufficient_data) throw;
          note(e);
        }
        break;
      }
    }
  }

  out.prepare();
  {
    auto f = out.open("sweep_report.json");
    write_sweep_report(f, report);
  }
  {
    auto f = out.open("events.csv");
    write_events_csv(f, report.events);
  }
  for (const auto& [name, br] : branches) {
    auto f = out.open(name);
    write_branch_csv(f, br);
  }
  log << "sweep: " << report.events.size() << " event(s)\n";
  return kExitOk;
}

int cmd_fit_scaling(const std::optional<RunConfig>& cfg, const CliOptions& opts, std::ostream& log) {
  std::optional<std::string> input = opts.input;
  if (!input && cfg) input = cfg->fit_input;
  if (!input) throw Error(ErrorKind::config, "fit-scaling needs --input or [fit] input");
  std::ifstream in(*input);
  if (!in) throw Error(ErrorKind::config, *input + ": cannot open");
  std::vector<std::pair<int, double>> rows;
  try {
    rows = read_disappearances_csv(in);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, *input + ": " + e.what());
  }
  const CascadeFit fit = scaling_fit(rows);
  json j = {{"c", fit.c},
            {"a0", fit.a0},
            {"a1", fit.a1},
            {"a_inf", fit.a_inf},
            {"residual", fit.residual},
            {"max_residual", fit.max_residual},
            {"disappearances", fit.disappearances}};
  detail::round_floats(j);
  log << j.dump(2) << '\n';
  const std::optional<std::string> dir = opts.out ? opts.out : cfg ? std::optional<std::string>(cfg->out) : std::nullopt;
  if (dir) {
    const Output out(*dir);
    out.prepare();
    out.write_json("fit.json", j);
  }
  return kExitOk;
}

}  // namespace

int run_command(const CliOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    const std::string& cmd = opts.command;
    if (cmd != "attractor" && cmd != "boundary" && cmd != "sweep" && cmd != "fit-scaling") {
      throw Error(ErrorKind::config, "unknown command '" + cmd + "'");
    }
    std::optional<RunConfig> cfg;
    if (opts.config) {
      cfg = load_config(*opts.config);
    } else if (cmd != "fit-scaling") {
      throw Error(ErrorKind::config, cmd + " needs --config");
    }
    if (cfg) {
      if (opts.out) cfg->out = *opts.out;
      if (opts.seed) cfg->attractor.rng_seed = *opts.seed;
      if (opts.workers) {
        if (*opts.workers < 1) throw Error(ErrorKind::config, "--workers must be at least 1");
        cfg->workers = *opts.workers;
      }
    }
#ifdef NOISEBOUND_HAVE_OPENMP
    if (cfg) omp_set_num_threads(cfg->workers);
#endif
    if (cmd == "fit-scaling") return cmd_fit_scaling(cfg, opts, log);
    const Output out(cfg->out);
    if (cmd == "attractor") return cmd_attractor(*cfg, out, log);
    if (cmd == "boundary") return cmd_boundary(*cfg, out, log);
    return cmd_sweep(*cfg, out, log);
  } catch (const Error& e) {
    err << "noisebound: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "noisebound: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace noisebound
