#include "noisebound/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace noisebound {

std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::real_to_complex: return "real-to-complex";
    case SweepKind::fold: return "fold";
    case SweepKind::heteroclinic: return "heteroclinic";
    case SweepKind::topological: return "topological";
    case SweepKind::cascade: return "cascade";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Location {
  const std::string& source;
  int line;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::config, source + ":" + std::to_string(line) + ": " + key + ": " + what);
  }
};

double parse_number(const std::string& text, const Location& at) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    at.fail("expected a finite number, got '" + s + "'");
  }
  return v;
}

long long parse_integer(const std::string& text, const Location& at) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) at.fail("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& text, const Location& at) {
  const std::string s = trim(text);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  at.fail("expected true or false, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& text, const Location& at) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok, at));
  return out;
}

std::vector<double> parse_fixed(const std::string& text, std::size_t n, const Location& at) {
  auto v = parse_list(text, at);
  if (v.size() != n) at.fail("expected " + std::to_string(n) + " numbers, got " + std::to_string(v.size()));
  return v;
}

// "x y theta; x y theta; ..."
std::vector<BoundaryPoint> parse_orbit(const std::string& text, const Location& at) {
  std::vector<BoundaryPoint> pts;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ';')) {
    const auto v = parse_fixed(part, 3, at);
    pts.push_back(BoundaryPoint{{v[0], v[1]}, v[2]});
  }
  if (pts.empty()) at.fail("expected at least one point 'x y theta'");
  return pts;
}

double positive(double v, const Location& at) {
  if (!(v > 0.0)) at.fail("must be positive");
  return v;
}

int bounded_int(const std::string& text, long long lo, long long hi, const Location& at) {
  const long long v = parse_integer(text, at);
  if (v < lo || v > hi) at.fail("must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

using Setter = std::function<void(RunConfig&, const std::string&, const Location&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"map",
       {{"kind",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const std::string k = trim(v);
           if (k != "henon" && k != "affine") at.fail("expected henon or affine, got '" + k + "'");
           c.map = k;
         }},
        {"a", [](RunConfig& c, const std::string& v, const Location& at) { c.params.a = parse_number(v, at); }},
        {"b", [](RunConfig& c, const std::string& v, const Location& at) { c.params.b = parse_number(v, at); }},
        {"eps",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.params.eps = parse_number(v, at);
           if (c.params.eps < 0.0) at.fail("must be nonnegative");
         }},
        {"matrix",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const auto m = parse_fixed(v, 4, at);
           c.affine_matrix = {m[0], m[1], m[2], m[3]};
           if (std::abs(c.affine_matrix.det()) < kSingularDet) at.fail("matrix is singular");
         }},
        {"offset",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const auto o = parse_fixed(v, 2, at);
           c.affine_offset = {o[0], o[1]};
         }}}},
      {"grid",
       {{"xmin", [](RunConfig& c, const std::string& v, const Location& at) { c.grid.lo.x = parse_number(v, at); }},
        {"ymin", [](RunConfig& c, const std::string& v, const Location& at) { c.grid.lo.y = parse_number(v, at); }},
        {"xmax", [](RunConfig& c, const std::string& v, const Location& at) { c.grid.hi.x = parse_number(v, at); }},
        {"ymax", [](RunConfig& c, const std::string& v, const Location& at) { c.grid.hi.y = parse_number(v, at); }},
        {"depth",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.grid.depth = bounded_int(v, 0, GridSpec::kMaxEngineDepth, at);
         }}}},
      {"sampling",
       {{"k", [](RunConfig& c, const std::string& v, const Location& at) { c.sampling.k = bounded_int(v, 1, 64, at); }},
        {"bloat",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sampling.bloat = parse_number(v, at);
           if (c.sampling.bloat < 0.0) at.fail("must be nonnegative");
         }},
        {"pad", [](RunConfig& c, const std::string& v, const Location& at) { c.sampling.pad = parse_bool(v, at); }},
        {"mode",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const std::string m = trim(v);
           if (m == "outer") {
             c.sampling.mode = CoverMode::outer;
           } else if (m == "centre") {
             c.sampling.mode = CoverMode::centre;
           } else {
             at.fail("expected outer or centre, got '" + m + "'");
           }
         }}}},
      {"attractor",
       {{"seed",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const auto p = parse_fixed(v, 2, at);
           c.seed = {p[0], p[1]};
         }},
        {"transient",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.attractor.transient = static_cast<std::size_t>(bounded_int(v, 0, 100000000, at));
         }},
        {"max_iterations",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.attractor.max_iterations = static_cast<std::size_t>(bounded_int(v, 0, 100000000, at));
         }},
        {"rng_seed",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const long long s = parse_integer(v, at);
           if (s < 0) at.fail("must be nonnegative");
           c.attractor.rng_seed = static_cast<std::uint64_t>(s);
         }},
        {"collar",
         [](RunConfig& c, const std::string& v, const Location& at) { c.collar = bounded_int(v, 0, 64, at); }},
        {"previous", [](RunConfig& c, const std::string& v, const Location&) { c.previous = trim(v); }}}},
      {"growth",
       {{"delta0",
         [](RunConfig& c, const std::string& v, const Location& at) { c.growth.delta0 = positive(parse_number(v, at), at); }},
        {"max_arc",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.max_arc = positive(parse_number(v, at), at);
         }},
        {"max_points",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.max_points = static_cast<std::size_t>(bounded_int(v, 2, 100000000, at));
         }},
        {"min_step",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.min_step = positive(parse_number(v, at), at);
         }},
        {"max_step",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.max_step = positive(parse_number(v, at), at);
         }},
        {"max_turn",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.max_turn = positive(parse_number(v, at), at);
         }},
        {"theta_weight",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.theta_weight = positive(parse_number(v, at), at);
         }},
        {"target_tol",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.growth.target_tol = parse_number(v, at);
           if (c.growth.target_tol < 0.0) at.fail("must be nonnegative");
         }}}},
      {"boundary",
       {{"orbit",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.boundary.orbits.push_back(parse_orbit(v, at));
         }},
        {"stable_targets",
         [](RunConfig& c, const std::string& v, const Location& at) { c.boundary.stable_targets = parse_bool(v, at); }},
        {"stable_manifolds",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.boundary.stable_manifolds = parse_bool(v, at);
         }},
        {"prune", [](RunConfig& c, const std::string& v, const Location& at) { c.boundary.prune = parse_bool(v, at); }},
        {"near_radius",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.boundary.near_radius = positive(parse_number(v, at), at);
         }},
        {"min_sharpness",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.boundary.min_sharpness = parse_number(v, at);
         }}}},
      {"sweep",
       {{"kind",
         [](RunConfig& c, const std::string& v, const Location& at) {
           const std::string k = trim(v);
           static const std::map<std::string, SweepKind> kinds = {{"real-to-complex", SweepKind::real_to_complex},
                                                                   {"fold", SweepKind::fold},
                                                                   {"heteroclinic", SweepKind::heteroclinic},
                                                                   {"topological", SweepKind::topological},
                                                                   {"cascade", SweepKind::cascade}};
           const auto it = kinds.find(k);
           if (it == kinds.end()) {
             at.fail("expected real-to-complex, fold, heteroclinic, topological or cascade, got '" + k + "'");
           }
           c.sweep.kind = it->second;
         }},
        {"parameter",
         [](RunConfig& c, const std::string& v, const Location& at) {
           try {
             c.sweep.parameter = parse_param_name(trim(v));
           } catch (const Error&) {
             at.fail("expected a, b or eps, got '" + trim(v) + "'");
           }
         }},
        {"from", [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.from = parse_number(v, at); }},
        {"to", [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.to = parse_number(v, at); }},
        {"count",
         [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.count = bounded_int(v, 0, 100000, at); }},
        {"values", [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.values = parse_list(v, at); }},
        {"orbit", [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.orbit = parse_orbit(v, at); }},
        {"orbit_b",
         [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.orbit_b = parse_orbit(v, at); }},
        {"stable", [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.stable = parse_orbit(v, at); }},
        {"tol",
         [](RunConfig& c, const std::string& v, const Location& at) { c.sweep.tol = positive(parse_number(v, at), at); }},
        {"step_initial",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.step.initial = positive(parse_number(v, at), at);
         }},
        {"step_min",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.step.min = positive(parse_number(v, at), at);
         }},
        {"step_max",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.step.max = positive(parse_number(v, at), at);
         }},
        {"scan_samples",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.scan_samples = bounded_int(v, 1, 10000, at);
         }},
        {"grid_step",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.staircase.grid_step = positive(parse_number(v, at), at);
         }},
        {"jump_threshold",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.staircase.threshold = positive(parse_number(v, at), at);
         }},
        {"bisection_tol",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.staircase.tol = positive(parse_number(v, at), at);
         }},
        {"max_count",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.sweep.staircase.max_count = static_cast<std::size_t>(bounded_int(v, 3, 100, at));
         }}}},
      {"fit", {{"input", [](RunConfig& c, const std::string& v, const Location&) { c.fit_input = trim(v); }}}},
      {"run",
       {{"out",
         [](RunConfig& c, const std::string& v, const Location& at) {
           c.out = trim(v);
           if (c.out.empty()) at.fail("must not be empty");
         }},
        {"workers",
         [](RunConfig& c, const std::string& v, const Location& at) { c.workers = bounded_int(v, 1, 1024, at); }}}},
  };
  return s;
}

const std::set<std::string> kRepeatable = {"boundary.orbit"};

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  cfg.source = source;
  std::string section;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const Location at{source, lineno, ""};
    if (t.front() == '[') {
      if (t.back() != ']') at.fail("unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!schema().count(section)) at.fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) at.fail("expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty()) at.fail("key '" + key + "' appears before any section");
    const auto& keys = schema().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) at.fail("unknown key '" + key + "' in section [" + section + "]");
    const std::string full = section + "." + key;
    if (!kRepeatable.count(full) && !seen.insert(full).second) at.fail("key '" + key + "' repeated in [" + section + "]");
    it->second(cfg, value, Location{source, lineno, full});
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, path + ": cannot open config file");
  return parse_config(in, path);
}

std::shared_ptr<const PlanarMap> RunConfig::make_map() const {
  if (map == "affine") return std::make_shared<AffineMap>(affine_matrix, affine_offset);
  return std::make_shared<HenonMap>();
}

EngineConfig RunConfig::engine() const {
  EngineConfig e;
  e.grid = grid;
  e.sampling = sampling;
  e.attractor = attractor;
  e.seed = seed;
  e.collar = collar;
  e.workers = workers;
  return e;
}

void RunConfig::validate() const {
  auto wrap = [&](const char* what, const std::function<void()>& check) {
    try {
      check();
    } catch (const Error& e) {
      throw Error(ErrorKind::config, source + ": " + what + ": " + e.what());
    }
  };
  wrap("[map]", [&] { params.validate(); });
  wrap("[grid]", [&] { grid.validate(); });
  wrap("[sampling]", [&] { sampling.validate(); });
  wrap("[growth]", [&] { growth.validate(); });
  wrap("[sweep] step", [&] { sweep.step.validate(); });
  if (map == "henon" && params.b == 0.0) {
    throw Error(ErrorKind::config, source + ": [map] b: the Henon map is not invertible for b = 0");
  }
  if (!sweep.values.empty() && !std::is_sorted(sweep.values.begin(), sweep.values.end()) &&
      !std::is_sorted(sweep.values.begin(), sweep.values.end(), std::greater<>())) {
    throw Error(ErrorKind::config, source + ": [sweep] values: must be sorted");
  }
}

}  // namespace noisebound
