#include "finslab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "finslab/errors.hpp"

namespace finslab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"seed", "output"}},
    {"metric", {"kind", "n", "expr", "a11", "a12", "a21", "a22", "a13", "a23", "a33", "b1", "b2", "b3"}},
    {"measure", {"kind", "phi", "a11", "a12", "a21", "a22"}},
    {"region", {"type", "center", "radius", "lo", "hi"}},
    {"grid", {"domain", "n", "period", "center", "radius", "boundary", "dirichlet_value"}},
    {"initial", {"u0", "kernel_t0", "kernel_center", "floor"}},
    {"potential", {"q"}},
    {"solver",
     {"dt", "t_end", "scheme", "cfl_safety", "eps_deg", "newton_tol", "snapshots"}},
    {"estimate",
     {"variant", "N", "beta", "epsilon", "K", "gamma", "theta", "L", "R", "T", "t_lo", "t_hi",
      "curvature_samples", "near_constant_tol"}},
    {"compare",
     {"N", "mode", "policy", "v", "fan", "radius", "grid", "k0_samples", "curvature_samples",
      "rays", "K", "K0", "crosscheck"}},
    {"harnack", {"pairs", "beta", "N", "t1", "t2", "C3", "R"}},
    {"points", {"at"}},
    {"output", {"margins", "snapshots_every"}},
};

}  // namespace

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), overrides);
}

RunConfig RunConfig::from_text(const std::string& text,
                               const std::vector<std::string>& overrides) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside of any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    cfg.sections_[section][key] = value;
  }
  for (const auto& ov : overrides) {
    std::size_t eq = ov.find('=');
    std::size_t dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError("override must be section.key=value: " + ov);
    cfg.sections_[trim(ov.substr(0, dot))][trim(ov.substr(dot + 1, eq - dot - 1))] =
        trim(ov.substr(eq + 1));
  }
  cfg.validate_schema();
  return cfg;
}

void RunConfig::validate_schema() const {
  for (const auto& [section, keys] : sections_) {
    auto it = kSchema.find(section);
    if (it == kSchema.end()) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : keys) {
      (void)value;
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
  }
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string RunConfig::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double RunConfig::get_num(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get(section, key, "");
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + section + "." + key + ": '" + v + "'");
  }
}

long RunConfig::get_int(const std::string& section, const std::string& key, long fallback) const {
  double d = get_num(section, key, static_cast<double>(fallback));
  return std::lround(d);
}

std::vector<double> RunConfig::get_list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  if (!has(section, key)) return out;
  std::string v = get(section, key, "");
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream ss(v);
  double d;
  while (ss >> d) out.push_back(d);
  return out;
}

MetricSpec RunConfig::build_metric() const {
  const std::string kind = get("metric", "kind", "euclidean");
  const int n = static_cast<int>(get_int("metric", "n", 2));
  auto matrix = [&]() {
    std::vector<std::vector<std::string>> a(static_cast<std::size_t>(n),
                                            std::vector<std::string>(static_cast<std::size_t>(n), "0"));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::string key = "a" + std::to_string(std::min(i, j) + 1) + std::to_string(std::max(i, j) + 1);
        std::string def = i == j ? "1" : "0";
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = get("metric", key, def);
      }
    return a;
  };
  if (kind == "euclidean") return MetricSpec::euclidean(n);
  if (kind == "riemannian") return MetricSpec::riemannian(n, matrix());
  if (kind == "poincare-disk") return MetricSpec::poincare_disk();
  if (kind == "funk-disk") return MetricSpec::funk_disk(n);
  if (kind == "minkowski") return MetricSpec::minkowski(get("metric", "expr", ""), n);
  if (kind == "randers") {
    std::vector<std::string> b;
    for (int i = 0; i < n; ++i) b.push_back(get("metric", "b" + std::to_string(i + 1), "0"));
    return MetricSpec::randers(n, matrix(), b);
  }
  if (kind == "expression") return MetricSpec::parse(get("metric", "expr", ""), n);
  throw ConfigError("unknown metric kind '" + kind + "'");
}

MeasureSpec RunConfig::build_measure() const {
  const std::string kind = get("measure", "kind", "lebesgue");
  if (kind == "lebesgue") return MeasureSpec::lebesgue();
  if (kind == "expression") return MeasureSpec::expression(2, get("measure", "phi", "0"));
  if (kind == "riemannian-volume") {
    std::vector<std::vector<std::string>> a = {
        {get("measure", "a11", "1"), get("measure", "a12", "0")},
        {get("measure", "a12", "0"), get("measure", "a22", "1")}};
    return MeasureSpec::riemannian_volume(2, a);
  }
  throw ConfigError("unknown measure kind '" + kind + "'");
}

Region RunConfig::build_region() const {
  const std::string type = get("region", "type", "ball");
  if (type == "ball") {
    auto c = get_list("region", "center");
    Vec4 center{};
    for (std::size_t i = 0; i < c.size() && i < 4; ++i) center[i] = c[i];
    return Region::ball(2, center, get_num("region", "radius", 0.5));
  }
  if (type == "box") {
    auto lo = get_list("region", "lo");
    auto hi = get_list("region", "hi");
    Vec4 l{}, h{};
    for (std::size_t i = 0; i < lo.size() && i < 4; ++i) l[i] = lo[i];
    for (std::size_t i = 0; i < hi.size() && i < 4; ++i) h[i] = hi[i];
    return Region::box(2, l, h);
  }
  throw ConfigError("unknown region type '" + type + "'");
}

FieldGrid RunConfig::build_grid() const {
  const std::string domain = get("grid", "domain", "torus");
  const int n = static_cast<int>(get_int("grid", "n", 128));
  FieldGrid g;
  if (domain == "torus") {
    double period = get_num("grid", "period", 2.0 * M_PI);
    g = FieldGrid::torus(n, period, period);
  } else if (domain == "ball") {
    auto c = get_list("grid", "center");
    Vec4 center{};
    for (std::size_t i = 0; i < c.size() && i < 4; ++i) center[i] = c[i];
    const std::string bc = get("grid", "boundary", "neumann");
    g = FieldGrid::ball(n, center, get_num("grid", "radius", 1.0),
                        bc == "dirichlet" ? BoundaryKind::kDirichlet : BoundaryKind::kNeumann,
                        get_num("grid", "dirichlet_value", 0.0));
  } else {
    throw ConfigError("unknown grid domain '" + domain + "'");
  }

  if (has("initial", "kernel_t0")) {
    double t0 = get_num("initial", "kernel_t0", 0.1);
    auto kc = get_list("initial", "kernel_center");
    double cx = kc.size() > 0 ? kc[0] : 0.0, cy = kc.size() > 1 ? kc[1] : 0.0;
    double floor = get_num("initial", "floor", 1e-12);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        Vec4 x = g.cell(i, j);
        double r2 = (x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy);
        g.v[static_cast<std::size_t>(g.idx(i, j))] =
            std::exp(-r2 / (4.0 * t0)) / (4.0 * M_PI * t0) + floor;
      }
  } else {
    g.fill(Expr::parse(get("initial", "u0", "1"), 2));
  }
  return g;
}

PotentialSpec RunConfig::build_potential() const {
  if (!has("potential", "q")) return PotentialSpec::none();
  return PotentialSpec::expression(2, get("potential", "q", "0"));
}

SolverConfig RunConfig::build_solver() const {
  SolverConfig cfg;
  cfg.dt = get_num("solver", "dt", 0.0);
  cfg.t_end = get_num("solver", "t_end", 1.0);
  cfg.cfl_safety = get_num("solver", "cfl_safety", 0.4);
  cfg.eps_deg = get_num("solver", "eps_deg", 1e-8);
  cfg.newton_tol = get_num("solver", "newton_tol", 1e-12);
  const std::string scheme = get("solver", "scheme", "explicit-rk2");
  if (scheme == "explicit-rk2") cfg.scheme = Scheme::kExplicitRk2;
  else if (scheme == "semi-implicit") cfg.scheme = Scheme::kSemiImplicit;
  else throw ConfigError("unknown scheme '" + scheme + "'");
  cfg.snapshot_times = get_list("solver", "snapshots");
  return cfg;
}

CompareConfig RunConfig::build_compare() const {
  CompareConfig cfg;
  auto c = get_list("region", "center");
  for (std::size_t i = 0; i < c.size() && i < 4; ++i) cfg.p[i] = c[i];
  cfg.radius = get_num("compare", "radius", get_num("region", "radius", 1.0));
  cfg.grid_n = static_cast<int>(get_int("compare", "grid", 128));
  cfg.N = get_num("compare", "N", 3.0);
  const std::string mode = get("compare", "mode", "mixed");
  if (mode == "mixed") cfg.mode = CompareMode::kMixed;
  else if (mode == "flag") cfg.mode = CompareMode::kFlag;
  else if (mode == "infty") cfg.mode = CompareMode::kInfty;
  else throw ConfigError("unknown compare mode '" + mode + "'");
  const std::string policy = get("compare", "policy", "fan");
  if (policy == "gradient") cfg.policy = VPolicy::kGradient;
  else if (policy == "constant") cfg.policy = VPolicy::kConstant;
  else if (policy == "rotating") cfg.policy = VPolicy::kRotating;
  else if (policy == "fan") cfg.policy = VPolicy::kFanSweep;
  else throw ConfigError("unknown V policy '" + policy + "'");
  auto v = get_list("compare", "v");
  if (v.size() >= 2) cfg.constant_v = vec2(v[0], v[1]);
  cfg.fan = static_cast<int>(get_int("compare", "fan", 16));
  cfg.k0_samples = static_cast<int>(get_int("compare", "k0_samples", 4000));
  cfg.curvature_samples = static_cast<int>(get_int("compare", "curvature_samples", 300));
  cfg.shooting_rays = static_cast<int>(get_int("compare", "rays", 1024));
  cfg.seed = seed();
  cfg.K_override = get_num("compare", "K", -1.0);
  cfg.K0_override = get_num("compare", "K0", -1.0);
  cfg.crosscheck_eikonal = get_int("compare", "crosscheck", 0) != 0;
  return cfg;
}

EstimateParams RunConfig::build_estimate() const {
  EstimateParams p;
  p.N = get_num("estimate", "N", 3.0);
  p.beta = get_num("estimate", "beta", 2.0);
  p.eps = get_num("estimate", "epsilon", 0.0);
  auto opt = [&](const char* key) {
    std::string v = get("estimate", key, "auto");
    return v == "auto" ? -1.0 : get_num("estimate", key, -1.0);
  };
  p.K = opt("K");
  p.gamma = opt("gamma");
  p.theta = opt("theta");
  p.L = opt("L");
  p.R = get_num("estimate", "R", 1.0);
  p.T = get_num("estimate", "T", 1.0);
  p.t_lo = get_num("estimate", "t_lo", 0.0);
  p.t_hi = get_num("estimate", "t_hi", 1e300);
  p.curvature_samples = static_cast<int>(get_int("estimate", "curvature_samples", 96));
  p.near_constant_tol = get_num("estimate", "near_constant_tol", 1e-3);
  return p;
}

std::string RunConfig::estimate_variant() const {
  return get("estimate", "variant", "compact-n");
}

}  // namespace finslab
