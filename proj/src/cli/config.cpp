#include "qhjlab/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qhjlab/cli/pipelines.hpp"
#include "qhjlab/wkb_hierarchy.hpp"

namespace qhjlab::cli {

namespace {

using json = nlohmann::json;

struct Issue {
  std::string pointer;
  std::string message;
};

[[noreturn]] void fail(const std::string& pointer, const std::string& message) { throw Issue{pointer, message}; }

std::string type_name(const json& j) { return j.type_name(); }

class Section {
 public:
  Section(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j_.is_object()) fail(ptr_, "expected an object, found " + type_name(j_));
  }

  const std::string& pointer() const { return ptr_; }
  std::string at(const std::string& key) const { return ptr_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const { return j_.at(key); }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) fail(at(k), "unknown key");
  }

  double number(const std::string& key) const {
    if (!has(key)) fail(ptr_, "missing required key \"" + key + "\"");
    return as_number(j_.at(key), at(key));
  }
  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::size_t count(const std::string& key) const {
    const double v = number(key);
    if (v < 0 || v != std::floor(v) || v > 1e9) fail(at(key), "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string string(const std::string& key) const {
    if (!has(key)) fail(ptr_, "missing required key \"" + key + "\"");
    if (!j_.at(key).is_string()) fail(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  Section object(const std::string& key) const { return Section(j_.at(key), at(key)); }

  std::vector<double> numbers(const std::string& key) const {
    const json& a = j_.at(key);
    if (!a.is_array()) fail(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_number(a[i], at(key) + "/" + std::to_string(i)));
    return out;
  }

  static double as_number(const json& v, const std::string& ptr) {
    if (!v.is_number()) fail(ptr, "expected a number, found " + type_name(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "value must be finite");
    return d;
  }

 private:
  const json& j_;
  std::string ptr_;
};

Interval interval(const Section& s, const std::string& key) {
  const auto v = s.numbers(key);
  if (v.size() != 2 || !(v[0] < v[1])) fail(s.at(key), "expected [lo, hi] with lo < hi");
  return {v[0], v[1]};
}

Grid read_grid(const Section& g) {
  g.allow_only({"x_min", "x_max", "n", "follows_hbar"});
  const double lo = g.number("x_min"), hi = g.number("x_max");
  if (!(lo < hi)) fail(g.at("x_max"), "x_max must exceed x_min");
  const std::size_t n = g.count("n");
  if (n < kMinCliSamples) fail(g.at("n"), "n must be at least " + std::to_string(kMinCliSamples));
  return Grid(lo, hi, n);
}

RealField read_table_field(const std::filesystem::path& file, const std::string& ptr) {
  std::ifstream in(file);
  if (!in) fail(ptr, "cannot open " + file.string());
  std::vector<double> xs, vs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double x, v;
    if (!(ls >> x >> v)) {
      if (xs.empty()) continue;  // header
      fail(ptr, file.string() + ":" + std::to_string(lineno) + ": expected two numeric columns");
    }
    xs.push_back(x);
    vs.push_back(v);
  }
  if (xs.size() < 2) fail(ptr, file.string() + ": needs at least two rows");
  const Grid g(xs.front(), xs.back(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (std::abs(xs[i] - g.x(i)) > 1e-9 * std::max(1.0, std::abs(xs[i])))
      fail(ptr, file.string() + ": x column is not uniformly spaced");
  return RealField(g, std::move(vs));
}

Potential read_potential(const Section& p, const std::filesystem::path& base) {
  const std::string kind = p.string("kind");
  if (kind == "free") {
    p.allow_only({"kind"});
    return Potential::free_particle();
  }
  if (kind == "linear") {
    p.allow_only({"kind", "slope", "offset"});
    const double slope = p.number_or("slope", 1.0);
    if (slope == 0.0) fail(p.at("slope"), "slope must be nonzero (use kind \"free\")");
    return Potential::linear(slope, p.number_or("offset", 0.0));
  }
  if (kind == "harmonic") {
    p.allow_only({"kind", "stiffness"});
    const double k = p.number_or("stiffness", 1.0);
    if (!(k > 0.0)) fail(p.at("stiffness"), "stiffness must be positive");
    return Potential::harmonic(k);
  }
  if (kind == "tabulated") {
    p.allow_only({"kind", "file"});
    return Potential::custom(read_table_field(base / p.string("file"), p.at("file")));
  }
  fail(p.at("kind"), "unknown potential kind \"" + kind + "\" (free, linear, harmonic, tabulated)");
}

ScenarioConfig build(const json& doc, const std::filesystem::path& base) {
  const Section root(doc, "");
  root.allow_only({"schema", "name", "constants", "potential", "energy", "grid", "solver", "microstate", "uncertainty",
                   "duality", "hierarchy", "outputs", "tolerances"});
  if (root.string("schema") != kConfigSchema)
    fail("/schema", std::string("unsupported schema (expected \"") + kConfigSchema + "\")");
  const std::string name = root.string("name");
  if (name.empty()) fail("/name", "name must not be empty");

  PhysicalConstants constants;
  if (root.has("constants")) {
    const auto c = root.object("constants");
    c.allow_only({"hbar", "mass"});
    const double hbar = c.number_or("hbar", 1.0), mass = c.number_or("mass", 0.5);
    if (!(hbar > 0.0)) fail(c.at("hbar"), "hbar must be positive");
    if (!(mass > 0.0)) fail(c.at("mass"), "mass must be positive");
    constants = PhysicalConstants(hbar, mass);
  }
  if (!root.has("potential")) fail("", "missing required key \"potential\"");
  const Potential potential = read_potential(root.object("potential"), base);
  if (!root.has("grid")) fail("", "missing required key \"grid\"");
  const auto gsec = root.object("grid");
  const Grid grid = read_grid(gsec);

  double energy = 0.0;
  bool ground = false;
  if (!root.has("energy")) fail("", "missing required key \"energy\"");
  if (root.raw("energy").is_string()) {
    if (root.string("energy") != "ground_state") fail("/energy", "expected a number or \"ground_state\"");
    if (potential.kind() != Potential::Kind::harmonic) fail("/energy", "\"ground_state\" needs a harmonic potential");
    energy = harmonic_ground_energy(potential, constants);
    ground = true;
  } else {
    energy = root.number("energy");
  }

  auto method = Scenario::Method::analytic;
  InitialConditions ics;
  SolveOptions solve;
  if (root.has("solver")) {
    const auto s = root.object("solver");
    s.allow_only({"method", "initial", "substeps", "residual_tolerance"});
    const std::string m = s.has("method") ? s.string("method") : "analytic";
    if (m == "numeric")
      method = Scenario::Method::numeric;
    else if (m != "analytic")
      fail(s.at("method"), "method must be \"analytic\" or \"numeric\"");
    if (s.has("initial")) {
      const auto i = s.object("initial");
      i.allow_only({"psi", "dpsi", "psiD", "dpsiD", "anchor"});
      ics.psi = i.number_or("psi", ics.psi);
      ics.dpsi = i.number_or("dpsi", ics.dpsi);
      ics.psiD = i.number_or("psiD", ics.psiD);
      ics.dpsiD = i.number_or("dpsiD", ics.dpsiD);
      if (i.has("anchor")) ics.anchor = i.number("anchor");
      if (ics.psi * ics.dpsiD - ics.dpsi * ics.psiD == 0.0) fail(i.pointer(), "initial data has zero Wronskian");
    }
    if (s.has("substeps")) {
      const auto k = s.count("substeps");
      if (k < 1) fail(s.at("substeps"), "substeps must be at least 1");
      solve.substeps = static_cast<int>(k);
    }
    solve.residual_tolerance = s.number_or("residual_tolerance", solve.residual_tolerance);
    if (!(solve.residual_tolerance > 0.0)) fail(s.at("residual_tolerance"), "must be positive");
  }
  if (potential.kind() == Potential::Kind::custom && method == Scenario::Method::analytic)
    fail("/solver/method", "tabulated potentials need the numeric solver");

  Scenario sc{name, constants, potential, grid, energy, method, ics, solve, ground, gsec.boolean_or("follows_hbar", false)};

  ScenarioConfig cfg{name, sc, {}, {}, {}, {}, {base / "out" / name, false}, {}};

  if (root.has("microstate")) {
    const auto m = root.object("microstate");
    m.allow_only({"alpha", "ell1", "ell2", "trajectory_samples"});
    MicrostateConfig mc;
    mc.params.alpha = m.number_or("alpha", 0.0);
    mc.params.ell = complex(m.number_or("ell1", 1.0), m.number_or("ell2", 0.0));
    if (mc.params.ell.real() == 0.0) fail(m.has("ell1") ? m.at("ell1") : m.pointer(), "ell1 must be nonzero");
    if (m.has("trajectory_samples")) mc.trajectory_samples = m.count("trajectory_samples");
    cfg.microstate = mc;
  }
  if (root.has("uncertainty")) {
    const auto u = root.object("uncertainty");
    u.allow_only({"delta_alpha", "window", "hbar_scan"});
    UncertaintyConfig uc;
    uc.delta_alpha = u.number_or("delta_alpha", 1.0);
    if (uc.delta_alpha < 0.0) fail(u.at("delta_alpha"), "delta_alpha must be nonnegative");
    if (u.has("window")) uc.window = interval(u, "window");
    if (u.has("hbar_scan")) {
      uc.hbar_scan = u.numbers("hbar_scan");
      for (std::size_t i = 0; i < uc.hbar_scan.size(); ++i)
        if (!(uc.hbar_scan[i] > 0.0)) fail(u.at("hbar_scan") + "/" + std::to_string(i), "hbar values must be positive");
      if (uc.hbar_scan.size() < 4) fail(u.at("hbar_scan"), "an hbar scan needs at least 4 values");
    }
    cfg.uncertainty = uc;
  }
  if (root.has("duality")) {
    const auto d = root.object("duality");
    d.allow_only({"sprime"});
    DualityConfig dc;
    if (d.has("sprime")) {
      const json& a = d.raw("sprime");
      if (!a.is_array()) fail(d.at("sprime"), "expected an array of [a, b, c] triples");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string p = d.at("sprime") + "/" + std::to_string(i);
        if (!a[i].is_array() || a[i].size() != 3) fail(p, "expected [a, b, c]");
        dc.sprime.push_back({Section::as_number(a[i][0], p + "/0"), Section::as_number(a[i][1], p + "/1"),
                             Section::as_number(a[i][2], p + "/2")});
      }
    }
    cfg.duality = dc;
  }
  if (root.has("hierarchy")) {
    const auto h = root.object("hierarchy");
    h.allow_only({"K", "epsilon", "x_ref", "energy", "grid", "F_even", "epsilon_sweep"});
    HierarchyConfig hc;
    if (h.has("K")) {
      const auto K = h.count("K");
      if (K > static_cast<std::size_t>(kMaxHierarchyOrder)) fail(h.at("K"), "K must not exceed 12");
      hc.K = static_cast<int>(K);
    }
    hc.epsilon = h.number_or("epsilon", hc.epsilon);
    if (!(hc.epsilon > 0.0)) fail(h.at("epsilon"), "epsilon must be positive");
    if (h.has("x_ref")) hc.x_ref = h.number("x_ref");
    if (h.has("energy")) hc.energy = h.number("energy");
    if (h.has("grid")) hc.grid = read_grid(h.object("grid"));
    const Grid hg = hc.grid.value_or(grid);
    if (hc.x_ref && (*hc.x_ref < hg.x_min() || *hc.x_ref > hg.x_max())) fail(h.at("x_ref"), "x_ref lies outside the grid");
    if (h.has("F_even")) {
      const json& a = h.raw("F_even");
      if (!a.is_array()) fail(h.at("F_even"), "expected an array of file names");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string p = h.at("F_even") + "/" + std::to_string(i);
        if (!a[i].is_string()) fail(p, "expected a file name");
        const auto f = read_table_field(base / a[i].get<std::string>(), p);
        if (!(f.grid() == hg)) fail(p, "samples do not match the hierarchy grid");
        hc.F_even_files.push_back(a[i].get<std::string>());
        hc.F_even.push_back(f);
      }
    }
    if (h.has("epsilon_sweep")) {
      hc.epsilon_sweep = h.numbers("epsilon_sweep");
      for (std::size_t i = 0; i < hc.epsilon_sweep.size(); ++i)
        if (!(hc.epsilon_sweep[i] > 0.0)) fail(h.at("epsilon_sweep") + "/" + std::to_string(i), "must be positive");
      if (hc.epsilon_sweep.size() < 2) fail(h.at("epsilon_sweep"), "a sweep needs at least 2 values");
    }
    cfg.hierarchy = hc;
  }
  if (root.has("outputs")) {
    const auto o = root.object("outputs");
    o.allow_only({"directory", "plot"});
    if (o.has("directory")) cfg.outputs.directory = base / o.string("directory");
    cfg.outputs.plot = o.boolean_or("plot", false);
  }
  if (root.has("tolerances")) {
    const auto t = root.object("tolerances");
    for (const auto& [k, v] : doc.at("tolerances").items()) {
      if (!is_known_check(k)) fail(t.at(k), "unknown check name");
      const double tol = Section::as_number(v, t.at(k));
      if (!(tol > 0.0)) fail(t.at(k), "tolerance must be positive");
      cfg.tolerances[k] = tol;
    }
  }
  return cfg;
}

struct Scanner {
  const std::string& s;
  std::size_t pos = 0;
  std::size_t line = 1;

  char peek() const { return pos < s.size() ? s[pos] : '\0'; }
  void advance() {
    if (pos < s.size() && s[pos] == '\n') ++line;
    ++pos;
  }
  void ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) advance();
  }
  std::string string() {
    std::string out;
    advance();  // opening quote
    while (pos < s.size() && s[pos] != '"') {
      if (s[pos] == '\\') {
        out += s[pos];
        advance();
      }
      out += s[pos];
      advance();
    }
    advance();
    return out;
  }
  void skip_value() {
    ws();
    const char c = peek();
    if (c == '"') {
      string();
    } else if (c == '{' || c == '[') {
      const char close = c == '{' ? '}' : ']';
      advance();
      ws();
      if (peek() == close) {
        advance();
        return;
      }
      while (true) {
        if (c == '{') {
          ws();
          string();
          ws();
          advance();  // ':'
        }
        skip_value();
        ws();
        const char d = peek();
        advance();
        if (d == close || d == '\0') break;
      }
    } else {
      while (pos < s.size() && !std::strchr(",}] \t\r\n", s[pos])) advance();
    }
  }
};

std::size_t locate(Scanner& sc, const std::vector<std::string>& tokens, std::size_t depth) {
  sc.ws();
  if (depth == tokens.size()) return sc.line;
  const char c = sc.peek();
  if (c == '{') {
    sc.advance();
    while (true) {
      sc.ws();
      if (sc.peek() != '"') return 0;
      const std::size_t key_line = sc.line;
      const std::string key = sc.string();
      sc.ws();
      sc.advance();  // ':'
      if (key == tokens[depth]) {
        const std::size_t l = locate(sc, tokens, depth + 1);
        return depth + 1 == tokens.size() ? key_line : l;
      }
      sc.skip_value();
      sc.ws();
      if (sc.peek() != ',') return 0;
      sc.advance();
    }
  }
  if (c == '[') {
    std::size_t idx = 0;
    try {
      idx = std::stoul(tokens[depth]);
    } catch (...) {
      return 0;
    }
    sc.advance();
    for (std::size_t k = 0;; ++k) {
      sc.ws();
      if (sc.peek() == ']') return 0;
      if (k == idx) return locate(sc, tokens, depth + 1);
      sc.skip_value();
      sc.ws();
      if (sc.peek() != ',') return 0;
      sc.advance();
    }
  }
  return 0;
}

}  // namespace

std::size_t locate_line(const std::string& text, const std::string& pointer) {
  std::vector<std::string> tokens;
  if (!pointer.empty()) {
    std::size_t start = 1;
    while (start <= pointer.size()) {
      const auto end = pointer.find('/', start);
      std::string t = pointer.substr(start, end == std::string::npos ? std::string::npos : end - start);
      for (std::size_t p; (p = t.find("~1")) != std::string::npos;) t.replace(p, 2, "/");
      for (std::size_t p; (p = t.find("~0")) != std::string::npos;) t.replace(p, 2, "~");
      tokens.push_back(t);
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  Scanner sc{text};
  return locate(sc, tokens, 0);
}

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parameter, source + ": " + e.what());
  }
  try {
    return build(doc, base_dir);
  } catch (const Issue& issue) {
    const std::size_t line = locate_line(text, issue.pointer);
    std::ostringstream os;
    os << source;
    if (line) os << ":" << line;
    os << ": " << (issue.pointer.empty() ? "/" : issue.pointer) << ": " << issue.message;
    throw Error(ErrorKind::parameter, os.str());
  }
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parameter, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(ss.str(), base, path.string());
}

}  // namespace qhjlab::cli
