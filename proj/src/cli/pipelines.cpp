#include "qhjlab/cli/pipelines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "qhjlab/duality.hpp"
#include "qhjlab/wkb_hierarchy.hpp"

namespace qhjlab::cli {

namespace {

constexpr std::array<std::pair<Subcommand, const char*>, 7> kSubcommands{{
    {Subcommand::solve, "solve"},
    {Subcommand::microstate, "microstate"},
    {Subcommand::uncertainty, "uncertainty"},
    {Subcommand::duality, "duality"},
    {Subcommand::hierarchy, "hierarchy"},
    {Subcommand::all, "all"},
    {Subcommand::report, "report"},
}};

const std::set<std::string>& check_names() {
  static const std::set<std::string> names{
      "schrodinger", "wronskian", "qshje", "w_routes", "q_routes", "trajectory_velocity",
      "uncertainty_slope_pq", "uncertainty_slope_Et", "im_prepotential", "dual_derivative", "modulus_identity", "legendre",
      "gd_psi_psibar", "gd_psi_sq", "gd_psibar_sq", "gd_prepotential", "free_energy_form", "hierarchy_orders",
      "hierarchy_parity", "p2_schwarzian", "hierarchy_slope"};
  return names;
}

double default_tolerance(const std::string& name, const Scenario& sc) {
  const bool numeric = sc.method == Scenario::Method::numeric;
  if (name == "schrodinger") return numeric ? sc.solve_options.residual_tolerance : 1e-8;
  if (name == "wronskian") return numeric ? 1e-6 : 1e-8;
  if (name == "uncertainty_slope_pq" || name == "uncertainty_slope_Et") return 0.05;
  if (name == "im_prepotential") return 1e-12;
  if (name == "dual_derivative") return numeric ? 1e-5 : 1e-10;
  if (name == "modulus_identity") return numeric ? 1e-5 : 1e-8;
  if (name.starts_with("gd_") || name == "gd_prepotential") return numeric ? 1e-4 : 1e-6;
  if (name == "free_energy_form") return 1e-12;
  if (name == "hierarchy_orders") return 1e-9;
  if (name == "hierarchy_parity") return 1e-12;
  if (name == "p2_schwarzian") return 1e-5;
  if (name == "hierarchy_slope") return 0.3;
  if (name == "trajectory_velocity") return numeric ? 1e-5 : 1e-6;
  return 1e-6;  // qshje, w_routes, q_routes, legendre, sprime_<k>
}

class Runner {
 public:
  Runner(const ScenarioConfig& cfg, Subcommand sub, const std::map<std::string, double>& overrides, unsigned threads)
      : cfg_(cfg), sc_(cfg.scenario), overrides_(overrides), threads_(threads) {
    result_.config_name = cfg.name;
    result_.subcommand = sub;
    fields_.file = "fields.csv";
  }

  RunResult run() {
    const auto sub = result_.subcommand;
    auto wants = [&](Subcommand s, bool present) { return sub == s || (sub == Subcommand::all && present); };
    solve();
    if (wants(Subcommand::microstate, cfg_.microstate.has_value())) microstate();
    if (wants(Subcommand::uncertainty, cfg_.uncertainty.has_value())) uncertainty();
    if (wants(Subcommand::duality, cfg_.duality.has_value())) duality();
    if (wants(Subcommand::hierarchy, cfg_.hierarchy.has_value())) hierarchy();
    result_.tables.insert(result_.tables.begin(), std::move(fields_));
    return std::move(result_);
  }

 private:
  double tolerance(const std::string& name) const {
    if (auto it = overrides_.find(name); it != overrides_.end()) return it->second;
    if (auto it = cfg_.tolerances.find(name); it != cfg_.tolerances.end()) return it->second;
    return default_tolerance(name, sc_);
  }

  void check(const std::string& name, double value, std::vector<std::string> artifacts) {
    const double tol = tolerance(name);
    result_.checks.push_back({name, std::isfinite(value) && value <= tol, value, tol, std::move(artifacts)});
  }

  static std::vector<double> re(const ComplexField& f) {
    std::vector<double> v;
    for (auto z : f.values()) v.push_back(z.real());
    return v;
  }
  static std::vector<double> im(const ComplexField& f) {
    std::vector<double> v;
    for (auto z : f.values()) v.push_back(z.imag());
    return v;
  }
  static std::vector<double> mod(const ComplexField& f) {
    std::vector<double> v;
    for (auto z : f.values()) v.push_back(std::abs(z));
    return v;
  }
  static std::vector<double> vals(const RealField& f) { return {f.values().begin(), f.values().end()}; }

  void solve() {
    pair_ = sc_.pair();
    const auto r = schrodinger_residual(*pair_);
    check("schrodinger", std::max(r.psi, r.psiD), {"fields.csv"});
    check("wronskian", wronskian_deviation(*pair_) / std::abs(pair_->wronskian), {"fields.csv"});
    fields_.add("X", sc_.grid.coordinates());
    fields_.add("V", vals(pair_->potential));
    fields_.add("re_psi", re(pair_->psi));
    fields_.add("im_psi", im(pair_->psi));
    fields_.add("re_psiD", re(pair_->psiD));
    fields_.add("im_psiD", im(pair_->psiD));
  }

  void microstate() {
    const MicrostateConfig mc = cfg_.microstate.value_or(MicrostateConfig{});
    const auto ms = make_microstate(*pair_, mc.params);
    const auto q = qshje_residual(ms);
    const auto qp = quantum_potential(ms);
    const auto inner = central_fraction(sc_.grid, 0.8);
    double res = 0.0, routes = 0.0;
    for (std::size_t i = inner.first; i < inner.last; ++i) {
      res = std::max(res, std::abs(q.residual[i]));
      routes = std::max(routes, std::abs(q.residual[i] - q.residual_schwarzian[i]));
    }
    check("qshje", res / q.scale, {"fields.csv"});
    check("w_routes", routes / q.scale, {"fields.csv"});
    check("q_routes", qp.max_discrepancy / q.scale, {"fields.csv"});

    const auto t = time_of_q(sc_, mc.params);
    fields_.add("S0", vals(ms.S0));
    fields_.add("p", vals(ms.p));
    fields_.add("Q", vals(ms.Q));
    fields_.add("Q_polar", vals(qp.polar_route));
    fields_.add("W_schwarzian", vals(q.W_schwarzian));
    fields_.add("residual_qshje", vals(q.residual));
    fields_.add("t", vals(t));

    if (mc.trajectory_samples > 0) {
      const auto [lo, hi] = std::minmax_element(t.values().begin(), t.values().end());
      std::vector<double> ts(mc.trajectory_samples);
      for (std::size_t k = 0; k < ts.size(); ++k)
        ts[k] = ts.size() == 1 ? *lo : *lo + (*hi - *lo) * static_cast<double>(k) / static_cast<double>(ts.size() - 1);
      const auto tr = trajectory(sc_, mc.params, ts);
      Table tab{"trajectory.csv", {}};
      std::vector<double> seg, tt, qq, qd, qdm, pp, mq;
      for (std::size_t s = 0; s < tr.segments.size(); ++s)
        for (const auto& pt : tr.segments[s]) {
          seg.push_back(static_cast<double>(s));
          tt.push_back(pt.t);
          qq.push_back(pt.q);
          qd.push_back(pt.qdot);
          qdm.push_back(pt.qdot_quantum_mass);
          pp.push_back(pt.p);
          mq.push_back(pt.m_Q);
        }
      tab.add("segment", seg);
      tab.add("t", tt);
      tab.add("q", qq);
      tab.add("qdot", qd);
      tab.add("qdot_quantum_mass", qdm);
      tab.add("p", pp);
      tab.add("m_Q", mq);
      result_.tables.push_back(std::move(tab));
      check("trajectory_velocity", tr.max_qdot_discrepancy, {"trajectory.csv"});
      if (tr.stationary_points > 0)
        result_.warnings.push_back(std::to_string(tr.stationary_points) +
                                   " stationary point(s) of t(q) left out of the velocity comparison");
    }
  }

  void uncertainty() {
    const UncertaintyConfig uc = cfg_.uncertainty.value_or(UncertaintyConfig{});
    const MicrostateParams params = cfg_.microstate ? cfg_.microstate->params : MicrostateParams{};
    std::vector<UncertaintyReport> reports;
    if (uc.hbar_scan.empty()) {
      const auto w = uc.window.value_or(default_window(sc_.grid));
      reports.push_back(delta_chain(sc_, params, uc.delta_alpha, w.lo, w.hi));
    } else {
      const auto s = hbar_scaling_scan(sc_, params, uc.hbar_scan, uc.delta_alpha, uc.window, threads_);
      reports = s.reports;
      check("uncertainty_slope_pq", std::abs(s.pq.slope - 1.0), {"uncertainty.csv"});
      check("uncertainty_slope_Et", std::abs(s.Et.slope - 1.0), {"uncertainty.csv"});
    }
    Table tab{"uncertainty.csv", {}};
    auto col = [&](const char* name, auto get) {
      std::vector<double> v;
      for (const auto& r : reports) v.push_back(get(r));
      tab.add(name, v);
    };
    col("hbar", [](const UncertaintyReport& r) { return r.hbar; });
    col("delta_S0", [](const UncertaintyReport& r) { return r.delta_S0; });
    col("delta_q_lo", [](const UncertaintyReport& r) { return r.delta_q.lo; });
    col("delta_q_hi", [](const UncertaintyReport& r) { return r.delta_q.hi; });
    col("delta_t_lo", [](const UncertaintyReport& r) { return r.delta_t.lo; });
    col("delta_t_hi", [](const UncertaintyReport& r) { return r.delta_t.hi; });
    col("product_pq_lo", [](const UncertaintyReport& r) { return r.product_pq.lo; });
    col("product_pq_hi", [](const UncertaintyReport& r) { return r.product_pq.hi; });
    col("product_Et_lo", [](const UncertaintyReport& r) { return r.product_Et.lo; });
    col("product_Et_hi", [](const UncertaintyReport& r) { return r.product_Et.hi; });
    col("stationary_points", [](const UncertaintyReport& r) { return static_cast<double>(r.stationary_points); });
    result_.tables.push_back(std::move(tab));
  }

  void duality() {
    const DualityConfig dc = cfg_.duality.value_or(DualityConfig{});
    const auto prep = build_prepotential(duality_pair(*pair_));
    const double eps = sc_.constants.epsilon();
    const Grid& g = sc_.grid;
    double im_err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      im_err = std::max(im_err, std::abs(prep.F[i].imag() - g.x(i) / eps) / std::max(1.0, std::abs(g.x(i) / eps)));
    check("im_prepotential", im_err, {"fields.csv"});
    const auto dd = dual_derivative_residual(prep);
    check("dual_derivative", max_abs(dd.direct.values()), {"fields.csv"});
    const auto modulus = modulus_identity_residual(prep.pair);
    check("modulus_identity", max_abs(modulus.values()), {"fields.csv"});
    const auto L = legendre_residual(prep);
    check("legendre",
          std::max({max_abs(L.transform.values()), max_abs(L.stipulation.values()), max_abs(L.inverse.values())}),
          {"fields.csv"});

    fields_.add("re_F", re(prep.F));
    fields_.add("im_F", im(prep.F));
    fields_.add("re_phi", re(prep.phi));
    fields_.add("im_phi", im(prep.phi));
    std::optional<Residual> gd0;
    for (auto v : {XiVariant::psi_psibar, XiVariant::psi_sq, XiVariant::psibar_sq}) {
      const auto r = gd_residual(prep.xi_of(v), prep.pair.potential, prep.pair.energy, eps);
      const std::string name = std::string("gd_") + to_string(v);
      check(name, r.max_abs() / r.scale, {"fields.csv"});
      fields_.add("abs_" + name, mod(r.values));
      if (v == XiVariant::psi_psibar) gd0 = r;
    }
    const auto gdf = prepotential_gd_residual(prep);
    check("gd_prepotential", gdf.max_abs() / gdf.scale, {"fields.csv"});
    const auto fe = free_energy_residual(prep, free_energy_from_potential(prep.pair.potential));
    double diff = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(fe.values[i] - 0.5 * gd0->values[i]));
    check("free_energy_form", diff / fe.scale, {"fields.csv"});
    fields_.add("modulus_identity", vals(modulus));

    const auto inner = central_fraction(g, 0.8);
    for (std::size_t k = 0; k < dc.sprime.size(); ++k) {
      const auto [a, b, c] = dc.sprime[k];
      const auto s = wkb_general_sprime(prep.pair, a, b, c);
      const std::string name = "sprime_" + std::to_string(k);
      check(name, max_abs(s.residual.values(), inner.first, inner.last) / s.scale, {"fields.csv"});
      fields_.add(name, vals(s.s_prime));
    }
  }

  void hierarchy() {
    const HierarchyConfig hc = cfg_.hierarchy.value_or(HierarchyConfig{});
    const HierarchyInput in{hc.grid.value_or(sc_.grid), sc_.potential, hc.energy.value_or(sc_.energy), hc.F_even,
                            hc.K,          hc.epsilon,   hc.x_ref};
    const auto sol = recurse(in);
    const auto m = master_residual(sol, in);
    double orders = 0.0;
    for (int n = 0; n <= sol.K; ++n) orders = std::max(orders, m.per_order[n] / std::max(m.order_scale[n], 1e-300));
    check("hierarchy_orders", orders, {"hierarchy.csv"});
    check("hierarchy_parity", std::max(sol.parity.even_real, sol.parity.odd_imag), {"hierarchy.csv"});
    const bool f2 = in.has_F(2) && max_abs(in.F_even[0].values()) != 0.0;
    if (sol.K >= 2 && !f2) check("p2_schwarzian", p2_schwarzian_check(sol, in), {"hierarchy.csv"});
    if (!hc.epsilon_sweep.empty()) {
      std::vector<double> rem;
      for (double e : hc.epsilon_sweep) rem.push_back(master_residual(sol, in, e).remainder_max);
      // A terminating series (e.g. constant V) leaves nothing to fit.
      if (std::all_of(rem.begin(), rem.end(), [](double r) { return r <= 1e-13; }))
        result_.warnings.push_back("hierarchy remainder vanishes for every epsilon; slope check skipped");
      else
        check("hierarchy_slope", std::abs(loglog_fit(hc.epsilon_sweep, rem).slope - (sol.K + 1)), {"hierarchy.csv"});
    }

    Table tab{"hierarchy.csv", {}};
    tab.add("X", in.grid.coordinates());
    for (int j = 0; j <= sol.K; ++j) {
      tab.add("re_P" + std::to_string(j), re(sol.P[j]));
      tab.add("im_P" + std::to_string(j), im(sol.P[j]));
    }
    for (int j = 0; j <= sol.K; ++j) {
      tab.add("re_S" + std::to_string(j), re(sol.S[j]));
      tab.add("im_S" + std::to_string(j), im(sol.S[j]));
    }
    const auto mod = reconstruct_normalized_modulus(sol, in);
    for (const auto& w : mod.warnings) result_.warnings.push_back(w);
    tab.add("modulus", vals(mod.modulus));
    result_.tables.push_back(std::move(tab));
  }

  const ScenarioConfig& cfg_;
  const Scenario& sc_;
  const std::map<std::string, double>& overrides_;
  unsigned threads_;
  RunResult result_;
  Table fields_;
  std::optional<SolutionPair> pair_;
};

}  // namespace

std::optional<Subcommand> parse_subcommand(std::string_view name) {
  for (const auto& [s, n] : kSubcommands)
    if (name == n) return s;
  return std::nullopt;
}

const char* to_string(Subcommand s) noexcept {
  for (const auto& [k, n] : kSubcommands)
    if (k == s) return n;
  return "unknown";
}

bool is_known_check(const std::string& name) {
  if (check_names().count(name)) return true;
  if (!name.starts_with("sprime_") || name.size() == 7) return false;
  return std::all_of(name.begin() + 7, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void Table::add(std::string name, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows())
    throw Error(ErrorKind::contract, "column " + name + " does not match the table length");
  columns.emplace_back(std::move(name), std::move(values));
}

bool RunResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

RunResult run_pipelines(const ScenarioConfig& config, Subcommand subcommand,
                        const std::map<std::string, double>& overrides, unsigned threads) {
  if (subcommand == Subcommand::report) throw Error(ErrorKind::parameter, "report does not run pipelines");
  return Runner(config, subcommand, overrides, threads).run();
}

}  // namespace qhjlab::cli
