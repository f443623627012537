#include "qhjlab/microstates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qhjlab {

namespace {

struct RealPair {
  std::vector<double> a, da, b, db;
};

RealPair real_members(const SolutionPair& pair) {
  if (pair.kind != PairKind::real) throw Error(ErrorKind::contract, "microstates need a real solution pair");
  const auto da = derivative(pair.psi, 1);
  const auto db = derivative(pair.psiD, 1);
  RealPair r;
  for (std::size_t i = 0; i < pair.psi.size(); ++i) {
    r.a.push_back(pair.psi[i].real());
    r.da.push_back(da[i].real());
    r.b.push_back(pair.psiD[i].real());
    r.db.push_back(db[i].real());
  }
  return r;
}

// u = psiD + ell_2 psi, v = ell_1 psi, so that psiD - i ell psi = u - i v.
struct Components {
  std::vector<double> D, dD, ddD;
};

Components components(const SolutionPair& pair, const MicrostateParams& params) {
  params.validate();
  const auto r = real_members(pair);
  const double l1 = params.ell.real(), l2 = params.ell.imag();
  const double eps2 = std::pow(pair.constants.epsilon(), 2);
  Components c;
  const std::size_t n = r.a.size();
  c.D.resize(n);
  c.dD.resize(n);
  c.ddD.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = r.b[i] + l2 * r.a[i], du = r.db[i] + l2 * r.da[i];
    const double v = l1 * r.a[i], dv = l1 * r.da[i];
    const double k = (pair.potential[i] - pair.energy) / eps2;
    c.D[i] = u * u + v * v;
    c.dD[i] = 2.0 * (u * du + v * dv);
    c.ddD[i] = 2.0 * (du * du + dv * dv) + 2.0 * k * c.D[i];
  }
  return c;
}

RealField align_branch(const RealField& s, const RealField& ref, double hbar) {
  const double period = std::numbers::pi * hbar;
  const double shift = period * std::round((ref[0] - s[0]) / period);
  if (shift == 0.0) return s;
  return transform(s, [shift](double v) { return v + shift; });
}

RealField central(const RealField& plus, const RealField& minus, double dE) {
  return combine(plus, minus, [dE](double a, double b) { return (a - b) / (2.0 * dE); });
}

double schwarzian_Q(double p, double dp, double ddp, double hbar, double mass) {
  return hbar * hbar / (4.0 * mass) * (ddp / p - 1.5 * (dp / p) * (dp / p));
}

// Root of interpolated t(q) - target on [x_lo, x_hi] where the sign changes.
double invert(const RealField& t, double target, double x_lo, double x_hi) {
  double f_lo = interpolate(t, x_lo) - target;
  double a = x_lo, b = x_hi;
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double fm = interpolate(t, m) - target;
    if ((fm < 0.0) == (f_lo < 0.0)) {
      a = m;
      f_lo = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void MicrostateParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(ell.real()) || !std::isfinite(ell.imag()))
    throw Error(ErrorKind::parameter, "microstate constants must be finite");
  if (ell.real() == 0.0)
    throw Error(ErrorKind::parameter, "ell_1 = Re(ell) must be nonzero (the momentum denominator would vanish)");
}

ComplexField beta_field(const SolutionPair& pair, const MicrostateParams& params) {
  params.validate();
  const auto r = real_members(pair);
  const double l1 = params.ell.real(), l2 = params.ell.imag();
  std::vector<complex> b(r.a.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const complex w(r.b[i] + l2 * r.a[i], l1 * r.a[i]);
    b[i] = w / std::conj(w);
  }
  return ComplexField(pair.grid(), std::move(b));
}

RealField microstate_denominator(const SolutionPair& pair, const MicrostateParams& params) {
  auto c = components(pair, params);
  return RealField(pair.grid(), std::move(c.D), {std::move(c.dD), std::move(c.ddD), {}});
}

RealField momentum(const SolutionPair& pair, const MicrostateParams& params) {
  const auto c = components(pair, params);
  const double k = pair.constants.hbar * params.ell.real() * pair.omega();
  const std::size_t n = c.D.size();
  std::vector<double> p(n), dp(n), ddp(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(c.D[i] > 0.0)) {
      std::ostringstream os;
      os << "|psiD - i ell psi|^2 vanishes at sample " << i << " (x = " << pair.grid().x(i) << ")";
      throw Error(ErrorKind::singular, os.str());
    }
    const double D = c.D[i], dD = c.dD[i];
    p[i] = k / D;
    dp[i] = -k * dD / (D * D);
    ddp[i] = k * (2.0 * dD * dD / (D * D * D) - c.ddD[i] / (D * D));
  }
  return RealField(pair.grid(), std::move(p), {std::move(dp), std::move(ddp), {}});
}

RealField hamilton_principal(const SolutionPair& pair, const MicrostateParams& params) {
  const auto p = momentum(pair, params);
  const auto theta = unwrap_phase(beta_field(pair, params));
  const double h2 = 0.5 * pair.constants.hbar;
  std::vector<double> s(theta.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = h2 * params.alpha + h2 * theta[i];
  RealField::Derivatives d;
  d[0].assign(p.values().begin(), p.values().end());
  d[1].assign(p.attached(1).begin(), p.attached(1).end());
  d[2].assign(p.attached(2).begin(), p.attached(2).end());
  return RealField(pair.grid(), std::move(s), std::move(d));
}

Microstate make_microstate(const SolutionPair& pair, const MicrostateParams& params) {
  auto S0 = hamilton_principal(pair, params);
  auto p = momentum(pair, params);
  const double hbar = pair.constants.hbar, mass = pair.constants.mass;
  std::vector<double> Q(p.size());
  for (std::size_t i = 0; i < Q.size(); ++i) Q[i] = schwarzian_Q(p[i], p.attached(1)[i], p.attached(2)[i], hbar, mass);
  const double E = pair.energy;
  auto W = transform(pair.potential.without_derivatives(), [E](double v) { return v - E; });
  const int dir = (params.ell.real() * pair.omega() > 0.0) ? 1 : -1;
  return {params, pair, beta_field(pair, params), std::move(S0), std::move(p),
          RealField(pair.grid(), std::move(Q)), std::move(W), dir};
}

QuantumPotential quantum_potential(const Microstate& ms) {
  const double hbar = ms.pair.constants.hbar, mass = ms.pair.constants.mass;
  const auto R = transform(ms.p.without_derivatives(), [](double p) { return 1.0 / std::sqrt(std::abs(p)); });
  const auto R2 = finite_difference(R, 2);
  std::vector<double> q(R.size());
  double dev = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = -hbar * hbar / (2.0 * mass) * R2[i] / R[i];
    dev = std::max(dev, std::abs(q[i] - ms.Q[i]));
  }
  return {ms.Q, RealField(ms.p.grid(), std::move(q)), dev};
}

QshjeResidual qshje_residual(const Microstate& ms) {
  const double hbar = ms.pair.constants.hbar, mass = ms.pair.constants.mass;
  const complex k(0.0, 2.0 / hbar);
  const auto f = transform(ms.S0.without_derivatives(), [k](double s) { return std::exp(k * s); });
  const auto sf = schwarzian(f);
  const std::size_t n = ms.p.size();
  std::vector<double> res(n), res_s(n), Ws(n);
  double imag = 0.0, scale = std::abs(ms.pair.energy);
  for (std::size_t i = 0; i < n; ++i) {
    const complex w = -hbar * hbar / (4.0 * mass) * sf[i];
    Ws[i] = w.real();
    imag = std::max(imag, std::abs(w.imag()));
    const double kinetic = ms.p[i] * ms.p[i] / (2.0 * mass);
    res[i] = kinetic + ms.mfW[i] + ms.Q[i];
    res_s[i] = kinetic + Ws[i] + ms.Q[i];
    scale = std::max(scale, std::abs(ms.mfW[i]));
  }
  const Grid& g = ms.p.grid();
  return {RealField(g, std::move(res)), RealField(g, std::move(res_s)), RealField(g, std::move(Ws)), imag, scale};
}

double default_delta_E(double E) { return std::max(1e-5, 1e-5 * std::abs(E)); }

EnergyDerivatives energy_derivatives(const Scenario& scenario, const MicrostateParams& params,
                                     std::optional<double> delta_E) {
  const double E = scenario.energy;
  const double dE = delta_E.value_or(default_delta_E(E));
  if (!(dE > 0.0)) throw Error(ErrorKind::parameter, "delta_E must be positive");
  const double hbar = scenario.constants.hbar;
  const auto centre = make_microstate(scenario.pair_at(E), params);
  const auto plus = make_microstate(scenario.pair_at(E + dE), params);
  const auto minus = make_microstate(scenario.pair_at(E - dE), params);
  const auto Sp = align_branch(plus.S0.without_derivatives(), centre.S0, hbar);
  const auto Sm = align_branch(minus.S0.without_derivatives(), centre.S0, hbar);
  const double gap = max_abs(combine(Sp, Sm, [](double a, double b) { return a - b; }).values());
  if (gap > 0.5 * std::numbers::pi * hbar) {
    std::ostringstream os;
    os << "S0 branches at E +- dE differ by " << gap << " (> pi hbar / 2); reduce delta_E";
    throw Error(ErrorKind::unwrap, os.str());
  }
  return {dE, central(Sp, Sm, dE), central(plus.p.without_derivatives(), minus.p.without_derivatives(), dE),
          central(plus.Q, minus.Q, dE)};
}

RealField time_of_q(const Scenario& scenario, const MicrostateParams& params, std::optional<double> delta_E,
                    std::optional<double> x_ref) {
  const auto d = energy_derivatives(scenario, params, delta_E);
  const double xr = x_ref.value_or(0.5 * (scenario.grid.x_min() + scenario.grid.x_max()));
  const double t0 = interpolate(d.dS0, xr);
  return transform(d.dS0, [t0](double t) { return t - t0; });
}

Trajectory trajectory(const Scenario& scenario, const MicrostateParams& params, std::span<const double> t_samples,
                      std::optional<double> delta_E, std::optional<double> x_ref) {
  const auto d = energy_derivatives(scenario, params, delta_E);
  const double xr = x_ref.value_or(0.5 * (scenario.grid.x_min() + scenario.grid.x_max()));
  const double t0 = interpolate(d.dS0, xr);
  const auto t = transform(d.dS0, [t0](double v) { return v - t0; });
  const auto ms = make_microstate(scenario.pair(), params);
  const Grid& g = t.grid();
  const double mass = scenario.constants.mass;

  // Monotone pieces [first, last] of the sampled t(q).
  std::vector<std::pair<std::size_t, std::size_t>> pieces;
  std::size_t start = 0;
  int dir = 0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    const int s = (t[i] > t[i - 1]) - (t[i] < t[i - 1]);
    if (dir == 0) dir = s;
    if (s != 0 && s != dir) {
      pieces.emplace_back(start, i - 1);
      start = i - 1;
      dir = s;
    }
  }
  pieces.emplace_back(start, g.size() - 1);

  const auto p_samples = ms.p.without_derivatives();
  Trajectory out;
  out.monotone = pieces.size() == 1;
  out.max_qdot_discrepancy = 0.0;
  out.stationary_points = 0;
  for (const auto& [first, last] : pieces) {
    std::vector<TrajectoryPoint> seg;
    const bool up = t[last] >= t[first];
    for (double target : t_samples) {
      const double lo = std::min(t[first], t[last]), hi = std::max(t[first], t[last]);
      if (target < lo || target > hi) continue;
      // Bracketing cell by bisection on the monotone samples.
      std::size_t a = first, b = last;
      while (b - a > 1) {
        const std::size_t m = (a + b) / 2;
        if ((t[m] <= target) == up)
          a = m;
        else
          b = m;
      }
      double q;
      if (t[a] == target)
        q = g.x(a);
      else if (t[b] == target)
        q = g.x(b);
      else
        q = invert(t, target, g.x(a), g.x(b));
      const double p = interpolate(p_samples, q);
      const double dp = interpolate(d.dp, q);
      const double m_Q = mass * (1.0 - interpolate(d.dQ, q));
      TrajectoryPoint pt{target, q, 1.0 / dp, p / m_Q, p, m_Q};
      if (std::isfinite(pt.qdot) && std::isfinite(pt.qdot_quantum_mass))
        out.max_qdot_discrepancy =
            std::max(out.max_qdot_discrepancy, std::abs(pt.qdot - pt.qdot_quantum_mass) / std::abs(pt.qdot));
      else
        ++out.stationary_points;
      seg.push_back(pt);
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace qhjlab
