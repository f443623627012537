#include "qhjlab/se_solutions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/airy.hpp>

namespace qhjlab {

namespace {

using Fn = std::function<complex(double)>;

// Complex field u with u', u'' = c u, u''' = c' u + c u' attached, where
// c = (V - E)/eps^2 comes from the Schroedinger equation itself.
ComplexField solution_field(const Grid& grid, const Fn& u, const Fn& du, const Potential& pot, double E,
                            double eps2) {
  auto c = [&](double x) { return (pot.value(x) - E) / eps2; };
  auto dc = [&](double x) { return pot.derivative_at(x) / eps2; };
  return ComplexField::sample_with_derivatives(
      grid, u, du, [&](double x) { return c(x) * u(x); },
      [&](double x) { return dc(x) * u(x) + c(x) * du(x); });
}

// Elementwise a*fa + b*fb including attached derivatives present on both.
ComplexField mix(const ComplexField& fa, complex a, const ComplexField& fb, complex b) {
  std::vector<complex> v(fa.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * fa[i] + b * fb[i];
  ComplexField::Derivatives d;
  for (int k = 1; k <= 3; ++k) {
    if (!fa.has_attached(k) || !fb.has_attached(k)) continue;
    d[k - 1].resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[k - 1][i] = a * fa.attached(k)[i] + b * fb.attached(k)[i];
  }
  return ComplexField(fa.grid(), std::move(v), std::move(d));
}

ComplexField conj_field(const ComplexField& f) {
  std::vector<complex> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::conj(f[i]);
  ComplexField::Derivatives d;
  for (int k = 1; k <= 3; ++k) {
    if (!f.has_attached(k)) continue;
    for (auto z : f.attached(k)) d[k - 1].push_back(std::conj(z));
  }
  return ComplexField(f.grid(), std::move(v), std::move(d));
}

double member_residual(const ComplexField& u, const RealField& V, double E, double eps2, std::size_t& worst) {
  const auto d2 = finite_difference(u.without_derivatives(), 2);
  // Floor: curvature of a solution varying on the scale of the whole grid.
  const double L = u.grid().x_max() - u.grid().x_min();
  double scale = eps2 * u.max_modulus() / (L * L), res = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    scale = std::max({scale, std::abs(eps2 * d2[i]), std::abs((V[i] - E) * u[i])});
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = std::abs(-eps2 * d2[i] + (V[i] - E) * u[i]);
    if (r > res) {
      res = r;
      worst = i;
    }
  }
  return scale > 0.0 ? res / scale : res;
}

}  // namespace

PhysicalConstants::PhysicalConstants(double hbar_, double mass_) : hbar(hbar_), mass(mass_) {
  if (!(hbar > 0.0) || !(mass > 0.0) || !std::isfinite(hbar) || !std::isfinite(mass))
    throw Error(ErrorKind::parameter, "hbar and mass must be positive and finite");
}

double PhysicalConstants::epsilon() const noexcept { return hbar / std::sqrt(2.0 * mass); }

Potential::Potential(Kind kind, double slope, double offset, double stiffness, std::optional<RealField> samples)
    : kind_(kind), slope_(slope), offset_(offset), stiffness_(stiffness), samples_(std::move(samples)) {}

Potential Potential::free_particle() { return Potential(Kind::free, 0.0, 0.0, 0.0, std::nullopt); }

Potential Potential::linear(double slope, double offset) {
  return Potential(Kind::linear, slope, offset, 0.0, std::nullopt);
}

Potential Potential::harmonic(double stiffness) {
  if (!(stiffness > 0.0)) throw Error(ErrorKind::parameter, "harmonic stiffness must be positive");
  return Potential(Kind::harmonic, 0.0, 0.0, stiffness, std::nullopt);
}

Potential Potential::custom(RealField samples) {
  for (double v : samples.values())
    if (!std::isfinite(v)) throw Error(ErrorKind::parameter, "tabulated potential has non-finite samples");
  return Potential(Kind::custom, 0.0, 0.0, 0.0, samples.without_derivatives());
}

std::string Potential::name() const {
  switch (kind_) {
    case Kind::free: return "free";
    case Kind::linear: return "linear";
    case Kind::harmonic: return "harmonic";
    case Kind::custom: return "custom";
  }
  return "unknown";
}

double Potential::value(double x) const {
  switch (kind_) {
    case Kind::free: return 0.0;
    case Kind::linear: return slope_ * x + offset_;
    case Kind::harmonic: return stiffness_ * x * x;
    case Kind::custom: return interpolate(*samples_, x);
  }
  return 0.0;
}

double Potential::derivative_at(double x) const {
  switch (kind_) {
    case Kind::free: return 0.0;
    case Kind::linear: return slope_;
    case Kind::harmonic: return 2.0 * stiffness_ * x;
    case Kind::custom: return interpolate(derivative(*samples_, 1), x);
  }
  return 0.0;
}

std::vector<RealField> Potential::derivative_fields(const Grid& grid, int order) const {
  std::vector<RealField> out;
  if (kind_ == Kind::custom) {
    RealField base = grid == samples_->grid()
                         ? *samples_
                         : RealField::sample(grid, [this](double x) { return interpolate(*samples_, x); });
    out.push_back(base);
    for (int k = 1; k <= order; ++k) out.push_back(finite_difference(out.back(), 1));
    return out;
  }
  for (int k = 0; k <= order; ++k) {
    out.push_back(RealField::sample(grid, [this, k](double x) {
      switch (kind_) {
        case Kind::linear: return k == 0 ? slope_ * x + offset_ : (k == 1 ? slope_ : 0.0);
        case Kind::harmonic:
          return k == 0 ? stiffness_ * x * x : (k == 1 ? 2.0 * stiffness_ * x : (k == 2 ? 2.0 * stiffness_ : 0.0));
        default: return 0.0;
      }
    }));
  }
  return out;
}

RealField Potential::sample(const Grid& grid) const {
  auto f = derivative_fields(grid, 3);
  RealField::Derivatives d;
  for (int k = 1; k <= 3; ++k) d[k - 1].assign(f[k].values().begin(), f[k].values().end());
  return RealField(grid, std::vector<double>(f[0].values().begin(), f[0].values().end()), std::move(d));
}

double harmonic_ground_energy(const Potential& potential, const PhysicalConstants& constants) {
  if (potential.kind() != Potential::Kind::harmonic)
    throw Error(ErrorKind::capability, "ground-state energy is only defined for the harmonic potential");
  return constants.epsilon() * std::sqrt(potential.stiffness());
}

SolutionPair analytic_pair(const Potential& potential, double E, const PhysicalConstants& constants,
                           const Grid& grid) {
  const double eps = constants.epsilon();
  const double eps2 = eps * eps;
  auto V = potential.sample(grid);

  switch (potential.kind()) {
    case Potential::Kind::free: {
      Fn u, du, v, dv;
      double omega = -1.0;
      if (E > 0.0) {
        const double k = std::sqrt(E) / eps;
        u = [k](double x) { return std::cos(k * x); };
        du = [k](double x) { return -k * std::sin(k * x); };
        v = [k](double x) { return std::sin(k * x); };
        dv = [k](double x) { return k * std::cos(k * x); };
        omega = -k;
      } else if (E < 0.0) {
        const double k = std::sqrt(-E) / eps;
        u = [k](double x) { return std::cosh(k * x); };
        du = [k](double x) { return k * std::sinh(k * x); };
        v = [k](double x) { return std::sinh(k * x); };
        dv = [k](double x) { return k * std::cosh(k * x); };
        omega = -k;
      } else {
        u = [](double) { return 1.0; };
        du = [](double) { return 0.0; };
        v = [](double x) { return x; };
        dv = [](double) { return 1.0; };
      }
      auto a = solution_field(grid, u, du, potential, E, eps2);
      auto b = solution_field(grid, v, dv, potential, E, eps2);
      return {a, b, E, constants, omega, V, PairKind::real, true};
    }
    case Potential::Kind::linear: {
      const double g = potential.slope();
      if (g == 0.0) throw Error(ErrorKind::capability, "linear potential with zero slope; use the free pair");
      const double a = std::cbrt(g / eps2);
      const double xt = (E - potential.offset()) / g;
      using boost::math::airy_ai;
      using boost::math::airy_ai_prime;
      using boost::math::airy_bi;
      using boost::math::airy_bi_prime;
      auto psi = solution_field(
          grid, [=](double x) { return airy_ai(a * (x - xt)); },
          [=](double x) { return a * airy_ai_prime(a * (x - xt)); }, potential, E, eps2);
      auto psiD = solution_field(
          grid, [=](double x) { return airy_bi(a * (x - xt)); },
          [=](double x) { return a * airy_bi_prime(a * (x - xt)); }, potential, E, eps2);
      return {psi, psiD, E, constants, -a / std::numbers::pi, V, PairKind::real, true};
    }
    case Potential::Kind::harmonic: {
      const double E0 = harmonic_ground_energy(potential, constants);
      if (std::abs(E - E0) > 1e-10 * std::max(1.0, std::abs(E0)))
        throw Error(ErrorKind::capability, "analytic harmonic pair exists only at the ground-state energy " +
                                               std::to_string(E0));
      const double w = std::sqrt(potential.stiffness()) / eps;
      auto u = [w](double x) { return std::exp(-0.5 * w * x * x); };
      auto du = [w, u](double x) { return -w * x * u(x); };
      auto psi = solution_field(grid, u, du, potential, E, eps2);
      // Reduction of order: psiD = psi * int_{x0}^{X} psi^{-2}, accumulated
      // cell by cell with Gauss-Legendre so the partner stays smooth.
      const std::size_t i0 = grid.contains(0.0) ? grid.nearest_index(0.0) : 0;
      const double x0 = grid.contains(0.0) ? 0.0 : grid.x_min();
      auto inv2 = [w](double t) { return std::exp(w * t * t); };
      using GL = boost::math::quadrature::gauss<double, 20>;
      std::vector<double> I(grid.size());
      I[i0] = GL::integrate(inv2, x0, grid.x(i0));
      for (std::size_t i = i0 + 1; i < grid.size(); ++i) I[i] = I[i - 1] + GL::integrate(inv2, grid.x(i - 1), grid.x(i));
      for (std::size_t i = i0; i > 0; --i) I[i - 1] = I[i] - GL::integrate(inv2, grid.x(i - 1), grid.x(i));
      std::vector<complex> v(grid.size());
      std::array<std::vector<complex>, 3> d;
      for (auto& di : d) di.resize(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.x(i);
        const double c = (V[i] - E) / eps2;
        v[i] = u(x) * I[i];
        d[0][i] = du(x) * I[i] + 1.0 / u(x);
        d[1][i] = c * v[i];
        d[2][i] = V.attached(1)[i] / eps2 * v[i] + c * d[0][i];
      }
      ComplexField psiD(grid, std::move(v), std::move(d));
      return {psi, psiD, E, constants, -1.0, V, PairKind::real, true};
    }
    case Potential::Kind::custom:
      throw Error(ErrorKind::capability, "no analytic pair for a tabulated potential");
  }
  throw Error(ErrorKind::capability, "unsupported potential");
}

SolutionPair solve_pair(const Potential& potential, double E, const PhysicalConstants& constants, const Grid& grid,
                        const InitialConditions& ics, const SolveOptions& options) {
  const double w0 = ics.dpsi * ics.psiD - ics.psi * ics.dpsiD;
  const double w_scale = std::abs(ics.dpsi * ics.psiD) + std::abs(ics.psi * ics.dpsiD);
  if (w_scale == 0.0 || std::abs(w0) <= 1e-14 * w_scale)
    throw Error(ErrorKind::degeneracy, "initial conditions have zero Wronskian");
  if (options.substeps < 1) throw Error(ErrorKind::parameter, "substeps must be at least 1");

  const double anchor = ics.anchor.value_or(grid.x_min());
  if (!grid.contains(anchor)) throw Error(ErrorKind::range, "anchor outside the grid");
  const std::size_t i0 = grid.nearest_index(anchor);
  if (std::abs(grid.x(i0) - anchor) > 1e-9 * grid.spacing())
    throw Error(ErrorKind::range, "anchor " + std::to_string(anchor) + " is not a grid sample");

  const double eps2 = std::pow(constants.epsilon(), 2);
  const std::size_t n = grid.size();
  using State = std::array<double, 4>;  // psi, psi', psiD, psiD'
  std::vector<State> y(n);
  y[i0] = {ics.psi, ics.dpsi, ics.psiD, ics.dpsiD};

  auto rhs = [&](double x, const State& s) {
    const double c = (potential.value(x) - E) / eps2;
    return State{s[1], c * s[0], s[3], c * s[2]};
  };
  auto step = [&](double x, State s, double h) {
    const auto k1 = rhs(x, s);
    State t;
    for (int j = 0; j < 4; ++j) t[j] = s[j] + 0.5 * h * k1[j];
    const auto k2 = rhs(x + 0.5 * h, t);
    for (int j = 0; j < 4; ++j) t[j] = s[j] + 0.5 * h * k2[j];
    const auto k3 = rhs(x + 0.5 * h, t);
    for (int j = 0; j < 4; ++j) t[j] = s[j] + h * k3[j];
    const auto k4 = rhs(x + h, t);
    for (int j = 0; j < 4; ++j) s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    return s;
  };
  auto advance = [&](std::size_t from, std::size_t to) {
    const double x0 = grid.x(from), x1 = grid.x(to);
    const double h = (x1 - x0) / options.substeps;
    State s = y[from];
    for (int m = 0; m < options.substeps; ++m) s = step(x0 + m * h, s, h);
    y[to] = s;
  };
  for (std::size_t i = i0; i + 1 < n; ++i) advance(i, i + 1);
  for (std::size_t i = i0; i > 0; --i) advance(i, i - 1);

  std::vector<complex> a(n), da(n), b(n), db(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = y[i][0];
    da[i] = y[i][1];
    b[i] = y[i][2];
    db[i] = y[i][3];
  }
  ComplexField psi(grid, std::move(a), {std::move(da), {}, {}});
  ComplexField psiD(grid, std::move(b), {std::move(db), {}, {}});
  SolutionPair pair{psi, psiD, E, constants, w0, potential.sample(grid), PairKind::real, false};

  const auto r = schrodinger_residual(pair);
  if (std::max(r.psi, r.psiD) > options.residual_tolerance) {
    throw Error(ErrorKind::accuracy, "numeric pair residual " + std::to_string(std::max(r.psi, r.psiD)) +
                                         " exceeds " + std::to_string(options.residual_tolerance) +
                                         " (worst sample " + std::to_string(r.worst_sample) + ", x = " +
                                         std::to_string(grid.x(r.worst_sample)) + ")");
  }
  return pair;
}

SolutionPair normalize_wronskian(const SolutionPair& pair, complex target) {
  if (pair.wronskian == complex(0.0)) throw Error(ErrorKind::degeneracy, "pair has zero Wronskian");
  const complex r = target / pair.wronskian;
  SolutionPair out = pair;
  if (pair.kind == PairKind::conjugate || pair.kind == PairKind::real) {
    if (std::abs(r.imag()) > 1e-12 * std::abs(r))
      throw Error(ErrorKind::contract, "target Wronskian is not a real multiple of the current one");
    const double s = std::sqrt(std::abs(r.real()));
    if (pair.kind == PairKind::conjugate) {
      if (r.real() < 0.0) out = swapped(pair);
      out = scaled(out, s);
    } else {
      out = scaled(pair, s);
      if (r.real() < 0.0) out.psiD = out.psiD.scaled(-1.0);
    }
  } else {
    out.psiD = pair.psiD.scaled(r);
  }
  out.wronskian = target;
  return out;
}

complex duality_wronskian(const PhysicalConstants& constants) { return complex(0.0, 2.0 / constants.epsilon()); }

SolutionPair conjugate_pair(const SolutionPair& real_pair) {
  if (real_pair.kind != PairKind::real) throw Error(ErrorKind::contract, "conjugate_pair expects a real pair");
  SolutionPair out = real_pair;
  out.psi = mix(real_pair.psi, 1.0, real_pair.psiD, complex(0.0, 1.0));
  out.psiD = conj_field(out.psi);
  out.wronskian = complex(0.0, -2.0 * real_pair.wronskian.real());
  out.kind = PairKind::conjugate;
  return out;
}

SolutionPair swapped(const SolutionPair& pair) {
  SolutionPair out = pair;
  std::swap(out.psi, out.psiD);
  out.wronskian = -pair.wronskian;
  return out;
}

SolutionPair scaled(const SolutionPair& pair, double factor) {
  SolutionPair out = pair;
  out.psi = pair.psi.scaled(factor);
  out.psiD = pair.psiD.scaled(factor);
  out.wronskian = pair.wronskian * factor * factor;
  return out;
}

ResidualReport schrodinger_residual(const SolutionPair& pair) {
  const double eps2 = std::pow(pair.constants.epsilon(), 2);
  std::size_t wa = 0, wb = 0;
  const double ra = member_residual(pair.psi, pair.potential, pair.energy, eps2, wa);
  const double rb = member_residual(pair.psiD, pair.potential, pair.energy, eps2, wb);
  return {ra, rb, ra >= rb ? wa : wb};
}

double wronskian_deviation(const SolutionPair& pair) {
  const ComplexField da = derivative(pair.psi, 1);
  const ComplexField db = derivative(pair.psiD, 1);
  double dev = 0.0;
  for (std::size_t i = 0; i < pair.psi.size(); ++i) {
    const complex w = da[i] * pair.psiD[i] - pair.psi[i] * db[i];
    dev = std::max(dev, std::abs(w - pair.wronskian));
  }
  return dev / std::abs(pair.wronskian);
}

double independence_margin(const SolutionPair& pair) {
  double m = INFINITY;
  for (std::size_t i = 0; i < pair.psi.size(); ++i) m = std::min(m, std::norm(pair.psi[i]) + std::norm(pair.psiD[i]));
  return m;
}

SolutionPair Scenario::pair_at(double E) const {
  if (method == Method::analytic) return analytic_pair(potential, E, constants, grid);
  return solve_pair(potential, E, constants, grid, ics, solve_options);
}

Scenario Scenario::with_hbar(double hbar) const {
  Scenario s = *this;
  s.constants = PhysicalConstants(hbar, constants.mass);
  if (tracks_ground_state) s.energy = harmonic_ground_energy(potential, s.constants);
  if (grid_follows_hbar) {
    const double f = std::sqrt(s.constants.epsilon() / constants.epsilon());
    s.grid = Grid(grid.x_min() * f, grid.x_max() * f, grid.size());
    if (ics.anchor) s.ics.anchor = *ics.anchor * f;
  }
  return s;
}

Scenario Scenario::with_grid(const Grid& g) const {
  Scenario s = *this;
  s.grid = g;
  return s;
}

Scenario Scenario::free_particle(std::size_t n) {
  return {"free", PhysicalConstants{}, Potential::free_particle(), Grid(-4.0, 4.0, n), 1.0, Method::analytic, {},
          {}, false};
}

Scenario Scenario::harmonic_ground_state(std::size_t n) {
  InitialConditions ics;
  ics.anchor = 0.0;
  return {"harmonic", PhysicalConstants{}, Potential::harmonic(1.0), Grid(-3.0, 3.0, n), 1.0, Method::numeric, ics,
          {}, true, true};
}

Scenario Scenario::airy(std::size_t n) {
  return {"airy", PhysicalConstants{}, Potential::linear(1.0, 0.0), Grid(-4.0, 1.5, n), 2.0, Method::analytic, {},
          {}, false};
}

}  // namespace qhjlab
