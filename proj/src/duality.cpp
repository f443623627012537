#include "qhjlab/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qhjlab {

namespace {

constexpr complex I(0.0, 1.0);

ComplexField first_derivative_of_psi(const SolutionPair& pair) {
  const auto d = derivative(pair.psi, 1);
  const double tol = 1e-10 * d.max_modulus();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(std::abs(d[i]) > tol)) {
      std::ostringstream os;
      os << "psi_X vanishes at sample " << i << " (x = " << d.grid().x(i) << ")";
      throw Error(ErrorKind::singular, os.str());
    }
  }
  return d;
}

ComplexField elementwise(const Grid& g, std::size_t n, auto&& fn) {
  std::vector<complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = fn(i);
  return ComplexField(g, std::move(v));
}

RealField real_elementwise(const Grid& g, std::size_t n, auto&& fn) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = fn(i);
  return RealField(g, std::move(v));
}

double term_max(std::initializer_list<double> terms, double current) {
  for (double t : terms) current = std::max(current, t);
  return current;
}

}  // namespace

const char* to_string(XiVariant v) noexcept {
  switch (v) {
    case XiVariant::psi_psibar: return "psi_psibar";
    case XiVariant::psi_sq: return "psi_sq";
    case XiVariant::psibar_sq: return "psibar_sq";
  }
  return "unknown";
}

double Residual::max_abs(IndexRange range) const { return qhjlab::max_abs(values.values(), range.first, range.last); }

double Residual::max_abs() const { return qhjlab::max_abs(values.values()); }

SolutionPair duality_pair(const SolutionPair& real_pair) {
  return normalize_wronskian(conjugate_pair(real_pair), duality_wronskian(real_pair.constants));
}

Prepotential build_prepotential(const SolutionPair& pair) {
  if (pair.kind != PairKind::conjugate)
    throw Error(ErrorKind::contract, "prepotential needs a conjugate pair (psiD = conj(psi))");
  const complex target = duality_wronskian(pair.constants);
  if (std::abs(pair.wronskian - target) > 1e-10 * std::abs(target))
    throw Error(ErrorKind::contract, "pair Wronskian is not normalized to 2i/eps");

  const Grid& g = pair.grid();
  const std::size_t n = pair.psi.size();
  const double eps = pair.constants.epsilon();
  const auto& psi = pair.psi;

  const auto xi0 = elementwise(g, n, [&](std::size_t i) { return psi[i] * std::conj(psi[i]); });
  const auto xi1 = elementwise(g, n, [&](std::size_t i) { return psi[i] * psi[i]; });
  const auto xi2 = elementwise(g, n, [&](std::size_t i) { return std::conj(psi[i] * psi[i]); });

  // F = Xi/2 + i X/eps; the linear part is differentiated exactly.
  const auto half = xi0.scaled(0.5);
  ComplexField::Derivatives d;
  for (int k = 1; k <= 3; ++k) {
    const auto dk = finite_difference(half, k);
    d[k - 1].assign(dk.values().begin(), dk.values().end());
    if (k == 1)
      for (auto& v : d[0]) v += I / eps;
  }
  std::vector<complex> F(n);
  for (std::size_t i = 0; i < n; ++i) F[i] = half[i] + I * g.x(i) / eps;

  const auto phi = elementwise(g, n, [&](std::size_t i) { return std::conj(psi[i]) / (2.0 * psi[i]); });
  return {pair, ComplexField(g, std::move(F), std::move(d)), phi, {xi0, xi1, xi2}};
}

DualDerivativeResidual dual_derivative_residual(const Prepotential& prep) {
  const auto& psi = prep.pair.psi;
  const auto dpsi = first_derivative_of_psi(prep.pair);
  const auto dF = prep.F.attached(1);
  const Grid& g = psi.grid();
  const std::size_t n = psi.size();
  auto direct = real_elementwise(g, n, [&](std::size_t i) { return std::abs(dF[i] / dpsi[i] - std::conj(psi[i])); });
  auto phi_form =
      real_elementwise(g, n, [&](std::size_t i) { return std::abs(dF[i] / (2.0 * psi[i] * dpsi[i]) - prep.phi[i]); });
  return {std::move(direct), std::move(phi_form)};
}

Residual prepotential_ode_residual(const Prepotential& prep, std::optional<double> energy) {
  const double E = energy.value_or(prep.pair.energy);
  const auto dpsi = first_derivative_of_psi(prep.pair);
  const auto& psi = prep.pair.psi;
  const auto& V = prep.pair.potential;
  const Grid& g = psi.grid();
  const std::size_t n = psi.size();
  const auto dF = prep.F.attached(1);

  const auto F1 = elementwise(g, n, [&](std::size_t i) { return dF[i] / dpsi[i]; });
  const auto dF1 = finite_difference(F1, 1);
  const auto F2 = elementwise(g, n, [&](std::size_t i) { return dF1[i] / dpsi[i]; });
  const auto dF2 = finite_difference(F2, 1);

  double scale = 0.0;
  std::vector<complex> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const complex F3 = dF2[i] / dpsi[i];
    const complex k = F1[i] - psi[i] * F2[i];
    const complex rhs = (E - V[i]) / 4.0 * k * k * k;
    r[i] = F3 - rhs;
    scale = term_max({std::abs(F3), std::abs(rhs)}, scale);
  }
  return {ComplexField(g, std::move(r)), scale};
}

Residual gd_residual(const ComplexField& xi, const RealField& V, double E, double eps) {
  if (!(xi.grid() == V.grid())) throw Error(ErrorKind::contract, "Xi and V live on different grids");
  const auto base = xi.without_derivatives();
  const auto d1 = finite_difference(base, 1);
  const auto d3 = finite_difference(base, 3);
  const auto dV = derivative(V, 1);
  const double eps2 = eps * eps;
  double scale = 0.0;
  std::vector<complex> r(xi.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const complex a = eps2 * d3[i], b = 4.0 * (E - V[i]) * d1[i], c = 2.0 * dV[i] * xi[i];
    r[i] = a - 4.0 * V[i] * d1[i] - c + 4.0 * E * d1[i];
    const double field = 4.0 * (std::abs(E) + std::abs(V[i])) * std::abs(xi[i]);
    scale = term_max({std::abs(a), std::abs(b), std::abs(c), field}, scale);
  }
  return {ComplexField(xi.grid(), std::move(r)), scale};
}

Residual prepotential_gd_residual(const Prepotential& prep, PrepotentialGdForm form) {
  const auto& F = prep.F;
  const auto& V = prep.pair.potential;
  const auto dV = derivative(V, 1);
  const double E = prep.pair.energy;
  const double eps = prep.pair.constants.epsilon();
  const complex inv = 1.0 / (I * eps);
  const Grid& g = F.grid();
  double scale = 0.0;
  std::vector<complex> r(F.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const complex a = eps * eps * F.attached(3)[i];
    const complex b = 2.0 * dV[i] * (F[i] + g.x(i) * inv);
    const complex last = form == PrepotentialGdForm::derivative ? F.attached(1)[i] + inv : F[i] + inv;
    const complex c = 4.0 * (E - V[i]) * last;
    r[i] = a - b + c;
    const double field = 2.0 * (std::abs(E) + std::abs(V[i])) * std::abs(F[i] + g.x(i) * inv);
    scale = term_max({std::abs(a), std::abs(b), std::abs(c), field}, scale);
  }
  return {ComplexField(g, std::move(r)), scale};
}

FreeEnergy free_energy_from_potential(const RealField& V) {
  const Grid& g = V.grid();
  const double mid = 0.5 * (g.x_min() + g.x_max());
  const auto F2 = transform(V.without_derivatives(), [](double v) { return -0.5 * v; });
  const auto F1 = antiderivative(F2, mid);
  const auto F0 = antiderivative(F1, mid);
  const auto dV = derivative(V, 1);
  RealField::Derivatives d;
  d[0].assign(F1.values().begin(), F1.values().end());
  d[1].assign(F2.values().begin(), F2.values().end());
  for (double v : dV.values()) d[2].push_back(-0.5 * v);
  return {RealField(g, std::vector<double>(F0.values().begin(), F0.values().end()), std::move(d)), {}};
}

Residual free_energy_residual(const Prepotential& prep, const FreeEnergy& fe, std::optional<double> energy) {
  const auto& F = prep.F;
  const auto& V = prep.pair.potential;
  if (!(fe.F0.grid() == F.grid())) throw Error(ErrorKind::contract, "free energy and prepotential grids differ");
  const auto F0_2 = derivative(fe.F0, 2);
  const auto F0_3 = derivative(fe.F0, 3);
  const double vscale = std::max(1.0, V.max_modulus());
  for (std::size_t i = 0; i < V.size(); ++i) {
    if (std::abs(F0_2[i] + 0.5 * V[i]) > 1e-9 * vscale) {
      std::ostringstream os;
      os << "free energy does not satisfy F0'' = -V/2 at sample " << i;
      throw Error(ErrorKind::contract, os.str());
    }
  }
  const double E = energy.value_or(prep.pair.energy);
  const double eps = prep.pair.constants.epsilon();
  const complex inv = 1.0 / (I * eps);
  const Grid& g = F.grid();
  double scale = 0.0;
  std::vector<complex> r(F.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const complex a = eps * eps * F.attached(3)[i];
    const complex b = (F.attached(1)[i] + inv) * (8.0 * F0_2[i] + 4.0 * E);
    const complex c = 4.0 * F0_3[i] * (F[i] + g.x(i) * inv);
    r[i] = a + b + c;
    const double field = 2.0 * (std::abs(E) + std::abs(V[i])) * std::abs(F[i] + g.x(i) * inv);
    scale = term_max({std::abs(a), std::abs(b), std::abs(c), field}, scale);
  }
  return {ComplexField(g, std::move(r)), scale};
}

LegendreResidual legendre_residual(const Prepotential& prep, LegendreSign sign) {
  const auto& psi = prep.pair.psi;
  const auto dpsi = first_derivative_of_psi(prep.pair);
  const auto dF = prep.F.attached(1);
  const auto dphi = finite_difference(prep.phi, 1);
  const double eps = prep.pair.constants.epsilon();
  const complex inv = 1.0 / (I * eps);
  const Grid& g = psi.grid();
  const std::size_t n = psi.size();
  const bool flipped = sign == LegendreSign::flipped;

  auto transform_r = real_elementwise(g, n, [&](std::size_t i) {
    const complex psi2 = psi[i] * psi[i];
    const complex Fpsi2 = dF[i] / (2.0 * psi[i] * dpsi[i]);
    const complex rhs = (flipped ? -1.0 : 1.0) * g.x(i) * inv;
    return std::abs(psi2 * Fpsi2 - prep.F[i] - rhs);
  });
  auto stip = real_elementwise(g, n, [&](std::size_t i) { return std::abs(1.0 / (I * eps * dphi[i]) - psi[i] * psi[i]); });
  auto inverse = real_elementwise(g, n, [&](std::size_t i) {
    const complex phipsi2 = prep.phi[i] * psi[i] * psi[i];
    const complex expected = flipped ? g.x(i) * inv - phipsi2 : phipsi2 - g.x(i) * inv;
    return std::abs(prep.F[i] - expected);
  });
  return {std::move(transform_r), std::move(stip), std::move(inverse)};
}

RealField modulus_identity_residual(const SolutionPair& pair) {
  const auto d = derivative(pair.psi, 1);
  const double eps = pair.constants.epsilon();
  return real_elementwise(pair.grid(), pair.psi.size(), [&](std::size_t i) {
    const complex P = eps * d[i] / pair.psi[i];
    return std::norm(pair.psi[i]) * P.imag() - 1.0;
  });
}

GeneralSPrime wkb_general_sprime(const SolutionPair& pair, double a, double b, double c) {
  const Grid& g = pair.grid();
  const std::size_t n = pair.psi.size();
  const auto& psi = pair.psi;
  std::vector<complex> q(n);
  double qmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const complex p2 = psi[i] * psi[i];
    q[i] = a * p2 + b * std::conj(p2) + c * std::norm(psi[i]);
    qmax = std::max(qmax, std::abs(q[i]));
  }
  double imag = 0.0;
  for (auto z : q) imag = std::max(imag, std::abs(z.imag()));
  if (imag > 1e-10 * qmax)
    throw Error(ErrorKind::contract, "a psi^2 + b psibar^2 + c psi psibar is not real on this pair");

  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < n; ++i) {
    const bool tiny = !(std::abs(q[i].real()) > 1e-10 * qmax);
    const bool flips = i + 1 < n && q[i].real() * q[i + 1].real() < 0.0;
    if (tiny || flips) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "quadratic form vanishes near " << bad.size() << " sample(s):";
    for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 8); ++k)
      os << ' ' << bad[k] << " (x = " << g.x(bad[k]) << ")";
    if (bad.size() > 8) os << " ...";
    throw Error(ErrorKind::singular, os.str());
  }

  const double mass = pair.constants.mass, hbar = pair.constants.hbar;
  const double root = std::sqrt(2.0 * mass);
  auto den = real_elementwise(g, n, [&](std::size_t i) { return q[i].real(); });
  auto sp = real_elementwise(g, n, [&](std::size_t i) { return root / q[i].real(); });
  const auto s2 = finite_difference(sp, 1);
  const auto s3 = finite_difference(sp, 2);
  const double E = pair.energy;
  double scale = 0.0;
  auto res = real_elementwise(g, n, [&](std::size_t i) {
    const double schw = s3[i] / sp[i] - 1.5 * (s2[i] / sp[i]) * (s2[i] / sp[i]);
    const double kin = sp[i] * sp[i], pot = 2.0 * mass * (E - pair.potential[i]);
    scale = term_max({std::abs(kin), std::abs(pot)}, scale);
    return kin - pot + 0.5 * hbar * hbar * schw;
  });
  return {std::move(sp), std::move(den), std::move(res), scale};
}

double omega_for_norm(const RealField& modulus_sq) {
  double m = 0.0;
  for (std::size_t i = 0; i < modulus_sq.size(); ++i) {
    const double v = modulus_sq[i];
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "|psi|^2 must be positive and finite; sample " << i << " has " << v;
      throw Error(ErrorKind::domain, os.str());
    }
    m = std::max(m, v);
  }
  double omega = 1.0 / m;
  while (omega * m > 1.0) omega = std::nextafter(omega, 0.0);
  return omega;
}

RealField modulus_squared(const SolutionPair& pair) {
  return real_elementwise(pair.grid(), pair.psi.size(), [&](std::size_t i) { return std::norm(pair.psi[i]); });
}

}  // namespace qhjlab
