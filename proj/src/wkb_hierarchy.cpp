#include "qhjlab/wkb_hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qhjlab/duality.hpp"

namespace qhjlab {

namespace {

using Jet = std::vector<complex>;  // Taylor coefficients f^(k)/k!

Jet jet_mul(const Jet& a, const Jet& b, std::size_t len) {
  Jet c(len, 0.0);
  for (std::size_t k = 0; k < len; ++k)
    for (std::size_t i = 0; i <= k; ++i) c[k] += a[i] * b[k - i];
  return c;
}

Jet jet_div(const Jet& a, const Jet& b, std::size_t len) {
  Jet q(len, 0.0);
  for (std::size_t k = 0; k < len; ++k) {
    complex s = a[k];
    for (std::size_t i = 1; i <= k; ++i) s -= b[i] * q[k - i];
    q[k] = s / b[0];
  }
  return q;
}

Jet jet_sqrt(const std::vector<double>& a) {
  std::vector<double> b(a.size(), 0.0);
  b[0] = std::sqrt(a[0]);
  for (std::size_t k = 1; k < a.size(); ++k) {
    double s = a[k];
    for (std::size_t i = 1; i < k; ++i) s -= b[i] * b[k - i];
    b[k] = s / (2.0 * b[0]);
  }
  return Jet(b.begin(), b.end());
}

Jet jet_derivative(const Jet& a) {
  Jet d(a.size() > 1 ? a.size() - 1 : 0);
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = static_cast<double>(k + 1) * a[k + 1];
  return d;
}

std::vector<RealField> repeated_differences(const RealField& f, int order) {
  std::vector<RealField> out{f.without_derivatives()};
  for (int k = 1; k <= order; ++k) out.push_back(finite_difference(out.back(), 1));
  return out;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

bool HierarchyInput::has_F(int n) const { return n >= 2 && n % 2 == 0 && n / 2 <= static_cast<int>(F_even.size()); }

HierarchySolution recurse(const HierarchyInput& in) {
  if (in.K < 0) throw Error(ErrorKind::parameter, "hierarchy order K must be nonnegative");
  if (in.K > kMaxHierarchyOrder) {
    std::ostringstream os;
    os << "K = " << in.K << " exceeds the maximum order " << kMaxHierarchyOrder;
    throw Error(ErrorKind::truncation, os.str());
  }
  const Grid& g = in.grid;
  const std::size_t n = g.size();
  const int K = in.K;
  const std::size_t L = static_cast<std::size_t>(K) + 2;  // P_0 jet length; P_j keeps L - j

  const auto Vd = in.potential.derivative_fields(g, K + 1);
  const double gap_tol = 1e-12 * std::max(1.0, std::abs(in.energy));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in.energy - Vd[0][i] > gap_tol)) {
      std::ostringstream os;
      os << "turning point E <= V at sample " << i << " (x = " << g.x(i) << ")";
      throw Error(ErrorKind::domain, os.str());
    }
  }

  std::vector<std::vector<RealField>> Fd(static_cast<std::size_t>(K) + 1);
  for (int m = 2; m <= K; m += 2) {
    if (!in.has_F(m)) continue;
    const auto& f = in.F_even[static_cast<std::size_t>(m / 2 - 1)];
    if (!(f.grid() == g)) throw Error(ErrorKind::contract, "F_even entries must live on the hierarchy grid");
    Fd[static_cast<std::size_t>(m)] = repeated_differences(f, K + 1 - m);
  }

  std::vector<std::vector<complex>> Pv(K + 1, std::vector<complex>(n)), Pd(K + 1, std::vector<complex>(n));
  std::vector<double> gap(L);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < L; ++k) gap[k] = (k == 0 ? in.energy - Vd[0][i] : -Vd[k][i]) / factorial(static_cast<int>(k));
    std::vector<Jet> P;
    Jet p0 = jet_sqrt(gap);
    for (auto& c : p0) c *= complex(0.0, 1.0);
    const Jet two_p0 = [&] {
      Jet t = p0;
      for (auto& c : t) c *= 2.0;
      return t;
    }();
    P.push_back(std::move(p0));
    for (int m = 1; m <= K; ++m) {
      const std::size_t len = L - static_cast<std::size_t>(m);
      Jet num = jet_derivative(P[m - 1]);
      num.resize(len);
      for (int a = 1; a < m; ++a) {
        const auto prod = jet_mul(P[a], P[m - a], len);
        for (std::size_t k = 0; k < len; ++k) num[k] += prod[k];
      }
      if (!Fd[m].empty())
        for (std::size_t k = 0; k < len; ++k) num[k] += 2.0 * Fd[m][k][i] / factorial(static_cast<int>(k));
      for (auto& c : num) c = -c;
      P.push_back(jet_div(num, two_p0, len));
    }
    for (int m = 0; m <= K; ++m) {
      Pv[m][i] = P[m][0];
      Pd[m][i] = P[m][1];
    }
  }

  HierarchySolution sol{K, in.reference(), {}, {}, {}};
  for (int m = 0; m <= K; ++m) {
    ComplexField::Derivatives d;
    d[0] = Pd[m];
    sol.P.emplace_back(g, std::move(Pv[m]), std::move(d));
    sol.S.push_back(antiderivative(sol.P.back().without_derivatives(), sol.x_ref));
    for (std::size_t i = 0; i < n; ++i) {
      const complex p = sol.P.back()[i];
      if (m % 2 == 0)
        sol.parity.even_real = std::max(sol.parity.even_real, std::abs(p.real()));
      else
        sol.parity.odd_imag = std::max(sol.parity.odd_imag, std::abs(p.imag()));
    }
  }
  return sol;
}

namespace {

double F_value(const HierarchyInput& in, const RealField& V, int m, std::size_t i) {
  if (m == 0) return -0.5 * V[i];
  if (!in.has_F(m)) return 0.0;
  return in.F_even[static_cast<std::size_t>(m / 2 - 1)][i];
}

}  // namespace

MasterResidual master_residual(const HierarchySolution& sol, const HierarchyInput& in, std::optional<double> epsilon) {
  const Grid& g = sol.P.front().grid();
  const std::size_t n = g.size();
  const auto V = in.potential.derivative_fields(g, 0)[0];
  const double eps = epsilon.value_or(in.epsilon);
  const int K = sol.K;

  MasterResidual r{std::vector<double>(K + 1, 0.0), std::vector<double>(K + 1, 0.0),
                   ComplexField(g, std::vector<complex>(n)), 0.0, eps};
  std::vector<complex> rem(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int m = 0; m <= K; ++m) {
      complex c = 0.0;
      double scale = 0.0;
      for (int a = 0; a <= m; ++a) {
        const complex t = sol.P[a][i] * sol.P[m - a][i];
        c += t;
        scale = std::max(scale, std::abs(t));
      }
      if (m >= 1) {
        const complex t = sol.P[m - 1].attached(1)[i];
        c += t;
        scale = std::max(scale, std::abs(t));
      }
      const double f = 2.0 * F_value(in, V, m, i) + (m == 0 ? in.energy : 0.0);
      c += f;
      scale = std::max(scale, std::abs(f));
      r.per_order[m] = std::max(r.per_order[m], std::abs(c));
      r.order_scale[m] = std::max(r.order_scale[m], scale);
    }
    complex sum = 0.0, dsum = 0.0;
    double fsum = 0.0, e = 1.0;
    for (int m = 0; m <= K; ++m, e *= eps) {
      sum += e * sol.P[m][i];
      dsum += e * sol.P[m].attached(1)[i];
      fsum += e * F_value(in, V, m, i);
    }
    rem[i] = sum * sum + eps * dsum + 2.0 * fsum + in.energy;
    r.remainder_max = std::max(r.remainder_max, std::abs(rem[i]));
  }
  r.remainder = ComplexField(g, std::move(rem));
  return r;
}

double p2_schwarzian_check(const HierarchySolution& sol, const HierarchyInput& in) {
  if (sol.K < 2) throw Error(ErrorKind::parameter, "the Schwarzian check needs K >= 2");
  if (in.has_F(2) && max_abs(in.F_even[0].values()) != 0.0)
    throw Error(ErrorKind::contract, "the Schwarzian form of P_2 assumes F2'' = 0");
  const auto sch = schwarzian(sol.S[0].without_derivatives());
  double worst = 0.0;
  for (std::size_t i = 0; i < sch.size(); ++i)
    worst = std::max(worst, std::abs(sol.P[2][i] - sch[i] / (4.0 * sol.P[0][i])));
  return worst;
}

ModulusReconstruction reconstruct_modulus(const HierarchySolution& sol, const HierarchyInput& in, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw Error(ErrorKind::parameter, "omega must be positive and finite");
  const Grid& g = sol.P.front().grid();
  std::vector<double> expo(g.size(), 0.0);
  double e = 1.0;
  for (int j = 1; j <= sol.K; j += 2, e *= in.epsilon * in.epsilon)
    for (std::size_t i = 0; i < expo.size(); ++i) expo[i] += e * sol.S[j][i].real();
  std::vector<double> m(g.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = omega * std::exp(2.0 * expo[i]);
  ModulusReconstruction out{RealField(g, std::move(m)), omega, {}};
  if (sol.K == 0) out.warnings.push_back("K = 0: no odd S terms, modulus is the constant omega");
  return out;
}

ModulusReconstruction reconstruct_normalized_modulus(const HierarchySolution& sol, const HierarchyInput& in) {
  const auto raw = reconstruct_modulus(sol, in, 1.0);
  const double omega = omega_for_norm(raw.modulus);
  return reconstruct_modulus(sol, in, omega);
}

}  // namespace qhjlab
