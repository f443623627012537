#pragma once

// (X, psi) duality: the prepotential F = psi psibar / 2 + i X / eps of a
// W-normalized conjugate pair, its Legendre partner phi = psibar / (2 psi),
// square eigenfunctions Xi, and the residuals of the equations they satisfy.

#include <array>
#include <optional>
#include <vector>

#include "qhjlab/se_solutions.hpp"

namespace qhjlab {

enum class XiVariant { psi_psibar, psi_sq, psibar_sq };

const char* to_string(XiVariant v) noexcept;

/// A residual field with the magnitude of its largest term, for relative bounds.
struct Residual {
  ComplexField values;
  double scale;

  double max_abs(IndexRange range) const;
  double max_abs() const;
};

struct Prepotential {
  SolutionPair pair;  // conjugate, W = 2i/eps
  /// F with F', F'', F''' attached: differences of psi psibar / 2 plus the
  /// exact derivative of the linear part i X / eps.
  ComplexField F;
  ComplexField phi;
  std::array<ComplexField, 3> xi;

  const ComplexField& xi_of(XiVariant v) const { return xi[static_cast<int>(v)]; }
};

/// Conjugate pair psi = u + i v built from a real pair and normalized to W = 2i/eps.
SolutionPair duality_pair(const SolutionPair& real_pair);

Prepotential build_prepotential(const SolutionPair& pair);

struct DualDerivativeResidual {
  RealField direct;    // |F_X / psi_X - psibar|
  RealField phi_form;  // |F_X / (psi^2)_X - phi|
};

DualDerivativeResidual dual_derivative_residual(const Prepotential& prep);

/// F_psipsipsi - ((E - V)/4)(F_psi - psi F_psipsi)^3 with psi-derivatives by the
/// chain rule d/dpsi = (1/psi_X) d/dX. E defaults to the pair energy.
Residual prepotential_ode_residual(const Prepotential& prep, std::optional<double> energy = std::nullopt);

/// eps^2 Xi''' - 4 V Xi' - 2 V' Xi + 4 E Xi'. The scale also counts 4(|E| + |V|)|Xi|.
Residual gd_residual(const ComplexField& xi, const RealField& V, double E, double eps);

enum class PrepotentialGdForm {
  derivative,  // ... + 4(E - V)(F' + 1/(i eps))
  value,       // ... + 4(E - V)(F + 1/(i eps))
};

/// eps^2 F''' - 2 V'(F + X/(i eps)) + 4 (E - V)(F' or F + 1/(i eps)).
Residual prepotential_gd_residual(const Prepotential& prep, PrepotentialGdForm form = PrepotentialGdForm::derivative);

/// dKdV free energy with V = -2 F0''; odd corrections vanish and are not stored.
struct FreeEnergy {
  RealField F0;  // F0', F0'', F0''' attached
  std::vector<RealField> higher;  // F2, F4, ...
};

/// F0 = double integral of -V/2 anchored at the grid midpoint.
FreeEnergy free_energy_from_potential(const RealField& V);

/// eps^2 F''' + (F' + 1/(i eps))(8 F0'' + 4E) + 4 F0''' (F + X/(i eps)).
Residual free_energy_residual(const Prepotential& prep, const FreeEnergy& fe, std::optional<double> energy = std::nullopt);

enum class LegendreSign {
  consistent,  // psi^2 F_{psi^2} - F = X/(i eps)
  flipped,     // psi^2 F_{psi^2} - F = -X/(i eps)
};

struct LegendreResidual {
  RealField transform;    // |psi^2 F_{psi^2} - F -/+ X/(i eps)|, F_{psi^2} = F_X / (psi^2)_X
  RealField stipulation;  // |1/(i eps phi_X) - psi^2|
  RealField inverse;      // |F - (phi psi^2 -/+ X/(i eps))|
};

LegendreResidual legendre_residual(const Prepotential& prep, LegendreSign sign = LegendreSign::consistent);

/// |psi|^2 Im(eps psi'/psi) - 1 samplewise.
RealField modulus_identity_residual(const SolutionPair& pair);

struct GeneralSPrime {
  RealField s_prime;      // sqrt(2m) / (a psi^2 + b psibar^2 + c psi psibar)
  RealField denominator;
  RealField residual;     // (s')^2 - 2m(E - V) + (hbar^2/2){s; x}
  double scale;           // max(2m|E - V|, (s')^2)
};

GeneralSPrime wkb_general_sprime(const SolutionPair& pair, double a, double b, double c);

/// Largest omega with omega |psi|^2 <= 1 on the grid.
double omega_for_norm(const RealField& modulus_sq);

/// |psi|^2 samples of a pair's first member.
RealField modulus_squared(const SolutionPair& pair);

}  // namespace qhjlab
