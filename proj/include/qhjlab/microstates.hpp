#pragma once

// Floydian microstates built from a real solution pair and the constants
// (alpha, ell): beta, S0, p = S0', the quantum potential, the QSHJE residual,
// Floydian time t = dS0/dE and trajectories.

#include <optional>
#include <span>
#include <vector>

#include "qhjlab/se_solutions.hpp"

namespace qhjlab {

struct MicrostateParams {
  double alpha = 0.0;
  complex ell = 1.0;  // ell_1 + i ell_2, ell_1 != 0

  void validate() const;
};

/// beta = (psiD + i conj(ell) psi) / (psiD - i ell psi); |beta| = 1 for real pairs.
ComplexField beta_field(const SolutionPair& pair, const MicrostateParams& params);

/// |psiD - i ell psi|^2 with its first two derivatives attached.
RealField microstate_denominator(const SolutionPair& pair, const MicrostateParams& params);

/// p = hbar ell_1 Omega / |psiD - i ell psi|^2 with p', p'' attached.
RealField momentum(const SolutionPair& pair, const MicrostateParams& params);

/// S0 = (hbar/2) alpha + (hbar/2) arg(beta), continuous from the principal
/// branch at x_min. Carries p, p', p'' as attached derivatives.
RealField hamilton_principal(const SolutionPair& pair, const MicrostateParams& params);

struct Microstate {
  MicrostateParams params;
  SolutionPair pair;
  ComplexField beta;
  RealField S0;
  RealField p;
  RealField Q;
  RealField mfW;  // V - E
  /// Sign of p (constant on the grid): +1 right-moving, -1 left-moving.
  int direction;
};

Microstate make_microstate(const SolutionPair& pair, const MicrostateParams& params);

struct QuantumPotential {
  RealField schwarzian_route;  // (hbar^2/4m) {S0; q}
  RealField polar_route;       // -(hbar^2/2m) R''/R, R = |p|^{-1/2}
  double max_discrepancy;
};

QuantumPotential quantum_potential(const Microstate& ms);

struct QshjeResidual {
  RealField residual;             // p^2/2m + (V - E) + Q
  RealField residual_schwarzian;  // p^2/2m + W_s + Q
  RealField W_schwarzian;         // -(hbar^2/4m) Re {exp(2i S0/hbar); q}
  double max_W_imag;              // max |Im| of the Schwarzian route (should vanish)
  /// max(|E|, max |V - E|): the natural scale of every term.
  double scale;
};

QshjeResidual qshje_residual(const Microstate& ms);

/// Default energy step max(1e-5, 1e-5 |E|).
double default_delta_E(double E);

struct EnergyDerivatives {
  double delta_E;
  RealField dS0;  // central difference of S0, branches matched
  RealField dp;   // central difference of the closed-form p
  RealField dQ;
};

EnergyDerivatives energy_derivatives(const Scenario& scenario, const MicrostateParams& params,
                                     std::optional<double> delta_E = std::nullopt);

/// t(q) = dS0/dE, shifted so that t(x_ref) = 0 (x_ref defaults to the grid midpoint).
RealField time_of_q(const Scenario& scenario, const MicrostateParams& params,
                    std::optional<double> delta_E = std::nullopt, std::optional<double> x_ref = std::nullopt);

struct TrajectoryPoint {
  double t;
  double q;
  double qdot;             // 1 / (dp/dE)
  double qdot_quantum_mass;  // p / m_Q
  double p;
  double m_Q;              // m (1 - dQ/dE)
};

struct Trajectory {
  /// One list per monotone piece of t(q); a single piece when t(q) is monotone.
  std::vector<std::vector<TrajectoryPoint>> segments;
  bool monotone;
  double max_qdot_discrepancy;  // relative, over points with finite velocity
  /// Points where dp/dE vanishes (t(q) stationary, infinite velocity). For
  /// numeric pairs this happens at the anchor of the E-independent data.
  std::size_t stationary_points;
};

/// Inverts t(q) at the requested times. Times outside a segment's range are skipped.
Trajectory trajectory(const Scenario& scenario, const MicrostateParams& params, std::span<const double> t_samples,
                      std::optional<double> delta_E = std::nullopt, std::optional<double> x_ref = std::nullopt);

}  // namespace qhjlab
