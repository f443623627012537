#pragma once

// Pairs of independent solutions of the stationary Schroedinger equation
//   -eps^2 u'' + V u = E u,   eps = hbar / sqrt(2 m),
// built analytically (free, harmonic ground state, linear/Airy) or by
// fixed-step RK4 integration from energy-independent initial data.

#include <optional>
#include <string>
#include <vector>

#include "qhjlab/grid_fields.hpp"

namespace qhjlab {

struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 0.5;

  PhysicalConstants() = default;
  PhysicalConstants(double hbar_, double mass_);

  double epsilon() const noexcept;
};

class Potential {
 public:
  enum class Kind { free, linear, harmonic, custom };

  static Potential free_particle();
  /// V = slope * X + offset.
  static Potential linear(double slope, double offset = 0.0);
  /// V = stiffness * X^2.
  static Potential harmonic(double stiffness);
  /// Tabulated V; values off the sample grid are interpolated.
  static Potential custom(RealField samples);

  Kind kind() const noexcept { return kind_; }
  std::string name() const;
  double slope() const noexcept { return slope_; }
  double offset() const noexcept { return offset_; }
  double stiffness() const noexcept { return stiffness_; }

  double value(double x) const;
  double derivative_at(double x) const;
  /// V sampled on grid with V', V'', V''' attached (exact for built-ins).
  RealField sample(const Grid& grid) const;
  /// Derivative fields V, V', ..., V^(order) on grid. Built-ins are exact;
  /// tabulated potentials use repeated finite differences.
  std::vector<RealField> derivative_fields(const Grid& grid, int order) const;

 private:
  Potential(Kind kind, double slope, double offset, double stiffness, std::optional<RealField> samples);

  Kind kind_;
  double slope_ = 0.0;
  double offset_ = 0.0;
  double stiffness_ = 0.0;
  std::optional<RealField> samples_;
};

/// Harmonic ground-state energy eps * sqrt(stiffness).
double harmonic_ground_energy(const Potential& potential, const PhysicalConstants& constants);

enum class PairKind {
  real,       // psi, psiD real valued
  conjugate,  // psiD = conj(psi)
};

/// Two independent solutions at energy E. Both members carry their first
/// derivative as an attached field (analytic pairs also carry orders 2, 3).
struct SolutionPair {
  ComplexField psi;
  ComplexField psiD;
  double energy;
  PhysicalConstants constants;
  /// W = psi' psiD - psi psiD' (constant); for real pairs this is Omega.
  complex wronskian;
  /// V on the same grid with V' attached.
  RealField potential;
  PairKind kind;
  bool analytic;

  const Grid& grid() const noexcept { return psi.grid(); }
  double omega() const noexcept { return wronskian.real(); }
};

struct InitialConditions {
  double psi = 1.0;
  double dpsi = 0.0;
  double psiD = 0.0;
  double dpsiD = 1.0;
  /// Where the values are imposed; must be a grid sample. Defaults to x_min.
  std::optional<double> anchor;
};

struct SolveOptions {
  int substeps = 1;                   // RK4 steps per grid cell
  double residual_tolerance = 1e-5;   // relative Schroedinger residual
};

SolutionPair analytic_pair(const Potential& potential, double energy, const PhysicalConstants& constants,
                           const Grid& grid);

SolutionPair solve_pair(const Potential& potential, double energy, const PhysicalConstants& constants,
                        const Grid& grid, const InitialConditions& ics, const SolveOptions& options = {});

/// Rescales the members so that the Wronskian equals target. Conjugate pairs
/// stay conjugate (members are swapped when the ratio is negative).
SolutionPair normalize_wronskian(const SolutionPair& pair, complex target);

/// 2i/eps, the normalization used by the prepotential construction.
complex duality_wronskian(const PhysicalConstants& constants);

/// psi = u + i v, psiD = conj(psi) from a real pair (u, v).
SolutionPair conjugate_pair(const SolutionPair& real_pair);

/// Exchanges psi and psiD (flips the sign of W).
SolutionPair swapped(const SolutionPair& pair);

/// Multiplies both members by a common factor (the Wronskian scales by factor^2).
SolutionPair scaled(const SolutionPair& pair, double factor);

struct ResidualReport {
  double psi;       // max |-eps^2 u'' + (V-E) u| / scale, u = psi
  double psiD;
  std::size_t worst_sample;
};

/// Relative Schroedinger residual with u'' from finite differences of the samples.
ResidualReport schrodinger_residual(const SolutionPair& pair);

/// max_i |W_i - W| / |W| with W_i from the members' first derivatives.
double wronskian_deviation(const SolutionPair& pair);

/// min over the grid of |psi|^2 + |psiD|^2.
double independence_margin(const SolutionPair& pair);

/// A family of pairs parameterized by energy: fixed potential, grid and
/// construction method, so that pairs at E and E +- dE are comparable.
struct Scenario {
  enum class Method { analytic, numeric };

  std::string name;
  PhysicalConstants constants;
  Potential potential;
  Grid grid;
  double energy;
  Method method = Method::analytic;
  InitialConditions ics;
  SolveOptions solve_options;
  /// Energy follows the harmonic ground state when hbar changes.
  bool tracks_ground_state = false;
  /// Grid (and anchor) rescale with the oscillator length sqrt(eps) when hbar
  /// changes, keeping the same number of turning-point lengths on the grid.
  bool grid_follows_hbar = false;

  SolutionPair pair_at(double E) const;
  SolutionPair pair() const { return pair_at(energy); }
  /// Same scenario with a different hbar (mass fixed).
  Scenario with_hbar(double hbar) const;
  Scenario with_grid(const Grid& g) const;

  static Scenario free_particle(std::size_t n = 1025);
  static Scenario harmonic_ground_state(std::size_t n = 1025);
  static Scenario airy(std::size_t n = 1025);
};

}  // namespace qhjlab
