#pragma once

// Epsilon expansion of the Riccati form of the Schroedinger equation,
//   (sum eps^j P_j)^2 + eps sum eps^j P_j' + 2 sum eps^j F_j'' = -E,
// with F0'' = -V/2 and odd F_j = 0. Each P_j is solved algebraically from the
// lower ones; S^j is the quadrature of P_j.

#include <optional>
#include <string>
#include <vector>

#include "qhjlab/se_solutions.hpp"

namespace qhjlab {

inline constexpr int kMaxHierarchyOrder = 12;

struct HierarchyInput {
  Grid grid;
  Potential potential;            // V = -2 F0''
  double energy = 0.0;            // must exceed V on the whole grid
  std::vector<RealField> F_even;  // F2'', F4'', ... (missing entries are zero)
  int K = 4;
  double epsilon = 1.0;
  std::optional<double> x_ref;  // S^j(x_ref) = 0; grid midpoint when unset

  double reference() const { return x_ref.value_or(0.5 * (grid.x_min() + grid.x_max())); }
  /// True when F_n'' is supplied (n even, 2 <= n <= 2 * F_even.size()).
  bool has_F(int n) const;
};

struct ParityReport {
  double even_real = 0.0;  // max |Re P_j|, j even
  double odd_imag = 0.0;   // max |Im P_j|, j odd
};

struct HierarchySolution {
  int K;
  double x_ref;
  std::vector<ComplexField> P;  // P_0..P_K, each with P_j' attached
  std::vector<ComplexField> S;  // S^0..S^K
  ParityReport parity;
};

/// P_0 = i sqrt(E - V), P_1 = -P_0'/2P_0, then
///   P_n = -(sum_{i=1}^{n-1} P_i P_{n-i} + P_{n-1}' + 2 F_n'') / (2 P_0).
/// Evaluated pointwise on Taylor jets of V and F_n'' (exact derivatives for
/// built-in potentials, repeated differences for tabulated input).
HierarchySolution recurse(const HierarchyInput& input);

struct MasterResidual {
  std::vector<double> per_order;    // max |order-n coefficient|, n = 0..K
  std::vector<double> order_scale;  // largest term in each order
  ComplexField remainder;           // full truncated sum + E at epsilon
  double remainder_max;
  double epsilon;
};

/// Per-order residuals, plus the remainder of the truncated series at epsilon
/// (input.epsilon when unset).
MasterResidual master_residual(const HierarchySolution& sol, const HierarchyInput& input,
                               std::optional<double> epsilon = std::nullopt);

/// max |P_2 - {S^0; q} / 4 P_0| with the Schwarzian differenced from S^0.
/// Needs K >= 2 and F2'' = 0.
double p2_schwarzian_check(const HierarchySolution& sol, const HierarchyInput& input);

struct ModulusReconstruction {
  RealField modulus;  // omega exp(2 sum_j eps^{2j} Re S^{2j+1})
  double omega;
  std::vector<std::string> warnings;
};

ModulusReconstruction reconstruct_modulus(const HierarchySolution& sol, const HierarchyInput& input, double omega);

/// Same with omega chosen by omega_for_norm, so max |psi|^2 = 1.
ModulusReconstruction reconstruct_normalized_modulus(const HierarchySolution& sol, const HierarchyInput& input);

}  // namespace qhjlab
