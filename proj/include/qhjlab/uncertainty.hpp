#pragma once

// Indeterminacy chain Delta S0 = (hbar/2) Delta alpha -> Delta q, Delta t and
// the O(hbar) products, plus the hbar scaling scan.

#include <optional>
#include <span>
#include <vector>

#include "qhjlab/microstates.hpp"

namespace qhjlab {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const noexcept { return 0.5 * (lo + hi); }
};

struct UncertaintyReport {
  double hbar;
  double delta_alpha;
  double delta_S0;  // (hbar/2) delta_alpha
  // Intervals are [min, max] over the window samples.
  Interval delta_q;     // Delta S0 / |S0'| with S0' differenced from the S0 samples
  Interval delta_t;     // |dp/dE / p| Delta S0
  Interval product_pq;  // |p| Delta q
  Interval product_Et;  // |p / (dp/dE)| Delta t
  // Same quantities at the window midpoint.
  double x_mid;
  double delta_q_mid;
  double product_pq_mid;
  /// Window samples where dp/dE vanishes (t stationary); left out of the Et intervals.
  std::size_t stationary_points;
};

/// Chain for a prepared microstate and its energy derivatives, over the
/// samples in [window_lo, window_hi].
UncertaintyReport delta_chain(const Microstate& ms, const EnergyDerivatives& dE, double delta_alpha,
                              double window_lo, double window_hi);

/// Builds the microstate and energy derivatives from a scenario.
UncertaintyReport delta_chain(const Scenario& scenario, const MicrostateParams& params, double delta_alpha,
                              double window_lo, double window_hi, std::optional<double> delta_E = std::nullopt);

struct ScalingFit {
  double slope;
  double intercept;
};

struct ScalingReport {
  std::vector<double> hbar;
  std::vector<UncertaintyReport> reports;  // one per hbar, same order
  ScalingFit pq;                           // log(product_pq midpoint) vs log(hbar)
  ScalingFit Et;
};

/// Least-squares fit of log y against log x (all values must be positive).
ScalingFit loglog_fit(std::span<const double> x, std::span<const double> y);

/// Central half of the grid, the default evaluation window.
Interval default_window(const Grid& grid);

/// Rebuilds the scenario at each hbar (mass fixed) and fits the products.
/// Without a window the default window of each rebuilt grid is used.
/// threads = 0 uses the hardware concurrency.
ScalingReport hbar_scaling_scan(const Scenario& scenario, const MicrostateParams& params,
                                std::span<const double> hbar_list, double delta_alpha,
                                std::optional<Interval> window = std::nullopt, unsigned threads = 0);

}  // namespace qhjlab
