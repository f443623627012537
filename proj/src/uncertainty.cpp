#include "qhjlab/uncertainty.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace qhjlab {

namespace {

struct Accumulator {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Interval get() const { return lo <= hi ? Interval{lo, hi} : Interval{}; }
};

}  // namespace

UncertaintyReport delta_chain(const Microstate& ms, const EnergyDerivatives& dE, double delta_alpha,
                              double window_lo, double window_hi) {
  const Grid& g = ms.S0.grid();
  if (!(window_lo < window_hi) || window_hi < g.x_min() || window_lo > g.x_max())
    throw Error(ErrorKind::range, "uncertainty window is empty or outside the grid");
  const auto w = window_indices(g, window_lo, window_hi);
  if (w.first >= w.last) throw Error(ErrorKind::range, "uncertainty window contains no samples");
  if (!std::isfinite(delta_alpha) || delta_alpha < 0.0)
    throw Error(ErrorKind::parameter, "delta_alpha must be finite and nonnegative");

  const double hbar = ms.pair.constants.hbar;
  const double dS0 = 0.5 * hbar * delta_alpha;
  const auto s1 = finite_difference(ms.S0.without_derivatives(), 1);

  UncertaintyReport r{};
  r.hbar = hbar;
  r.delta_alpha = delta_alpha;
  r.delta_S0 = dS0;
  Accumulator dq, dt, pq, et;
  for (std::size_t i = w.first; i < w.last; ++i) {
    const double p = std::abs(ms.p[i]);
    const double q = dS0 / std::abs(s1[i]);
    dq.add(q);
    pq.add(p * q);
    const double dEp = std::abs(dE.dp[i]);
    if (dEp == 0.0) {
      ++r.stationary_points;
      continue;
    }
    const double t = dEp / p * dS0;
    dt.add(t);
    et.add(p / dEp * t);
  }
  r.delta_q = dq.get();
  r.delta_t = dt.get();
  r.product_pq = pq.get();
  r.product_Et = et.get();

  r.x_mid = 0.5 * (std::max(window_lo, g.x_min()) + std::min(window_hi, g.x_max()));
  const double s1_mid = interpolate(s1, r.x_mid);
  const double p_mid = std::abs(interpolate(ms.p.without_derivatives(), r.x_mid));
  r.delta_q_mid = dS0 / std::abs(s1_mid);
  r.product_pq_mid = p_mid * r.delta_q_mid;
  return r;
}

UncertaintyReport delta_chain(const Scenario& scenario, const MicrostateParams& params, double delta_alpha,
                              double window_lo, double window_hi, std::optional<double> delta_E) {
  const auto ms = make_microstate(scenario.pair(), params);
  const auto d = energy_derivatives(scenario, params, delta_E);
  return delta_chain(ms, d, delta_alpha, window_lo, window_hi);
}

ScalingFit loglog_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::statistics, "need matching samples for a fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorKind::statistics, "log-log fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw Error(ErrorKind::statistics, "degenerate abscissae in log-log fit");
  const double slope = (n * sxy - sx * sy) / den;
  return {slope, (sy - slope * sx) / n};
}

Interval default_window(const Grid& grid) {
  const double quarter = 0.25 * (grid.x_max() - grid.x_min());
  return {grid.x_min() + quarter, grid.x_max() - quarter};
}

ScalingReport hbar_scaling_scan(const Scenario& scenario, const MicrostateParams& params,
                                std::span<const double> hbar_list, double delta_alpha, std::optional<Interval> window,
                                unsigned threads) {
  if (hbar_list.size() < 4) throw Error(ErrorKind::statistics, "hbar scan needs at least 4 values");
  for (double h : hbar_list)
    if (!(h > 0.0)) throw Error(ErrorKind::statistics, "hbar values must be positive");
  const auto [mn, mx] = std::minmax_element(hbar_list.begin(), hbar_list.end());
  if (*mx < 8.0 * *mn * (1.0 - 1e-12))
    throw Error(ErrorKind::statistics, "hbar scan must span at least a factor of 8");

  const std::size_t n = hbar_list.size();
  std::vector<std::optional<UncertaintyReport>> out(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto sc = scenario.with_hbar(hbar_list[i]);
        const auto w = window.value_or(default_window(sc.grid));
        out[i] = delta_chain(sc, params, delta_alpha, w.lo, w.hi);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ScalingReport rep;
  std::vector<double> pq, et;
  for (std::size_t i = 0; i < n; ++i) {
    rep.hbar.push_back(hbar_list[i]);
    rep.reports.push_back(*out[i]);
    pq.push_back(out[i]->product_pq.mid());
    et.push_back(out[i]->product_Et.mid());
  }
  rep.pq = loglog_fit(rep.hbar, pq);
  rep.Et = loglog_fit(rep.hbar, et);
  return rep;
}

}  // namespace qhjlab
