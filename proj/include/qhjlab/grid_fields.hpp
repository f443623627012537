#pragma once

// Uniform 1-D grids and sampled fields with high-order differentiation,
// cumulative quadrature, phase unwrapping and the Schwarzian derivative.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "qhjlab/error.hpp"

namespace qhjlab {

using complex = std::complex<double>;

/// Uniform sample grid x_i = x_min + i*h, i = 0..n-1.
class Grid {
 public:
  static constexpr std::size_t min_size = 16;

  Grid(double x_min, double x_max, std::size_t n);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }

  double x(std::size_t i) const noexcept {
    return i + 1 == n_ ? x_max_ : x_min_ + static_cast<double>(i) * h_;
  }
  std::vector<double> coordinates() const;

  bool contains(double x) const noexcept;
  /// Index of the sample closest to x (clamped to the grid).
  std::size_t nearest_index(double x) const noexcept;
  /// Contiguous restriction [first, first+count) sharing the same spacing.
  Grid subgrid(std::size_t first, std::size_t count) const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double h_;
};

/// Sampled real or complex function on a Grid.
///
/// A field may carry analytic derivative samples (orders 1..3). They are
/// evaluated eagerly on the grid when the field is built, and derivative()
/// prefers them over finite differences.
template <typename T>
class Field {
 public:
  using value_type = T;
  using Derivatives = std::array<std::vector<T>, 3>;

  Field(Grid grid, std::vector<T> values);
  Field(Grid grid, std::vector<T> values, Derivatives attached);

  template <typename Fn>
  static Field sample(const Grid& grid, Fn&& fn) {
    std::vector<T> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(fn(grid.x(i)));
    return Field(grid, std::move(v));
  }

  /// Samples fn and up to three analytic derivatives (pass nullptr to omit one).
  static Field sample_with_derivatives(const Grid& grid, const std::function<T(double)>& fn,
                                       const std::function<T(double)>& d1,
                                       const std::function<T(double)>& d2 = nullptr,
                                       const std::function<T(double)>& d3 = nullptr);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const T> values() const noexcept { return values_; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  bool has_attached(int order) const noexcept;
  std::span<const T> attached(int order) const;
  const Derivatives& attached_all() const noexcept { return derivs_; }

  Field without_derivatives() const { return Field(grid_, values_); }
  /// Multiplies values and attached derivatives by a constant.
  Field scaled(T factor) const;
  double max_modulus() const noexcept;

 private:
  Grid grid_;
  std::vector<T> values_;
  Derivatives derivs_;
};

using RealField = Field<double>;
using ComplexField = Field<complex>;

extern template class Field<double>;
extern template class Field<complex>;

/// k-th derivative (k = 1..3). Uses attached analytic derivatives when present,
/// otherwise finite differences (see finite_difference).
template <typename T>
Field<T> derivative(const Field<T>& f, int k);

/// k-th derivative from samples only: 6th-order central stencils in the
/// interior, 6th-order one-sided stencils near the ends.
template <typename T>
Field<T> finite_difference(const Field<T>& f, int k);

/// {f;q} = f'''/f' - (3/2)(f''/f')^2.
template <typename T>
Field<T> schwarzian(const Field<T>& f);

/// Cumulative integral F with F(x_ref) = 0 (6-point local interpolation per cell).
template <typename T>
Field<T> antiderivative(const Field<T>& f, double x_ref);

/// Value at an arbitrary coordinate inside the grid (6-point Lagrange).
template <typename T>
T interpolate(const Field<T>& f, double x);

/// Continuous phase of a nonvanishing complex field, starting from the
/// principal value at x_min.
RealField unwrap_phase(const ComplexField& f);

/// Finite-difference weights for the m-th derivative at z from arbitrary nodes
/// (Fornberg's recursion).
std::vector<double> fd_weights(double z, std::span<const double> nodes, int m);

// Elementwise helpers.

template <typename T, typename Fn>
auto transform(const Field<T>& f, Fn&& fn) {
  using R = std::decay_t<decltype(fn(std::declval<T>()))>;
  std::vector<R> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = fn(f[i]);
  return Field<R>(f.grid(), std::move(out));
}

template <typename A, typename B, typename Fn>
auto combine(const Field<A>& a, const Field<B>& b, Fn&& fn) {
  using R = std::decay_t<decltype(fn(std::declval<A>(), std::declval<B>()))>;
  if (!(a.grid() == b.grid())) throw Error(ErrorKind::contract, "fields live on different grids");
  std::vector<R> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return Field<R>(a.grid(), std::move(out));
}

RealField real_part(const ComplexField& f);
RealField imag_part(const ComplexField& f);
ComplexField to_complex(const RealField& f);

/// max |v_i| over [first, last) ; last clamped to size.
template <typename T>
double max_abs(std::span<const T> v, std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1));

/// Index range covering the central fraction of a grid (e.g. 0.8 drops 10% at each end).
struct IndexRange {
  std::size_t first;
  std::size_t last;  // exclusive
};
IndexRange central_fraction(const Grid& grid, double fraction);
/// Samples whose coordinate lies in [lo, hi].
IndexRange window_indices(const Grid& grid, double lo, double hi);

}  // namespace qhjlab
