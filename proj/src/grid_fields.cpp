#include "qhjlab/grid_fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qhjlab {

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
    throw Error(ErrorKind::range, "grid requires finite x_min < x_max");
  }
  if (n < min_size) {
    throw Error(ErrorKind::sizing, "grid needs at least 16 samples, got " + std::to_string(n));
  }
  h_ = (x_max - x_min) / static_cast<double>(n - 1);
}

std::vector<double> Grid::coordinates() const {
  std::vector<double> xs(n_);
  for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
  return xs;
}

bool Grid::contains(double x) const noexcept {
  const double slack = 1e-12 * h_;
  return x >= x_min_ - slack && x <= x_max_ + slack;
}

std::size_t Grid::nearest_index(double x) const noexcept {
  const double s = std::round((x - x_min_) / h_);
  if (s <= 0.0) return 0;
  if (s >= static_cast<double>(n_ - 1)) return n_ - 1;
  return static_cast<std::size_t>(s);
}

Grid Grid::subgrid(std::size_t first, std::size_t count) const {
  if (first + count > n_) throw Error(ErrorKind::range, "subgrid exceeds parent grid");
  return Grid(x(first), x(first + count - 1), count);
}

// ---------------------------------------------------------------------------
// Field

template <typename T>
Field<T>::Field(Grid grid, std::vector<T> values) : Field(std::move(grid), std::move(values), {}) {}

template <typename T>
Field<T>::Field(Grid grid, std::vector<T> values, Derivatives attached)
    : grid_(std::move(grid)), values_(std::move(values)), derivs_(std::move(attached)) {
  if (values_.size() != grid_.size()) {
    throw Error(ErrorKind::contract, "field length " + std::to_string(values_.size()) +
                                         " does not match grid size " + std::to_string(grid_.size()));
  }
  for (const auto& d : derivs_) {
    if (!d.empty() && d.size() != grid_.size()) {
      throw Error(ErrorKind::contract, "attached derivative length does not match grid size");
    }
  }
}

template <typename T>
Field<T> Field<T>::sample_with_derivatives(const Grid& grid, const std::function<T(double)>& fn,
                                           const std::function<T(double)>& d1,
                                           const std::function<T(double)>& d2,
                                           const std::function<T(double)>& d3) {
  const std::array<const std::function<T(double)>*, 3> fns{&d1, &d2, &d3};
  Derivatives derivs;
  std::vector<T> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.x(i));
  for (int k = 0; k < 3; ++k) {
    if (!*fns[k]) continue;
    derivs[k].resize(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) derivs[k][i] = (*fns[k])(grid.x(i));
  }
  return Field(grid, std::move(v), std::move(derivs));
}

template <typename T>
bool Field<T>::has_attached(int order) const noexcept {
  return order >= 1 && order <= 3 && !derivs_[order - 1].empty();
}

template <typename T>
std::span<const T> Field<T>::attached(int order) const {
  if (!has_attached(order)) throw Error(ErrorKind::contract, "no attached derivative of that order");
  return derivs_[order - 1];
}

template <typename T>
Field<T> Field<T>::scaled(T factor) const {
  auto v = values_;
  for (auto& x : v) x *= factor;
  auto d = derivs_;
  for (auto& arr : d)
    for (auto& x : arr) x *= factor;
  return Field(grid_, std::move(v), std::move(d));
}

template <typename T>
double Field<T>::max_modulus() const noexcept {
  double m = 0.0;
  for (const auto& x : values_) m = std::max(m, static_cast<double>(std::abs(x)));
  return m;
}

template class Field<double>;
template class Field<complex>;

// ---------------------------------------------------------------------------
// Stencils

std::vector<double> fd_weights(double z, std::span<const double> nodes, int m) {
  const std::size_t n = nodes.size();
  if (n == 0 || m < 0 || static_cast<std::size_t>(m) >= n) {
    throw Error(ErrorKind::sizing, "stencil needs more nodes than the derivative order");
  }
  using L = long double;
  std::vector<std::vector<L>> c(n, std::vector<L>(m + 1, 0.0L));
  L c1 = 1.0L;
  L c4 = static_cast<L>(nodes[0]) - z;
  c[0][0] = 1.0L;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min(static_cast<int>(i), m);
    L c2 = 1.0L;
    const L c5 = c4;
    c4 = static_cast<L>(nodes[i]) - z;
    for (std::size_t j = 0; j < i; ++j) {
      const L c3 = static_cast<L>(nodes[i]) - static_cast<L>(nodes[j]);
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = static_cast<double>(c[j][m]);
  return w;
}

namespace {

// Weights w_j with sum_j w_j p(t_j) = int_a^b p(t) dt for polynomials of degree < nodes.size().
std::vector<double> integration_weights(std::span<const double> nodes, double a, double b) {
  using L = long double;
  const std::size_t n = nodes.size();
  std::vector<std::vector<L>> A(n, std::vector<L>(n + 1));
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < n; ++j) A[p][j] = std::pow(static_cast<L>(nodes[j]), static_cast<L>(p));
    A[p][n] = (std::pow(static_cast<L>(b), static_cast<L>(p + 1)) -
               std::pow(static_cast<L>(a), static_cast<L>(p + 1))) /
              static_cast<L>(p + 1);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const L f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= n; ++c) A[r][c] -= f * A[col][c];
    }
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = static_cast<double>(A[j][n] / A[j][j]);
  return w;
}

constexpr std::size_t kQuadNodes = 6;
constexpr std::size_t kInterpNodes = 6;

std::size_t window_start(std::ptrdiff_t centre_left, std::size_t width, std::size_t n) {
  const auto hi = static_cast<std::ptrdiff_t>(n - width);
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(centre_left, 0, hi));
}

}  // namespace

template <typename T>
Field<T> finite_difference(const Field<T>& f, int k) {
  if (k < 1 || k > 3) throw Error(ErrorKind::sizing, "derivative order must be 1, 2 or 3");
  const std::size_t n = f.size();
  if (n < static_cast<std::size_t>(2 * k + 6)) {
    throw Error(ErrorKind::sizing, "grid of " + std::to_string(n) + " samples too small for order " +
                                       std::to_string(k) + " stencil");
  }
  const std::size_t r = (k == 3) ? 4 : 3;
  const std::size_t edge_width = static_cast<std::size_t>(k) + 6;
  const double scale = 1.0 / std::pow(f.grid().spacing(), k);

  std::vector<double> central_nodes;
  for (std::ptrdiff_t j = -static_cast<std::ptrdiff_t>(r); j <= static_cast<std::ptrdiff_t>(r); ++j)
    central_nodes.push_back(static_cast<double>(j));
  const auto central = fd_weights(0.0, central_nodes, k);

  const auto v = f.values();
  std::vector<T> out(n);
  std::vector<double> nodes(edge_width);
  for (std::size_t i = 0; i < n; ++i) {
    T acc{};
    if (i >= r && i + r < n) {
      for (std::size_t j = 0; j < central.size(); ++j) acc += central[j] * v[i - r + j];
    } else {
      const std::size_t s = (i < r) ? 0 : n - edge_width;
      for (std::size_t j = 0; j < edge_width; ++j)
        nodes[j] = static_cast<double>(s + j) - static_cast<double>(i);
      const auto w = fd_weights(0.0, nodes, k);
      for (std::size_t j = 0; j < edge_width; ++j) acc += w[j] * v[s + j];
    }
    out[i] = acc * scale;
  }
  return Field<T>(f.grid(), std::move(out));
}

template <typename T>
Field<T> derivative(const Field<T>& f, int k) {
  if (k < 1 || k > 3) throw Error(ErrorKind::sizing, "derivative order must be 1, 2 or 3");
  // Highest available order j <= k, counting the values themselves as order 0.
  int base = 0;
  for (int j = k; j >= 1; --j) {
    if (f.has_attached(j)) {
      base = j;
      break;
    }
  }
  typename Field<T>::Derivatives shifted;
  for (int j = k + 1; j <= 3; ++j)
    if (f.has_attached(j)) shifted[j - k - 1].assign(f.attached(j).begin(), f.attached(j).end());

  if (base == k) {
    std::vector<T> v(f.attached(k).begin(), f.attached(k).end());
    return Field<T>(f.grid(), std::move(v), std::move(shifted));
  }
  Field<T> src = base == 0 ? f.without_derivatives()
                           : Field<T>(f.grid(), std::vector<T>(f.attached(base).begin(), f.attached(base).end()));
  auto fd = finite_difference(src, k - base);
  std::vector<T> v(fd.values().begin(), fd.values().end());
  return Field<T>(f.grid(), std::move(v), std::move(shifted));
}

template <typename T>
Field<T> schwarzian(const Field<T>& f) {
  const auto d1 = derivative(f, 1);
  const auto d2 = derivative(f, 2);
  const auto d3 = derivative(f, 3);
  const double tol_node = 1e-10 * d1.max_modulus();
  std::vector<T> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(std::abs(d1[i]) > tol_node)) {
      std::ostringstream os;
      os << "f' vanishes at sample " << i << " (x = " << f.grid().x(i) << ")";
      throw Error(ErrorKind::singular, os.str());
    }
    const T r2 = d2[i] / d1[i];
    out[i] = d3[i] / d1[i] - 1.5 * r2 * r2;
  }
  return Field<T>(f.grid(), std::move(out));
}

template <typename T>
Field<T> antiderivative(const Field<T>& f, double x_ref) {
  const Grid& g = f.grid();
  if (!g.contains(x_ref)) throw Error(ErrorKind::range, "x_ref outside grid");
  const std::size_t n = g.size();
  const double h = g.spacing();
  const auto v = f.values();

  std::vector<double> nodes(kQuadNodes);
  auto cell_integral = [&](std::size_t cell, double upper) {
    const std::size_t s = window_start(static_cast<std::ptrdiff_t>(cell) - 2, kQuadNodes, n);
    for (std::size_t j = 0; j < kQuadNodes; ++j)
      nodes[j] = static_cast<double>(s + j) - static_cast<double>(cell);
    const auto w = integration_weights(nodes, 0.0, upper);
    T acc{};
    for (std::size_t j = 0; j < kQuadNodes; ++j) acc += w[j] * v[s + j];
    return acc * h;
  };

  // Interior cells share one weight set; compute it once.
  std::vector<double> centre_nodes{-2, -1, 0, 1, 2, 3};
  const auto centre_w = integration_weights(centre_nodes, 0.0, 1.0);

  std::vector<T> cum(n);
  cum[0] = T{};
  for (std::size_t c = 0; c + 1 < n; ++c) {
    T step;
    if (c >= 2 && c + 3 < n) {
      T acc{};
      for (std::size_t j = 0; j < kQuadNodes; ++j) acc += centre_w[j] * v[c - 2 + j];
      step = acc * h;
    } else {
      step = cell_integral(c, 1.0);
    }
    cum[c + 1] = cum[c] + step;
  }

  double pos = (x_ref - g.x_min()) / h;
  pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  std::size_t cell = std::min(static_cast<std::size_t>(pos), n - 2);
  const double tau = pos - static_cast<double>(cell);
  const T offset = (tau == 0.0) ? cum[cell] : cum[cell] + cell_integral(cell, tau);
  for (auto& c : cum) c -= offset;
  return Field<T>(g, std::move(cum));
}

template <typename T>
T interpolate(const Field<T>& f, double x) {
  const Grid& g = f.grid();
  if (!g.contains(x)) throw Error(ErrorKind::range, "interpolation point outside grid");
  const double pos = (x - g.x_min()) / g.spacing();
  const auto left = static_cast<std::ptrdiff_t>(std::floor(pos));
  const std::size_t s = window_start(left - 2, kInterpNodes, g.size());
  std::vector<double> nodes(kInterpNodes);
  for (std::size_t j = 0; j < kInterpNodes; ++j) nodes[j] = static_cast<double>(s + j);
  const auto w = fd_weights(pos, nodes, 0);
  T acc{};
  for (std::size_t j = 0; j < kInterpNodes; ++j) acc += w[j] * f[s + j];
  return acc;
}

RealField unwrap_phase(const ComplexField& f) {
  const double tol = 1e-10 * f.max_modulus();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> theta(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(std::abs(f[i]) > tol)) {
      std::ostringstream os;
      os << "modulus vanishes at sample " << i << " (x = " << f.grid().x(i) << ")";
      throw Error(ErrorKind::singular, os.str());
    }
    const double a = std::arg(f[i]);
    if (i == 0) {
      theta[0] = (a == -std::numbers::pi) ? std::numbers::pi : a;
    } else {
      theta[i] = a + two_pi * std::round((theta[i - 1] - a) / two_pi);
    }
  }
  return RealField(f.grid(), std::move(theta));
}

RealField real_part(const ComplexField& f) {
  return transform(f, [](complex z) { return z.real(); });
}
RealField imag_part(const ComplexField& f) {
  return transform(f, [](complex z) { return z.imag(); });
}
ComplexField to_complex(const RealField& f) {
  typename ComplexField::Derivatives d;
  for (int k = 1; k <= 3; ++k)
    if (f.has_attached(k)) d[k - 1].assign(f.attached(k).begin(), f.attached(k).end());
  std::vector<complex> v(f.values().begin(), f.values().end());
  return ComplexField(f.grid(), std::move(v), std::move(d));
}

template <typename T>
double max_abs(std::span<const T> v, std::size_t first, std::size_t last) {
  last = std::min(last, v.size());
  double m = 0.0;
  for (std::size_t i = first; i < last; ++i) m = std::max(m, static_cast<double>(std::abs(v[i])));
  return m;
}

IndexRange central_fraction(const Grid& grid, double fraction) {
  const std::size_t n = grid.size();
  const auto drop = static_cast<std::size_t>(std::ceil(0.5 * (1.0 - fraction) * static_cast<double>(n)));
  if (2 * drop >= n) throw Error(ErrorKind::range, "central fraction leaves no samples");
  return {drop, n - drop};
}

IndexRange window_indices(const Grid& grid, double lo, double hi) {
  if (!(lo <= hi)) throw Error(ErrorKind::range, "empty window");
  const double h = grid.spacing();
  const double a = std::ceil((lo - grid.x_min()) / h - 1e-9);
  const double b = std::floor((hi - grid.x_min()) / h + 1e-9);
  const double top = static_cast<double>(grid.size() - 1);
  const double first = std::max(a, 0.0);
  const double last = std::min(b, top);
  if (first > last) throw Error(ErrorKind::range, "window contains no grid samples");
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last) + 1};
}

template Field<double> derivative(const Field<double>&, int);
template Field<complex> derivative(const Field<complex>&, int);
template Field<double> finite_difference(const Field<double>&, int);
template Field<complex> finite_difference(const Field<complex>&, int);
template Field<double> schwarzian(const Field<double>&);
template Field<complex> schwarzian(const Field<complex>&);
template Field<double> antiderivative(const Field<double>&, double);
template Field<complex> antiderivative(const Field<complex>&, double);
template double interpolate(const Field<double>&, double);
template complex interpolate(const Field<complex>&, double);
template double max_abs(std::span<const double>, std::size_t, std::size_t);
template double max_abs(std::span<const complex>, std::size_t, std::size_t);

}  // namespace qhjlab
