#include <chrono>
#include <cmath>

#include "doctest.h"
#include "qhjlab/duality.hpp"
#include "qhjlab/wkb_hierarchy.hpp"
#include "test_support.hpp"

using namespace qhjlab;

namespace {

HierarchyInput linear_input(Grid g, int K, double eps = 0.1) {
  return {g, Potential::linear(1.0), 2.0, {}, K, eps, {}};
}

HierarchyInput harmonic_input(Grid g, int K) { return {g, Potential::harmonic(1.0), 5.0, {}, K, 0.1, {}}; }

void check_close(complex got, complex want, double tol) {
  CHECK(std::abs(got.real() - want.real()) <= tol);
  CHECK(std::abs(got.imag() - want.imag()) <= tol);
}

}  // namespace

TEST_CASE("hierarchy on the free particle") {
  const HierarchyInput in{Grid(-4.0, 4.0, 257), Potential::free_particle(), 1.0, {}, 6, 0.1, {}};
  const auto sol = recurse(in);
  REQUIRE(sol.P.size() == 7);
  REQUIRE(sol.S.size() == 7);
  for (std::size_t i = 0; i < in.grid.size(); ++i) {
    CHECK(sol.P[0][i] == complex(0.0, 1.0));
    for (int j = 1; j <= 6; ++j) CHECK(sol.P[j][i] == complex(0.0, 0.0));
  }
  const auto mod = reconstruct_modulus(sol, in, 0.7);
  for (double m : mod.modulus.values()) CHECK(m == 0.7);
  CHECK(mod.warnings.empty());
}

TEST_CASE("frozen oracle values") {
  SUBCASE("V = X, E = 2 at X = 1/2") {
    const auto sol = recurse(linear_input(Grid(0.5, 1.5, 65), 4));
    const double tol = 1e-13;
    check_close(sol.P[0][0], {0.0, 1.224744871391589}, tol);
    check_close(sol.P[1][0], {0.16666666666666666, 0.0}, tol);
    check_close(sol.P[2][0], {0.0, 0.05670115145331431}, tol);
    check_close(sol.P[3][0], {-0.046296296296296294, 0.0}, tol);
    check_close(sol.P[4][0], {0.0, -0.058013678107326216}, tol);
  }
  SUBCASE("V = X^2, E = 5 at X = 1/3") {
    const auto sol = recurse(harmonic_input(Grid(1.0 / 3.0, 1.0, 65), 3));
    const double tol = 1e-13;
    check_close(sol.P[0][0], {0.0, 2.2110831935702664}, tol);
    check_close(sol.P[1][0], {0.03409090909090909, 0.0}, tol);
    check_close(sol.P[2][0], {0.0, 0.0244413412395004}, tol);
    check_close(sol.P[3][0], {-0.0033307911536951027, 0.0}, tol);
  }
  SUBCASE("closed forms for the linear potential") {
    const auto in = linear_input(Grid(-2.0, 1.5, 1025), 2);
    const auto sol = recurse(in);
    for (std::size_t i = 0; i < in.grid.size(); ++i) {
      const double g = 2.0 - in.grid.x(i);
      check_close(sol.P[0][i], {0.0, std::sqrt(g)}, 1e-12);
      check_close(sol.P[1][i], {0.25 / g, 0.0}, 1e-12);
      check_close(sol.P[2][i], {0.0, 5.0 / 32.0 * std::pow(g, -2.5)}, 1e-12);
      // P_1 = -P_0' / 2 P_0 against the attached derivative.
      CHECK(std::abs(sol.P[1][i] + sol.P[0].attached(1)[i] / (2.0 * sol.P[0][i])) < 1e-10);
    }
  }
}

TEST_CASE("structural properties") {
  SUBCASE("parity") {
    for (const auto& in : {linear_input(Grid(-2.0, 1.5, 1025), 8), harmonic_input(Grid(-1.0, 1.0, 1025), 8)}) {
      const auto sol = recurse(in);
      CHECK(sol.parity.even_real < 1e-12);
      CHECK(sol.parity.odd_imag < 1e-12);
    }
  }
  SUBCASE("no integration constants") {
    const auto full = recurse(harmonic_input(Grid(-1.0, 1.0, 1025), 6));
    const auto sub = recurse(harmonic_input(Grid(-0.5, 0.5, 513), 6));
    for (std::size_t i = 0; i < 513; ++i)
      for (int j = 0; j <= 6; ++j) CHECK(std::abs(full.P[j][i + 256] - sub.P[j][i]) <= 1e-12 * std::abs(full.P[j][i + 256]) + 1e-15);
  }
  SUBCASE("raising K leaves lower orders alone") {
    const auto a = recurse(linear_input(Grid(-2.0, 1.5, 257), 3));
    const auto b = recurse(linear_input(Grid(-2.0, 1.5, 257), 7));
    for (int j = 0; j <= 3; ++j)
      for (std::size_t i = 0; i < 257; ++i) CHECK(a.P[j][i] == b.P[j][i]);
  }
  SUBCASE("S^j is the quadrature of P_j") {
    const auto in = linear_input(Grid(-2.0, 1.5, 1025), 4);
    const auto sol = recurse(in);
    for (int j = 0; j <= 4; ++j) {
      CHECK(std::abs(interpolate(sol.S[j], in.reference())) < 1e-14);
      const auto d = finite_difference(sol.S[j], 1);
      const double size = sol.P[j].max_modulus();
      for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(d[i] - sol.P[j][i]) < 1e-8 * size);
    }
  }
  SUBCASE("errors") {
    try {
      (void)recurse(linear_input(Grid(-2.0, 2.5, 257), 2));
      FAIL("expected domain error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::domain);
    }
    try {
      (void)recurse(linear_input(Grid(-2.0, 1.5, 257), kMaxHierarchyOrder + 1));
      FAIL("expected truncation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::truncation);
    }
    CHECK_NOTHROW(recurse(linear_input(Grid(-2.0, 1.5, 257), kMaxHierarchyOrder)));
  }
}

TEST_CASE("master expansion residual") {
  SUBCASE("every order vanishes") {
    for (const auto& in : {linear_input(Grid(-2.0, 1.5, 1025), 8), harmonic_input(Grid(-1.0, 1.0, 1025), 8)}) {
      const auto r = master_residual(recurse(in), in);
      for (int n = 0; n <= 8; ++n) CHECK(r.per_order[n] < 1e-9 * r.order_scale[n]);
    }
  }
  SUBCASE("remainder scales as eps^(K+1)") {
    const std::vector<double> eps{0.1, 0.05, 0.025};
    for (int K : {0, 2, 4}) {
      const auto in = linear_input(Grid(-2.0, 1.5, 1025), K);
      const auto sol = recurse(in);
      std::vector<double> rem;
      for (double e : eps) rem.push_back(master_residual(sol, in, e).remainder_max);
      INFO("K = " << K);
      CHECK(std::abs(testing::slope_fit(eps, rem).slope - (K + 1)) < 0.3);
    }
  }
  SUBCASE("supplied F2'' enters order 2") {
    auto in = linear_input(Grid(-2.0, 1.5, 513), 4);
    in.F_even.push_back(RealField::sample(in.grid, [](double x) { return 0.01 * std::sin(x); }));
    const auto sol = recurse(in);
    const auto r = master_residual(sol, in);
    for (int n = 0; n <= 4; ++n) CHECK(r.per_order[n] < 1e-9 * r.order_scale[n]);
    const auto plain = recurse(linear_input(Grid(-2.0, 1.5, 513), 4));
    CHECK(std::abs(sol.P[2][100] - plain.P[2][100]) > 1e-4);
    CHECK(sol.P[1][100] == plain.P[1][100]);
    CHECK_THROWS_AS(p2_schwarzian_check(sol, in), Error);
  }
}

TEST_CASE("Schwarzian form of P2") {
  CHECK(p2_schwarzian_check(recurse(linear_input(Grid(-2.0, 1.5, 1025), 2)), linear_input(Grid(-2.0, 1.5, 1025), 2)) <
        1e-6);
  CHECK(p2_schwarzian_check(recurse(harmonic_input(Grid(-1.0, 1.0, 1025), 2)), harmonic_input(Grid(-1.0, 1.0, 1025), 2)) <
        1e-5);
  const HierarchyInput free{Grid(-1.0, 1.0, 257), Potential::free_particle(), 1.0, {}, 2, 0.1, {}};
  CHECK(p2_schwarzian_check(recurse(free), free) < 1e-6);
  CHECK_THROWS_AS(p2_schwarzian_check(recurse(linear_input(Grid(-2.0, 1.5, 257), 1)), linear_input(Grid(-2.0, 1.5, 257), 1)),
                  Error);
}

TEST_CASE("modulus reconstruction") {
  SUBCASE("leading order is 1 / Im P0") {
    const auto in = linear_input(Grid(-2.0, 1.5, 1025), 1);
    const auto sol = recurse(in);
    const auto m = reconstruct_normalized_modulus(sol, in);
    double lo = 1e300, hi = 0.0, top = 0.0;
    for (std::size_t i = 0; i < m.modulus.size(); ++i) {
      const double v = m.modulus[i] * sol.P[0][i].imag();
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      top = std::max(top, m.modulus[i]);
    }
    CHECK((hi - lo) / hi < 1e-6);
    CHECK(std::abs(top - 1.0) < 1e-12);
    CHECK(top <= 1.0);
  }
  SUBCASE("higher odd terms enter with eps^2") {
    const auto in = linear_input(Grid(-2.0, 1.5, 513), 3, 0.2);
    const auto sol = recurse(in);
    const auto m = reconstruct_modulus(sol, in, 1.0);
    for (std::size_t i = 0; i < m.modulus.size(); i += 37) {
      const double want = std::exp(2.0 * (sol.S[1][i].real() + 0.04 * sol.S[3][i].real()));
      CHECK(m.modulus[i] == doctest::Approx(want).epsilon(1e-13));
    }
  }
  SUBCASE("K = 0 warns") {
    const auto in = linear_input(Grid(-2.0, 1.5, 129), 0);
    const auto m = reconstruct_modulus(recurse(in), in, 0.5);
    CHECK(m.warnings.size() == 1);
    for (double v : m.modulus.values()) CHECK(v == 0.5);
  }
  SUBCASE("omega must be positive") {
    const auto in = linear_input(Grid(-2.0, 1.5, 129), 1);
    CHECK_THROWS_AS(reconstruct_modulus(recurse(in), in, 0.0), Error);
  }
}

TEST_CASE("hierarchy runtime") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = linear_input(Grid(-2.0, 1.5, 1025), 6);
  const auto sol = recurse(in);
  (void)master_residual(sol, in);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 5.0);
}
