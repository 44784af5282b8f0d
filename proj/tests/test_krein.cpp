#include <cmath>

#include "doctest.h"
#include "krflx/krein.hpp"

using namespace krflx;
using doctest::Approx;

TEST_CASE("H of the linear string is λ^{−1/2}") {
  const auto m = make_linear_string();
  CHECK(std::abs(H(m, 4.0) - 0.5) < 1e-6);
  for (double lam : {0.3, 1.0, 9.0}) CHECK(H(m, lam) == Approx(1.0 / std::sqrt(lam)).epsilon(1e-8));
}

TEST_CASE("H_closed at α = 1.5, λ = 1 is −2√6") {
  CHECK(H_closed(1.5, 1.0) == Approx(-2.0 * std::sqrt(6.0)).epsilon(1e-14));
  CHECK(H_closed(1.0, 1.0) == Approx(-2.0 * kEulerGamma).epsilon(1e-14));
  CHECK_THROWS(H_closed(2.0, 1.0));
  CHECK_THROWS(H_closed(1.5, 0.0));
}

TEST_CASE("three routes to H agree on power strings") {
  for (double a : {1.2, 1.5, 1.8})
    for (double lam : {0.5, 2.0}) {
      const auto m = make_power_string(a);
      const double hc = H_closed(a, lam);
      CHECK(std::abs(H(m, lam) - hc) < 1e-6);
      CHECK(std::abs(H_boundary(m, lam) - hc) < 1e-3);
    }
}

TEST_CASE("H scales like λ^{α−1} on m^(α)") {
  for (double a : {1.2, 1.7}) {
    const auto m = make_power_string(a);
    CHECK(H(m, 2.0) / H(m, 1.0) == Approx(std::pow(2.0, a - 1.0)).epsilon(1e-8));
  }
}

TEST_CASE("log string: dual route gives −(log λ + 2γ_E)") {
  const auto m = make_power_string(1.0);
  for (double lam : {0.5, 1.0, 3.0}) CHECK(H(m, lam) == Approx(H_closed(1.0, lam)).epsilon(1e-7));
}

TEST_CASE("shifting m by c shifts H by c") {
  // (1 − g + λG)/(λx) picks up c from G ↦ G + cx; g is unchanged
  const auto m = make_power_string(1.5);
  CHECK(H(shift(m, 0.75), 1.0) == Approx(H(m, 1.0) + 0.75).epsilon(1e-8));
}

TEST_CASE("c¹ = λH − λm(1)") {
  const auto m = make_power_string(1.5);
  CHECK(c1(m, 2.0) == Approx(2.0 * H_closed(1.5, 2.0) + 4.0).epsilon(1e-7));
}

TEST_CASE("dual solution f is 1 below m(0+) and increasing above") {
  const auto m = make_linear_string(1.0, 0.5);
  CHECK(f_dual(m, 1.0, 0.2) == 1.0);
  CHECK(f_dual(m, 1.0, 1.0) < f_dual(m, 1.0, 2.0));
  // for dm = dx, f(λ; y) = cosh(√λ(y − m0))
  CHECK(f_dual(m, 4.0, 1.5) == Approx(std::cosh(2.0)).epsilon(1e-10));
}

TEST_CASE("convergence_H reports the gap to H − σ²λ") {
  const auto m = make_power_string(1.5);
  const auto rows = convergence_H({m}, m, 0.0, {1.0});
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(rows[0].gap) < 1e-12);
}
