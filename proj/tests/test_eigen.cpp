#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "doctest.h"
#include "krflx/eigen.hpp"
#include "krflx/krein.hpp"

using namespace krflx;
using doctest::Approx;

namespace {

// For dm = C x^p dx, T₀ under P_x is C x^β/(β²Γ) with Γ ~ Gamma(1/β), so
// g(λ;x) = E e^{−a/Γ} = 2 a^{ν/2} K_ν(2√a)/Γ(ν), ν = 1/β, a = λCx^β/β².
double g_bessel(double C, double p, double lambda, double x) {
  const double beta = p + 2.0, nu = 1.0 / beta;
  const double a = lambda * C * std::pow(x, beta) / (beta * beta);
  return 2.0 * std::pow(a, nu / 2.0) * boost::math::cyl_bessel_k(nu, 2.0 * std::sqrt(a)) / std::tgamma(nu);
}

// power string m^(α): density (1/α) x^{1/α − 2}
double g_power(double alpha, double lambda, double x) { return g_bessel(1.0 / alpha, 1.0 / alpha - 2.0, lambda, x); }

}  // namespace

TEST_CASE("linear string: ψ, φ¹, g in closed form") {
  const auto m = make_linear_string();
  for (double lam : {0.25, 1.0, 4.0}) {
    const double k = std::sqrt(lam);
    for (double x : {0.1, 0.5, 1.0, 2.5}) {
      CHECK(psi(m, lam, x).value == Approx(std::sinh(k * x) / k).epsilon(1e-10));
      CHECK(psi_plus(m, lam, x).value == Approx(std::cosh(k * x)).epsilon(1e-10));
      // φ¹ solves φ'' = λφ, φ(0) = 1, φ'(0) = −λm(1)
      CHECK(phi1(m, lam, x).value == Approx(std::cosh(k * x) - k * std::sinh(k * x)).epsilon(1e-9));
      CHECK(g_quadrature(m, lam, x) == Approx(std::exp(-k * x)).epsilon(1e-9));
      CHECK(g_decomposition(m, lam, x) == Approx(std::exp(-k * x)).epsilon(1e-8));
    }
  }
}

TEST_CASE("ψ(1;1) = sinh 1 and g(1;1) = 1/e for dm = dx") {
  const auto m = make_linear_string();
  CHECK(std::abs(psi(m, 1.0, 1.0).value / std::sinh(1.0) - 1.0) < 1e-8);
  CHECK(std::abs(g_quadrature(m, 1.0, 1.0) * std::exp(1.0) - 1.0) < 1e-8);
}

TEST_CASE("g matches the Bessel closed form on power strings") {
  for (double a : {1.2, 1.5, 1.8}) {
    const auto m = make_power_string(a);
    for (double lam : {0.5, 2.0})
      for (double x : {0.05, 0.4, 1.0, 3.0}) {
        const double oracle = g_power(a, lam, x);
        CHECK(g_quadrature(m, lam, x) == Approx(oracle).epsilon(1e-7));
        CHECK(g_decomposition(m, lam, x) == Approx(oracle).epsilon(1e-7));
      }
  }
}

TEST_CASE("g is decreasing in x and λ and lies in (0,1)") {
  const auto m = make_power_string(1.5);
  double prev = 1.0;
  for (double x : {0.01, 0.1, 1.0, 10.0}) {
    const double g = g_quadrature(m, 1.0, x);
    CHECK(g < prev);
    CHECK(g > 0.0);
    prev = g;
  }
  CHECK(g_quadrature(m, 2.0, 1.0) < g_quadrature(m, 1.0, 1.0));
}

TEST_CASE("Wronskian g ψ⁺ − g⁺ ψ = 1") {
  for (double a : {1.2, 1.5, 1.8}) {
    const auto m = make_power_string(a);
    for (double lam : {0.5, 1.0, 2.0}) {
      const Eigensystem es(m, lam);
      const double c = c1(m, lam);
      for (double x : {0.02, 0.3, 1.0, 2.0}) {
        const double g = es.phi1(x).value - c * es.psi(x).value;
        const double gp = es.phi1_plus(x).value - c * es.psi_plus(x).value;
        CHECK(std::abs(g * es.psi_plus(x).value - gp * es.psi(x).value - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("power-string scaling ψ(λ;x) = λ^{−α} ψ(1; λ^α x)") {
  // ψ(λ; cx)/c = ψ(λc^{1/α}; x) since ρ(cx)c = c^{1/α−1}ρ(x); take c = λ^{−α}
  const double a = 1.5, lam = 2.0;
  const auto m = make_power_string(a);
  for (double x : {0.1, 0.7}) {
    const double lhs = psi(m, lam, x).value;
    const double rhs = psi(m, 1.0, x * std::pow(lam, a)).value / std::pow(lam, a);
    CHECK(lhs == Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("integral equation residual is small") {
  for (double a : {1.2, 1.8}) CHECK(residual_integral_eq(make_power_string(a), 1.0, 1.0) < 1e-8);
  CHECK(residual_integral_eq(make_linear_string(), 3.0, 2.0) < 1e-8);
}

TEST_CASE("truncation bound dominates the series error") {
  const auto m = make_linear_string();
  const Eigensystem es(m, 1.0);
  for (int d : {2, 4, 8}) {
    const EigenEval e = es.psi_partial(0.5, d);
    CHECK(std::abs(e.value - std::sinh(0.5)) <= e.truncation_bound * (1 + 1e-12) + 1e-15);
  }
}
