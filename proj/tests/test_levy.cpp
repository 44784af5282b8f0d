#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "krflx/krein.hpp"
#include "krflx/levy.hpp"

using namespace krflx;
using doctest::Approx;

namespace {

double g_power(double alpha, double lambda, double x) {
  const double C = 1.0 / alpha, beta = 1.0 / alpha, nu = alpha;  // p + 2 = 1/α
  const double a = lambda * C * std::pow(x, beta) / (beta * beta);
  return 2.0 * std::pow(a, nu / 2.0) * boost::math::cyl_bessel_k(nu, 2.0 * std::sqrt(a)) / std::tgamma(nu);
}

// ∫_0^1 (1 − g) x^{−3/2} dx for m^(1.5) by a log-midpoint rule; below x0 the
// integrand is 3λx^{−5/6}(1 + O(x^{2/3})) since E_x T₀ = 3x^{2/3}
double chi_oracle(double lambda) {
  const double x0 = 1e-12, la = std::log(x0);
  const int n = 400000;
  const double h = -la / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::exp(la + (i + 0.5) * h);
    s += (1.0 - g_power(1.5, lambda, x)) * std::pow(x, -1.5) * x;
  }
  return s * h + 3.0 * lambda * 6.0 * std::pow(x0, 1.0 / 6.0);
}

}  // namespace

TEST_CASE("stable_exponent equals λH_closed") {
  for (double a : {1.1, 1.5, 1.9})
    for (double lam : {0.3, 1.0, 7.0})
      CHECK(std::abs(stable_exponent(a, lam) - lam * H_closed(a, lam)) <= 1e-12 * std::abs(stable_exponent(a, lam)));
  CHECK(stable_constant(1.5) < 0.0);
}

TEST_CASE("χ for dm = dx, j = δ₁ + x^{−3/2}dx on (0,1]") {
  // g = e^{−kx}, k = √λ; by parts ∫_0^1 (1 − e^{−kx}) x^{−3/2} dx = −2(1 − e^{−k}) + 2√(πk) P(1/2, k)
  const auto m = make_linear_string();
  CHECK_THROWS(chi(m, JumpMeasure::atom(1.0, 1.0), 1.0));  // finite j(0,1) violates (C)
  const auto j = JumpMeasure::atom(1.0, 1.0) + JumpMeasure::power(-1.5, 0.0, 1.0);
  for (double lam : {0.5, 1.0, 4.0}) {
    const double k = std::sqrt(lam), atom = 1.0 - std::exp(-k);
    const double dens = -2.0 * atom + 2.0 * std::sqrt(M_PI * k) * boost::math::gamma_p(0.5, k);
    CHECK(chi(m, j, lam) == Approx(atom + dens).epsilon(1e-9));
  }
}

TEST_CASE("κ = 2 and b = 18 for m^(1.5), j = x^{−3/2} on (0,1]") {
  const auto m = make_power_string(1.5);
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0);
  CHECK(j.kappa() == Approx(2.0));
  // b = ∫ 3x^{2/3} x^{−3/2} dx = 18
  CHECK(drift_b(m, j) == Approx(18.0).epsilon(1e-10));
}

TEST_CASE("χ of the α = 1.5 pair matches a Bessel-oracle quadrature") {
  const auto m = make_power_string(1.5);
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0);
  for (double lam : {0.5, 1.0}) CHECK(chi(m, j, lam) == Approx(chi_oracle(lam)).epsilon(1e-5));
}

TEST_CASE("centred exponent equals χ − bλ and is linear in j") {
  const auto m = make_power_string(1.5);
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0);
  const double c = chi_centered(m, j, 1.0);
  CHECK(c == Approx(chi(m, j, 1.0) - 18.0).epsilon(1e-9));
  CHECK(chi_centered(m, j.scaled(2.0), 1.0) == Approx(2.0 * c).epsilon(1e-12));
  CHECK(chi_centered_at(m, j, 1.0, 0.0) == Approx(c).epsilon(1e-12));
}

TEST_CASE("laplace_exponent bundles χ, b and κ") {
  const auto le = laplace_exponent(make_power_string(1.5), JumpMeasure::power(-1.5, 0.0, 1.0));
  CHECK(le.b == Approx(18.0));
  REQUIRE(le.kappa);
  CHECK(*le.kappa == Approx(2.0));
}

TEST_CASE("stable samples reproduce their Laplace transform") {
  const int n = 200000;
  for (double a : {1.2, 1.5, 1.8, 2.0, 1.0}) {
    const double s = 0.5;
    const auto v = sample_stable(a, 1.0, s, n, 42);
    for (double lam : {0.25, 0.5}) {
      double e = 0.0, e2 = 0.0;
      for (double x : v) {
        const double y = std::exp(-lam * x);
        e += y;
        e2 += y * y;
      }
      e /= n;
      const double se = std::sqrt((e2 / n - e * e) / n);
      const double chi_ = a == 2.0 ? -0.5 * lam * lam : lam * H_closed(a, lam);
      CHECK(std::abs(e - std::exp(-s * chi_)) < 4.0 * se);
    }
  }
}

TEST_CASE("α = 2 reference is N(0, s)") {
  const auto v = sample_stable(2.0, 2.0, 1.5, 100000, 7);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size() - 1;
  CHECK(std::abs(mean) < 4.0 * std::sqrt(3.0 / v.size()));
  CHECK(var == Approx(3.0).epsilon(0.02));
}

TEST_CASE("positive stable: E e^{−U} = e^{−1}") {
  for (double a : {0.3, 0.5, 0.8}) {
    Rng rng(11);
    const int n = 200000;
    double e = 0.0, e2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double y = std::exp(-draw_positive_stable(a, rng));
      e += y;
      e2 += y * y;
    }
    e /= n;
    CHECK(std::abs(e - std::exp(-1.0)) < 4.0 * std::sqrt((e2 / n - e * e) / n));
  }
}

TEST_CASE("arcsine sampler: Stieltjes transform and mean p") {
  const ArcsineSpec spec{0.5, 0.5};
  CHECK(arcsine_stieltjes(spec, 1.0) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  const auto cal = calibrate_arcsine(spec, 100000, 3);
  CHECK(cal.c == Approx(cal.c_guess).epsilon(0.05));
  const auto y = sample_arcsine(cal, 100000, 99);
  double s = 0.0, s2 = 0.0, st = 0.0, st2 = 0.0;
  for (double v : y) {
    s += v;
    s2 += v * v;
    st += 1.0 / (1.0 + v);
    st2 += 1.0 / ((1.0 + v) * (1.0 + v));
  }
  const double n = y.size(), mean = s / n, sm = st / n;
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt((s2 / n - mean * mean) / n));
  CHECK(std::abs(sm - 1.0 / std::sqrt(2.0)) < 4.0 * std::sqrt((st2 / n - sm * sm) / n));
  // the uncalibrated route also works
  CHECK(sample_arcsine(spec, 10, 1).size() == 10);
}

TEST_CASE("tail prediction constant κα^{α−1}/Γ(α)") {
  CHECK(tail_prediction(1.5, 2.0, 1.0) == Approx(2.0 * std::sqrt(1.5) / std::tgamma(1.5)).epsilon(1e-14));
  CHECK(tail_prediction(1.5, 4.0, 1.0) == Approx(2.0 * tail_prediction(1.5, 2.0, 1.0)));
  CHECK(tail_prediction(1.5, 2.0, 10.0) == Approx(tail_prediction(1.5, 2.0, 1.0) * std::pow(10.0, -1.5)));
}
