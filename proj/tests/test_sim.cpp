#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "krflx/sim.hpp"

using namespace krflx;
using doctest::Approx;

namespace {

// m^(1.5): dm = (2/3) x^{−4/3} dx, β = 2/3, T₀ = Cx^β/(β²Γ), Γ ~ Gamma(3/2)
constexpr double kC = 2.0 / 3.0, kBeta = 2.0 / 3.0, kNu = 1.5;

double g15(double lambda, double x) {
  const double a = lambda * kC * std::pow(x, kBeta) / (kBeta * kBeta);
  return 2.0 * std::pow(a, kNu / 2.0) * boost::math::cyl_bessel_k(kNu, 2.0 * std::sqrt(a)) / std::tgamma(kNu);
}

// ∫_lo^1 f(x) x^{−3/2} dx by a log-midpoint rule
template <class F>
double against_j(F f, double lo) {
  const int n = 20000;
  const double a = std::log(lo), h = -a / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::exp(a + (i + 0.5) * h);
    s += f(x) * std::pow(x, -0.5);
  }
  return s * h;
}

struct Mc {
  double mean, se;
};

template <class F>
Mc mc(int n, F draw) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = draw(i);
    s += y;
    s2 += y * y;
  }
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / n)};
}

const JumpMeasure kJ = JumpMeasure::power(-1.5, 0.0, 1.0);

}  // namespace

TEST_CASE("exact T₀ sampler: E e^{−λT₀} matches the Bessel form") {
  const T0Sampler s(make_power_string(1.5));
  REQUIRE(s.exact());
  Rng rng(5);
  for (double x : {0.2, 1.0}) {
    const Mc r = mc(20000, [&](int) { return std::exp(-s.draw(x, rng)); });
    CHECK(std::abs(r.mean - g15(1.0, x)) < 4.0 * r.se);
  }
  // E T₀ = ∫_0^x 2y^{−1/3} dy = 3x^{2/3}
  CHECK(s.mean(1.0) == Approx(3.0).epsilon(1e-10));
}

TEST_CASE("Euler–Maruyama T₀ for dm = dx: E e^{−T₀} = e^{−1} from x = 1") {
  const T0Sampler s(make_linear_string(), {}, true);
  REQUIRE_FALSE(s.exact());
  Rng rng(17);
  const Mc r = mc(3000, [&](int) { return std::exp(-s.draw(1.0, rng)); });
  CHECK(std::abs(r.mean - std::exp(-1.0)) < 4.0 * r.se);
}

TEST_CASE("EM censoring returns t_cap") {
  StepControl ctl;
  ctl.t_cap = 1e-3;
  const T0Sampler s(make_linear_string(), ctl, true);
  Rng rng(1);
  CHECK(s.draw(5.0, rng) == 1e-3);
}

TEST_CASE("start sampler rate is j((ε, ∞))") {
  const StartSampler st(kJ, 0.01);
  CHECK(st.rate() == Approx(2.0 * (10.0 - 1.0)).epsilon(1e-12));
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = st.draw(rng);
    CHECK((x > 0.01 && x <= 1.0));
  }
}

TEST_CASE("ILT drift is ∫_0^ε 3x^{2/3} j(dx) = 18 ε^{1/6}") {
  IltConfig cfg;
  cfg.eps = 1e-4;
  const IltSampler s(make_power_string(1.5), kJ, cfg);
  CHECK(s.drift() == Approx(18.0 * std::pow(1e-4, 1.0 / 6.0)).epsilon(1e-8));
}

TEST_CASE("ILT Laplace transform at u = 1") {
  // E e^{−λη(u)} = exp(−u(λ·drift + ∫_(ε,1] (1 − g(λ;x)) j(dx)))
  const double eps = 1e-2, lam = 1.0;
  IltConfig cfg;
  cfg.eps = eps;
  const IltSampler s(make_power_string(1.5), kJ, cfg);
  const double target =
      std::exp(-(lam * s.drift() + against_j([&](double x) { return 1.0 - g15(lam, x); }, eps)));
  const Mc r = mc(4000, [&](int i) { return std::exp(-lam * s.eta_at(99, i, 0, 1.0)); });
  CHECK(std::abs(r.mean - target) < 4.0 * r.se);
}

TEST_CASE("jump tail n[T > s] against the Gamma-law oracle") {
  const double eps = 1e-2, s_ = 10.0;
  IltConfig cfg;
  cfg.eps = eps;
  const IltSampler smp(make_power_string(1.5), kJ, cfg);
  const int chunks = 2000;
  std::vector<std::pair<double, double>> out;
  long count = 0;
  for (int k = 0; k < chunks; ++k) {
    smp.chunk(7, 0, 0, k, out);
    for (const auto& [u, T] : out) count += T > s_;
  }
  // P_x[T₀ > s] = P[Γ < Cx^β/(β²s)]
  const double oracle =
      against_j([&](double x) { return boost::math::gamma_p(kNu, kC * std::pow(x, kBeta) / (kBeta * kBeta * s_)); },
                eps);
  const double expected = oracle * chunks;
  CHECK(std::abs(count - expected) < 4.0 * std::sqrt(expected));
}

TEST_CASE("IltPath: η, its left limit and inverse") {
  const IltPath p = sample_ilt(make_power_string(1.5), kJ, 1e-2, 5.0, 21);
  REQUIRE(p.jumps() > 0);
  const double u = p.u[0];
  CHECK(p.eta(u) - p.eta_minus(u) == Approx(p.T[0]));
  const double t = p.eta(2.0);
  CHECK(p.inverse(t) <= 2.0 + 1e-12);
  CHECK(p.eta(p.inverse(t)) >= t - 1e-12);
  std::ostringstream os;
  p.dump_csv(os);
  CHECK(os.str().find('\n') != std::string::npos);
}

TEST_CASE("bilateral path: occupation, Williams identity, double Laplace at λ = 0") {
  IltConfig cfg;
  cfg.eps = 1e-2;
  const auto m = make_power_string(1.5);
  const auto b = bilateral(m, kJ, m, kJ, 200.0, 2024, cfg);
  REQUIRE(b.t_max() >= 200.0);
  double prev_A = 0.0, prev_l = 0.0;
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) {
    const double t = 2.0 * i;
    const double A = b.A(t);
    CHECK(A <= t + 1e-9);
    CHECK(A >= prev_A - 1e-12);
    CHECK(b.ell(t) >= prev_l);
    CHECK(b.A_direct(t) == Approx(A).epsilon(1e-9));
    prev_A = A;
    prev_l = b.ell(t);
  }
  // levels hit exactly by A(t) sit on flat stretches, so use an even grid
  const double a_top = 0.9 * b.A(b.t_max());
  for (int i = 1; i <= 200; ++i) grid.push_back(a_top * i / 200.0);
  CHECK(williams_residual(b, grid) < 1e-8 * b.t_max());
  CHECK(b.double_laplace(0.0, 1.0) == Approx(1.0).epsilon(1e-9));
  CHECK(b.double_laplace(0.0, 0.25) == Approx(4.0).epsilon(1e-6));

  const auto again = bilateral(m, kJ, m, kJ, 200.0, 2024, cfg);
  CHECK(again.A(150.0) == b.A(150.0));
  const auto other = bilateral(m, kJ, m, kJ, 200.0, 2025, cfg);
  CHECK(other.A(150.0) != b.A(150.0));
}
