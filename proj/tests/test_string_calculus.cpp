#include <cmath>

#include "doctest.h"
#include "krflx/quadrature.hpp"
#include "krflx/string_calculus.hpp"

using namespace krflx;
using doctest::Approx;

namespace {
// plain midpoint rule in log coordinates, independent of the library quadrature
double log_midpoint(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  const double la = std::log(a), h = (std::log(b) - la) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = std::exp(la + (i + 0.5) * h);
    s += f(x) * x;
  }
  return s * h;
}
}  // namespace

TEST_CASE("eval_m on closed forms") {
  CHECK(eval_m(*make_linear_string(), 2.0) == Approx(2.0));
  CHECK(eval_m(*make_power_string(1.5), 1.0) == Approx(-2.0));
  CHECK(eval_m(*make_power_string(1.0), std::exp(1.0)) == Approx(1.0));
  CHECK(eval_m(*make_power_string(1.0), 1.0) == 0.0);
  // (1-α)^{-1} x^{1/α-1} at α = 0.5, x = 4
  CHECK(eval_m(*make_power_string(0.5), 4.0) == Approx(8.0));
  CHECK_THROWS_AS(eval_m(*make_power_string(1.5), 0.0), std::domain_error);
  CHECK_THROWS(make_power_string(2.0));
  CHECK_THROWS(make_power_string(0.0));
}

TEST_CASE("power string density is (1/α) x^{1/α-2}") {
  for (double a : {0.3, 0.5, 1.0, 1.2, 1.5, 1.8}) {
    const auto m = make_power_string(a);
    for (double x : {0.01, 0.7, 3.0})
      CHECK(m->density(x) == Approx(std::pow(x, 1.0 / a - 2.0) / a).epsilon(1e-13));
  }
}

TEST_CASE("tail") {
  const auto m = make_power_string(1.5);
  CHECK(tail(*m, 1.0) == Approx(2.0));
  CHECK(tail(*m, 8.0) == Approx(1.0));
  CHECK_THROWS_AS(tail(*make_linear_string(), 1.0), std::domain_error);
}

TEST_CASE("G and G1") {
  const auto m = make_linear_string();
  CHECK(G(*m, 2.0) == Approx(2.0));
  CHECK(G1(*m, 2.0) == Approx(0.0));
  CHECK(G(*m, 0.0) == 0.0);
  CHECK(G1(*m, 0.0) == 0.0);
  const auto p = make_power_string(1.5);
  const double oracle = log_midpoint([&](double y) { return p->m(y); }, 1e-18, 2.0);
  CHECK(G(*p, 2.0) == Approx(oracle).epsilon(1e-6));
  CHECK(G1(*p, 2.0) == Approx(G(*p, 2.0) + 2.0 * 2.0));
  CHECK_THROWS_AS(G(*std::make_shared<PowerString>(1.0, -1.0), 1.0), std::domain_error);
}

TEST_CASE("bullet operator") {
  auto dx = [](double) { return 1.0; };
  auto s = [](double y) { return y; };
  CHECK(bullet(dx, s, 2.0) == Approx(2.0));
  // s•m•s(x) = ∫_0^x (m•s)(y) dy
  auto ms = [&](double y) { return bullet(dx, s, y); };
  CHECK(bullet(dx, ms, 1.0) == Approx(1.0 / 6.0).epsilon(1e-10));
  CHECK(bullet([](double) { return 0.0; }, s, 3.0) == 0.0);
}

TEST_CASE("Fubini form of s•m•s on power strings") {
  for (double a : {1.2, 1.5, 1.8}) {
    const auto m = make_power_string(a);
    const double x = 1.7;
    auto rho = [&](double y) { return m->density(y); };
    const double iterated = integrate_from_zero([&](double y) { return m->ms(y); }, x).value;
    const double fubini = bullet(rho, [&](double y) { return (x - y) * y; }, x);
    CHECK(iterated == Approx(fubini).epsilon(1e-10));
  }
}

TEST_CASE("rescale") {
  const auto m = make_power_string(1.5);
  const auto id = rescale(m, 1.0, 1.0);
  CHECK(id->m(2.3) == Approx(m->m(2.3)));
  const double a = 1.5, g = 100.0;
  const auto mg = rescale(m, std::pow(g, 1.0 - 1.0 / a), g);
  CHECK(mg->m(0.7) == Approx(m->m(g * 0.7) / std::pow(g, 1.0 / a - 1.0)));
  const auto r1 = rescale(rescale(m, 2.0, 3.0), 5.0, 7.0);
  const auto r2 = rescale(m, 10.0, 21.0);
  for (double x : {0.1, 1.0, 5.0}) CHECK(r1->m(x) == Approx(r2->m(x)).epsilon(1e-14));
  for (double x : {0.5, 2.0})
    CHECK(tail(*rescale(m, 3.0, 5.0), x) == Approx(3.0 * tail(*m, 5.0 * x)));
  // germ of the wrapper reproduces m near 0
  const auto lg = rescale(make_power_string(1.0), 2.0, 5.0);
  CHECK(lg->germ().m(0.3) == Approx(lg->m(0.3)));
}

TEST_CASE("dual string") {
  const auto w = dual(make_linear_string());
  CHECK(w(-1.0) == 0.0);
  CHECK(w(2.5) == Approx(2.5));
  const auto m = make_power_string(1.5);
  const auto v = dual(m);
  for (double y : {-4.0, -2.0, -0.5}) CHECK(v(y) == Approx(std::pow(-y / 2.0, -3.0)));
  CHECK(std::isinf(v(0.0)));
  CHECK(v.ell() == 0.0);
  CHECK(v(m->m(3.3)) == Approx(3.3));
  for (double x : {0.2, 1.0, 4.0}) CHECK(v.dual(x) == Approx(m->m(x)).epsilon(1e-12));
}

TEST_CASE("boundary classification") {
  auto lin = classify_boundary(*make_linear_string());
  CHECK(lin.kind == Boundary::regular);
  CHECK(lin.I == Approx(0.5));
  CHECK(lin.J == Approx(0.5));
  for (double a : {1.2, 1.5, 1.8}) CHECK(classify_boundary(*make_power_string(a)).kind == Boundary::exit);
  for (double a : {0.3, 0.5, 0.8})
    CHECK(classify_boundary(*make_power_string(a)).kind == Boundary::regular);
  // m = -1/x: I = ∞, J = ∫_0^1 y·y^{-2} dy = ∞
  CHECK(classify_boundary(PowerString(-1.0, -1.0)).kind == Boundary::natural);
}

TEST_CASE("M1 membership") {
  const auto c = check_M1(*make_power_string(1.5));
  CHECK(c.verdict == Verdict::yes);
  // ∫_0^1 4 x^{-2/3} dx = 12
  CHECK(c.value == Approx(12.0).epsilon(1e-8));
  for (double a : {1.05, 1.5, 1.95}) CHECK(check_M1(*make_power_string(a)).verdict == Verdict::yes);
  CHECK(check_M1(PowerString(-1.0, -1.0)).verdict == Verdict::no);
  // tabulated strings go through the numeric panel test
  std::vector<double> x, mv, xb, mb;
  for (int i = 0; i <= 40; ++i) {
    const double xi = std::pow(2.0, i - 20);
    x.push_back(xi);
    mv.push_back(-2.0 * std::pow(xi, -1.0 / 3.0));
    xb.push_back(xi);
    mb.push_back(-std::pow(xi, -0.6));
  }
  CHECK(check_M1(*make_table_string(x, mv, -1.0 / 3.0, -1.0 / 3.0)).verdict == Verdict::yes);
  CHECK(check_M1(*make_table_string(xb, mb, -0.6, -0.6)).verdict == Verdict::no);
}

TEST_CASE("table string reproduces a tabulated power law") {
  const auto p = make_power_string(1.5);
  std::vector<double> x, mv;
  for (int i = 0; i <= 24; ++i) {
    x.push_back(std::pow(2.0, i - 12));
    mv.push_back(p->m(x.back()));
  }
  const auto t = make_table_string(x, mv, -1.0 / 3.0, -1.0 / 3.0);
  for (double y : {1e-6, 3e-3, 0.37, 1.0, 2.9, 1000.0, 1e6}) {
    CHECK(t->m(y) == Approx(p->m(y)).epsilon(1e-10));
    CHECK(t->density(y) == Approx(p->density(y)).epsilon(1e-10));
    CHECK(t->G(y) == Approx(p->G(y)).epsilon(1e-9));
    CHECK(t->ms(y) == Approx(p->ms(y)).epsilon(1e-9));
  }
  CHECK(t->m_inf() == Approx(0.0).scale(1.0));
  CHECK(t->germ().p == Approx(p->germ().p));
  // measure of (a,b] equals m(b) - m(a)
  const double a = 0.013, b = 47.0;
  const double mass = integrate_log_panels([&](double y) { return t->density(y); }, a, b, 1e-12).value;
  CHECK(mass == Approx(t->m(b) - t->m(a)).epsilon(1e-9));
}

TEST_CASE("normalize_tail") {
  const auto m = shift(make_power_string(1.5), 3.0);
  CHECK(m->m_inf() == Approx(3.0));
  const auto n = normalize_tail(m);
  CHECK(n->m_inf() == Approx(0.0).scale(1.0));
  CHECK(n->m(1.0) == Approx(-2.0));
  CHECK_THROWS(normalize_tail(make_linear_string()));
}

TEST_CASE("condition (C)") {
  const auto m = make_power_string(1.5);
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0);
  const auto c = check_condition_C(*m, j);
  CHECK(c.verdict == Verdict::yes);
  CHECK(c.value == Approx(18.0).epsilon(1e-8));
  CHECK(j.kappa() == Approx(2.0));
  CHECK(check_condition_C(*m, JumpMeasure::power(0.0, 0.0, 1.0)).verdict == Verdict::no);
  CHECK(check_condition_C(*m, JumpMeasure::atom(0.5, 1.0)).verdict == Verdict::no);
  CHECK(check_condition_C(*m, JumpMeasure::power(-3.0, 0.0, 1.0)).verdict == Verdict::no);
}

TEST_CASE("jump measure algebra") {
  const auto j = JumpMeasure::power(-1.5, 0.0, 1.0) + JumpMeasure::atom(2.0, 0.5);
  CHECK(j.mass(0.25, 4.0) == Approx(2.0 * (2.0 - 1.0) + 0.5));
  // pushforward: ∫ f dj_γ = γ ∫ f(x/γ) j(dx)
  const double g = 10.0;
  const auto jg = j.pushforward(g);
  auto f = [](double x) { return x * x; };
  CHECK(jg.integrate(f) == Approx(g * j.integrate([&](double x) { return f(x / g); })).epsilon(1e-9));
  CHECK(j.scaled(3.0).kappa() == Approx(3.0 * j.kappa()));
  CHECK(j.restricted(0.0, 1.0).kappa() == Approx(2.0));
}
