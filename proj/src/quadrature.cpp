#include "krflx/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <stdexcept>

namespace krflx {

namespace {
using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
}

QuadResult integrate(const RealFn& f, double a, double b, double rel_tol) {
  QuadResult r;
  if (a == b) return r;
  double err = 0.0;
  r.value = GK::integrate(f, a, b, 12, rel_tol, &err);
  r.error = std::abs(err) * std::abs(b - a) * 0.5;
  r.panels = 1;
  return r;
}

QuadResult integrate_from_zero(const RealFn& f, double b, double abs_tol, double rel_tol) {
  QuadResult r;
  if (b <= 0.0) return r;
  constexpr double ratio = 0.25;
  double hi = b;
  double prev = 0.0, prev2 = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double lo = hi * ratio;
    double err = 0.0;
    const double piece = GK::integrate(f, lo, hi, 8, rel_tol * 0.1, &err);
    r.value += piece;
    r.error += std::abs(err) * (hi - lo) * 0.5;
    ++r.panels;
    hi = lo;
    if (k >= 3 && prev != 0.0 && prev2 != 0.0) {
      const double q1 = piece / prev, q2 = prev / prev2;
      if (q1 > 0.0 && q1 < 1.0 && std::abs(q1 - q2) < 0.05 * q1 + 1e-3) {
        const double tail = piece * q1 / (1.0 - q1);
        if (std::abs(tail) < abs_tol + rel_tol * std::abs(r.value) || lo < 1e-300) {
          r.value += tail;
          r.error += std::abs(tail) * std::abs(q1 - q2) / (1.0 - q1) + 1e-16 * std::abs(r.value);
          return r;
        }
      }
    }
    if (piece == 0.0 && prev == 0.0 && k > 3) return r;
    if (lo < 1e-300) return r;
    prev2 = prev;
    prev = piece;
  }
  throw std::runtime_error("integrate_from_zero: no convergence at the singular end");
}

QuadResult integrate_to_infinity(const RealFn& f, double a, double abs_tol, double rel_tol) {
  QuadResult r;
  double lo = a;
  double width = a > 0.0 ? a : 1.0;
  int small = 0;
  for (int k = 0; k < 400; ++k) {
    const double hi = lo + width;
    double err = 0.0;
    const double piece = GK::integrate(f, lo, hi, 10, rel_tol * 0.1, &err);
    r.value += piece;
    r.error += std::abs(err) * width * 0.5;
    ++r.panels;
    if (std::abs(piece) < abs_tol + rel_tol * std::abs(r.value)) {
      if (++small >= 2) return r;
    } else {
      small = 0;
    }
    lo = hi;
    width *= 2.0;
  }
  throw std::runtime_error("integrate_to_infinity: tail does not decay");
}

QuadResult integrate_log_panels(const RealFn& f, double a, double b, double rel_tol) {
  QuadResult r;
  if (!(a < b)) return r;
  if (a <= 0.0) throw std::domain_error("integrate_log_panels: a must be positive");
  const int n = std::max(1, static_cast<int>(std::ceil(std::log2(b / a))));
  const double q = std::pow(b / a, 1.0 / n);
  double lo = a;
  for (int k = 0; k < n; ++k) {
    const double hi = (k == n - 1) ? b : lo * q;
    double err = 0.0;
    const double piece = GK::integrate(f, lo, hi, 10, rel_tol, &err);
    r.value += piece;
    r.error += std::abs(err) * (hi - lo) * 0.5;
    ++r.panels;
    lo = hi;
  }
  return r;
}

}  // namespace krflx
