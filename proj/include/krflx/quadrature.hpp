#pragma once

#include <functional>

namespace krflx {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

using RealFn = std::function<double(double)>;

// Adaptive 21-point Gauss–Kronrod on [a, b].
QuadResult integrate(const RealFn& f, double a, double b, double rel_tol = 1e-12);

// ∫_0^b f with f allowed an integrable power singularity at 0. Geometric
// panels [b r^{k+1}, b r^k] are summed until they decay; the remaining
// tail is closed by a geometric-ratio estimate.
QuadResult integrate_from_zero(const RealFn& f, double b, double abs_tol = 1e-14,
                               double rel_tol = 1e-12);

// ∫_a^∞ f over doubling panels; stops once a panel falls below tolerance
// twice in a row.
QuadResult integrate_to_infinity(const RealFn& f, double a, double abs_tol = 1e-14,
                                 double rel_tol = 1e-12);

// ∫_a^b over geometric panels, for integrands that are smooth in log x.
QuadResult integrate_log_panels(const RealFn& f, double a, double b, double rel_tol = 1e-12);

}  // namespace krflx
