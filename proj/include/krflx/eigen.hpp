#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "krflx/series.hpp"
#include "krflx/string_calculus.hpp"

namespace krflx {

struct EigenEval {
  double lambda = 0.0;
  double x = 0.0;
  double value = 0.0;
  std::optional<double> derivative_plus;
  double truncation_bound = 0.0;
  int terms_used = 0;
};

struct EigenOptions {
  // series terms are added until the certified bound is below tol·max(1, |value|)
  double tol = 1e-16;
  int max_terms = 160;
  // series is used while |λ|(m•s)(x) ≤ switch_level
  double switch_level = 2.0;
  double ode_rel = 1e-13;
  double ode_abs = 1e-15;
  // λ > 0: continue until ψψ⁺ reaches growth_stop or x reaches x_cap
  double growth_stop = 1e32;
  double x_cap = 1e12;
  // λ ≤ 0: continuation horizon
  double x_max = 100.0;
};

// ψ_m(λ;·), φ¹_m(λ;·) and g_m(λ;·) for one (m, λ). Near 0 the Volterra
// series is run exactly on the power germ of m; beyond x_switch the pair
// (ψ, φ¹) is continued as an ODE in log x from series seeds.
class Eigensystem {
 public:
  Eigensystem(String m, double lambda, EigenOptions opt = {});

  double lambda() const { return lambda_; }
  const String& string() const { return m_; }
  double x_switch() const { return x_switch_; }

  EigenEval psi(double x) const;
  EigenEval psi_plus(double x) const;
  EigenEval phi1(double x) const;
  EigenEval phi1_plus(double x) const;

  // first d series terms of ψ (d ≥ 1) and of φ¹ (terms k = 0..d) with the
  // corresponding a-priori bounds; x must lie in the germ.
  EigenEval psi_partial(double x, int d) const;
  EigenEval phi1_partial(double x, int d) const;

  // ψ − x, φ¹ − 1 − λG¹, and the latter minus its λ² term. Computed from
  // the series without cancellation inside the germ.
  double Psi(double x) const;
  double Phi1(double x) const;
  double Phi2(double x) const;

  // ψ(x)∫_x^∞ ψ^{-2}, with an error estimate; λ > 0
  struct GValue {
    double value, error;
  };
  GValue g_quadrature(double x) const;

  // (m•s)(x) and S_m(x) = sup_{y ≤ x}|m•G¹(y)| on the germ
  double ms(double x) const;
  double S(double x) const;

  // largest x reached by the continuation (∞ for the pure series case)
  double horizon() const;

  // a partial series sum with its a-priori bound and term count
  struct Partial {
    double value, bound;
    int n;
  };

 private:
  struct Continuation;
  struct State {
    double psi, dpsi, phi, dphi;
  };
  struct StateEval {
    State s;
    double err_psi, err_dpsi, err_phi, err_dphi;
  };

  struct Partials {
    Partial psi, dpsi, phi, dphi;
  };
  Partials partials(double x, bool all) const;
  bool in_series(double x) const { return x <= x_switch_; }
  StateEval series_state(double x) const;
  StateEval ode_state(double x) const;
  StateEval state(double x) const;
  const Continuation& continuation() const;
  void build_continuation(Continuation& c) const;
  double E(double x, int d) const;

  String m_;
  double lambda_;
  EigenOptions opt_;
  Germ germ_;
  double x_switch_;
  double m1_;
  // ψ: a_k; ψ⁺: da_k = ∫ρ a_k; φ¹: b_k; φ¹⁺: db_k = ∫ρ b_k
  std::vector<MonoSum> a_, da_, b_, db_;
  MonoSum mG1_;
  std::shared_ptr<Continuation> cont_;
};

EigenEval psi(const String& m, double lambda, double x, double tol = 1e-8);
EigenEval psi_plus(const String& m, double lambda, double x, double tol = 1e-8);
EigenEval phi1(const String& m, double lambda, double x, double tol = 1e-8);
EigenEval phi1_plus(const String& m, double lambda, double x, double tol = 1e-8);
double g_quadrature(const String& m, double lambda, double x, double tol = 1e-8);
// φ¹ − c¹ψ with c¹ from the dual-string route
double g_decomposition(const String& m, double lambda, double x);
// sup over an n-point grid on (0, x] of |u − λG¹ − λ∫_0^·(· − y)u(y)dm(y)|, u = φ¹ − 1
double residual_integral_eq(const String& m, double lambda, double x, int n = 16);

}  // namespace krflx
