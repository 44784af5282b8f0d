#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "krflx/report.hpp"
#include "krflx/spec.hpp"

namespace krflx {

struct RunOptions {
  int workers = 1;
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

// An experiment that stopped early; `partial` holds what was computed.
struct ExperimentError : std::runtime_error {
  ExperimentError(const std::string& what, Report partial_)
      : std::runtime_error(what), partial(std::move(partial_)) {}
  Report partial;
};

Report run_experiment(const ExperimentSpec& spec, const RunOptions& opt = {});

Report run_conv_exponent(const ExperimentSpec& spec, const RunOptions& opt = {});
Report run_ilt_fluctuation(const ExperimentSpec& spec, const RunOptions& opt = {});
Report run_tail(const ExperimentSpec& spec, const RunOptions& opt = {});
Report run_occupation(const ExperimentSpec& spec, const RunOptions& opt = {});
Report run_double_laplace(const ExperimentSpec& spec, const RunOptions& opt = {});

// ── constants shared by the Gaussian regime ──────────────────────────────
// K(γ)² = ∫_0^γ m(x,∞)² dx, and its limit K(∞)²
double K2(const StringMeasure& m, double gamma);
// κ⁰ = ∫ j(dx) ∫_0^x (x − z) M(z) dm(z), M(z) = ∫_0^z m(y,∞) dy
double kappa0(const StringMeasure& m, const JumpMeasure& j);
// κ̃ = 2κ − 2κ⁰/K(∞)²
double kappa_tilde(const StringMeasure& m, const JumpMeasure& j);
// b_γ = ∫_(0,γ] (m(γ)x − G(x)) j(dx)
double b_gamma(const StringMeasure& m, const JumpMeasure& j, double gamma);

// ── Tauberian self-test ───────────────────────────────────────────────────
// a test measure: density on (lo, hi) plus atoms
struct TestMeasure {
  std::string name;
  std::function<double(double)> density;  // may be empty
  double lo = 0.0, hi = 0.0;
  std::vector<std::pair<double, double>> atoms;  // (x, w)

  // μ[x, ∞)
  double tail(double x) const;
  // μ[x, θx)
  double band(double x, double theta) const;
  // ∫ y^n e^{−λy} μ(dy) = (−1)^n μ̂^{(n)}(λ)
  double transform_derivative(double lambda, int n) const;
};

TestMeasure pareto_measure(double beta);  // μ[x,∞) = x^{−β} on [1,∞)
TestMeasure log_measure();                // dx/x on [1,∞)
TestMeasure point_mass(double x);

// μ[x,∞) ∼ C x^{−β} ⟺ (−1)^n μ̂^{(n)}(λ) ∼ CβΓ(n−β)λ^{β−n} (K ≡ 1).
// Both sides are fitted on their grids (x large, λ small); the report
// passes only when each side is regularly varying with the expected index
// and the constants agree within `rel`.
Report tauberian_check(const TestMeasure& mu, double beta, const std::vector<double>& x_grid,
                       const std::vector<double>& lambda_grid, int n = 2, double rel = 0.01);
// μ[x,θx)/K(x) → log θ ⟺ −μ̂'(λ) ∼ K(1/λ)/λ, with K ≡ 1
Report tauberian_log_check(const TestMeasure& mu, double theta, const std::vector<double>& x_grid,
                           const std::vector<double>& lambda_grid, double rel = 0.01);

}  // namespace krflx
