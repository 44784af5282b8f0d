#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "krflx/random.hpp"
#include "krflx/string_calculus.hpp"

namespace krflx {

struct LaplaceExponent {
  std::function<double(double)> chi;
  double b = 0.0;  // drift; +∞ when m(∞) = +∞
  std::optional<double> kappa;
  std::string tag;
};

// χ_{m,j}(λ) = ∫(1 − g_m(λ;x)) j(dx). On the series range of m the
// integrand is rewritten as (λHψ − λm(1)Ψ − Φ¹) − λG so nothing cancels.
double chi(const String& m, const JumpMeasure& j, double lambda, double tol = 1e-10);
// χ − bλ = ∫(1 − g + λG − λm(∞)x) dj, computed without forming χ or b; m(∞) finite
double chi_centered(const String& m, const JumpMeasure& j, double lambda, double tol = 1e-10);
// ∫(1 − g + λG − λcx) dj for a given centering level c (m(∞) when finite)
double chi_centered_at(const String& m, const JumpMeasure& j, double lambda, double c,
                       double tol = 1e-10);
// b = ∫ j(dx) ∫_0^x m(y,∞) dy
double drift_b(const String& m, const JumpMeasure& j);
LaplaceExponent laplace_exponent(const String& m, const JumpMeasure& j);

// χ(λ) = −Γ(2−α)/Γ(α)·α^{α−1}/(α−1)·λ^α, α ∈ (1,2)
double stable_exponent(double alpha, double lambda);
// the same constant without λ^α; negative for α ∈ (1,2)
double stable_constant(double alpha);

// Samples of S^(α)(s), s = κt, with E e^{−λS(s)} = e^{−sχ(λ)}:
// α ∈ (1,2): χ = stable_exponent; α = 2: S ~ N(0, s);
// α = 1: χ(λ) = −λ(log λ + 2γ_E), the T(m^(1); ·) law.
std::vector<double> sample_stable(double alpha, double kappa, double t, int n, std::uint64_t seed);
// one draw, same conventions
double draw_stable(double alpha, double s, Rng& rng);

// positive α-stable, E e^{−λU} = e^{−λ^α}, α ∈ (0,1)
double draw_positive_stable(double alpha, Rng& rng);

struct ArcsineSpec {
  double alpha;
  double p;
};
double arcsine_stieltjes(const ArcsineSpec& s, double lambda);

struct ArcsineSampler {
  ArcsineSpec spec;
  double c = 1.0;                   // calibrated ratio constant
  double c_guess = 1.0;             // ((1−p)/p)^{1/α}
  std::vector<double> check_lambda; // cross-check points
  std::vector<double> check_z;      // (empirical − exact)/s.e. at those points
};
// calibrates c by bisection on λ = 1 with common random numbers and
// cross-checks λ = 0.5, 2; throws when a cross-check exceeds 4 s.e.
ArcsineSampler calibrate_arcsine(const ArcsineSpec& s, int n_cal = 200000,
                                 std::uint64_t seed = 0x5eed);
std::vector<double> sample_arcsine(const ArcsineSpec& s, int n, std::uint64_t seed);
std::vector<double> sample_arcsine(const ArcsineSampler& cal, int n, std::uint64_t seed);

// n[T₀ > s] ∼ κα^{α−1}/Γ(α)·s^{−α}L♯(s)^{−α}
double tail_prediction(double alpha, double kappa, const std::function<double(double)>& L_sharp,
                       double s);
double tail_prediction(double alpha, double kappa, double s);

}  // namespace krflx
