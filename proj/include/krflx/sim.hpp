#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "krflx/random.hpp"
#include "krflx/string_calculus.hpp"

namespace krflx {

// Euler–Maruyama control for first passage of dX = σ(X)dW, σ = √(2/ρ)
struct StepControl {
  double h = 2e-3;          // Δt = h·(x/σ(x))²
  double dt_max = kInf;
  double x_abs_rel = 1e-4;  // absorption threshold relative to x0
  double t_cap = kInf;      // censoring time; draws at the cap return t_cap
  long max_steps = 50'000'000;
};

struct StepBudgetExceeded : std::runtime_error {
  StepBudgetExceeded(double t_, double x_, long steps_)
      : std::runtime_error("first_passage: step budget exceeded"), t(t_), x(x_), steps(steps_) {}
  double t, x;
  long steps;
};

// Draws T₀ under P^m_x. Pure power strings dm = C x^p dx are sampled
// exactly, T₀ = C x^β / (β² Γ), Γ ~ Gamma(1/β), β = p + 2. Otherwise
// Euler–Maruyama with a Brownian-bridge crossing test, stopped at x_abs and
// finished with an exact draw from the power germ.
class T0Sampler {
 public:
  explicit T0Sampler(String m, StepControl ctl = {}, bool force_em = false);

  bool exact() const { return exact_; }
  double draw(double x0, Rng& rng) const;
  // E[T₀] under P^m_x, ∫_0^x tail(m, y) dy; +∞ when m(∞) = +∞
  double mean(double x0) const;
  const String& string() const { return m_; }

 private:
  double draw_germ(double x, Rng& rng) const;
  double draw_em(double x0, Rng& rng) const;

  String m_;
  StepControl ctl_;
  Germ germ_;
  bool exact_;
  double beta_;
};

double first_passage(const String& m, double x0, std::uint64_t seed, StepControl ctl = {});

// inverse-CDF sampler of j restricted to (ε, ∞), normalized
class StartSampler {
 public:
  StartSampler(const JumpMeasure& j, double eps);
  double rate() const { return total_; }
  double draw(Rng& rng) const;

 private:
  struct Piece {
    double c, q, lo, hi, mass;
  };
  std::vector<Piece> pieces_;
  std::vector<JumpMeasure::Atom> atoms_;
  std::vector<double> cum_;
  double total_ = 0.0;
};

struct IltConfig {
  double eps = 1e-4;   // excursions starting below ε are replaced by drift
  double chunk = 1.0;  // local-time length of one independently seeded chunk
  StepControl step;
  bool force_em = false;
  // level c in the drift ∫_(0,ε] (c·x − G(x)) j(dx); default m(∞), or m(ε) when m(∞) = ∞
  std::optional<double> center_level;
};

enum class SimStatus { ok, warning };

// η(u) = drift·u + Σ_{u_i ≤ u} T_i on [0, horizon]
struct IltPath {
  std::vector<double> u, T;
  std::vector<double> cum;  // cum[i] = T_0 + … + T_i
  double drift = 0.0;
  double horizon = 0.0;
  double bias_sd = 0.0;  // sd bound of the truncated small-excursion mass at the horizon
  SimStatus status = SimStatus::ok;

  double eta(double u) const;
  double eta_minus(double u) const;
  // inf{u : η(u) > t}
  double inverse(double t) const;
  size_t jumps() const { return u.size(); }
  void dump_csv(std::ostream& os) const;
};

class IltSampler {
 public:
  IltSampler(String m, JumpMeasure j, IltConfig cfg = {});

  // drift per unit local time replacing excursions started in (0, ε]
  double drift() const { return drift_; }
  double rate() const { return starts_.rate(); }
  double bias_sd_per_unit() const { return bias_sd_; }
  SimStatus status() const { return status_; }
  const IltConfig& config() const { return cfg_; }
  const T0Sampler& t0() const { return t0_; }

  // jumps (u, T) of chunk k, sorted by u; stream (root, path, side, k)
  void chunk(std::uint64_t root, std::uint64_t path, std::uint64_t side, std::uint64_t k,
             std::vector<std::pair<double, double>>& out) const;
  IltPath path(std::uint64_t root, std::uint64_t path, std::uint64_t side, double u_horizon) const;
  // η(u) for the same streams as path(), without storing jumps
  double eta_at(std::uint64_t root, std::uint64_t path, std::uint64_t side, double u) const;

 private:
  void generate(std::uint64_t root, std::uint64_t path, std::uint64_t side, std::uint64_t k,
                std::vector<std::pair<double, double>>& out) const;

  String m_;
  JumpMeasure j_;
  IltConfig cfg_;
  StartSampler starts_;
  T0Sampler t0_;
  double drift_ = 0.0;
  double bias_sd_ = 0.0;
  SimStatus status_ = SimStatus::ok;
};

IltPath sample_ilt(const String& m, const JumpMeasure& j, double eps, double u_horizon,
                   std::uint64_t seed);

// Two independent inverse local times on a common local-time axis;
// side +1 excursions are counted in A.
class BilateralPath {
 public:
  BilateralPath(IltPath plus, IltPath minus);

  const IltPath& plus() const { return plus_; }
  const IltPath& minus() const { return minus_; }
  // largest t with ℓ(t) inside the simulated local-time horizon
  double t_max() const { return t_max_; }
  double horizon() const { return horizon_; }

  // ℓ(t) = inf{u : η₊(u) + η₋(u) > t}
  double ell(double t) const;
  // A(t) from the excursion at ℓ(t): η₊(ℓ−) plus the elapsed part when positive
  double A(double t) const;
  // Δη(ℓ(t)), the width of η₊(ℓ−) ≤ A ≤ η₊(ℓ)
  double bracket(double t) const;
  // ∫_0^t 1{X ≥ 0} ds summed over reconstructed intervals
  double A_direct(double t) const;
  // inf{s : A(s) > a}, by walking the reconstructed intervals
  double A_inverse(double a) const;
  // ∫_0^∞ e^{−μt − λA(t)} dt, exact on [0, t_max] plus an e^{−μ t_max} closure
  double double_laplace(double lambda, double mu) const;

  void dump_csv(std::ostream& os, const std::vector<double>& t_grid) const;

 private:
  struct Event {
    double u, T;
    int side;
  };
  // first event index i with total η(u_i) > t, or events.size()
  size_t locate(double t) const;

  IltPath plus_, minus_;
  std::vector<Event> ev_;
  std::vector<double> cum_tot_, cum_plus_;  // η and η₊ including event i (jumps only)
  double d_plus_, d_tot_;
  double horizon_, t_max_;
};

// grows both sides chunk by chunk until η₊ + η₋ reaches t_horizon
BilateralPath simulate_bilateral(const IltSampler& plus, const IltSampler& minus, double t_horizon,
                                 std::uint64_t root, std::uint64_t path, long max_chunks = 10'000'000);

BilateralPath bilateral(const String& m_plus, const JumpMeasure& j_plus, const String& m_minus,
                        const JumpMeasure& j_minus, double t_horizon, std::uint64_t seed,
                        IltConfig cfg = {});

// sup over the grid of |A^{-1}(t) − t − η₋(η₊^{-1}(t))|; throws past the horizon
double williams_residual(const BilateralPath& path, const std::vector<double>& t_grid);

}  // namespace krflx
