#include "krflx/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "krflx/eigen.hpp"
#include "krflx/krein.hpp"

namespace krflx {

namespace {
constexpr double kPi = std::numbers::pi;

// x ↦ 1 − g(λ;x) + λG(x) − λcx
struct CenteredIntegrand {
  const StringMeasure& m;
  const Eigensystem& es;
  double lambda, H, m1, c, horizon;
  double operator()(double x) const {
    if (x <= es.x_switch()) {
      const double Psi = es.Psi(x);
      return lambda * H * (x + Psi) - lambda * m1 * Psi - es.Phi1(x) - lambda * c * x;
    }
    const double g = x < horizon ? es.g_quadrature(x).value : 0.0;
    return 1.0 - g + lambda * m.G(x) - lambda * c * x;
  }
};
}  // namespace

double chi_centered_at(const String& m, const JumpMeasure& j, double lambda, double c, double tol) {
  if (!(lambda > 0.0)) {
    if (lambda == 0.0) return 0.0;
    throw std::domain_error("chi: λ must be positive");
  }
  if (j.empty()) return 0.0;
  const auto cert = check_condition_C(*m, j);
  if (cert.verdict == Verdict::no) throw std::domain_error("chi: condition (C) violated: " + cert.detail);
  Eigensystem es(m, lambda);
  const double h = H(m, lambda);
  const double horizon = j.support_max() > es.x_switch() ? es.horizon() : kInf;
  CenteredIntegrand f{*m, es, lambda, h, m->m(1.0), c, horizon};
  return j.integrate(f, 0.0, kInf, tol);
}

double chi_centered(const String& m, const JumpMeasure& j, double lambda, double tol) {
  const double mi = m->m_inf();
  if (!std::isfinite(mi)) throw std::domain_error("chi_centered: m(∞) is infinite");
  return chi_centered_at(m, j, lambda, mi, tol);
}

double chi(const String& m, const JumpMeasure& j, double lambda, double tol) {
  if (j.empty() || lambda == 0.0) return 0.0;
  const auto& mm = *m;
  const double gint = j.integrate([&](double x) { return mm.G(x); }, 0.0, kInf, tol);
  return chi_centered_at(m, j, lambda, 0.0, tol) - lambda * gint;
}

double drift_b(const String& m, const JumpMeasure& j) {
  if (j.empty()) return 0.0;
  const double mi = m->m_inf();
  if (!std::isfinite(mi)) throw std::domain_error("drift_b: m(∞) is infinite, b diverges");
  const auto& mm = *m;
  const double b = j.integrate([&](double x) { return mi * x - mm.G(x); }, 0.0, kInf, 1e-12);
  if (!std::isfinite(b)) throw std::domain_error("drift_b: integral diverges");
  return b;
}

LaplaceExponent laplace_exponent(const String& m, const JumpMeasure& j) {
  LaplaceExponent le;
  le.chi = [m, j](double lambda) { return chi(m, j, lambda); };
  le.b = std::isfinite(m->m_inf()) ? drift_b(m, j) : kInf;
  const double k = j.kappa();
  if (std::isfinite(k)) le.kappa = k;
  le.tag = m->describe();
  return le;
}

double stable_constant(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw std::domain_error("stable exponent: α must lie in (1,2)");
  return -std::tgamma(2.0 - alpha) / std::tgamma(alpha) * std::pow(alpha, alpha - 1.0) / (alpha - 1.0);
}

double stable_exponent(double alpha, double lambda) {
  return stable_constant(alpha) * std::pow(lambda, alpha);
}

double draw_stable(double alpha, double s, Rng& rng) {
  if (s == 0.0) return 0.0;
  if (alpha == 2.0) {
    std::normal_distribution<double> nd(0.0, 1.0);
    return std::sqrt(s) * nd(rng);
  }
  const double V = kPi * (uniform_open(rng) - 0.5);
  const double W = -std::log(uniform_open(rng));
  if (alpha == 1.0) {
    // totally skewed 1-stable, σ = πs/2, shift −2γ_E s
    const double sigma = 0.5 * kPi * s;
    const double X = (2.0 / kPi) * ((0.5 * kPi + V) * std::tan(V) -
                                    std::log(0.5 * kPi * W * std::cos(V) / (0.5 * kPi + V)));
    return sigma * X + (2.0 / kPi) * sigma * std::log(sigma) - 2.0 * kEulerGamma * s;
  }
  if (!(alpha > 1.0 && alpha < 2.0)) throw std::domain_error("sample_stable: α must lie in [1,2]");
  const double sigma = std::pow(s * -stable_constant(alpha) * std::abs(std::cos(0.5 * kPi * alpha)), 1.0 / alpha);
  const double tpa = std::tan(0.5 * kPi * alpha);
  const double B = std::atan(tpa) / alpha;
  const double S = std::pow(1.0 + tpa * tpa, 0.5 / alpha);
  const double X = S * std::sin(alpha * (V + B)) / std::pow(std::cos(V), 1.0 / alpha) *
                   std::pow(std::cos(V - alpha * (V + B)) / W, (1.0 - alpha) / alpha);
  return sigma * X;
}

std::vector<double> sample_stable(double alpha, double kappa, double t, int n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x57ab1e}));
  std::vector<double> out(n);
  for (auto& v : out) v = draw_stable(alpha, kappa * t, rng);
  return out;
}

double draw_positive_stable(double alpha, Rng& rng) {
  const double th = kPi * uniform_open(rng);
  const double W = -std::log(uniform_open(rng));
  return std::sin(alpha * th) / std::pow(std::sin(th), 1.0 / alpha) *
         std::pow(std::sin((1.0 - alpha) * th) / W, (1.0 - alpha) / alpha);
}

double arcsine_stieltjes(const ArcsineSpec& s, double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("arcsine_stieltjes: λ must be positive");
  const double a = s.alpha, p = s.p;
  const double num = p * std::pow(lambda + 1.0, a - 1.0) + (1.0 - p) * std::pow(lambda, a - 1.0);
  const double den = p * std::pow(lambda + 1.0, a) + (1.0 - p) * std::pow(lambda, a);
  return num / den;
}

namespace {
void check_arcsine(const ArcsineSpec& s) {
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw std::domain_error("arcsine: α must lie in (0,1)");
  if (!(s.p >= 0.0 && s.p <= 1.0)) throw std::domain_error("arcsine: p must lie in [0,1]");
}

struct Pairs {
  std::vector<double> u, v;
};
Pairs draw_pairs(double alpha, int n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0xa5c51e}));
  Pairs p;
  p.u.resize(n);
  p.v.resize(n);
  for (int i = 0; i < n; ++i) {
    p.u[i] = draw_positive_stable(alpha, rng);
    p.v[i] = draw_positive_stable(alpha, rng);
  }
  return p;
}

// mean and standard error of 1/(λ + U/(U + cV))
std::pair<double, double> stieltjes_mc(const Pairs& p, double c, double lambda) {
  double s = 0.0, s2 = 0.0;
  const size_t n = p.u.size();
  for (size_t i = 0; i < n; ++i) {
    const double y = p.u[i] / (p.u[i] + c * p.v[i]);
    const double f = 1.0 / (lambda + y);
    s += f;
    s2 += f * f;
  }
  const double mean = s / n;
  return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean) / n)};
}
}  // namespace

ArcsineSampler calibrate_arcsine(const ArcsineSpec& s, int n_cal, std::uint64_t seed) {
  check_arcsine(s);
  ArcsineSampler out;
  out.spec = s;
  if (s.p == 0.0 || s.p == 1.0) return out;
  out.c_guess = std::pow((1.0 - s.p) / s.p, 1.0 / s.alpha);
  const Pairs cal = draw_pairs(s.alpha, n_cal, seed);
  const double target = arcsine_stieltjes(s, 1.0);
  double lo = std::log(out.c_guess) - 12.0, hi = std::log(out.c_guess) + 12.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (stieltjes_mc(cal, std::exp(mid), 1.0).first < target)
      lo = mid;
    else
      hi = mid;
  }
  out.c = std::exp(0.5 * (lo + hi));
  const Pairs chk = draw_pairs(s.alpha, n_cal, seed ^ 0x9e3779b97f4a7c15ULL);
  for (double lam : {0.5, 1.0, 2.0}) {
    const auto [mean, se] = stieltjes_mc(chk, out.c, lam);
    const double z = (mean - arcsine_stieltjes(s, lam)) / se;
    out.check_lambda.push_back(lam);
    out.check_z.push_back(z);
    if (std::abs(z) > 4.0) throw std::runtime_error("sample_arcsine: calibration fails the Stieltjes cross-check");
  }
  return out;
}

std::vector<double> sample_arcsine(const ArcsineSampler& cal, int n, std::uint64_t seed) {
  const auto& s = cal.spec;
  if (s.p == 1.0) return std::vector<double>(n, 1.0);
  if (s.p == 0.0) return std::vector<double>(n, 0.0);
  const Pairs p = draw_pairs(s.alpha, n, seed);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = p.u[i] / (p.u[i] + cal.c * p.v[i]);
  return out;
}

std::vector<double> sample_arcsine(const ArcsineSpec& s, int n, std::uint64_t seed) {
  return sample_arcsine(calibrate_arcsine(s), n, seed);
}

double tail_prediction(double alpha, double kappa, const std::function<double(double)>& L_sharp,
                       double s) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw std::domain_error("tail_prediction: α must lie in (1,2)");
  return kappa * std::pow(alpha, alpha - 1.0) / std::tgamma(alpha) * std::pow(s, -alpha) *
         std::pow(L_sharp(s), -alpha);
}

double tail_prediction(double alpha, double kappa, double s) {
  return tail_prediction(alpha, kappa, [](double) { return 1.0; }, s);
}

}  // namespace krflx
