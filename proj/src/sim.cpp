#include "krflx/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "krflx/levy.hpp"

namespace krflx {

// ── first passage ──────────────────────────────────────────────────────────

T0Sampler::T0Sampler(String m, StepControl ctl, bool force_em)
    : m_(std::move(m)), ctl_(ctl), germ_(m_->germ()), beta_(germ_.beta()) {
  if (!(beta_ > 0.0)) throw std::domain_error("first_passage: 0 is not reached (germ exponent β ≤ 0)");
  exact_ = !force_em && germ_.x_end == kInf && m_->breakpoints().empty();
}

double T0Sampler::draw_germ(double x, Rng& rng) const {
  // local distribution: libstdc++ caches a normal draw inside gamma_distribution
  std::gamma_distribution<double> gd(1.0 / beta_);
  return germ_.C * std::pow(x, beta_) / (beta_ * beta_ * gd(rng));
}

double T0Sampler::mean(double x0) const {
  const double mi = m_->m_inf();
  if (!std::isfinite(mi)) return kInf;
  return mi * x0 - m_->G(x0);
}

double T0Sampler::draw(double x0, Rng& rng) const {
  if (!(x0 > 0.0)) throw std::domain_error("first_passage: x0 must be positive");
  return exact_ ? draw_germ(x0, rng) : draw_em(x0, rng);
}

double T0Sampler::draw_em(double x0, Rng& rng) const {
  const double x_abs = std::min(ctl_.x_abs_rel * x0, 0.5 * germ_.x_end);
  std::normal_distribution<double> nd;
  double x = x0, t = 0.0;
  if (x <= x_abs) return draw_germ(x, rng);
  for (long n = 0;; ++n) {
    if (n >= ctl_.max_steps) throw StepBudgetExceeded(t, x, n);
    if (t >= ctl_.t_cap) return ctl_.t_cap;
    const double rho = m_->density(x);
    const double s2 = 2.0 / rho;
    const double dt = std::min({ctl_.h * x * x * rho * 0.5, ctl_.dt_max, ctl_.t_cap - t});
    const double xn = x + std::sqrt(s2 * dt) * nd(rng);
    if (xn <= x_abs) {
      t += 0.5 * dt;
      break;
    }
    // Brownian bridge: probability the step dipped below x_abs
    const double pb = std::exp(-2.0 * (x - x_abs) * (xn - x_abs) / (s2 * dt));
    if (uniform_open(rng) < pb) {
      t += 0.5 * dt;
      break;
    }
    t += dt;
    x = xn;
  }
  return std::min(t + draw_germ(x_abs, rng), ctl_.t_cap);
}

double first_passage(const String& m, double x0, std::uint64_t seed, StepControl ctl) {
  T0Sampler s(m, ctl);
  Rng rng(derive_seed(seed, {0xf1a57}));
  return s.draw(x0, rng);
}

// ── jump starts ────────────────────────────────────────────────────────────

StartSampler::StartSampler(const JumpMeasure& j, double eps) {
  for (const auto& p : j.pieces()) {
    const double lo = std::max(p.lo, eps);
    if (!(lo < p.hi)) continue;
    const double mass = power_integral(p.c, p.q, lo, p.hi);
    if (!std::isfinite(mass)) throw std::domain_error("sample_ilt: j(ε, ∞) is infinite");
    pieces_.push_back({p.c, p.q, lo, p.hi, mass});
  }
  for (const auto& a : j.atoms())
    if (a.x > eps) atoms_.push_back(a);
  for (const auto& p : pieces_) cum_.push_back(total_ += p.mass);
  for (const auto& a : atoms_) cum_.push_back(total_ += a.w);
}

double StartSampler::draw(Rng& rng) const {
  const double r = uniform_open(rng) * total_;
  size_t i = static_cast<size_t>(std::upper_bound(cum_.begin(), cum_.end(), r) - cum_.begin());
  i = std::min(i, cum_.size() - 1);
  if (i >= pieces_.size()) return atoms_[i - pieces_.size()].x;
  const Piece& p = pieces_[i];
  const double U = uniform_open(rng);
  if (std::abs(p.q + 1.0) < 1e-14) return p.lo * std::pow(p.hi / p.lo, U);
  const double e = p.q + 1.0;
  const double a = std::pow(p.lo, e), b = std::isfinite(p.hi) ? std::pow(p.hi, e) : 0.0;
  return std::pow(a + U * (b - a), 1.0 / e);
}

// ── inverse local time ─────────────────────────────────────────────────────

double IltPath::eta(double v) const {
  if (v > horizon * (1.0 + 1e-12)) throw std::domain_error("IltPath: u beyond the horizon");
  const size_t i = static_cast<size_t>(std::upper_bound(u.begin(), u.end(), v) - u.begin());
  return drift * v + (i ? cum[i - 1] : 0.0);
}

double IltPath::eta_minus(double v) const {
  if (v > horizon * (1.0 + 1e-12)) throw std::domain_error("IltPath: u beyond the horizon");
  const size_t i = static_cast<size_t>(std::lower_bound(u.begin(), u.end(), v) - u.begin());
  return drift * v + (i ? cum[i - 1] : 0.0);
}

double IltPath::inverse(double t) const {
  // first jump index whose post-jump value exceeds t
  size_t lo = 0, hi = u.size();
  while (lo < hi) {
    const size_t mid = (lo + hi) / 2;
    if (drift * u[mid] + cum[mid] > t)
      hi = mid;
    else
      lo = mid + 1;
  }
  const double base = lo ? cum[lo - 1] : 0.0;
  const double end = lo < u.size() ? u[lo] : horizon;
  if (drift > 0.0) {
    const double us = (t - base) / drift;
    if (us < end) return std::max(us, lo ? u[lo - 1] : 0.0);
  }
  if (lo < u.size()) return u[lo];
  throw std::domain_error("IltPath: t beyond η(horizon)");
}

void IltPath::dump_csv(std::ostream& os) const {
  os << "u,eta\n0,0\n";
  for (size_t i = 0; i < u.size(); ++i) os << u[i] << ',' << drift * u[i] + cum[i] << '\n';
  os << horizon << ',' << eta(horizon) << '\n';
}

IltSampler::IltSampler(String m, JumpMeasure j, IltConfig cfg)
    : m_(std::move(m)), j_(std::move(j)), cfg_(cfg), starts_(j_, cfg.eps), t0_(m_, cfg.step, cfg.force_em) {
  if (!(cfg_.eps > 0.0)) throw std::domain_error("sample_ilt: ε must be positive");
  if (!(cfg_.chunk > 0.0)) throw std::domain_error("sample_ilt: chunk length must be positive");
  if (j_.empty()) return;
  const auto cert = check_condition_C(*m_, j_);
  if (cert.verdict == Verdict::no) throw std::domain_error("sample_ilt: condition (C) violated: " + cert.detail);
  const double mi = m_->m_inf();
  const double level = cfg_.center_level ? *cfg_.center_level : std::isfinite(mi) ? mi : m_->m(cfg_.eps);
  const auto& mm = *m_;
  auto mean_T = [&](double x) { return level * x - mm.G(x); };
  const JumpMeasure small = j_.restricted(0.0, cfg_.eps);
  if (!small.empty()) {
    drift_ = small.integrate(mean_T, 0.0, cfg_.eps, 1e-10);
    const double v = small.integrate([&](double x) { return 2.0 * mean_T(x) * mean_T(x); }, 0.0, cfg_.eps, 1e-10);
    bias_sd_ = std::sqrt(v);
  }
  if (std::isfinite(mi)) {
    const double b = drift_b(m_, j_);
    if (drift_ > 0.2 * b) status_ = SimStatus::warning;
  }
}

void IltSampler::chunk(std::uint64_t root, std::uint64_t path, std::uint64_t side, std::uint64_t k,
                       std::vector<std::pair<double, double>>& out) const {
  generate(root, path, side, k, out);
  std::sort(out.begin(), out.end());
}

void IltSampler::generate(std::uint64_t root, std::uint64_t path, std::uint64_t side, std::uint64_t k,
                          std::vector<std::pair<double, double>>& out) const {
  out.clear();
  const double rate = starts_.rate();
  if (rate <= 0.0) return;
  Rng rng(derive_seed(root, {path, side, k}));
  std::poisson_distribution<long> pd(rate * cfg_.chunk);
  const long n = pd(rng);
  out.reserve(n);
  const double u0 = static_cast<double>(k) * cfg_.chunk;
  for (long i = 0; i < n; ++i) {
    const double u = u0 + cfg_.chunk * uniform_open(rng);
    const double x = starts_.draw(rng);
    out.emplace_back(u, t0_.draw(x, rng));
  }
}

IltPath IltSampler::path(std::uint64_t root, std::uint64_t path, std::uint64_t side, double u_horizon) const {
  if (!(u_horizon >= 0.0)) throw std::domain_error("sample_ilt: horizon must be non-negative");
  IltPath p;
  p.drift = drift_;
  p.horizon = u_horizon;
  p.bias_sd = bias_sd_ * std::sqrt(u_horizon);
  p.status = status_;
  std::vector<std::pair<double, double>> buf;
  double acc = 0.0;
  for (std::uint64_t k = 0; static_cast<double>(k) * cfg_.chunk < u_horizon; ++k) {
    chunk(root, path, side, k, buf);
    for (const auto& [u, T] : buf) {
      if (u > u_horizon) break;
      p.u.push_back(u);
      p.T.push_back(T);
      p.cum.push_back(acc += T);
    }
  }
  return p;
}

double IltSampler::eta_at(std::uint64_t root, std::uint64_t path, std::uint64_t side, double u) const {
  std::vector<std::pair<double, double>> buf;
  double acc = 0.0;
  for (std::uint64_t k = 0; static_cast<double>(k) * cfg_.chunk < u; ++k) {
    generate(root, path, side, k, buf);
    for (const auto& [v, T] : buf)
      if (v <= u) acc += T;
  }
  return drift_ * u + acc;
}

IltPath sample_ilt(const String& m, const JumpMeasure& j, double eps, double u_horizon, std::uint64_t seed) {
  IltConfig cfg;
  cfg.eps = eps;
  return IltSampler(m, j, cfg).path(seed, 0, 0, u_horizon);
}

// ── bilateral paths ────────────────────────────────────────────────────────

BilateralPath::BilateralPath(IltPath plus, IltPath minus)
    : plus_(std::move(plus)), minus_(std::move(minus)) {
  ev_.reserve(plus_.u.size() + minus_.u.size());
  size_t a = 0, b = 0;
  while (a < plus_.u.size() || b < minus_.u.size()) {
    if (b >= minus_.u.size() || (a < plus_.u.size() && plus_.u[a] <= minus_.u[b])) {
      ev_.push_back({plus_.u[a], plus_.T[a], +1});
      ++a;
    } else {
      ev_.push_back({minus_.u[b], minus_.T[b], -1});
      ++b;
    }
  }
  double ct = 0.0, cp = 0.0;
  for (const auto& e : ev_) {
    cum_tot_.push_back(ct += e.T);
    cum_plus_.push_back(cp += e.side > 0 ? e.T : 0.0);
  }
  d_plus_ = plus_.drift;
  d_tot_ = plus_.drift + minus_.drift;
  horizon_ = std::min(plus_.horizon, minus_.horizon);
  // η(horizon) with only the jumps inside the common horizon
  const size_t n = static_cast<size_t>(
      std::upper_bound(ev_.begin(), ev_.end(), horizon_, [](double v, const Event& e) { return v < e.u; }) -
      ev_.begin());
  t_max_ = d_tot_ * horizon_ + (n ? cum_tot_[n - 1] : 0.0);
}

size_t BilateralPath::locate(double t) const {
  size_t lo = 0, hi = ev_.size();
  while (lo < hi) {
    const size_t mid = (lo + hi) / 2;
    if (d_tot_ * ev_[mid].u + cum_tot_[mid] > t)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double BilateralPath::ell(double t) const {
  if (t < 0.0 || t > t_max_) throw std::domain_error("bilateral: t outside [0, t_max]");
  const size_t i = locate(t);
  const double base = i ? cum_tot_[i - 1] : 0.0;
  if (d_tot_ > 0.0) {
    const double us = (t - base) / d_tot_;
    if (i == ev_.size() || us < ev_[i].u) return std::max(us, i ? ev_[i - 1].u : 0.0);
  }
  if (i < ev_.size()) return ev_[i].u;
  return horizon_;
}

double BilateralPath::A(double t) const {
  if (t < 0.0 || t > t_max_) throw std::domain_error("bilateral: t outside [0, t_max]");
  const size_t i = locate(t);
  const double base_tot = i ? cum_tot_[i - 1] : 0.0;
  const double base_plus = i ? cum_plus_[i - 1] : 0.0;
  if (d_tot_ > 0.0) {
    const double us = (t - base_tot) / d_tot_;
    if (i == ev_.size() || us < ev_[i].u) return d_plus_ * us + base_plus;
  }
  if (i == ev_.size()) return d_plus_ * horizon_ + base_plus;
  // inside excursion i
  const double start = d_tot_ * ev_[i].u + base_tot;
  return d_plus_ * ev_[i].u + base_plus + (ev_[i].side > 0 ? t - start : 0.0);
}

double BilateralPath::bracket(double t) const {
  const double l = ell(t);
  return plus_.eta(l) - plus_.eta_minus(l);
}

double BilateralPath::A_direct(double t) const {
  if (t < 0.0 || t > t_max_) throw std::domain_error("bilateral: t outside [0, t_max]");
  // walk intervals: drift stretches (fraction d₊/d of their length is positive), then excursions
  double s = 0.0, occ = 0.0, u_prev = 0.0;
  const double frac = d_tot_ > 0.0 ? d_plus_ / d_tot_ : 0.0;
  for (const auto& e : ev_) {
    const double len = d_tot_ * (e.u - u_prev);
    if (s + len >= t) return occ + frac * (t - s);
    s += len;
    occ += frac * len;
    if (s + e.T >= t) return occ + (e.side > 0 ? t - s : 0.0);
    s += e.T;
    if (e.side > 0) occ += e.T;
    u_prev = e.u;
  }
  return occ + frac * (t - s);
}

double BilateralPath::A_inverse(double a) const {
  double s = 0.0, occ = 0.0, u_prev = 0.0;
  for (const auto& e : ev_) {
    const double len = d_tot_ * (e.u - u_prev);
    const double gain = d_plus_ * (e.u - u_prev);
    if (d_plus_ > 0.0 && occ + gain > a) return s + (a - occ) / d_plus_ * d_tot_;
    s += len;
    occ += gain;
    if (e.side > 0 && occ + e.T > a) return s + (a - occ);
    s += e.T;
    if (e.side > 0) occ += e.T;
    u_prev = e.u;
  }
  if (d_plus_ > 0.0) {
    const double r = s + (a - occ) / d_plus_ * d_tot_;
    if (r <= t_max_) return r;
  }
  throw std::domain_error("bilateral: A^{-1}(a) beyond the horizon");
}

double BilateralPath::double_laplace(double lambda, double mu) const {
  if (!(mu > 0.0) || lambda < 0.0) throw std::domain_error("double_laplace: need μ > 0, λ ≥ 0");
  // ∫_0^L e^{−μ(t0+τ) − λ(a0 + kτ)} dτ
  auto seg = [&](double t0, double a0, double k, double L) {
    const double r = mu + lambda * k;
    return std::exp(-mu * t0 - lambda * a0) * -std::expm1(-r * L) / r;
  };
  const double frac = d_tot_ > 0.0 ? d_plus_ / d_tot_ : 0.0;
  double s = 0.0, occ = 0.0, u_prev = 0.0, acc = 0.0;
  for (const auto& e : ev_) {
    if (e.u > horizon_) break;
    const double len = d_tot_ * (e.u - u_prev);
    acc += seg(s, occ, frac, len);
    s += len;
    occ += frac * len;
    const double k = e.side > 0 ? 1.0 : 0.0;
    acc += seg(s, occ, k, e.T);
    s += e.T;
    occ += k * e.T;
    u_prev = e.u;
  }
  const double len = d_tot_ * (horizon_ - u_prev);
  acc += seg(s, occ, frac, len);
  s += len;
  occ += frac * len;
  // beyond the horizon: A continued at the drift fraction
  return acc + std::exp(-mu * s - lambda * occ) / (mu + lambda * frac);
}

void BilateralPath::dump_csv(std::ostream& os, const std::vector<double>& t_grid) const {
  os << "t,A,ell,bracket\n";
  for (double t : t_grid) os << t << ',' << A(t) << ',' << ell(t) << ',' << bracket(t) << '\n';
}

BilateralPath simulate_bilateral(const IltSampler& plus, const IltSampler& minus, double t_horizon,
                                 std::uint64_t root, std::uint64_t path, long max_chunks) {
  if (plus.config().chunk != minus.config().chunk)
    throw std::domain_error("bilateral: both sides must use the same chunk length");
  const double du = plus.config().chunk;
  IltPath P, M;
  P.drift = plus.drift();
  M.drift = minus.drift();
  std::vector<std::pair<double, double>> buf;
  double acc_p = 0.0, acc_m = 0.0;
  long k = 0;
  for (; k < max_chunks; ++k) {
    plus.chunk(root, path, 0, k, buf);
    for (const auto& [u, T] : buf) {
      P.u.push_back(u);
      P.T.push_back(T);
      P.cum.push_back(acc_p += T);
    }
    minus.chunk(root, path, 1, k, buf);
    for (const auto& [u, T] : buf) {
      M.u.push_back(u);
      M.T.push_back(T);
      M.cum.push_back(acc_m += T);
    }
    const double u_end = (k + 1) * du;
    if ((P.drift + M.drift) * u_end + acc_p + acc_m >= t_horizon) break;
  }
  if (k == max_chunks) throw std::runtime_error("bilateral: horizon not reached within the chunk budget");
  P.horizon = M.horizon = (k + 1) * du;
  P.bias_sd = plus.bias_sd_per_unit() * std::sqrt(P.horizon);
  M.bias_sd = minus.bias_sd_per_unit() * std::sqrt(M.horizon);
  P.status = plus.status();
  M.status = minus.status();
  return BilateralPath(std::move(P), std::move(M));
}

BilateralPath bilateral(const String& m_plus, const JumpMeasure& j_plus, const String& m_minus,
                        const JumpMeasure& j_minus, double t_horizon, std::uint64_t seed, IltConfig cfg) {
  IltSampler p(m_plus, j_plus, cfg), m(m_minus, j_minus, cfg);
  return simulate_bilateral(p, m, t_horizon, seed, 0);
}

double williams_residual(const BilateralPath& path, const std::vector<double>& t_grid) {
  double r = 0.0;
  for (double t : t_grid) {
    const double lhs = path.A_inverse(t);
    const double rhs = t + path.minus().eta(path.plus().inverse(t));
    r = std::max(r, std::abs(lhs - rhs));
  }
  return r;
}

}  // namespace krflx
