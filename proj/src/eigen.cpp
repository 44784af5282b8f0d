#include "krflx/eigen.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "krflx/krein.hpp"
#include "krflx/quadrature.hpp"

namespace krflx {

namespace odeint = boost::numeric::odeint;

namespace {

using Vec5 = std::array<double, 5>;

// (ψ, ψ⁺, φ, φ⁺, ∫ψ^{-2}) in t = log x
struct StieltjesSystem {
  const StringMeasure* m;
  double lambda;
  void operator()(const Vec5& y, Vec5& dy, double t) const {
    const double x = std::exp(t);
    const double lr = lambda * m->density(x) * x;
    dy[0] = x * y[1];
    dy[1] = lr * y[0];
    dy[2] = x * y[3];
    dy[3] = lr * y[2];
    dy[4] = x / (y[0] * y[0]);
  }
};

auto make_stepper(double abs, double rel) {
  return odeint::make_controlled(abs, rel, odeint::runge_kutta_fehlberg78<Vec5>());
}

using Partial = Eigensystem::Partial;

}  // namespace

struct Eigensystem::Continuation {
  std::once_flag once;
  std::vector<double> t;
  std::vector<Vec5> y;
  std::vector<double> jinc;    // ∫ψ^{-2} over [t_i, t_{i+1}]
  std::vector<double> suffix;  // ∫_{x_i}^∞ ψ^{-2}, tail included
  double tail_err = 0.0;
  StateEval seed{};
  std::vector<double> breaks;  // log-breakpoints above the seed
};

Eigensystem::Eigensystem(String m, double lambda, EigenOptions opt)
    : m_(std::move(m)), lambda_(lambda), opt_(opt), germ_(m_->germ()) {
  if (!(germ_.beta() > 0.5))
    throw std::domain_error("eigen: ∫_0 m² diverges, string is not in M1");
  m1_ = m_->m(1.0);
  const double C = germ_.C, p = germ_.p, beta = germ_.beta();
  if (lambda_ == 0.0) {
    x_switch_ = germ_.x_end;
  } else {
    const double xs = std::pow(opt_.switch_level / std::abs(lambda_) * beta / C, 1.0 / beta);
    x_switch_ = std::min(xs, germ_.x_end);
  }

  const int K = opt_.max_terms;
  a_.reserve(K);
  da_.reserve(K);
  b_.reserve(K);
  db_.reserve(K);
  MonoSum a = MonoSum::single(1.0, 1.0);
  MonoSum b;
  if (p == -1.0)
    b = MonoSum({{germ_.D - m1_ - C, 1.0, 0}, {C, 1.0, 1}});
  else
    b = MonoSum({{germ_.D - m1_, 1.0, 0}, {C / ((p + 1.0) * (p + 2.0)), p + 2.0, 0}});
  for (int k = 0; k < K; ++k) {
    a_.push_back(a);
    da_.push_back(a.times_power(C, p).integrate());
    a = da_.back().integrate();
    b_.push_back(b);
    db_.push_back(b.times_power(C, p).integrate());
    b = db_.back().integrate();
  }
  mG1_ = db_.front();
  cont_ = std::make_shared<Continuation>();
}

double Eigensystem::ms(double x) const {
  if (x <= germ_.x_end) return germ_.C * std::pow(x, germ_.beta()) / germ_.beta();
  return m_->ms(x);
}

double Eigensystem::S(double x) const { return mG1_.abs_sup(std::min(x, germ_.x_end)); }

double Eigensystem::E(double x, int d) const {
  const double s = ms(x);
  if (s == 0.0) return d == 0 ? 1.0 : 0.0;
  return std::exp(d * std::log(s) - std::lgamma(d + 1.0) + std::abs(lambda_) * s);
}

namespace {

// base + Σ_{k=k0}^{n-1} λ^{k+shift} T_k(x), stopping at the first n whose
// bound(n) = K·z^{n+o}/(n+o)! falls below tol·max(1, |value|); z = |λ|(m•s)(x)
Partial sum_series(const std::vector<MonoSum>& T, double x, double lambda, int shift, int k0,
                   double base, double K, double z, int o, double tol) {
  auto bound_at = [&](int n) {
    const int j = n + o;
    if (j < 0) return kInf;
    if (z == 0.0) return j == 0 ? K : 0.0;
    return K * std::exp(j * std::log(z) - std::lgamma(j + 1.0));
  };
  Partial r{base, bound_at(k0), k0};
  double lp = std::pow(lambda, k0 + shift);
  for (int n = k0; n < static_cast<int>(T.size()); ++n) {
    if (r.bound <= tol * std::max(1.0, std::abs(r.value))) return r;
    r.value += lp * T[n](x);
    lp *= lambda;
    r.n = n + 1;
    const int j = n + 1 + o;
    r.bound = j <= 0 ? bound_at(n + 1) : r.bound * z / j;
    if (!std::isfinite(r.bound)) r.bound = bound_at(n + 1);
  }
  return r;
}

}  // namespace

Eigensystem::Partials Eigensystem::partials(double x, bool all) const {
  const double L = std::abs(lambda_);
  const double s = ms(x);
  const double z = L * s, ez = std::exp(z);
  Partials p{};
  p.psi = sum_series(a_, x, lambda_, 0, 0, 0.0, x * ez, z, 0, opt_.tol);
  if (!all) return p;
  const double Sx = S(x);
  p.dpsi = sum_series(da_, x, lambda_, 1, 0, 1.0, L * ez, z, 0, opt_.tol);
  p.phi = sum_series(b_, x, lambda_, 1, 0, 1.0, L * L * x * Sx * ez, z, -1, opt_.tol);
  p.dphi = sum_series(db_, x, lambda_, 2, 0, lambda_ * (germ_.m(x) - m1_), L * Sx * ez, z, 1, opt_.tol);
  return p;
}

Eigensystem::StateEval Eigensystem::series_state(double x) const {
  StateEval s{};
  if (x == 0.0) {
    s.s = {0.0, 1.0, 1.0, lambda_ == 0.0 ? 0.0 : lambda_ * (m_->m0() - m1_)};
    return s;
  }
  const auto p = partials(x, true);
  const auto &psi = p.psi, &dpsi = p.dpsi, &phi = p.phi, &dphi = p.dphi;
  s.s = {psi.value, dpsi.value, phi.value, dphi.value};
  s.err_psi = psi.bound;
  s.err_dpsi = dpsi.bound;
  s.err_phi = phi.bound;
  s.err_dphi = dphi.bound;
  return s;
}

const Eigensystem::Continuation& Eigensystem::continuation() const {
  Continuation& c = *cont_;
  std::call_once(c.once, [&] { build_continuation(c); });
  return c;
}

void Eigensystem::build_continuation(Continuation& c) const {
  c.seed = series_state(x_switch_);
  const double t0 = std::log(x_switch_);
  for (double bp : m_->breakpoints())
    if (bp > x_switch_ * (1.0 + 1e-14)) c.breaks.push_back(std::log(bp));
  std::sort(c.breaks.begin(), c.breaks.end());

  const bool grow = lambda_ > 0.0;
  const double t_stop = std::log(grow ? opt_.x_cap : opt_.x_max);
  StieltjesSystem sys{m_.get(), lambda_};
  auto stepper = make_stepper(opt_.ode_abs, opt_.ode_rel);

  Vec5 y{c.seed.s.psi, c.seed.s.dpsi, c.seed.s.phi, c.seed.s.dphi, 0.0};
  double t = t0, dt = 1e-3;
  c.t.push_back(t);
  c.y.push_back(y);
  size_t next_break = 0;
  while (t < t_stop) {
    double seg_end = t_stop;
    if (next_break < c.breaks.size()) seg_end = std::min(seg_end, c.breaks[next_break]);
    dt = std::min(dt, seg_end - t);
    int fails = 0;
    while (stepper.try_step(sys, y, t, dt) == odeint::fail) {
      if (++fails > 500) throw std::runtime_error("eigen: ODE step size underflow");
    }
    if (seg_end - t < 1e-12 * std::max(1.0, std::abs(t))) {
      t = seg_end;
      ++next_break;
    }
    c.jinc.push_back(y[4]);
    y[4] = 0.0;
    c.t.push_back(t);
    c.y.push_back(y);
    if (grow && y[0] * y[1] >= opt_.growth_stop) break;
  }

  const size_t n = c.t.size();
  c.suffix.assign(n, 0.0);
  if (grow) {
    // ψ convex ⇒ ∫_Y^∞ ψ^{-2} ≤ 1/(ψ(Y)ψ⁺(Y))
    const double ub = 1.0 / (c.y.back()[0] * c.y.back()[1]);
    c.suffix[n - 1] = 0.5 * ub;
    c.tail_err = 0.5 * ub;
    for (size_t i = n - 1; i-- > 0;) c.suffix[i] = c.suffix[i + 1] + c.jinc[i];
  }
}

double Eigensystem::horizon() const {
  if (lambda_ == 0.0) return kInf;
  return std::exp(continuation().t.back());
}

Eigensystem::StateEval Eigensystem::ode_state(double x) const {
  const Continuation& c = continuation();
  const double t = std::log(x);
  if (lambda_ <= 0.0 && t > c.t.back() * (1.0 + 1e-14) + 1e-14)
    throw std::domain_error("eigen: x beyond the continuation horizon");
  auto it = std::upper_bound(c.t.begin(), c.t.end(), t);
  const size_t i = static_cast<size_t>(it - c.t.begin()) - 1;
  Vec5 y = c.y[i];
  if (t > c.t[i]) {
    StieltjesSystem sys{m_.get(), lambda_};
    odeint::integrate_adaptive(make_stepper(opt_.ode_abs, opt_.ode_rel), sys, y, c.t[i], t,
                               std::min(1e-2, t - c.t[i]));
  }
  StateEval s{};
  s.s = {y[0], y[1], y[2], y[3]};
  // seed errors carried by the fundamental matrix, written with ψ, φ¹ (W = 1)
  const State& z = c.seed.s;
  const double f11 = std::abs(z.dpsi * y[2] - z.dphi * y[0]);
  const double f12 = std::abs(-z.psi * y[2] + z.phi * y[0]);
  const double g11 = std::abs(z.dpsi * y[3] - z.dphi * y[1]);
  const double g12 = std::abs(-z.psi * y[3] + z.phi * y[1]);
  const double steps = static_cast<double>(i + 1);
  const double ode = opt_.ode_rel * std::sqrt(steps);
  s.err_psi = f11 * c.seed.err_psi + f12 * c.seed.err_dpsi + ode * std::abs(y[0]);
  s.err_dpsi = g11 * c.seed.err_psi + g12 * c.seed.err_dpsi + ode * std::abs(y[1]);
  s.err_phi = f11 * c.seed.err_phi + f12 * c.seed.err_dphi + ode * std::abs(y[2]);
  s.err_dphi = g11 * c.seed.err_phi + g12 * c.seed.err_dphi + ode * std::abs(y[3]);
  return s;
}

Eigensystem::StateEval Eigensystem::state(double x) const {
  if (x < 0.0) throw std::domain_error("eigen: x must be non-negative");
  if (lambda_ == 0.0 || in_series(x)) return series_state(x);
  return ode_state(x);
}

namespace {
EigenEval make_eval(double lambda, double x, double v, double err, int d) {
  EigenEval e;
  e.lambda = lambda;
  e.x = x;
  e.value = v;
  e.truncation_bound = err;
  e.terms_used = d;
  return e;
}
}  // namespace

EigenEval Eigensystem::psi(double x) const {
  const auto s = state(x);
  auto e = make_eval(lambda_, x, s.s.psi, s.err_psi, 0);
  e.derivative_plus = s.s.dpsi;
  if (in_series(x) && x > 0.0) e.terms_used = partials(x, false).psi.n;
  return e;
}

EigenEval Eigensystem::psi_plus(double x) const {
  const auto s = state(x);
  return make_eval(lambda_, x, s.s.dpsi, s.err_dpsi, 0);
}

EigenEval Eigensystem::phi1(double x) const {
  const auto s = state(x);
  auto e = make_eval(lambda_, x, s.s.phi, s.err_phi, 0);
  e.derivative_plus = s.s.dphi;
  return e;
}

EigenEval Eigensystem::phi1_plus(double x) const {
  const auto s = state(x);
  return make_eval(lambda_, x, s.s.dphi, s.err_dphi, 0);
}

EigenEval Eigensystem::psi_partial(double x, int d) const {
  if (x > germ_.x_end) throw std::domain_error("psi_partial: x outside the germ");
  if (d < 1 || d > static_cast<int>(a_.size())) throw std::domain_error("psi_partial: bad d");
  double v = 0.0, lp = 1.0;
  for (int k = 0; k < d; ++k, lp *= lambda_) v += lp * a_[k](x);
  return make_eval(lambda_, x, v, x * std::pow(std::abs(lambda_), d) * E(x, d), d);
}

EigenEval Eigensystem::phi1_partial(double x, int d) const {
  if (x > germ_.x_end) throw std::domain_error("phi1_partial: x outside the germ");
  if (d < 0 || d >= static_cast<int>(b_.size())) throw std::domain_error("phi1_partial: bad d");
  double v = 1.0, lp = lambda_;
  for (int k = 0; k <= d; ++k, lp *= lambda_) v += lp * b_[k](x);
  return make_eval(lambda_, x, v, std::pow(std::abs(lambda_), d + 2) * x * S(x) * E(x, d), d);
}

double Eigensystem::Psi(double x) const {
  if (x == 0.0) return 0.0;
  if (lambda_ == 0.0 || in_series(x)) {
    const double z = std::abs(lambda_) * ms(x);
    return sum_series(a_, x, lambda_, 0, 1, 0.0, x * std::exp(z), z, 0, opt_.tol).value;
  }
  return psi(x).value - x;
}

double Eigensystem::Phi1(double x) const {
  if (x == 0.0 || lambda_ == 0.0) return 0.0;
  if (in_series(x)) {
    const double L = std::abs(lambda_), z = L * ms(x);
    return sum_series(b_, x, lambda_, 1, 1, 0.0, L * L * x * S(x) * std::exp(z), z, -1, opt_.tol).value;
  }
  return phi1(x).value - 1.0 - lambda_ * G1(*m_, x);
}

double Eigensystem::Phi2(double x) const {
  if (x == 0.0 || lambda_ == 0.0) return 0.0;
  if (in_series(x)) {
    const double L = std::abs(lambda_), z = L * ms(x);
    return sum_series(b_, x, lambda_, 1, 2, 0.0, L * L * x * S(x) * std::exp(z), z, -1, opt_.tol).value;
  }
  // (s•m•G¹)(x) = ∫_0^x (x − y) G¹(y) dm(y)
  const auto& m = *m_;
  const double smg = integrate_from_zero(
                         [&](double y) { return (x - y) * (m.G(y) - m1_ * y) * m.density(y); }, x)
                         .value;
  return Phi1(x) - lambda_ * lambda_ * smg;
}

Eigensystem::GValue Eigensystem::g_quadrature(double x) const {
  if (lambda_ < 0.0) throw std::domain_error("g: λ must be non-negative");
  if (x < 0.0) throw std::domain_error("g: x must be non-negative");
  if (x == 0.0 || lambda_ == 0.0) return {1.0, 0.0};
  const Continuation& c = continuation();
  if (x < x_switch_) {
    auto inv2 = [&](double y) {
      const double p = partials(y, false).psi.value;
      return 1.0 / (p * p);
    };
    const auto q = integrate_log_panels(inv2, x, x_switch_, 1e-13);
    const double p = partials(x, false).psi.value;
    return {p * (q.value + c.suffix.front()), p * (q.error + c.tail_err) + 1e-15 * p * q.value};
  }
  const double t = std::log(x);
  if (t >= c.t.back()) throw std::domain_error("g: x beyond the continuation horizon");
  auto it = std::upper_bound(c.t.begin(), c.t.end(), t);
  const size_t i = static_cast<size_t>(it - c.t.begin()) - 1;
  StieltjesSystem sys{m_.get(), lambda_};
  auto stepper = make_stepper(opt_.ode_abs, opt_.ode_rel);
  Vec5 y = c.y[i];
  if (t > c.t[i]) odeint::integrate_adaptive(stepper, sys, y, c.t[i], t, std::min(1e-2, t - c.t[i]));
  const double p = y[0];
  y[4] = 0.0;
  odeint::integrate_adaptive(stepper, sys, y, t, c.t[i + 1], std::min(1e-2, c.t[i + 1] - t));
  const double I = y[4] + c.suffix[i + 1];
  return {p * I, p * c.tail_err + 1e-13 * p * I};
}

// ── free functions ─────────────────────────────────────────────────────────

namespace {
EigenEval checked(const EigenEval& e, double tol, const char* what) {
  if (e.truncation_bound > tol * std::max(1.0, std::abs(e.value)))
    throw std::runtime_error(std::string(what) + ": tolerance unreachable within the term cap");
  return e;
}
}  // namespace

EigenEval psi(const String& m, double lambda, double x, double tol) {
  return checked(Eigensystem(m, lambda).psi(x), tol, "psi");
}
EigenEval psi_plus(const String& m, double lambda, double x, double tol) {
  return checked(Eigensystem(m, lambda).psi_plus(x), tol, "psi_plus");
}
EigenEval phi1(const String& m, double lambda, double x, double tol) {
  return checked(Eigensystem(m, lambda).phi1(x), tol, "phi1");
}
EigenEval phi1_plus(const String& m, double lambda, double x, double tol) {
  return checked(Eigensystem(m, lambda).phi1_plus(x), tol, "phi1_plus");
}

double g_quadrature(const String& m, double lambda, double x, double tol) {
  const auto g = Eigensystem(m, lambda).g_quadrature(x);
  if (g.error > tol) throw std::runtime_error("g_quadrature: tail truncation above tolerance");
  return g.value;
}

double g_decomposition(const String& m, double lambda, double x) {
  if (!(lambda > 0.0)) {
    if (lambda == 0.0) return 1.0;
    throw std::domain_error("g: λ must be non-negative");
  }
  if (x == 0.0) return 1.0;
  const double c = c1(m, lambda);
  Eigensystem es(m, lambda);
  return es.phi1(x).value - c * es.psi(x).value;
}

double residual_integral_eq(const String& m, double lambda, double x, int n) {
  if (lambda == 0.0) return 0.0;
  Eigensystem es(m, lambda);
  const auto& mm = *m;
  // φ¹ − 1 = λG¹ + Φ₁ avoids cancellation where φ¹ ≈ 1
  auto u = [&](double y) { return lambda * G1(mm, y) + es.Phi1(y); };
  double worst = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double xi = x * i / n;
    auto f = [&](double y) { return (xi - y) * u(y) * mm.density(y); };
    double vol = integrate_from_zero(f, std::min(xi, 1e-3 * x), 1e-300, 1e-11).value;
    if (xi > 1e-3 * x) {
      std::vector<double> cuts{1e-3 * x};
      for (double bp : mm.breakpoints())
        if (bp > cuts.back() && bp < xi) cuts.push_back(bp);
      cuts.push_back(xi);
      for (size_t k = 0; k + 1 < cuts.size(); ++k) vol += integrate_log_panels(f, cuts[k], cuts[k + 1], 1e-12).value;
    }
    const double r = u(xi) - lambda * G1(mm, xi) - lambda * vol;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace krflx
