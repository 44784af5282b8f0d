#include "krflx/krein.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "krflx/eigen.hpp"

namespace krflx {

namespace odeint = boost::numeric::odeint;

namespace {

using Vec3 = std::array<double, 3>;

// (F, V, ∫ρ/F²) in t = log x
struct DualSystem {
  const StringMeasure* m;
  double lambda;
  void operator()(const Vec3& y, Vec3& dy, double t) const {
    const double x = std::exp(t);
    const double r = m->density(x) * x;
    dy[0] = r * y[1];
    dy[1] = lambda * x * y[0];
    dy[2] = r / (y[0] * y[0]);
  }
};

auto dual_stepper() {
  return odeint::make_controlled(1e-16, 1e-13, odeint::runge_kutta_fehlberg78<Vec3>());
}

constexpr int kDualTerms = 80;

}  // namespace

struct DualSolver::Track {
  std::once_flag once;
  std::vector<double> t;
  std::vector<Vec3> y;
  double q_total = 0.0;  // ∫_{xq}^∞ ρ/F²
  double tail_err = 0.0;
};

DualSolver::DualSolver(String m, double lambda) : m_(std::move(m)), lambda_(lambda), germ_(m_->germ()) {
  if (!(lambda_ > 0.0)) throw std::domain_error("dual solver: λ must be positive");
  if (!(germ_.beta() > 0.5)) throw std::domain_error("dual solver: string is not in M1");
  const double C = germ_.C, beta = germ_.beta();
  xq_ = std::min(germ_.x_end, std::pow(0.25 / lambda_ * beta / C, 1.0 / beta));
  fk_.resize(kDualTerms);
  fk_[0] = 1.0;
  for (int k = 0; k + 1 < kDualTerms; ++k)
    fk_[k + 1] = fk_[k] * lambda_ * C / ((k * beta + 1.0) * (k + 1.0) * beta);
  std::vector<double> r(kDualTerms, 0.0);
  r[0] = 1.0;
  for (int n = 1; n < kDualTerms; ++n) {
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += fk_[k] * r[n - k];
    r[n] = -s;
  }
  hk_.assign(kDualTerms, 0.0);
  for (int n = 0; n < kDualTerms; ++n)
    for (int k = 0; k <= n; ++k) hk_[n] += r[k] * r[n - k];
  track_ = std::make_shared<Track>();
}

void DualSolver::build() const {
  std::call_once(track_->once, [&] {
    Track& tr = *track_;
    const double w = std::pow(xq_, germ_.beta());
    Vec3 y{0.0, 0.0, 0.0};
    double wk = 1.0;
    for (int k = 0; k < kDualTerms; ++k, wk *= w) {
      y[0] += fk_[k] * wk;
      y[1] += lambda_ * fk_[k] * wk * xq_ / (k * germ_.beta() + 1.0);
    }
    std::vector<double> breaks;
    for (double bp : m_->breakpoints())
      if (bp > xq_ * (1.0 + 1e-14)) breaks.push_back(std::log(bp));
    std::sort(breaks.begin(), breaks.end());
    const double t_stop = std::log(1e12);
    DualSystem sys{m_.get(), lambda_};
    auto stepper = dual_stepper();
    double t = std::log(xq_), dt = 1e-3;
    tr.t.push_back(t);
    tr.y.push_back(y);
    size_t nb = 0;
    while (t < t_stop) {
      double seg_end = t_stop;
      if (nb < breaks.size()) seg_end = std::min(seg_end, breaks[nb]);
      dt = std::min(dt, seg_end - t);
      int fails = 0;
      while (stepper.try_step(sys, y, t, dt) == odeint::fail)
        if (++fails > 500) throw std::runtime_error("dual solver: ODE step size underflow");
      if (seg_end - t < 1e-12 * std::max(1.0, std::abs(t))) {
        t = seg_end;
        ++nb;
      }
      tr.t.push_back(t);
      tr.y.push_back(y);
      const double bound = 1.0 / (y[0] * y[1]);
      if (bound < 1e-18 * std::max(1.0, std::abs(y[2]))) break;
    }
    const Vec3& last = tr.y.back();
    const double bound = 1.0 / (last[0] * last[1]);
    tr.q_total = last[2] + 0.5 * bound;
    tr.tail_err = 0.5 * bound;
  });
}

double DualSolver::F(double x) const {
  if (x <= 0.0) return 1.0;
  if (x <= xq_) {
    const double w = std::pow(x, germ_.beta());
    double s = 0.0, wk = 1.0;
    for (int k = 0; k < kDualTerms; ++k, wk *= w) s += fk_[k] * wk;
    return s;
  }
  build();
  const Track& tr = *track_;
  const double t = std::log(x);
  if (t > tr.t.back()) throw std::domain_error("dual solver: x beyond the integration horizon");
  const size_t i = static_cast<size_t>(std::upper_bound(tr.t.begin(), tr.t.end(), t) - tr.t.begin()) - 1;
  Vec3 y = tr.y[i];
  if (t > tr.t[i]) {
    DualSystem sys{m_.get(), lambda_};
    odeint::integrate_adaptive(dual_stepper(), sys, y, tr.t[i], t, std::min(1e-2, t - tr.t[i]));
  }
  return y[0];
}

double DualSolver::V(double x) const {
  if (x <= 0.0) return 0.0;
  if (x <= xq_) {
    const double w = std::pow(x, germ_.beta());
    double s = 0.0, wk = 1.0;
    for (int k = 0; k < kDualTerms; ++k, wk *= w) s += lambda_ * fk_[k] * wk * x / (k * germ_.beta() + 1.0);
    return s;
  }
  build();
  const Track& tr = *track_;
  const double t = std::log(x);
  if (t > tr.t.back()) throw std::domain_error("dual solver: x beyond the integration horizon");
  const size_t i = static_cast<size_t>(std::upper_bound(tr.t.begin(), tr.t.end(), t) - tr.t.begin()) - 1;
  Vec3 y = tr.y[i];
  if (t > tr.t[i]) {
    DualSystem sys{m_.get(), lambda_};
    odeint::integrate_adaptive(dual_stepper(), sys, y, tr.t[i], t, std::min(1e-2, t - tr.t[i]));
  }
  return y[1];
}

double DualSolver::f(double y) const {
  if (y <= m_->m0()) return 1.0;
  if (y >= m_->m_inf()) throw std::domain_error("f_dual: y beyond ℓ = m(∞)");
  return F(m_->inverse(y));
}

double DualSolver::h(double b) const {
  const double ell = m_->m_inf();
  if (b > ell) throw std::domain_error("h_dual: split point must not exceed ℓ");
  build();
  const Track& tr = *track_;
  tail_err_ = tr.tail_err;
  const double beta = germ_.beta();
  // ∫_0^{xq} ρ(1/F² − 1) from the w-series
  double a_germ = 0.0;
  for (int n = 1; n < kDualTerms; ++n) {
    const double e = (n + 1.0) * beta - 1.0;
    a_germ += germ_.C * hk_[n] * std::pow(xq_, e) / e;
  }
  const double m0 = m_->m0();
  const double mq = m_->m(xq_);
  double h = b + std::max(m0 - b, 0.0) + a_germ;
  h += std::max(mq - std::max(b, m0), 0.0);
  h += tr.q_total - std::max(b - mq, 0.0);
  return h;
}

double DualSolver::h() const { return h(std::min(0.0, m_->m_inf())); }

double f_dual(const String& m, double lambda, double y) {
  if (lambda == 0.0) return 1.0;
  return DualSolver(m, lambda).f(y);
}

double h_dual(const String& m, double lambda, double b) { return DualSolver(m, lambda).h(b); }

double H(const String& m, double lambda) { return DualSolver(m, lambda).h(); }

double H_closed(double alpha, double lambda) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::domain_error("H_closed: α must lie in (0,2)");
  if (!(lambda > 0.0)) throw std::domain_error("H_closed: λ must be positive");
  if (alpha == 1.0) return -(std::log(lambda) + 2.0 * kEulerGamma);
  const double c = std::tgamma(2.0 - alpha) / std::tgamma(alpha) * std::pow(alpha, alpha - 1.0) /
                   (1.0 - alpha);
  return c * std::pow(lambda, alpha - 1.0);
}

double c1(const String& m, double lambda) { return lambda * H(m, lambda) - lambda * m->m(1.0); }

BoundaryLimit H_boundary_detail(const String& m, double lambda, int levels, double level) {
  if (!(lambda > 0.0)) throw std::domain_error("H_boundary: λ must be positive");
  if (levels < 2) throw std::domain_error("H_boundary: need at least two levels");
  const Germ g = m->germ();
  const double beta = g.beta();
  double x0 = std::pow(level / lambda * beta / g.C, 1.0 / beta);
  x0 = std::min(x0, 0.5 * g.x_end);

  BoundaryLimit out;
  std::vector<double> ex;
  for (int k = 1; static_cast<int>(ex.size()) < 4 * levels; ++k) {
    ex.push_back(k * beta);
    ex.push_back((k + 1) * beta - 1.0);
  }
  std::sort(ex.begin(), ex.end());
  for (double e : ex)
    if (e > 1e-12 && (out.exponents.empty() || e - out.exponents.back() > 1e-9)) out.exponents.push_back(e);
  out.exponents.resize(levels - 1);

  Eigensystem es(m, lambda);
  std::vector<double> q(levels);
  for (int i = 0; i < levels; ++i) {
    const double x = x0 * std::ldexp(1.0, -i);
    const double gq = es.g_quadrature(x).value;
    q[i] = (1.0 - gq + lambda * m->G(x)) / x / lambda;
  }
  out.raw = q;
  // eliminate c·x^e: x_{i+1} = x_i/2
  double prev = q.back();
  for (int j = 0; j < levels - 1; ++j) {
    const double f = std::pow(2.0, out.exponents[j]);
    for (int i = 0; i + 1 < static_cast<int>(q.size()); ++i) q[i] = (f * q[i + 1] - q[i]) / (f - 1.0);
    q.pop_back();
    if (j == levels - 3) prev = q.front();
  }
  out.value = q.front();
  out.spread = std::abs(out.value - prev);
  return out;
}

double H_boundary(const String& m, double lambda) { return H_boundary_detail(m, lambda).value; }

std::vector<ConvergenceRow> convergence_H(const std::vector<String>& family, const String& m,
                                          double sigma, const std::vector<double>& lambdas) {
  std::vector<ConvergenceRow> rows;
  for (double lam : lambdas) {
    const double target = H(m, lam) - sigma * sigma * lam;
    for (size_t n = 0; n < family.size(); ++n) {
      const double hn = H(family[n], lam);
      rows.push_back({static_cast<int>(n + 1), lam, hn, target, hn - target});
    }
  }
  return rows;
}

}  // namespace krflx
