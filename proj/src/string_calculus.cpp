#include "krflx/string_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "krflx/quadrature.hpp"

namespace krflx {

double power_integral(double c, double q, double a, double b) {
  if (!(a < b) || c == 0.0) return 0.0;
  if (q == -1.0) {
    if (a <= 0.0 || std::isinf(b)) return c > 0 ? kInf : -kInf;
    return c * std::log(b / a);
  }
  const double r = q + 1.0;
  if (std::isinf(b)) {
    if (r >= 0.0) return c > 0 ? kInf : -kInf;
    return -c * std::pow(a, r) / r;
  }
  if (a <= 0.0) {
    if (r <= 0.0) return c > 0 ? kInf : -kInf;
    return c * std::pow(b, r) / r;
  }
  return c * std::pow(a, r) * std::expm1(r * std::log(b / a)) / r;
}

// ── Germ ───────────────────────────────────────────────────────────────────

double Germ::m(double x) const {
  if (p == -1.0) return D + C * std::log(x);
  return D + C * std::pow(x, p + 1.0) / (p + 1.0);
}

double Germ::G(double x) const {
  if (x <= 0.0) return 0.0;
  if (p == -1.0) return D * x + C * (x * std::log(x) - x);
  if (p + 2.0 <= 0.0) return -kInf;
  return D * x + C * std::pow(x, p + 2.0) / ((p + 1.0) * (p + 2.0));
}

// ── StringMeasure defaults ─────────────────────────────────────────────────

double StringMeasure::tail(double x) const {
  const double mi = m_inf();
  if (std::isinf(mi)) return kInf;
  return mi - m(x);
}

double StringMeasure::inverse(double y) const {
  if (y < m0()) return 0.0;
  if (y >= m_inf()) return kInf;
  double lo = 1.0, hi = 1.0;
  while (m(lo) > y) lo *= 0.5;
  while (m(hi) <= y) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = std::sqrt(lo * hi) > lo && std::sqrt(lo * hi) < hi ? std::sqrt(lo * hi)
                                                                          : 0.5 * (lo + hi);
    if (m(mid) > y)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// ── PowerString ────────────────────────────────────────────────────────────

PowerString::PowerString(double k, double e, double D, std::optional<double> alpha)
    : k_(k), e_(e), D_(D) {
  if (e == 0.0 ? !(k > 0.0) : !(k * e > 0.0))
    throw std::domain_error("PowerString: m must be increasing");
  alpha_hint_ = alpha;
  closed_form_ = true;
}

double PowerString::m(double x) const {
  if (!(x > 0.0)) throw std::domain_error("eval_m: x must be positive");
  return e_ == 0.0 ? D_ + k_ * std::log(x) : D_ + k_ * std::pow(x, e_);
}

double PowerString::density(double x) const {
  return e_ == 0.0 ? k_ / x : k_ * e_ * std::pow(x, e_ - 1.0);
}

double PowerString::m_inf() const { return e_ < 0.0 ? D_ : kInf; }
double PowerString::m0() const { return e_ > 0.0 ? D_ : -kInf; }

Germ PowerString::germ() const {
  return Germ{kInf, e_ == 0.0 ? k_ : k_ * e_, e_ - 1.0, D_};
}

double PowerString::G(double x) const {
  if (x <= 0.0) return 0.0;
  if (e_ == 0.0) return D_ * x + k_ * (x * std::log(x) - x);
  if (e_ <= -1.0) return -kInf;
  return D_ * x + k_ * std::pow(x, e_ + 1.0) / (e_ + 1.0);
}

double PowerString::moment(double x, int k) const {
  const Germ g = germ();
  return power_integral(g.C, g.p + k, 0.0, x);
}

double PowerString::tail(double x) const {
  if (e_ >= 0.0) return kInf;
  return -k_ * std::pow(x, e_);
}

double PowerString::inverse(double y) const {
  if (e_ == 0.0) return std::exp((y - D_) / k_);
  if (e_ > 0.0) return y <= D_ ? 0.0 : std::pow((y - D_) / k_, 1.0 / e_);
  return y >= D_ ? kInf : std::pow((y - D_) / k_, 1.0 / e_);
}

std::string PowerString::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (e_ == 0.0)
    os << "power(" << D_ << " + " << k_ << " log x)";
  else
    os << "power(" << D_ << " + " << k_ << " x^" << e_ << ")";
  return os.str();
}

// ── TableString ────────────────────────────────────────────────────────────

namespace {

// ∫_a^x ∫_a^y c t^p dt dy
double double_power_integral(double c, double p, double a, double x) {
  return x * power_integral(c, p, a, x) - power_integral(c, p + 1.0, a, x);
}

}  // namespace

TableString::TableString(std::vector<double> x, std::vector<double> m,
                         std::optional<double> left_exponent, std::optional<double> right_exponent,
                         std::optional<double> alpha)
    : x_(std::move(x)), m_(std::move(m)) {
  alpha_hint_ = alpha;
  const size_t n = x_.size();
  if (n < 3 || m_.size() != n) throw std::invalid_argument("table: need ≥ 3 matching nodes");
  if (!(x_[0] > 0.0)) throw std::invalid_argument("table: nodes must be positive");
  const double r = x_[1] / x_[0];
  if (!(r > 1.0)) throw std::invalid_argument("table: nodes must increase");
  for (size_t i = 1; i < n; ++i) {
    if (std::abs(x_[i] / x_[i - 1] - r) > 1e-8 * r)
      throw std::invalid_argument("table: nodes must form a geometric grid");
    if (!(m_[i] > m_[i - 1])) throw std::invalid_argument("table: m must be strictly increasing");
  }
  const double lr = std::log(r);
  std::vector<double> est(n - 2);
  for (size_t i = 0; i + 2 < n; ++i)
    est[i] = std::log((m_[i + 2] - m_[i + 1]) / (m_[i + 1] - m_[i])) / lr - 1.0;
  cells_.resize(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    double p;
    if (i == 0)
      p = est.front();
    else if (i == n - 2)
      p = est.back();
    else
      p = 0.5 * (est[i - 1] + est[i]);
    const double unit = power_integral(1.0, p, x_[i], x_[i + 1]);
    cells_[i] = {(m_[i + 1] - m_[i]) / unit, p};
  }

  const double pL = left_exponent ? *left_exponent - 1.0 : cells_.front().p;
  if (!(pL + 2.0 > 0.0)) throw std::invalid_argument("table: left exponent makes ∫m diverge");
  left_.p = pL;
  left_.x_end = x_[0];
  left_.C = cells_.front().c * std::pow(x_[0], cells_.front().p - pL);
  left_.D = 0.0;
  left_.D = m_[0] - left_.m(x_[0]);

  const double pR = right_exponent ? *right_exponent - 1.0 : cells_.back().p;
  right_ = {cells_.back().c * std::pow(x_[n - 1], cells_.back().p - pR), pR};
  const double rest = power_integral(right_.c, right_.p, x_[n - 1], kInf);
  m_inf_ = std::isinf(rest) ? kInf : m_[n - 1] + rest;

  G_nodes_.resize(n);
  G_nodes_[0] = left_.G(x_[0]);
  for (size_t i = 0; i + 1 < n; ++i)
    G_nodes_[i + 1] = G_nodes_[i] + m_[i] * (x_[i + 1] - x_[i]) +
                      double_power_integral(cells_[i].c, cells_[i].p, x_[i], x_[i + 1]);
}

int TableString::cell_of(double x) const {
  if (x <= x_.front()) return -1;
  if (x > x_.back()) return static_cast<int>(x_.size()) - 1;
  const auto it = std::lower_bound(x_.begin(), x_.end(), x);
  return static_cast<int>(it - x_.begin()) - 1;
}

double TableString::m(double x) const {
  if (!(x > 0.0)) throw std::domain_error("eval_m: x must be positive");
  const int i = cell_of(x);
  if (i < 0) return left_.m(x);
  if (i == static_cast<int>(cells_.size())) return m_.back() + power_integral(right_.c, right_.p, x_.back(), x);
  return m_[i] + power_integral(cells_[i].c, cells_[i].p, x_[i], x);
}

double TableString::density(double x) const {
  const int i = cell_of(x);
  if (i < 0) return left_.C * std::pow(x, left_.p);
  if (i == static_cast<int>(cells_.size())) return right_.c * std::pow(x, right_.p);
  return cells_[i].c * std::pow(x, cells_[i].p);
}

double TableString::m0() const {
  if (left_.p <= -1.0) return -kInf;
  return left_.D;
}

double TableString::G(double x) const {
  if (x <= 0.0) return 0.0;
  const int i = cell_of(x);
  if (i < 0) return left_.G(x);
  if (i == static_cast<int>(cells_.size()))
    return G_nodes_.back() + m_.back() * (x - x_.back()) +
           double_power_integral(right_.c, right_.p, x_.back(), x);
  return G_nodes_[i] + m_[i] * (x - x_[i]) + double_power_integral(cells_[i].c, cells_[i].p, x_[i], x);
}

double TableString::moment(double x, int k) const {
  double s = power_integral(left_.C, left_.p + k, 0.0, std::min(x, x_.front()));
  for (size_t i = 0; i < cells_.size() && x > x_[i]; ++i)
    s += power_integral(cells_[i].c, cells_[i].p + k, x_[i], std::min(x, x_[i + 1]));
  if (x > x_.back()) s += power_integral(right_.c, right_.p + k, x_.back(), x);
  return s;
}

double TableString::tail(double x) const {
  if (std::isinf(m_inf_)) return kInf;
  if (x >= x_.back()) return power_integral(right_.c, right_.p, x, kInf);
  return m_inf_ - m(x);
}

std::string TableString::describe() const {
  std::ostringstream os;
  os << "table(" << x_.size() << " nodes on [" << x_.front() << ", " << x_.back() << "])";
  return os.str();
}

// ── ScaledString ───────────────────────────────────────────────────────────

ScaledString::ScaledString(String inner, double a, double b, double shift)
    : inner_(std::move(inner)), a_(a), b_(b), shift_(shift) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("rescale: a, b must be positive");
  alpha_hint_ = inner_->alpha_hint();
  closed_form_ = inner_->closed_form();
}

double ScaledString::m(double x) const { return a_ * inner_->m(b_ * x) + shift_; }
double ScaledString::density(double x) const { return a_ * b_ * inner_->density(b_ * x); }
double ScaledString::m_inf() const { return a_ * inner_->m_inf() + shift_; }
double ScaledString::m0() const { return a_ * inner_->m0() + shift_; }

Germ ScaledString::germ() const {
  const Germ g = inner_->germ();
  Germ out;
  out.x_end = g.x_end / b_;
  out.p = g.p;
  out.C = a_ * std::pow(b_, g.p + 1.0) * g.C;
  out.D = g.p == -1.0 ? a_ * (g.D + g.C * std::log(b_)) + shift_ : a_ * g.D + shift_;
  return out;
}

double ScaledString::G(double x) const { return a_ / b_ * inner_->G(b_ * x) + shift_ * x; }

double ScaledString::moment(double x, int k) const {
  return a_ * std::pow(b_, -k) * inner_->moment(b_ * x, k);
}

double ScaledString::tail(double x) const {
  const double t = inner_->tail(b_ * x);
  if (std::isinf(t)) return kInf;
  return a_ * t;
}

double ScaledString::inverse(double y) const { return inner_->inverse((y - shift_) / a_) / b_; }

std::vector<double> ScaledString::breakpoints() const {
  auto bp = inner_->breakpoints();
  for (auto& v : bp) v /= b_;
  return bp;
}

std::string ScaledString::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << a_ << "·[" << inner_->describe() << "](" << b_ << "x) + " << shift_;
  return os.str();
}

// ── free functions ─────────────────────────────────────────────────────────

double eval_m(const StringMeasure& m, double x) {
  if (!(x > 0.0)) throw std::domain_error("eval_m: x must be positive");
  return m.m(x);
}

double tail(const StringMeasure& m, double x) {
  if (!(x > 0.0)) throw std::domain_error("tail: x must be positive");
  const double t = m.tail(x);
  if (std::isinf(t)) throw std::domain_error("tail: infinite tail (m(∞) = +∞)");
  return t;
}

double G(const StringMeasure& m, double x) {
  if (x < 0.0) throw std::domain_error("G: x must be non-negative");
  const double v = m.G(x);
  if (std::isinf(v)) throw std::domain_error("G: ∫_0^x |m| diverges at 0");
  return v;
}

double G1(const StringMeasure& m, double x) {
  if (x == 0.0) return 0.0;
  return G(m, x) - m.m(1.0) * x;
}

String make_power_string(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::domain_error("make_power_string: α must lie in (0,2)");
  if (alpha == 1.0) return std::make_shared<PowerString>(1.0, 0.0, 0.0, 1.0);
  return std::make_shared<PowerString>(1.0 / (1.0 - alpha), 1.0 / alpha - 1.0, 0.0, alpha);
}

String make_linear_string(double slope, double intercept) {
  return std::make_shared<PowerString>(slope, 1.0, intercept, 0.5);
}

String make_table_string(std::vector<double> x, std::vector<double> m,
                         std::optional<double> left_exponent,
                         std::optional<double> right_exponent) {
  return std::make_shared<TableString>(std::move(x), std::move(m), left_exponent, right_exponent);
}

String rescale(const String& m, double a, double b) {
  if (const auto* s = dynamic_cast<const ScaledString*>(m.get()))
    return std::make_shared<ScaledString>(s->inner(), a * s->a(), b * s->b(), a * s->shift());
  return std::make_shared<ScaledString>(m, a, b, 0.0);
}

String shift(const String& m, double c) {
  if (const auto* s = dynamic_cast<const ScaledString*>(m.get()))
    return std::make_shared<ScaledString>(s->inner(), s->a(), s->b(), s->shift() + c);
  return std::make_shared<ScaledString>(m, 1.0, 1.0, c);
}

String normalize_tail(const String& m) {
  const double mi = m->m_inf();
  if (std::isinf(mi)) throw std::domain_error("normalize_tail: m(∞) is infinite");
  if (mi == 0.0) return m;
  return shift(m, -mi);
}

double bullet(const std::function<double(double)>& dU, const std::function<double(double)>& f,
              double x) {
  if (x <= 0.0) return 0.0;
  return integrate_from_zero([&](double y) { return f(y) * dU(y); }, x).value;
}

// ── dual string ────────────────────────────────────────────────────────────

double DualString::operator()(double y) const {
  if (y < m_->m0()) return 0.0;
  if (y >= m_->m_inf()) return kInf;
  return m_->inverse(y);
}

double DualString::dual(double x) const {
  // inf{y : m*(y) > x} by bracketing and bisection on y
  const auto& w = *this;
  double lo = -1.0, hi = 1.0;
  while (w(lo) > x) lo *= 2.0;
  while (!(w(hi) > x)) hi = hi > 0 ? hi * 2.0 : 1.0;
  for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (w(mid) > x)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

DualString dual(const String& m) { return DualString(m); }

// ── classification ─────────────────────────────────────────────────────────

const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::regular: return "regular";
    case Boundary::exit: return "exit";
    case Boundary::entrance: return "entrance";
    case Boundary::natural: return "natural";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

BoundaryClass classify_boundary(const StringMeasure& m) {
  BoundaryClass bc{};
  const double m0 = m.m0();
  bc.I = std::isinf(m0) ? kInf : m.G(1.0) - m0;
  bc.J = m.moment(1.0, 1);
  const bool fi = std::isfinite(bc.I), fj = std::isfinite(bc.J);
  bc.kind = fi && fj ? Boundary::regular : (!fi && fj ? Boundary::exit : (fi ? Boundary::entrance : Boundary::natural));
  return bc;
}

Certificate check_M1(const StringMeasure& m) {
  Certificate c;
  const Germ g = m.germ();
  if (m.closed_form()) {
    // m² ~ x^{2(p+1)} (or a constant / log² when p+1 ≥ 0)
    const bool ok = g.p + 1.0 >= 0.0 || 2.0 * (g.p + 1.0) > -1.0;
    c.verdict = ok ? Verdict::yes : Verdict::no;
    c.detail = ok ? "∫_0 m² < ∞ (closed-form exponent " + std::to_string(g.p + 1.0) + ")"
                  : "∫_0 m² diverges (exponent " + std::to_string(g.p + 1.0) + ")";
    if (ok) c.value = integrate_from_zero([&](double x) { return m.m(x) * m.m(x); }, 1.0).value;
    return c;
  }
  // geometric panels of m² toward 0: ratios must settle below 1
  const double delta = std::min(1.0, g.x_end);
  std::vector<double> panel;
  double hi = delta;
  for (int k = 0; k < 40; ++k) {
    const double lo = hi * 0.25;
    panel.push_back(integrate([&](double x) { return m.m(x) * m.m(x); }, lo, hi).value);
    hi = lo;
  }
  const double r1 = panel[38] / panel[37], r2 = panel[39] / panel[38];
  if (r1 < 0.95 && r2 < 0.95 && std::abs(r1 - r2) < 0.02) {
    c.verdict = Verdict::yes;
    double s = 0.0;
    for (double v : panel) s += v;
    c.value = s + panel.back() * r2 / (1.0 - r2);
    c.detail = "panel ratio " + std::to_string(r2) + " < 1: ∫_0^δ m² ≈ " + std::to_string(c.value);
  } else if (r1 >= 1.0 && r2 >= 1.0) {
    c.verdict = Verdict::no;
    c.detail = "panel ratio " + std::to_string(r2) + " ≥ 1: ∫_0 m² diverges";
  } else {
    c.detail = "panel ratios " + std::to_string(r1) + ", " + std::to_string(r2) + " undecided";
  }
  return c;
}

// ── JumpMeasure ────────────────────────────────────────────────────────────

JumpMeasure JumpMeasure::power(double exponent, double lo, double hi, double scale) {
  if (!(lo >= 0.0 && hi > lo) || !(scale > 0.0)) throw std::invalid_argument("jump density: bad support");
  JumpMeasure j;
  j.pieces_.push_back({scale, exponent, lo, hi});
  return j;
}

JumpMeasure JumpMeasure::atom(double x, double w) {
  if (!(x > 0.0) || !(w >= 0.0)) throw std::invalid_argument("jump atom: bad location/weight");
  JumpMeasure j;
  j.atoms_.push_back({x, w});
  return j;
}

JumpMeasure JumpMeasure::operator+(const JumpMeasure& o) const {
  JumpMeasure j = *this;
  j.pieces_.insert(j.pieces_.end(), o.pieces_.begin(), o.pieces_.end());
  j.atoms_.insert(j.atoms_.end(), o.atoms_.begin(), o.atoms_.end());
  return j;
}

JumpMeasure JumpMeasure::scaled(double c) const {
  JumpMeasure j = *this;
  for (auto& p : j.pieces_) p.c *= c;
  for (auto& a : j.atoms_) a.w *= c;
  return j;
}

JumpMeasure JumpMeasure::pushforward(double gamma) const {
  JumpMeasure j = *this;
  for (auto& p : j.pieces_) {
    p.c *= std::pow(gamma, p.q + 2.0);
    p.lo /= gamma;
    p.hi /= gamma;
  }
  for (auto& a : j.atoms_) {
    a.x /= gamma;
    a.w *= gamma;
  }
  return j;
}

JumpMeasure JumpMeasure::restricted(double a, double b) const {
  JumpMeasure j;
  for (const auto& p : pieces_) {
    const double lo = std::max(p.lo, a), hi = std::min(p.hi, b);
    if (lo < hi) j.pieces_.push_back({p.c, p.q, lo, hi});
  }
  for (const auto& at : atoms_)
    if (at.x > a && at.x <= b) j.atoms_.push_back(at);
  return j;
}

double JumpMeasure::mass(double a, double b) const { return moment(0.0, a, b); }

double JumpMeasure::moment(double k, double a, double b) const {
  double s = 0.0;
  for (const auto& p : pieces_) {
    const double lo = std::max(p.lo, a), hi = std::min(p.hi, b);
    if (lo < hi) s += power_integral(p.c, p.q + k, lo, hi);
  }
  for (const auto& at : atoms_)
    if (at.x > a && at.x <= b) s += at.w * std::pow(at.x, k);
  return s;
}

double JumpMeasure::integrate(const std::function<double(double)>& f, double a, double b,
                              double rel_tol) const {
  double s = 0.0;
  for (const auto& p : pieces_) {
    const double lo = std::max(p.lo, a), hi = std::min(p.hi, b);
    if (!(lo < hi)) continue;
    auto g = [&](double x) { return f(x) * p.c * std::pow(x, p.q); };
    double mid = hi;
    if (std::isinf(hi)) mid = std::max(1.0, 2.0 * lo);
    if (lo == 0.0)
      s += integrate_from_zero(g, mid, 1e-300, rel_tol).value;
    else
      s += integrate_log_panels(g, lo, mid, rel_tol).value;
    if (std::isinf(hi)) s += integrate_to_infinity(g, mid, 1e-300, rel_tol).value;
  }
  for (const auto& at : atoms_)
    if (at.x > a && at.x <= b) s += at.w * f(at.x);
  return s;
}

double JumpMeasure::singular_exponent() const {
  double q = kInf;
  for (const auto& p : pieces_)
    if (p.lo == 0.0) q = std::min(q, p.q);
  return q;
}

double JumpMeasure::support_max() const {
  double s = 0.0;
  for (const auto& p : pieces_) s = std::max(s, p.hi);
  for (const auto& a : atoms_) s = std::max(s, a.x);
  return s;
}

Certificate check_condition_C(const StringMeasure& m, const JumpMeasure& j) {
  Certificate c;
  const double far = j.mass(1.0, kInf);
  const double kap = j.moment(1.0, 0.0, 1.0);
  const double near = j.mass(0.0, 1.0);
  std::ostringstream os;
  if (!std::isfinite(far)) {
    c.verdict = Verdict::no;
    c.detail = "j(1,∞) infinite";
    return c;
  }
  if (!std::isfinite(kap)) {
    c.verdict = Verdict::no;
    c.detail = "∫_0^1 x j(dx) diverges";
    return c;
  }
  if (std::isfinite(near)) {
    c.verdict = Verdict::no;
    c.detail = "j(0,1) finite";
    return c;
  }
  // ∫_0^1 |G| dj: G near 0 behaves like x^{min(1, β)} (x log x when β = 1)
  const Germ g = m.germ();
  const double eG = g.D != 0.0 ? std::min(1.0, g.beta()) : g.beta();
  const double q = j.singular_exponent();
  if (!(eG + q > -1.0)) {
    c.verdict = Verdict::no;
    os << "∫_0^1 |G| j(dx) diverges (G ~ x^" << eG << ", j ~ x^" << q << ")";
    c.detail = os.str();
    return c;
  }
  const double gi = j.integrate([&](double x) { return std::abs(m.G(x)); }, 0.0, 1.0, 1e-10);
  if (!std::isfinite(gi)) {
    c.detail = "∫_0^1 |G| j(dx) did not converge numerically";
    return c;
  }
  c.verdict = Verdict::yes;
  c.value = gi;
  os << "j(1,∞)=" << far << ", ∫_0^1 x j=" << kap << ", ∫_0^1 |G| j=" << gi << ", j(0,1)=∞";
  c.detail = os.str();
  return c;
}

}  // namespace krflx
