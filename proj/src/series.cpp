#include "krflx/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace krflx {

MonoSum::MonoSum(std::vector<Monomial> terms) : terms_(std::move(terms)) { normalize(); }

MonoSum MonoSum::single(double c, double e, int j) { return MonoSum({{c, e, j}}); }

void MonoSum::normalize() {
  std::sort(terms_.begin(), terms_.end(), [](const Monomial& a, const Monomial& b) {
    return a.e != b.e ? a.e < b.e : a.j < b.j;
  });
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (!out.empty() && std::abs(out.back().e - t.e) <= 1e-13 * (1.0 + std::abs(t.e)) &&
        out.back().j == t.j) {
      out.back().c += t.c;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const Monomial& t) { return t.c == 0.0; });
  terms_ = std::move(out);
}

double MonoSum::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  const double lx = std::log(x);
  double s = 0.0;
  for (const auto& t : terms_) {
    double v = t.c * std::exp(t.e * lx);
    for (int k = 0; k < t.j; ++k) v *= lx;
    s += v;
  }
  return s;
}

MonoSum MonoSum::integrate() const {
  // ∫_0^x y^{q-1}(log y)^j dy = x^q (log x)^j / q − (j/q) ∫_0^x y^{q-1}(log y)^{j-1} dy
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    const double q = t.e + 1.0;
    if (q <= 0.0) throw std::domain_error("MonoSum::integrate: non-integrable power at 0");
    double coef = t.c;
    for (int j = t.j; j >= 0; --j) {
      out.push_back({coef / q, q, j});
      coef *= -static_cast<double>(j) / q;
    }
  }
  return MonoSum(std::move(out));
}

MonoSum MonoSum::times_power(double C, double p) const {
  std::vector<Monomial> out = terms_;
  for (auto& t : out) {
    t.c *= C;
    t.e += p;
  }
  return MonoSum(std::move(out));
}

MonoSum MonoSum::scaled(double s) const {
  std::vector<Monomial> out = terms_;
  for (auto& t : out) t.c *= s;
  return MonoSum(std::move(out));
}

MonoSum MonoSum::operator+(const MonoSum& o) const {
  std::vector<Monomial> out = terms_;
  out.insert(out.end(), o.terms_.begin(), o.terms_.end());
  return MonoSum(std::move(out));
}

double MonoSum::abs_sup(double x) const {
  if (x <= 0.0) return 0.0;
  const double lx = std::log(x);
  double s = 0.0;
  for (const auto& t : terms_) {
    // sup_{0<y≤x} y^e |log y|^j ; maximum of |log y|^j y^e inside (0,1) sits at y = e^{-j/e}
    double v = std::exp(t.e * lx) * std::pow(std::abs(lx), t.j);
    if (t.j > 0 && t.e > 0.0) {
      const double ly = -t.j / t.e;
      if (ly < lx) v = std::max(v, std::exp(t.e * ly) * std::pow(-ly, t.j));
    }
    s += std::abs(t.c) * v;
  }
  return s;
}

double MonoSum::leading_exponent() const {
  if (terms_.empty()) return std::numeric_limits<double>::infinity();
  return terms_.front().e;
}

}  // namespace krflx
