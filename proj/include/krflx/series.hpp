#pragma once

#include <vector>

namespace krflx {

// c · x^e · (log x)^j
struct Monomial {
  double c = 0.0;
  double e = 0.0;
  int j = 0;
};

// Finite sums of monomials. Enough algebra to run the Volterra recursion
// exactly on a power-law germ dm = C x^p dx near the origin.
class MonoSum {
 public:
  MonoSum() = default;
  explicit MonoSum(std::vector<Monomial> terms);
  static MonoSum single(double c, double e, int j = 0);

  const std::vector<Monomial>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double operator()(double x) const;

  // x ↦ ∫_0^x f(y) dy; every exponent must exceed -1.
  MonoSum integrate() const;
  // x ↦ C x^p f(x)
  MonoSum times_power(double C, double p) const;
  MonoSum scaled(double s) const;
  MonoSum operator+(const MonoSum& o) const;

  // sup over (0, x] of Σ|c| |y^e (log y)^j|, a bound on sup |f|.
  double abs_sup(double x) const;
  // smallest exponent among nonzero terms
  double leading_exponent() const;

 private:
  void normalize();
  std::vector<Monomial> terms_;
};

}  // namespace krflx
