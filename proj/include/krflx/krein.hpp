#pragma once

#include <memory>
#include <vector>

#include "krflx/string_calculus.hpp"

namespace krflx {

inline constexpr double kEulerGamma = 0.5772156649015329;

// Solution f of d/dw d⁺/dy f = λ f, f(−∞) = 1, f⁺(−∞) = 0 for the dual
// string w = m*, carried in the primal variable x = m*(y):
// F(x) = f(m(x)), V(x) = f⁺(m(x)), with F' = ρV, V' = λF.
// Near 0 F is a power series in x^β; further out an ODE in log x.
class DualSolver {
 public:
  DualSolver(String m, double lambda);

  double F(double x) const;
  double V(double x) const;
  // f(λ; y) on the dual line; 1 below m(0+)
  double f(double y) const;
  // h_{m*}(λ) split at b ≤ ℓ = m(∞); default b = 0 (clamped to ℓ)
  double h(double b) const;
  double h() const;
  double tail_error() const { return tail_err_; }

 private:
  struct Track;
  void build() const;

  String m_;
  double lambda_;
  Germ germ_;
  double xq_;
  std::vector<double> fk_;  // F = Σ fk w^k on the germ, w = x^β
  std::vector<double> hk_;  // 1/F² = Σ hk w^k
  std::shared_ptr<Track> track_;
  mutable double tail_err_ = 0.0;
};

double f_dual(const String& m, double lambda, double y);
double h_dual(const String& m, double lambda, double b);
// H_m(λ) = h_{m*}(λ)
double H(const String& m, double lambda);
double H_closed(double alpha, double lambda);
// c¹_m(λ) = λH_m(λ) − λm(1)
double c1(const String& m, double lambda);

// lim_{x→0}(1 − g(λ;x) + λG(x))/x / λ by generalized Richardson on
// x_k = x0·2^{-k}, with g from the quadrature route
struct BoundaryLimit {
  double value;
  double spread;             // |last two extrapolants|
  std::vector<double> raw;   // quotients /λ on the grid
  std::vector<double> exponents;
};
BoundaryLimit H_boundary_detail(const String& m, double lambda, int levels = 6, double level = 1e-2);
double H_boundary(const String& m, double lambda);

struct ConvergenceRow {
  int n;
  double lambda;
  double H_n;
  double target;
  double gap;
};
// H_{m_n}(λ) − (H_m(λ) − σ²λ) over the family and the λ grid
std::vector<ConvergenceRow> convergence_H(const std::vector<String>& family, const String& m,
                                          double sigma, const std::vector<double>& lambdas);

}  // namespace krflx
