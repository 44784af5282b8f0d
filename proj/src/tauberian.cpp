#include <algorithm>
#include <cmath>
#include <cstdio>

#include "krflx/harness.hpp"
#include "krflx/quadrature.hpp"
#include "krflx/stats.hpp"

namespace krflx {

namespace {

std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ∫_a^b f for a smooth density; b may be infinite
double span(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  if (std::isinf(b)) {
    const double mid = std::max(2.0 * a, a + 1.0);
    return integrate_log_panels(f, a, mid).value + integrate_to_infinity(f, mid, 0.0, 1e-13).value;
  }
  return a > 0.0 ? integrate_log_panels(f, a, b).value : integrate_from_zero(f, b).value;
}

Report tauberian_report(const std::string& name) {
  Report r;
  r.name = name;
  r.tag = "tauberian";
  return r;
}

}  // namespace

double TestMeasure::tail(double x) const {
  double s = 0.0;
  for (const auto& [y, w] : atoms)
    if (y >= x) s += w;
  if (density) s += span(density, std::max(x, lo), hi);
  return s;
}

double TestMeasure::band(double x, double theta) const {
  double s = 0.0;
  for (const auto& [y, w] : atoms)
    if (y >= x && y < theta * x) s += w;
  if (density) s += span(density, std::max(x, lo), std::min(theta * x, hi));
  return s;
}

double TestMeasure::transform_derivative(double lambda, int n) const {
  double s = 0.0;
  for (const auto& [y, w] : atoms) s += w * std::pow(y, n) * std::exp(-lambda * y);
  if (density) {
    // y = z/λ keeps the integrand O(1) in z
    auto f = [&](double z) {
      const double y = z / lambda;
      return std::pow(y, n) * std::exp(-z) * density(y) / lambda;
    };
    const double a = lambda * lo, b = lambda * hi;
    if (std::isinf(b)) {
      const double mid = std::max(60.0, 2.0 * a);
      s += (a > 0.0 ? integrate_log_panels(f, a, mid).value : integrate_from_zero(f, mid).value) +
           integrate_to_infinity(f, mid, 0.0, 1e-13).value;
    } else {
      s += span(f, a, b);
    }
  }
  return s;
}

TestMeasure pareto_measure(double beta) {
  return {"pareto(" + g4(beta) + ")", [beta](double x) { return beta * std::pow(x, -beta - 1.0); }, 1.0, kInf, {}};
}

TestMeasure log_measure() { return {"dx/x on [1,inf)", [](double x) { return 1.0 / x; }, 1.0, kInf, {}}; }

TestMeasure point_mass(double x) { return {"delta(" + g4(x) + ")", {}, 0.0, 0.0, {{x, 1.0}}}; }

Report tauberian_check(const TestMeasure& mu, double beta, const std::vector<double>& x_grid,
                       const std::vector<double>& lambda_grid, int n, double rel) {
  if (!(n > beta)) throw std::domain_error("tauberian_check: need n > β");
  Report r = tauberian_report("tauberian(" + mu.name + ")");
  r.constants["beta"] = beta;
  r.constants["n"] = n;
  const double scale = beta * std::tgamma(n - beta);

  // (i) tail side
  Table& tt = r.table("tail_side", {"x", "tail", "tail_times_x_beta"});
  std::vector<double> lx, ly;
  bool vanishes = false;
  for (double x : x_grid) {
    const double t = mu.tail(x);
    tt.add({x, t, t * std::pow(x, beta)});
    if (!(t > 0.0)) {
      vanishes = true;
      continue;
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(t));
  }
  double c_tail = NAN;
  if (vanishes || lx.size() < 2) {
    r.add({"tail_regular_variation", Status::fail, 0.0, rel, "<=", "tail vanishes on the grid: not regularly varying"});
  } else {
    const LineFit f = fit_line(lx, ly);
    double lc = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) lc += ly[i] + beta * lx[i];
    c_tail = std::exp(lc / lx.size());
    double spread = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) spread = std::max(spread, std::abs(std::exp(ly[i] + beta * lx[i]) / c_tail - 1.0));
    r.constants["tail_constant"] = c_tail;
    r.check_le("tail_index", std::abs(-f.slope / beta - 1.0), rel, "fitted index " + g4(-f.slope) + " vs β");
    r.check_le("tail_regular_variation", spread, rel, "spread of μ[x,∞)·x^β around its mean");
  }

  // (ii) derivative side
  Table& dt = r.table("derivative_side", {"lambda", "derivative", "prediction_unit_constant", "ratio"});
  std::vector<double> ll, ld, ratio;
  for (double lam : lambda_grid) {
    const double d = mu.transform_derivative(lam, n);
    const double pred = scale * std::pow(lam, beta - n);
    dt.add({lam, d, pred, d / pred});
    if (d > 0.0) {
      ll.push_back(std::log(lam));
      ld.push_back(std::log(d));
      ratio.push_back(d / pred);
    }
  }
  if (ll.size() < 2) {
    r.add({"derivative_index", Status::fail, 0.0, rel, "<=", "transform derivative vanishes"});
  } else {
    const LineFit f = fit_line(ll, ld);
    r.check_le("derivative_index", std::abs(f.slope / (beta - n) - 1.0), rel,
               "fitted exponent " + g4(f.slope) + " vs β − n = " + g4(beta - n));
    double lc = 0.0;
    for (double v : ratio) lc += std::log(v);
    const double c_der = std::exp(lc / ratio.size());
    r.constants["derivative_constant"] = c_der;
    const double ref = std::isfinite(c_tail) ? c_tail : 1.0;
    r.check_le("constants_agree", std::abs(c_der / ref - 1.0), rel,
               "(−1)^n μ̂^{(n)}/(βΓ(n−β)λ^{β−n}) = " + g4(c_der) + " vs tail constant " + g4(ref));
  }
  return r;
}

Report tauberian_log_check(const TestMeasure& mu, double theta, const std::vector<double>& x_grid,
                           const std::vector<double>& lambda_grid, double rel) {
  Report r = tauberian_report("tauberian_log(" + mu.name + ")");
  const double lt = std::log(theta);
  r.constants["theta"] = theta;
  Table& tb = r.table("band_side", {"x", "band", "band_over_log_theta"});
  double worst = 0.0;
  for (double x : x_grid) {
    const double b = mu.band(x, theta);
    tb.add({x, b, b / lt});
    worst = std::max(worst, std::abs(b / lt - 1.0));
  }
  r.check_le("log_increment", worst, rel, "max |μ[x,θx)/(K(x) log θ) − 1| with K ≡ 1");
  Table& dt = r.table("derivative_side", {"lambda", "minus_derivative", "lambda_times"});
  double worst_d = 0.0;
  for (double lam : lambda_grid) {
    const double d = mu.transform_derivative(lam, 1);
    dt.add({lam, d, lam * d});
    worst_d = std::max(worst_d, std::abs(lam * d - 1.0));
  }
  r.check_le("derivative_asymptotics", worst_d, rel, "max |−λμ̂'(λ)/K(1/λ) − 1| with K ≡ 1");
  return r;
}

}  // namespace krflx
