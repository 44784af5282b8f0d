#include "krflx/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace krflx {

double kolmogorov_sf(double z) {
  if (z <= 0.0) return 1.0;
  if (z < 0.27) return 1.0;
  if (z < 1.0) {
    // small-z form: 1 − √(2π)/z Σ exp(−(2k−1)²π²/(8z²))
    const double c = -M_PI * M_PI / (8.0 * z * z);
    double s = 0.0;
    for (int k = 1; k <= 6; ++k) s += std::exp(c * (2 * k - 1) * (2 * k - 1));
    return 1.0 - std::sqrt(2.0 * M_PI) / z * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = 2.0 * std::exp(-2.0 * k * k * z * z);
    s += (k % 2 ? t : -t);
    if (t < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

namespace {
// z with kolmogorov_sf(z) = level
double kolmogorov_isf(double level) {
  double lo = 0.3, hi = 4.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_sf(mid) > level)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace

double ks_critical(std::size_t n, std::size_t m, double level) {
  const double ne = static_cast<double>(n) * m / (n + m);
  return kolmogorov_isf(level) / std::sqrt(ne);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.D = D;
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  r.p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * D);
  r.critical = ks_critical(a.size(), b.size(), level);
  return r;
}

KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf, double level) {
  if (a.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(a.begin(), a.end());
  const double n = a.size();
  double D = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double F = cdf(a[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  KsResult r;
  r.D = D;
  const double sq = std::sqrt(n);
  r.p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * D);
  r.critical = kolmogorov_isf(level) / sq;
  return r;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, double confidence) {
  const size_t n = x.size();
  if (n != y.size() || n < 3) throw std::invalid_argument("fit_line: need at least three paired points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  const double s2 = rss / (n - 2);
  f.slope_se = std::sqrt(s2 / sxx);
  f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  const boost::math::students_t t(static_cast<double>(n - 2));
  const double q = boost::math::quantile(t, 0.5 + 0.5 * confidence);
  f.slope_lo = f.slope - q * f.slope_se;
  f.slope_hi = f.slope + q * f.slope_se;
  return f;
}

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  if (v.empty()) return r;
  const double n = v.size();
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = v.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  return r;
}

EnergyResult energy_test_2d(const std::vector<std::pair<double, double>>& a,
                            const std::vector<std::pair<double, double>>& b, int permutations,
                            unsigned long long seed) {
  const size_t na = a.size(), nb = b.size(), n = na + nb;
  if (!na || !nb) throw std::invalid_argument("energy_test_2d: empty sample");
  std::vector<std::pair<double, double>> z(a);
  z.insert(z.end(), b.begin(), b.end());
  std::vector<double> d(n * n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) d[i * n + j] = std::hypot(z[i].first - z[j].first, z[i].second - z[j].second);
  auto stat = [&](const std::vector<size_t>& idx) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (size_t i = 0; i < na; ++i)
      for (size_t j = 0; j < nb; ++j) ab += d[idx[i] * n + idx[na + j]];
    for (size_t i = 0; i < na; ++i)
      for (size_t j = 0; j < na; ++j) aa += d[idx[i] * n + idx[j]];
    for (size_t i = 0; i < nb; ++i)
      for (size_t j = 0; j < nb; ++j) bb += d[idx[na + i] * n + idx[na + j]];
    const double e = 2.0 * ab / (na * nb) - aa / (na * na) - bb / (nb * nb);
    return e * na * nb / n;
  };
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  EnergyResult r;
  r.statistic = stat(idx);
  std::mt19937_64 rng(seed);
  int ge = 0;
  for (int k = 0; k < permutations; ++k) {
    std::shuffle(idx.begin(), idx.end(), rng);
    if (stat(idx) >= r.statistic) ++ge;
  }
  r.p_value = (ge + 1.0) / (permutations + 1.0);
  return r;
}

LaplaceDistance laplace_distance(const std::vector<double>& samples, const std::function<double(double)>& target,
                                 const std::vector<double>& lambda_grid) {
  LaplaceDistance r;
  const double n = samples.size();
  if (samples.empty()) throw std::invalid_argument("laplace_distance: empty sample");
  for (double lam : lambda_grid) {
    if (!(lam > 0.0)) throw std::domain_error("laplace_distance: λ must be positive");
    double s = 0.0, s2 = 0.0;
    for (double x : samples) {
      const double f = std::exp(-lam * x);
      s += f;
      s2 += f * f;
    }
    const double m = s / n;
    const double se = std::sqrt(std::max(0.0, s2 / n - m * m) / n);
    const double dist = std::abs(m - target(lam));
    if (dist > r.distance) {
      r.distance = dist;
      r.at_lambda = lam;
    }
    r.max_se = std::max(r.max_se, se);
  }
  return r;
}

NormalityResult shapiro_francia(std::vector<double> v) {
  const size_t n = v.size();
  if (n < 5 || n > 5000) throw std::invalid_argument("shapiro_francia: need 5 ≤ n ≤ 5000");
  std::sort(v.begin(), v.end());
  const boost::math::normal nd;
  std::vector<double> mq(n);
  for (size_t i = 0; i < n; ++i) mq[i] = boost::math::quantile(nd, (i + 1 - 0.375) / (n + 0.25));
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double smx = 0.0, smm = 0.0, sxx = 0.0;
  for (size_t i = 0; i < n; ++i) {
    smx += mq[i] * (v[i] - mean);
    smm += mq[i] * mq[i];
    sxx += (v[i] - mean) * (v[i] - mean);
  }
  NormalityResult r;
  r.W = smx * smx / (smm * sxx);
  const double u = std::log(static_cast<double>(n));
  const double mu = std::log(u) - u;
  const double sig = std::log(u) + 2.0 / u;
  const double z = (std::log(1.0 - r.W) - (-1.2725 + 1.0521 * mu)) / (1.0308 - 0.26758 * sig);
  r.p_value = boost::math::cdf(boost::math::complement(nd, z));
  return r;
}

}  // namespace krflx
