#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace krflx {

struct KsResult {
  double D = 0.0;         // sup |F₁ − F₂|
  double p_value = 1.0;   // asymptotic Kolmogorov distribution
  double critical = 0.0;  // asymptotic critical value at the requested level
};

// two-sample Kolmogorov–Smirnov; level is the test size for `critical`
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double level = 0.01);
// one-sample against a continuous CDF
KsResult ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf,
                       double level = 0.01);
// P[K > z] for the Kolmogorov distribution
double kolmogorov_sf(double z);
// c(level)·√((n+m)/(nm))
double ks_critical(std::size_t n, std::size_t m, double level);

struct LineFit {
  double slope = 0.0, intercept = 0.0;
  double slope_se = 0.0, intercept_se = 0.0;
  double slope_lo = 0.0, slope_hi = 0.0;  // two-sided confidence interval
  std::size_t n = 0;
};
// least squares y = intercept + slope·x with a Student-t interval
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, double confidence = 0.95);

struct MeanSe {
  double mean = 0.0, se = 0.0;
};
MeanSe mean_se(const std::vector<double>& v);

// two-sample energy distance of points in the plane, with a permutation p-value
struct EnergyResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
EnergyResult energy_test_2d(const std::vector<std::pair<double, double>>& a,
                            const std::vector<std::pair<double, double>>& b, int permutations,
                            unsigned long long seed);

// max over the grid of |mean e^{−λX} − target(λ)|, with the largest standard error seen
struct LaplaceDistance {
  double distance = 0.0;
  double max_se = 0.0;
  double at_lambda = 0.0;
};
LaplaceDistance laplace_distance(const std::vector<double>& samples,
                                 const std::function<double(double)>& target,
                                 const std::vector<double>& lambda_grid);

// Shapiro–Francia W′ with Royston's normal approximation for the p-value
struct NormalityResult {
  double W = 0.0;
  double p_value = 1.0;
};
NormalityResult shapiro_francia(std::vector<double> v);

}  // namespace krflx
