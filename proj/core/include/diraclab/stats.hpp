#pragma once

#include <functional>
#include <span>
#include <vector>

namespace diraclab {

/// Two-sided Kolmogorov-Smirnov distance between a sample and a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic KS critical value c(alpha)/sqrt(n) for alpha in {0.10, 0.05, 0.01, 0.001}.
double ks_critical(std::size_t n, double alpha);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t pooled_bins = 0;  // bins after merging low-expectation neighbours
};

/// Pearson test of observed counts against bin probabilities. Adjacent bins
/// are merged left to right until each expected count reaches min_expected.
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> probabilities,
                                double min_expected = 5.0);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, int dof);

}  // namespace diraclab
