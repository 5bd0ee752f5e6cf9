#include "diraclab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "diraclab/errors.hpp"

namespace diraclab {

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidInput("KS statistic needs at least one sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_critical(std::size_t n, double alpha) {
  if (n == 0) throw InvalidInput("KS critical value needs n > 0");
  double c = 0.0;
  if (alpha == 0.10) c = 1.22;
  else if (alpha == 0.05) c = 1.36;
  else if (alpha == 0.01) c = 1.63;
  else if (alpha == 0.001) c = 1.95;
  else throw InvalidInput("unsupported KS significance level");
  return c / std::sqrt(static_cast<double>(n));
}

double chi_square_sf(double statistic, int dof) {
  if (dof <= 0) throw InvalidInput("chi-square needs a positive number of degrees of freedom");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> probabilities,
                                double min_expected) {
  if (observed.size() != probabilities.size() || observed.empty()) {
    throw InvalidInput("chi-square test needs matching, nonempty bin arrays");
  }
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  const double ptot = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (n <= 0.0 || ptot <= 0.0) throw InvalidInput("chi-square test needs positive totals");

  std::vector<double> obs, expct;
  double o = 0.0, e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o += observed[i];
    e += n * probabilities[i] / ptot;
    if (e >= min_expected) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (expct.empty()) {
      obs.push_back(o);
      expct.push_back(e);
    } else {
      obs.back() += o;
      expct.back() += e;
    }
  }
  ChiSquareResult r;
  r.pooled_bins = obs.size();
  r.dof = static_cast<int>(obs.size()) - 1;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double d = obs[i] - expct[i];
    r.statistic += d * d / expct[i];
  }
  r.p_value = r.dof > 0 ? chi_square_sf(r.statistic, r.dof) : 1.0;
  return r;
}

}  // namespace diraclab
