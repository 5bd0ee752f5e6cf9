#include "diraclab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "diraclab/errors.hpp"

namespace diraclab {

Lattice1D::Lattice1D(std::size_t sites, double spacing)
    : sites_(sites), spacing_(spacing) {
  if (sites < 2) {
    throw InvalidInput("lattice needs at least 2 sites, got " + std::to_string(sites));
  }
  if (!std::isfinite(spacing) || spacing <= 0.0) {
    throw InvalidInput("lattice spacing must be positive and finite");
  }
}

double Lattice1D::wrap(double x) const noexcept {
  const double len = length();
  double r = std::fmod(x, len);
  if (r < 0.0) r += len;
  // fmod can return len for tiny negative inputs after the shift
  if (r >= len) r = 0.0;
  return r;
}

double Lattice1D::distance(double x, double y) const noexcept {
  const double d = std::fabs(wrap(x - y));
  return std::min(d, length() - d);
}

std::vector<double> Lattice1D::momentum_grid() const {
  const auto n = static_cast<long>(sites_);
  std::vector<double> p(sites_);
  const double scale = 2.0 * std::numbers::pi / length();
  for (long k = 0; k < n; ++k) {
    long kk = (2 * k <= n) ? k : k - n;
    if (n % 2 == 0 && 2 * k == n) kk = 0;
    p[static_cast<std::size_t>(k)] = scale * static_cast<double>(kk);
  }
  return p;
}

bool Lattice1D::is_simulation_grid() const noexcept {
  return sites_ >= 8 && (sites_ & (sites_ - 1)) == 0;
}

}  // namespace diraclab
