#pragma once

#include <cstddef>
#include <vector>

namespace diraclab {

/// Periodic one-dimensional lattice with sites x_i = i * a, natural units.
///
/// Any size L >= 2 is accepted so that the small Fock-space and jump toys can
/// share the machinery; propagation experiments additionally require
/// `is_simulation_grid()` (L >= 8 and a power of two).
class Lattice1D {
 public:
  Lattice1D(std::size_t sites, double spacing);

  std::size_t sites() const noexcept { return sites_; }
  double spacing() const noexcept { return spacing_; }
  double length() const noexcept { return static_cast<double>(sites_) * spacing_; }
  double coordinate(std::size_t site) const noexcept {
    return static_cast<double>(site) * spacing_;
  }

  /// Wraps a position into [0, length).
  double wrap(double x) const noexcept;

  /// Shortest periodic distance between two positions.
  double distance(double x, double y) const noexcept;

  /// Momentum grid p_k = 2*pi*k / (L a) with k in (-L/2, L/2]. For even L the
  /// Nyquist entry is set to zero, which keeps the spectral derivative real
  /// and antisymmetric.
  std::vector<double> momentum_grid() const;

  bool is_simulation_grid() const noexcept;

  friend bool operator==(const Lattice1D&, const Lattice1D&) = default;

 private:
  std::size_t sites_;
  double spacing_;
};

}  // namespace diraclab
