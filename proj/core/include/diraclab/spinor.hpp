#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "diraclab/lattice.hpp"

namespace diraclab {

using complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Spinor conventions shared by every module: alpha = sigma_x, beta = sigma_z.
namespace spinor {
inline const Eigen::Matrix2cd& alpha() {
  static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
  return m;
}
inline const Eigen::Matrix2cd& beta() {
  static const Eigen::Matrix2cd m = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
  return m;
}
/// Flat index of component s at a site.
constexpr std::size_t index(std::size_t site, std::size_t component) noexcept {
  return 2 * site + component;
}
}  // namespace spinor

/// Two-component complex amplitude per lattice site, stored site-major
/// (index 2*i + s). The squared norm is a * sum_i psi^dagger psi.
class SpinorField {
 public:
  explicit SpinorField(Lattice1D lattice);
  SpinorField(Lattice1D lattice, CVector amplitudes);

  const Lattice1D& lattice() const noexcept { return lattice_; }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  CVector& amplitudes() noexcept { return amplitudes_; }

  complex operator()(std::size_t site, std::size_t component) const {
    return amplitudes_[static_cast<Eigen::Index>(spinor::index(site, component))];
  }

  /// psi^dagger psi at a site.
  double density(std::size_t site) const;

  double squared_norm() const;
  double norm() const;
  /// a * sum phi^dagger chi.
  complex inner(const SpinorField& other) const;
  SpinorField normalized() const;

 private:
  Lattice1D lattice_;
  CVector amplitudes_;
};

SpinorField operator+(const SpinorField& a, const SpinorField& b);
SpinorField operator-(const SpinorField& a, const SpinorField& b);
SpinorField operator*(complex s, const SpinorField& f);

/// Gaussian envelope exp(-(x-x0)^2 / (4 w^2)) e^{i p x} times a fixed spinor.
/// Distances are periodic so the packet is smooth across the seam.
SpinorField gaussian_packet(const Lattice1D& lattice, double center, double width,
                            double momentum, const Eigen::Vector2cd& spinor);

/// Envelope equal to the box [left, right) convolved with a Gaussian of the
/// given width, zeroed exactly outside [left - margin, right + margin).
SpinorField smoothed_box_packet(const Lattice1D& lattice, double left, double right,
                                double smoothing, double margin,
                                const Eigen::Vector2cd& spinor);

/// Sharp box: constant spinor on sites with left <= x_i < right, zero elsewhere.
SpinorField box_packet(const Lattice1D& lattice, double left, double right,
                       const Eigen::Vector2cd& spinor);

}  // namespace diraclab
