#include "diraclab/spinor.hpp"

#include <cmath>

#include "diraclab/errors.hpp"

namespace diraclab {

SpinorField::SpinorField(Lattice1D lattice)
    : lattice_(lattice),
      amplitudes_(CVector::Zero(static_cast<Eigen::Index>(2 * lattice.sites()))) {}

SpinorField::SpinorField(Lattice1D lattice, CVector amplitudes)
    : lattice_(lattice), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != static_cast<Eigen::Index>(2 * lattice_.sites())) {
    throw InvalidInput("spinor field needs 2*L amplitudes");
  }
  if (!amplitudes_.allFinite()) {
    throw InvalidInput("spinor field has non-finite amplitudes");
  }
}

double SpinorField::density(std::size_t site) const {
  return std::norm((*this)(site, 0)) + std::norm((*this)(site, 1));
}

double SpinorField::squared_norm() const {
  return lattice_.spacing() * amplitudes_.squaredNorm();
}

double SpinorField::norm() const { return std::sqrt(squared_norm()); }

complex SpinorField::inner(const SpinorField& other) const {
  if (!(other.lattice_ == lattice_)) throw InvalidInput("inner product across lattices");
  return lattice_.spacing() * amplitudes_.dot(other.amplitudes_);
}

SpinorField SpinorField::normalized() const {
  const double n = norm();
  if (n == 0.0) throw InvalidInput("cannot normalize the zero field");
  return SpinorField(lattice_, amplitudes_ / n);
}

SpinorField operator+(const SpinorField& a, const SpinorField& b) {
  if (!(a.lattice() == b.lattice())) throw InvalidInput("sum across lattices");
  return SpinorField(a.lattice(), a.amplitudes() + b.amplitudes());
}

SpinorField operator-(const SpinorField& a, const SpinorField& b) {
  if (!(a.lattice() == b.lattice())) throw InvalidInput("difference across lattices");
  return SpinorField(a.lattice(), a.amplitudes() - b.amplitudes());
}

SpinorField operator*(complex s, const SpinorField& f) {
  return SpinorField(f.lattice(), s * f.amplitudes());
}

SpinorField gaussian_packet(const Lattice1D& lattice, double center, double width,
                            double momentum, const Eigen::Vector2cd& spinor) {
  if (!(width > 0.0)) throw InvalidInput("packet width must be positive");
  SpinorField f(lattice);
  const double half = 0.5 * lattice.length();
  for (std::size_t i = 0; i < lattice.sites(); ++i) {
    const double d = lattice.wrap(lattice.coordinate(i) - center + half) - half;
    const complex env = std::exp(-d * d / (4.0 * width * width)) *
                        std::exp(complex(0.0, momentum * d));
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 0))] = env * spinor[0];
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 1))] = env * spinor[1];
  }
  return f;
}

SpinorField smoothed_box_packet(const Lattice1D& lattice, double left, double right,
                                double smoothing, double margin,
                                const Eigen::Vector2cd& spinor) {
  if (!(right > left) || !(smoothing > 0.0) || margin < 0.0) {
    throw InvalidInput("smoothed box needs left < right, smoothing > 0, margin >= 0");
  }
  SpinorField f(lattice);
  const double s = std::sqrt(2.0) * smoothing;
  for (std::size_t i = 0; i < lattice.sites(); ++i) {
    const double x = lattice.coordinate(i);
    if (x < left - margin || x >= right + margin) continue;
    const double env = 0.5 * (std::erf((x - left) / s) - std::erf((x - right) / s));
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 0))] = env * spinor[0];
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 1))] = env * spinor[1];
  }
  return f;
}

SpinorField box_packet(const Lattice1D& lattice, double left, double right,
                       const Eigen::Vector2cd& spinor) {
  SpinorField f(lattice);
  for (std::size_t i = 0; i < lattice.sites(); ++i) {
    const double x = lattice.coordinate(i);
    if (x < left || x >= right) continue;
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 0))] = spinor[0];
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 1))] = spinor[1];
  }
  return f;
}

}  // namespace diraclab
