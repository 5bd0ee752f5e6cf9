#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "diraclab/spinor.hpp"

namespace diraclab {

/// Eigen-decomposition of a hermitian operator, eigenvalues ascending.
struct Spectrum {
  Eigen::VectorXd values;
  CMatrix vectors;  // columns
};

/// Lattice Dirac Hamiltonian H = alpha p + beta m + e V0(x), with p the exact
/// spectral derivative. Immutable; the dense matrix and its eigen-decomposition
/// are built lazily, once, and shared between copies.
class DiracOperator {
 public:
  DiracOperator(Lattice1D lattice, double mass, double charge, std::vector<double> potential);

  static DiracOperator free(Lattice1D lattice, double mass, double charge = 1.0);

  const Lattice1D& lattice() const noexcept { return lattice_; }
  double mass() const noexcept { return mass_; }
  double charge() const noexcept { return charge_; }
  std::span<const double> potential() const noexcept { return potential_; }

  /// True when the potential is constant, so the operator is diagonal in momentum.
  bool translation_invariant() const noexcept { return translation_invariant_; }
  /// e * V0 at site 0 (meaningful when translation invariant).
  double constant_shift() const noexcept { return charge_ * potential_.front(); }

  DiracOperator with_charge(double charge) const;
  DiracOperator with_potential(std::vector<double> potential) const;

  const CMatrix& matrix() const;
  const Spectrum& spectrum() const;

  SpinorField apply(const SpinorField& field) const;

 private:
  struct Cache;

  Lattice1D lattice_;
  double mass_;
  double charge_;
  std::vector<double> potential_;
  bool translation_invariant_;
  std::shared_ptr<Cache> cache_;
};

DiracOperator build_dirac(const Lattice1D& lattice, double mass, double charge,
                          std::span<const double> potential);

/// Real antisymmetric spectral derivative D; the momentum operator is -i D.
Eigen::MatrixXd spectral_derivative_matrix(const Lattice1D& lattice);

/// Dense L x L matrix of a real even (or odd) symbol f(p) on the momentum
/// grid: F^dagger diag(f) F. Used for photon dispersion and tests.
CMatrix momentum_function_matrix(const Lattice1D& lattice, const std::vector<double>& symbol);

/// Free energies sqrt(m^2 + p^2) on the momentum grid, one entry per k.
std::vector<double> free_energies(const Lattice1D& lattice, double mass);

/// exp(-i H t) field via spectral decomposition (momentum space when H is
/// translation invariant, dense eigenbasis otherwise).
SpinorField evolve(const DiracOperator& op, const SpinorField& field, double t);

/// Free positive- (sign = +1) or negative-energy (sign = -1) plane wave of
/// grid momentum index k, unit norm.
SpinorField plane_wave(const Lattice1D& lattice, double mass, std::size_t k, int sign);

/// Spectral projectors onto the nonnegative and negative energy subspaces.
class EnergyProjectors {
 public:
  explicit EnergyProjectors(DiracOperator op);

  const DiracOperator& op() const noexcept { return op_; }

  SpinorField apply_plus(const SpinorField& field) const;
  SpinorField apply_minus(const SpinorField& field) const;

  const CMatrix& dense_plus() const;
  const CMatrix& dense_minus() const;
  std::size_t rank_plus() const;

 private:
  SpinorField apply(const SpinorField& field, bool plus) const;

  struct Dense;
  DiracOperator op_;
  std::shared_ptr<Dense> dense_;
};

/// Throws GaplessSpectrum if any eigenvalue has |E| < 1e-12.
EnergyProjectors spectral_split(const DiracOperator& op);

/// Antiunitary map psi -> U conj(psi), applied site by site.
class ChargeConjugation {
 public:
  ChargeConjugation();  // U = alpha
  explicit ChargeConjugation(const Eigen::Matrix2cd& unitary);

  const Eigen::Matrix2cd& unitary() const noexcept { return unitary_; }

  SpinorField apply(const SpinorField& field) const;
  /// C H C^{-1} for a dense operator H on spinor fields.
  CMatrix conjugate_operator(const CMatrix& h) const;

 private:
  Eigen::Matrix2cd unitary_;
};

SpinorField charge_conjugate(const SpinorField& field);

/// Dirac current j0 = psi^dagger psi, j1 = psi^dagger alpha psi per site.
struct CurrentField {
  std::vector<double> j0;
  std::vector<double> j1;
};

CurrentField dirac_current(const SpinorField& field);

/// Max-norm residual of (j0(t+dt) - j0(t))/dt + D (j1(t) + j1(t+dt))/2 after
/// one evolution step of length dt.
double continuity_residual(const DiracOperator& op, const SpinorField& field, double dt);

/// Row-major CSV, each complex entry written as two columns "re,im".
void write_matrix_csv(std::ostream& out, const CMatrix& m);

}  // namespace diraclab
