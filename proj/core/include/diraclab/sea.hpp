#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diraclab/sectors.hpp"

namespace diraclab {

/// filled: the reference state has every negative-energy mode occupied (Dirac sea).
/// empty: the reference has no particles; occupied negative modes are positrons.
enum class SeaConvention { filled, empty };

/// Fermionic Fock space over the free Dirac eigenmodes of a small lattice.
/// Modes are sorted by energy, negative band first; basis states are
/// occupation bitstrings (bit k = mode k) built as c_{k1}^dag ... c_{kN}^dag |0>
/// with k1 < ... < kN.
class FockBasis {
 public:
  static constexpr std::size_t kMaxSites = 6;

  FockBasis(Lattice1D lattice, double mass, SeaConvention convention, double charge = 1.0);

  const Lattice1D& lattice() const noexcept { return lattice_; }
  double mass() const noexcept { return mass_; }
  double charge() const noexcept { return charge_; }
  SeaConvention convention() const noexcept { return convention_; }
  std::size_t modes() const noexcept { return 2 * lattice_.sites(); }
  std::size_t dimension() const noexcept { return std::size_t{1} << modes(); }
  std::size_t negative_modes() const noexcept { return negative_; }

  /// Columns are the eigenmodes in the site-major spinor basis (unit Euclidean norm).
  const CMatrix& mode_vectors() const noexcept { return modes_; }
  const Eigen::VectorXd& mode_energies() const noexcept { return energies_; }

  std::uint64_t reference_bits() const noexcept;
  CVector reference_state() const;
  CVector basis_state(std::uint64_t bits) const;

  /// filled: sum E_k n_k - sum_{neg} E_k (ground energy 0, bounded below).
  /// empty:  sum E_k n_k (minimum = sum of the negative energies).
  const SparseOperator& hamiltonian() const noexcept { return hamiltonian_; }

 private:
  Lattice1D lattice_;
  double mass_;
  double charge_;
  SeaConvention convention_;
  std::size_t negative_ = 0;
  CMatrix modes_;
  Eigen::VectorXd energies_;
  SparseOperator hamiltonian_;
};

/// sum_{kl} m(k, l) c_k^dag c_l in the basis's mode occupation space.
SparseOperator one_body_operator(const FockBasis& basis, const CMatrix& m);

/// Mode-space matrix of the site projector: U^dag P_A U.
CMatrix cell_mode_matrix(const FockBasis& basis, const std::vector<std::size_t>& cell);

/// Charge of the sites in `cell`. Filled convention: -e :Psi^dag Psi: normal
/// ordered against the filled sea. Empty convention: the same observable
/// expressed in the hole picture (negative modes carry charge +e, and the
/// mixed terms create or annihilate pairs). An empty cell gives the zero operator.
SparseOperator charge_operator(const FockBasis& basis, const std::vector<std::size_t>& cell);

/// Total charge, the charge of all sites.
SparseOperator total_charge(const FockBasis& basis);

/// W = i^{n(n-1)/2} prod_{k in neg} (c_k + c_k^dag): hermitian, unitary,
/// involutive, mapping the empty reference to the filled reference.
SparseOperator hole_map(const FockBasis& basis);
CVector hole_map_apply(const FockBasis& basis, const CVector& state);

/// Amplitudes in the site-occupation basis (bit 2*site + s), obtained with
/// determinants of mode submatrices per particle-number block.
CVector site_occupation_amplitudes(const FockBasis& basis, const CVector& state);
/// Inverse of site_occupation_amplitudes.
CVector from_site_occupation(const FockBasis& basis, const CVector& site_amplitudes);

/// Cells are site lists partitioning the lattice.
std::vector<std::vector<std::size_t>> split_cells(std::size_t sites, std::size_t cells);

struct SignedConfiguration {
  std::vector<int> cell_charges;      // Q(cell) / e
  std::vector<double> positive_points;
  std::vector<double> negative_points;
};

/// Joint Born distribution of the commuting cell charges (in units of e).
/// Only available for the filled convention, where Q(A) = -e (N_A - |A|) is
/// diagonal in the site-occupation basis.
std::map<std::vector<int>, double> cell_charge_distribution(const FockBasis& basis, const CVector& state,
                                                            const std::vector<std::vector<std::size_t>>& cells);

/// Samples joint cell-charge outcomes with Born weights; each unit of charge
/// becomes a signed point at the cell's centre. Sample k uses the stream
/// (seed, "signed_config", k).
std::vector<SignedConfiguration> sample_signed_config(const FockBasis& basis, const CVector& state,
                                                      const std::vector<std::vector<std::size_t>>& cells,
                                                      std::size_t count, std::uint64_t seed);

struct PositronMotionReport {
  double deviation = 0.0;
  double positive_fraction = 0.0;  // ||P+ psi||^2 / ||psi||^2
  std::optional<std::string> warning;
};

/// Evolves the packet under H(+e, V) and its charge conjugate under H(-e, V)
/// and returns ||C psi(T) - (C psi)(T)||. `conjugation` defaults to alpha; a
/// different matrix serves as a negative control.
PositronMotionReport positron_motion_check(const SpinorField& packet, double mass, double charge,
                                           const std::vector<double>& potential, double duration,
                                           const std::optional<Eigen::Matrix2cd>& conjugation = std::nullopt);

}  // namespace diraclab
