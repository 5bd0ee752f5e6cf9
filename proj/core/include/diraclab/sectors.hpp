#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "diraclab/dirac.hpp"

namespace diraclab {

/// Sector label (m, n): m electrons, n photons.
struct SectorId {
  int electrons = 0;
  int photons = 0;
  auto operator<=>(const SectorId&) const = default;
};

struct Truncation {
  int max_electrons = 1;
  int max_photons = 0;
  std::size_t budget = 2'000'000;
};

/// Index bookkeeping for the truncated sector family. Electron slots carry a
/// mode index 2*site + spin and are antisymmetrized (sorted mode sets);
/// photon slots carry a site index and are symmetrized (sorted multisets).
/// Within a sector, flat index = electron_rank * photon_dim + photon_rank,
/// both ranks in the colexicographic combinatorial number system.
class SectorSpace {
 public:
  struct Sector {
    SectorId id;
    std::size_t offset = 0;
    std::size_t electron_dim = 0;
    std::size_t photon_dim = 0;
    std::size_t dim() const noexcept { return electron_dim * photon_dim; }
  };

  SectorSpace(Lattice1D lattice, Truncation truncation);

  const Lattice1D& lattice() const noexcept { return lattice_; }
  const Truncation& truncation() const noexcept { return truncation_; }
  std::size_t modes() const noexcept { return 2 * lattice_.sites(); }
  std::size_t dimension() const noexcept { return dimension_; }

  const std::vector<Sector>& sectors() const noexcept { return sectors_; }
  bool contains(SectorId id) const noexcept;
  const Sector& sector(SectorId id) const;

  std::uint64_t binomial(std::size_t n, std::size_t k) const;

  std::size_t electron_rank(std::span<const std::size_t> sorted_modes) const;
  void electron_unrank(std::size_t rank, std::span<std::size_t> out) const;
  std::size_t photon_rank(std::span<const std::size_t> sorted_sites) const;
  void photon_unrank(std::size_t rank, std::span<std::size_t> out) const;

  std::size_t flat_index(SectorId id, std::size_t electron_rank, std::size_t photon_rank) const;

  bool operator==(const SectorSpace& other) const noexcept {
    return lattice_ == other.lattice_ && truncation_.max_electrons == other.truncation_.max_electrons &&
           truncation_.max_photons == other.truncation_.max_photons;
  }

 private:
  Lattice1D lattice_;
  Truncation truncation_;
  std::vector<Sector> sectors_;
  std::size_t dimension_ = 0;
  std::vector<std::vector<std::uint64_t>> binom_;
};

std::shared_ptr<const SectorSpace> build_sector_space(const Lattice1D& lattice, const Truncation& truncation);

/// Amplitudes over all sectors. Coefficients are with respect to orthonormal
/// (anti)symmetrized occupation states, so the squared norm is the plain sum
/// of |c|^2. A one-electron coefficient relates to a spinor field by
/// c = sqrt(a) * psi.
class SectorState {
 public:
  explicit SectorState(std::shared_ptr<const SectorSpace> space);
  SectorState(std::shared_ptr<const SectorSpace> space, CVector amplitudes);

  const SectorSpace& space() const noexcept { return *space_; }
  const std::shared_ptr<const SectorSpace>& space_ptr() const noexcept { return space_; }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  CVector& amplitudes() noexcept { return amplitudes_; }

  Eigen::VectorBlock<const CVector> sector(SectorId id) const;
  Eigen::VectorBlock<CVector> sector(SectorId id);

  double squared_norm() const { return amplitudes_.squaredNorm(); }
  SectorState normalized() const;

 private:
  std::shared_ptr<const SectorSpace> space_;
  CVector amplitudes_;
};

/// Embeds a one-electron field into sector (1, 0).
SectorState embed_single_electron(std::shared_ptr<const SectorSpace> space, const SpinorField& field);
/// Reads sector (1, 0) back as a spinor field.
SpinorField single_electron_field(const SectorState& state);

/// Full antisymmetric tensor T(p, q) of sector (2, 0); sum |T|^2 equals the
/// sector's squared norm.
CMatrix two_electron_tensor(const SectorState& state);
void set_two_electron_tensor(SectorState& state, const CMatrix& tensor);

/// Regularized vertex: normalized Gaussian of width `smearing` on the
/// lattice, sum_i a * profile = 1.
struct CouplingKernel {
  double charge = 0.0;
  double smearing = 0.0;
  std::vector<double> profile;  // indexed by periodic site offset y - x
};

CouplingKernel make_coupling_kernel(const Lattice1D& lattice, double charge, double smearing);

/// Pair creation vertex: a photon at y turns into a positive-energy and a
/// negative-energy particle, each shaped by a Gaussian of width `width`
/// around y (spinor (1,1)/sqrt 2), projected with the free energy projectors.
struct PairKernel {
  double strength = 0.0;
  double width = 1.0;
};

using SparseOperator = Eigen::SparseMatrix<complex>;

/// sum_j H_Dirac(slot j) + sum_k omega(p_k) on the whole sector family.
SparseOperator build_free_part(const SectorSpace& space, const DiracOperator& dirac);
/// Emission (m,n) -> (m,n+1) plus its adjoint; dropped at n = max_photons.
SparseOperator build_emission_part(const SectorSpace& space, const CouplingKernel& kernel);
/// Pair creation (m,n) -> (m+2,n-1) plus its adjoint.
SparseOperator build_pair_part(const SectorSpace& space, const EnergyProjectors& free_projectors,
                               const PairKernel& kernel);

/// Pair amplitudes K_y(p, q) for p < q (antisymmetrized), one dense matrix per site y.
std::vector<CMatrix> pair_amplitudes(const Lattice1D& lattice, const EnergyProjectors& free_projectors,
                                     double width);

/// Photon dispersion omega = |p| as a dense L x L matrix.
CMatrix photon_dispersion(const Lattice1D& lattice);

/// Assembled Landau-Peierls operator on a sector family, with optional pair
/// terms. Caches its dense eigen-decomposition for small spaces.
class SectorHamiltonian {
 public:
  SectorHamiltonian(std::shared_ptr<const SectorSpace> space, const DiracOperator& dirac,
                    const CouplingKernel& kernel, std::optional<PairKernel> pair = std::nullopt);

  const SectorSpace& space() const noexcept { return *space_; }
  const std::shared_ptr<const SectorSpace>& space_ptr() const noexcept { return space_; }
  const SparseOperator& matrix() const noexcept { return matrix_; }
  const SparseOperator& free_part() const noexcept { return free_; }
  const SparseOperator& interaction_part() const noexcept { return interaction_; }

  SectorState apply(const SectorState& state) const;
  CMatrix dense() const { return CMatrix(matrix_); }
  const Spectrum& dense_spectrum() const;

  /// Dense exponential is used up to this dimension; Krylov stepping beyond.
  static constexpr std::size_t kDenseLimit = 400;

 private:
  struct Cache;
  std::shared_ptr<const SectorSpace> space_;
  SparseOperator free_;
  SparseOperator interaction_;
  SparseOperator matrix_;
  std::shared_ptr<Cache> cache_;
};

SectorState lp_hamiltonian_apply(const SectorState& state, const DiracOperator& dirac,
                                 const CouplingKernel& kernel);
SectorState pair_terms_apply(const SectorState& state, const EnergyProjectors& free_projectors,
                             const PairKernel& kernel);

SectorState evolve_sectors(const SectorState& state, const SectorHamiltonian& hamiltonian, double t);

/// Lanczos propagation exp(-i H t) v with adaptive substeps; throws
/// KrylovFailure when the local error estimate cannot be met.
CVector krylov_expm(const SparseOperator& h, const CVector& v, double t, double tolerance = 1e-11,
                    int krylov_dim = 40);

/// || (U1 U2 - U2 U1) Psi || for free single-slot propagators on sector (2,0).
double multitime_consistency(const SectorState& state, const DiracOperator& free_dirac, double dt);

/// Electron sites (lattice indices, in slot order) plus sector label.
struct SiteConfiguration {
  std::vector<std::size_t> sites;
  SectorId sector;
};

/// rho = sum over spinor labels and photon states of |Psi|^2 at the given
/// electron sites, normalized so that summing a^m rho over all ordered site
/// tuples of a sector gives that sector's probability.
double born_density(const SectorState& state, const SiteConfiguration& config);

std::map<SectorId, double> sector_probabilities(const SectorState& state);

double expectation(const SectorState& state, const SparseOperator& op);

/// JSON header plus one "index,re,im" CSV per sector.
void save_sector_state(const SectorState& state, const std::filesystem::path& directory);
SectorState load_sector_state(const std::filesystem::path& directory);

}  // namespace diraclab
