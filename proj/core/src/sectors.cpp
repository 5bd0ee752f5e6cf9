#include "diraclab/sectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <array>
#include <mutex>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diraclab/errors.hpp"

namespace diraclab {
namespace {

using Triplet = Eigen::Triplet<complex>;

std::string sector_name(SectorId id) {
  return std::to_string(id.electrons) + "," + std::to_string(id.photons);
}

// Unranked basis of one sector: electron mode sets and photon multisets.
struct SectorBasis {
  std::vector<std::vector<std::size_t>> electrons;
  std::vector<std::vector<std::size_t>> photons;
};

SectorBasis enumerate(const SectorSpace& space, const SectorSpace::Sector& s) {
  SectorBasis b;
  b.electrons.resize(s.electron_dim, std::vector<std::size_t>(static_cast<std::size_t>(s.id.electrons)));
  for (std::size_t r = 0; r < s.electron_dim; ++r) space.electron_unrank(r, b.electrons[r]);
  b.photons.resize(s.photon_dim, std::vector<std::size_t>(static_cast<std::size_t>(s.id.photons)));
  for (std::size_t r = 0; r < s.photon_dim; ++r) space.photon_unrank(r, b.photons[r]);
  return b;
}

std::size_t count_below(const std::vector<std::size_t>& sorted, std::size_t value) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

bool contains(const std::vector<std::size_t>& sorted, std::size_t value) {
  return std::binary_search(sorted.begin(), sorted.end(), value);
}

std::size_t multiplicity(const std::vector<std::size_t>& sorted, std::size_t value) {
  const auto range = std::equal_range(sorted.begin(), sorted.end(), value);
  return static_cast<std::size_t>(range.second - range.first);
}

void insert_sorted(std::vector<std::size_t>& v, std::size_t value) {
  v.insert(std::upper_bound(v.begin(), v.end(), value), value);
}

void erase_one(std::vector<std::size_t>& v, std::size_t value) {
  v.erase(std::lower_bound(v.begin(), v.end(), value));
}

// a_p^dagger a_q on a sorted mode set with q occupied; returns the sign or 0.
int hop(const std::vector<std::size_t>& set, std::size_t q, std::size_t p, std::vector<std::size_t>& out) {
  out = set;
  const std::size_t below_q = count_below(out, q);
  erase_one(out, q);
  if (contains(out, p)) return 0;
  const std::size_t below_p = count_below(out, p);
  insert_sorted(out, p);
  return ((below_q + below_p) % 2 == 0) ? 1 : -1;
}

void check_same_space(const SectorState& state, const SectorSpace& space) {
  if (!(state.space() == space)) throw InvalidInput("state and operator use different sector spaces");
}

}  // namespace

// ---------------------------------------------------------------- SectorSpace

SectorSpace::SectorSpace(Lattice1D lattice, Truncation truncation)
    : lattice_(lattice), truncation_(truncation) {
  if (truncation.max_electrons < 0 || truncation.max_photons < 0) {
    throw InvalidInput("truncation limits must be nonnegative");
  }
  const std::size_t modes = 2 * lattice.sites();
  const auto m_max = static_cast<std::size_t>(truncation.max_electrons);
  const auto n_max = static_cast<std::size_t>(truncation.max_photons);
  if (m_max > modes) throw InvalidInput("more electrons than single-particle modes");

  // Dimension estimate in floating point first so huge requests fail cleanly.
  auto approx_binom = [](std::size_t n, std::size_t k) {
    long double r = 1.0L;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    return r;
  };
  long double total = 0.0L;
  for (std::size_t m = 0; m <= m_max; ++m) {
    for (std::size_t n = 0; n <= n_max; ++n) {
      const long double photon = n == 0 ? 1.0L : approx_binom(lattice.sites() + n - 1, n);
      total += approx_binom(modes, m) * photon;
    }
  }
  if (total > static_cast<long double>(truncation.budget)) {
    std::ostringstream msg;
    msg << "sector space needs " << static_cast<double>(total) << " amplitudes, budget is "
        << truncation.budget;
    throw BudgetExceeded(msg.str(), static_cast<std::size_t>(std::min(total, 1e18L)));
  }

  const std::size_t rows = std::max(modes, lattice.sites() + n_max) + 1;
  const std::size_t cols = std::max(m_max, n_max) + 2;
  binom_.assign(rows, std::vector<std::uint64_t>(cols, 0));
  for (std::size_t n = 0; n < rows; ++n) {
    binom_[n][0] = 1;
    for (std::size_t k = 1; k < cols && k <= n; ++k) {
      binom_[n][k] = binom_[n - 1][k - 1] + (k <= n - 1 ? binom_[n - 1][k] : 0);
    }
  }

  for (std::size_t m = 0; m <= m_max; ++m) {
    for (std::size_t n = 0; n <= n_max; ++n) {
      Sector s;
      s.id = SectorId{static_cast<int>(m), static_cast<int>(n)};
      s.offset = dimension_;
      s.electron_dim = binomial(modes, m);
      s.photon_dim = n == 0 ? 1 : binomial(lattice.sites() + n - 1, n);
      dimension_ += s.dim();
      sectors_.push_back(s);
    }
  }
}

bool SectorSpace::contains(SectorId id) const noexcept {
  return id.electrons >= 0 && id.photons >= 0 && id.electrons <= truncation_.max_electrons &&
         id.photons <= truncation_.max_photons;
}

const SectorSpace::Sector& SectorSpace::sector(SectorId id) const {
  if (!contains(id)) {
    throw InvalidInput("sector (" + sector_name(id) + ") lies outside the truncation");
  }
  return sectors_[static_cast<std::size_t>(id.electrons) * static_cast<std::size_t>(truncation_.max_photons + 1) +
                  static_cast<std::size_t>(id.photons)];
}

std::uint64_t SectorSpace::binomial(std::size_t n, std::size_t k) const {
  if (k > n) return 0;
  return binom_[n][k];
}

std::size_t SectorSpace::electron_rank(std::span<const std::size_t> sorted_modes) const {
  std::size_t r = 0;
  for (std::size_t i = 0; i < sorted_modes.size(); ++i) r += binomial(sorted_modes[i], i + 1);
  return r;
}

void SectorSpace::electron_unrank(std::size_t rank, std::span<std::size_t> out) const {
  std::size_t r = rank;
  for (std::size_t i = out.size(); i >= 1; --i) {
    std::size_t c = i - 1;
    while (binomial(c + 1, i) <= r) ++c;
    out[i - 1] = c;
    r -= binomial(c, i);
  }
}

std::size_t SectorSpace::photon_rank(std::span<const std::size_t> sorted_sites) const {
  std::size_t r = 0;
  for (std::size_t i = 0; i < sorted_sites.size(); ++i) r += binomial(sorted_sites[i] + i, i + 1);
  return r;
}

void SectorSpace::photon_unrank(std::size_t rank, std::span<std::size_t> out) const {
  electron_unrank(rank, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= i;
}

std::size_t SectorSpace::flat_index(SectorId id, std::size_t electron_rank, std::size_t photon_rank) const {
  const Sector& s = sector(id);
  return s.offset + electron_rank * s.photon_dim + photon_rank;
}

std::shared_ptr<const SectorSpace> build_sector_space(const Lattice1D& lattice, const Truncation& truncation) {
  return std::make_shared<const SectorSpace>(lattice, truncation);
}

// ---------------------------------------------------------------- SectorState

SectorState::SectorState(std::shared_ptr<const SectorSpace> space)
    : space_(std::move(space)),
      amplitudes_(CVector::Zero(static_cast<Eigen::Index>(space_->dimension()))) {}

SectorState::SectorState(std::shared_ptr<const SectorSpace> space, CVector amplitudes)
    : space_(std::move(space)), amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.size() != static_cast<Eigen::Index>(space_->dimension())) {
    throw InvalidInput("amplitude vector does not match the sector space dimension");
  }
}

Eigen::VectorBlock<const CVector> SectorState::sector(SectorId id) const {
  const auto& s = space_->sector(id);
  return amplitudes_.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.dim()));
}

Eigen::VectorBlock<CVector> SectorState::sector(SectorId id) {
  const auto& s = space_->sector(id);
  return amplitudes_.segment(static_cast<Eigen::Index>(s.offset), static_cast<Eigen::Index>(s.dim()));
}

SectorState SectorState::normalized() const {
  const double n = amplitudes_.norm();
  if (n == 0.0) throw InvalidInput("cannot normalize the zero state");
  return SectorState(space_, amplitudes_ / n);
}

SectorState embed_single_electron(std::shared_ptr<const SectorSpace> space, const SpinorField& field) {
  if (!(space->lattice() == field.lattice())) throw InvalidInput("field lattice differs from sector lattice");
  SectorState state(std::move(space));
  state.sector({1, 0}) = std::sqrt(field.lattice().spacing()) * field.amplitudes();
  return state;
}

SpinorField single_electron_field(const SectorState& state) {
  const Lattice1D& lat = state.space().lattice();
  return SpinorField(lat, state.sector({1, 0}) / std::sqrt(lat.spacing()));
}

CMatrix two_electron_tensor(const SectorState& state) {
  const SectorSpace& space = state.space();
  const auto& s = space.sector({2, 0});
  const std::size_t modes = space.modes();
  CMatrix t = CMatrix::Zero(static_cast<Eigen::Index>(modes), static_cast<Eigen::Index>(modes));
  std::array<std::size_t, 2> pq{};
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (std::size_t r = 0; r < s.electron_dim; ++r) {
    space.electron_unrank(r, pq);
    const complex c = state.amplitudes()[static_cast<Eigen::Index>(s.offset + r)];
    t(static_cast<Eigen::Index>(pq[0]), static_cast<Eigen::Index>(pq[1])) = c * inv_sqrt2;
    t(static_cast<Eigen::Index>(pq[1]), static_cast<Eigen::Index>(pq[0])) = -c * inv_sqrt2;
  }
  return t;
}

void set_two_electron_tensor(SectorState& state, const CMatrix& tensor) {
  const SectorSpace& space = state.space();
  const auto& s = space.sector({2, 0});
  if (tensor.rows() != static_cast<Eigen::Index>(space.modes()) || tensor.cols() != tensor.rows()) {
    throw InvalidInput("two-electron tensor has the wrong shape");
  }
  std::array<std::size_t, 2> pq{};
  for (std::size_t r = 0; r < s.electron_dim; ++r) {
    space.electron_unrank(r, pq);
    const auto p = static_cast<Eigen::Index>(pq[0]);
    const auto q = static_cast<Eigen::Index>(pq[1]);
    // antisymmetric part
    state.amplitudes()[static_cast<Eigen::Index>(s.offset + r)] =
        (tensor(p, q) - tensor(q, p)) / std::numbers::sqrt2;
  }
}

// ---------------------------------------------------------------- kernels

CouplingKernel make_coupling_kernel(const Lattice1D& lattice, double charge, double smearing) {
  if (!std::isfinite(charge)) throw InvalidInput("coupling charge must be finite");
  if (!(smearing > 0.0) || !std::isfinite(smearing)) throw InvalidInput("smearing width must be positive");
  CouplingKernel k{charge, smearing, std::vector<double>(lattice.sites())};
  double total = 0.0;
  for (std::size_t d = 0; d < lattice.sites(); ++d) {
    const double x = lattice.distance(lattice.coordinate(d), 0.0);
    k.profile[d] = std::exp(-x * x / (2.0 * smearing * smearing));
    total += lattice.spacing() * k.profile[d];
  }
  for (double& v : k.profile) v /= total;
  return k;
}

CMatrix photon_dispersion(const Lattice1D& lattice) {
  auto p = lattice.momentum_grid();
  for (double& v : p) v = std::fabs(v);
  return momentum_function_matrix(lattice, p);
}

std::vector<CMatrix> pair_amplitudes(const Lattice1D& lattice, const EnergyProjectors& free_projectors,
                                     double width) {
  if (!(width > 0.0)) throw InvalidInput("pair profile width must be positive");
  const std::size_t n = lattice.sites();
  std::vector<CMatrix> out;
  out.reserve(n);
  for (std::size_t y = 0; y < n; ++y) {
    SpinorField g = gaussian_packet(lattice, lattice.coordinate(y), width, 0.0,
                                    Eigen::Vector2cd(1.0, 1.0) / std::numbers::sqrt2);
    const CVector shape = g.amplitudes().normalized();
    const SpinorField sf(lattice, shape);
    const CVector plus = free_projectors.apply_plus(sf).amplitudes();
    const CVector minus = free_projectors.apply_minus(sf).amplitudes();
    const CMatrix f = plus * minus.transpose();
    out.push_back(f - f.transpose());
  }
  return out;
}

// ---------------------------------------------------------------- assembly

SparseOperator build_free_part(const SectorSpace& space, const DiracOperator& dirac) {
  if (!(dirac.lattice() == space.lattice())) throw InvalidInput("Dirac operator lattice differs from sector lattice");
  const CMatrix& h = dirac.matrix();
  const CMatrix omega = photon_dispersion(space.lattice());
  const std::size_t modes = space.modes();
  const std::size_t sites = space.lattice().sites();
  std::vector<Triplet> triplets;
  std::vector<std::size_t> scratch;
  for (const auto& s : space.sectors()) {
    const SectorBasis basis = enumerate(space, s);
    for (std::size_t er = 0; er < s.electron_dim; ++er) {
      const auto& set = basis.electrons[er];
      for (std::size_t pr = 0; pr < s.photon_dim; ++pr) {
        const std::size_t col = s.offset + er * s.photon_dim + pr;
        // electrons
        for (std::size_t q : set) {
          for (std::size_t p = 0; p < modes; ++p) {
            const complex hpq = h(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
            if (hpq == complex(0.0)) continue;
            if (p == q) {
              triplets.emplace_back(col, col, hpq);
              continue;
            }
            const int sign = hop(set, q, p, scratch);
            if (sign == 0) continue;
            const std::size_t row = s.offset + space.electron_rank(scratch) * s.photon_dim + pr;
            triplets.emplace_back(row, col, static_cast<double>(sign) * hpq);
          }
        }
        // photons
        const auto& ph = basis.photons[pr];
        for (std::size_t i = 0; i < ph.size(); ++i) {
          if (i > 0 && ph[i] == ph[i - 1]) continue;
          const std::size_t y = ph[i];
          const auto ny = static_cast<double>(multiplicity(ph, y));
          for (std::size_t y2 = 0; y2 < sites; ++y2) {
            const complex w = omega(static_cast<Eigen::Index>(y2), static_cast<Eigen::Index>(y));
            if (w == complex(0.0)) continue;
            if (y2 == y) {
              triplets.emplace_back(col, col, w * ny);
              continue;
            }
            scratch = ph;
            erase_one(scratch, y);
            const auto ny2 = static_cast<double>(multiplicity(scratch, y2));
            insert_sorted(scratch, y2);
            const std::size_t row = s.offset + er * s.photon_dim + space.photon_rank(scratch);
            triplets.emplace_back(row, col, w * std::sqrt(ny * (ny2 + 1.0)));
          }
        }
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(space.dimension());
  SparseOperator m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseOperator build_emission_part(const SectorSpace& space, const CouplingKernel& kernel) {
  const Lattice1D& lat = space.lattice();
  if (kernel.profile.size() != lat.sites()) throw InvalidInput("coupling kernel built for another lattice");
  const std::size_t sites = lat.sites();
  const double scale = kernel.charge * std::sqrt(lat.spacing());
  std::vector<Triplet> triplets;
  std::vector<std::size_t> moved, photons;
  const int n_top = space.truncation().max_photons;
  for (const auto& s : space.sectors()) {
    if (s.id.photons >= n_top || s.id.electrons == 0) continue;
    const auto& target = space.sector({s.id.electrons, s.id.photons + 1});
    const SectorBasis basis = enumerate(space, s);
    for (std::size_t er = 0; er < s.electron_dim; ++er) {
      const auto& set = basis.electrons[er];
      for (std::size_t q : set) {
        const std::size_t x = q / 2;
        for (std::size_t spin = 0; spin < 2; ++spin) {
          const complex a = spinor::alpha()(static_cast<Eigen::Index>(spin), static_cast<Eigen::Index>(q % 2));
          if (a == complex(0.0)) continue;
          const std::size_t p = 2 * x + spin;
          int sign = 1;
          if (p == q) {
            moved = set;
          } else {
            sign = hop(set, q, p, moved);
            if (sign == 0) continue;
          }
          const std::size_t e_rank = space.electron_rank(moved);
          for (std::size_t pr = 0; pr < s.photon_dim; ++pr) {
            const std::size_t col = s.offset + er * s.photon_dim + pr;
            for (std::size_t y = 0; y < sites; ++y) {
              const double chi = kernel.profile[(y + sites - x) % sites];
              if (chi == 0.0) continue;
              photons = basis.photons[pr];
              const auto ny = static_cast<double>(multiplicity(photons, y));
              insert_sorted(photons, y);
              const std::size_t row = target.offset + e_rank * target.photon_dim + space.photon_rank(photons);
              triplets.emplace_back(row, col, static_cast<double>(sign) * scale * chi * std::sqrt(ny + 1.0) * a);
            }
          }
        }
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(space.dimension());
  SparseOperator emit(dim, dim);
  emit.setFromTriplets(triplets.begin(), triplets.end());
  SparseOperator h = emit + SparseOperator(emit.adjoint());
  return h;
}

SparseOperator build_pair_part(const SectorSpace& space, const EnergyProjectors& free_projectors,
                               const PairKernel& kernel) {
  const auto dim = static_cast<Eigen::Index>(space.dimension());
  SparseOperator out(dim, dim);
  if (kernel.strength < 0.0) throw InvalidInput("pair strength must be nonnegative");
  if (kernel.strength == 0.0) return out;
  const std::vector<CMatrix> amp = pair_amplitudes(space.lattice(), free_projectors, kernel.width);
  const std::size_t modes = space.modes();
  std::vector<Triplet> triplets;
  std::vector<std::size_t> created, photons;
  for (const auto& s : space.sectors()) {
    if (s.id.photons == 0 || s.id.electrons + 2 > space.truncation().max_electrons) continue;
    const auto& target = space.sector({s.id.electrons + 2, s.id.photons - 1});
    const SectorBasis basis = enumerate(space, s);
    for (std::size_t er = 0; er < s.electron_dim; ++er) {
      const auto& set = basis.electrons[er];
      for (std::size_t pr = 0; pr < s.photon_dim; ++pr) {
        const std::size_t col = s.offset + er * s.photon_dim + pr;
        const auto& ph = basis.photons[pr];
        for (std::size_t i = 0; i < ph.size(); ++i) {
          if (i > 0 && ph[i] == ph[i - 1]) continue;
          const std::size_t y = ph[i];
          const double ny = static_cast<double>(multiplicity(ph, y));
          photons = ph;
          erase_one(photons, y);
          const std::size_t p_rank = space.photon_rank(photons);
          const CMatrix& k = amp[y];
          for (std::size_t p = 0; p < modes; ++p) {
            if (contains(set, p)) continue;
            for (std::size_t q = p + 1; q < modes; ++q) {
              if (contains(set, q)) continue;
              const complex kpq = k(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
              if (kpq == complex(0.0)) continue;
              const std::size_t flips = count_below(set, p) + count_below(set, q);
              created = set;
              insert_sorted(created, p);
              insert_sorted(created, q);
              const std::size_t row = target.offset + space.electron_rank(created) * target.photon_dim + p_rank;
              const double sign = (flips % 2 == 0) ? 1.0 : -1.0;
              triplets.emplace_back(row, col, sign * kernel.strength * std::sqrt(ny) * kpq);
            }
          }
        }
      }
    }
  }
  SparseOperator create(dim, dim);
  create.setFromTriplets(triplets.begin(), triplets.end());
  out = create + SparseOperator(create.adjoint());
  return out;
}

struct SectorHamiltonian::Cache {
  std::once_flag once;
  Spectrum spectrum;
};

SectorHamiltonian::SectorHamiltonian(std::shared_ptr<const SectorSpace> space, const DiracOperator& dirac,
                                     const CouplingKernel& kernel, std::optional<PairKernel> pair)
    : space_(std::move(space)), cache_(std::make_shared<Cache>()) {
  free_ = build_free_part(*space_, dirac);
  interaction_ = build_emission_part(*space_, kernel);
  if (pair && pair->strength != 0.0) {
    const EnergyProjectors proj = spectral_split(
        DiracOperator::free(dirac.lattice(), dirac.mass(), dirac.charge()));
    interaction_ = SparseOperator(interaction_ + build_pair_part(*space_, proj, *pair));
  }
  matrix_ = free_ + interaction_;
}

SectorState SectorHamiltonian::apply(const SectorState& state) const {
  check_same_space(state, *space_);
  return SectorState(space_, matrix_ * state.amplitudes());
}

const Spectrum& SectorHamiltonian::dense_spectrum() const {
  std::call_once(cache_->once, [this] {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(dense());
    if (solver.info() != Eigen::Success) throw Error("sector Hamiltonian eigen-decomposition failed");
    cache_->spectrum.values = solver.eigenvalues();
    cache_->spectrum.vectors = solver.eigenvectors();
  });
  return cache_->spectrum;
}

SectorState lp_hamiltonian_apply(const SectorState& state, const DiracOperator& dirac,
                                 const CouplingKernel& kernel) {
  const SectorSpace& space = state.space();
  if (!(dirac.lattice() == space.lattice()) || kernel.profile.size() != space.lattice().sites()) {
    throw InvalidInput("operator ingredients do not match the state's lattice");
  }
  const SparseOperator h = build_free_part(space, dirac) + build_emission_part(space, kernel);
  return SectorState(state.space_ptr(), h * state.amplitudes());
}

SectorState pair_terms_apply(const SectorState& state, const EnergyProjectors& free_projectors,
                             const PairKernel& kernel) {
  const SparseOperator h = build_pair_part(state.space(), free_projectors, kernel);
  return SectorState(state.space_ptr(), h * state.amplitudes());
}

// ---------------------------------------------------------------- evolution

CVector krylov_expm(const SparseOperator& h, const CVector& v, double t, double tolerance, int krylov_dim) {
  if (!std::isfinite(t)) throw InvalidInput("evolution time must be finite");
  CVector w = v;
  if (t == 0.0 || v.norm() == 0.0) return w;
  const Eigen::Index n = v.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_dim, n));
  const double sign = t > 0 ? 1.0 : -1.0;
  double remaining = std::fabs(t);
  double tau = remaining;
  const double total = remaining;
  const double min_step = 1e-10 * total;
  while (remaining > 0.0) {
    const double beta = w.norm();
    CMatrix basis(n, m_max + 1);
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m_max + 1, m_max + 1);
    basis.col(0) = w / beta;
    int m = m_max;
    double next_beta = 0.0;
    for (int j = 0; j < m_max; ++j) {
      CVector u = h * basis.col(j);
      for (int i = 0; i <= j; ++i) {  // full reorthogonalization
        const complex c = basis.col(i).dot(u);
        u -= c * basis.col(i);
        if (i == j) tri(j, j) += c.real();
      }
      for (int i = 0; i <= j; ++i) u -= basis.col(i).dot(u) * basis.col(i);
      next_beta = u.norm();
      if (next_beta < 1e-13 * beta || j + 1 == n) {
        m = j + 1;
        next_beta = 0.0;
        break;
      }
      tri(j + 1, j) = tri(j, j + 1) = next_beta;
      basis.col(j + 1) = u / next_beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri.topLeftCorner(m, m));
    while (true) {
      const double step = std::min(tau, remaining);
      Eigen::VectorXcd phase(m);
      for (int i = 0; i < m; ++i) phase[i] = std::exp(complex(0.0, -sign * es.eigenvalues()[i] * step));
      const Eigen::VectorXcd e1 = es.eigenvectors().row(0).transpose().cast<complex>();
      const Eigen::VectorXcd y = es.eigenvectors().cast<complex>() * phase.cwiseProduct(e1);
      const double err = beta * next_beta * std::abs(y[m - 1]);
      if (err <= tolerance * step / total || next_beta == 0.0) {
        w = beta * (basis.leftCols(m) * y);
        remaining -= step;
        tau = std::min(remaining > 0 ? remaining : step, 1.5 * step);
        break;
      }
      tau = 0.5 * step;
      if (tau < min_step) {
        throw KrylovFailure("Krylov propagation failed: local error " + std::to_string(err) +
                            " above tolerance at step " + std::to_string(step));
      }
    }
  }
  return w;
}

SectorState evolve_sectors(const SectorState& state, const SectorHamiltonian& hamiltonian, double t) {
  check_same_space(state, hamiltonian.space());
  if (!std::isfinite(t)) throw InvalidInput("evolution time must be finite");
  if (t == 0.0) return state;
  if (hamiltonian.space().dimension() <= SectorHamiltonian::kDenseLimit) {
    const Spectrum& s = hamiltonian.dense_spectrum();
    CVector c = s.vectors.adjoint() * state.amplitudes();
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(complex(0.0, -s.values[i] * t));
    return SectorState(state.space_ptr(), s.vectors * c);
  }
  return SectorState(state.space_ptr(), krylov_expm(hamiltonian.matrix(), state.amplitudes(), t));
}

double multitime_consistency(const SectorState& state, const DiracOperator& free_dirac, double dt) {
  const SectorSpace& space = state.space();
  if (!space.contains({2, 0})) throw InvalidInput("multi-time check needs sector (2,0)");
  if (state.sector({2, 0}).norm() == 0.0) throw InvalidInput("sector (2,0) is not populated");
  if (!(free_dirac.lattice() == space.lattice())) throw InvalidInput("Dirac operator lattice differs");
  if (dt == 0.0) return 0.0;
  const Spectrum& s = free_dirac.spectrum();
  CVector phase(s.values.size());
  for (Eigen::Index i = 0; i < phase.size(); ++i) phase[i] = std::exp(complex(0.0, -s.values[i] * dt));
  const CMatrix u = s.vectors * phase.asDiagonal() * s.vectors.adjoint();
  const CMatrix psi = two_electron_tensor(state);
  // slot 1 acts on the row index, slot 2 on the column index
  const CMatrix u1u2 = u * (psi * u.transpose());
  const CMatrix u2u1 = (u * psi) * u.transpose();
  return (u1u2 - u2u1).norm();
}

double born_density(const SectorState& state, const SiteConfiguration& config) {
  const SectorSpace& space = state.space();
  const auto& s = space.sector(config.sector);
  const std::size_t m = static_cast<std::size_t>(config.sector.electrons);
  if (config.sites.size() != m) throw InvalidInput("configuration size does not match the sector's electron count");
  for (std::size_t x : config.sites) {
    if (x >= space.lattice().sites()) throw InvalidInput("configuration site outside the lattice");
  }
  double factorial = 1.0;
  for (std::size_t i = 2; i <= m; ++i) factorial *= static_cast<double>(i);
  const double weight = 1.0 / (factorial * std::pow(space.lattice().spacing(), static_cast<double>(m)));
  double rho = 0.0;
  std::vector<std::size_t> modes(m);
  for (std::size_t spins = 0; spins < (std::size_t{1} << m); ++spins) {
    for (std::size_t j = 0; j < m; ++j) modes[j] = 2 * config.sites[j] + ((spins >> j) & 1u);
    std::sort(modes.begin(), modes.end());
    if (std::adjacent_find(modes.begin(), modes.end()) != modes.end()) continue;
    const std::size_t base = s.offset + space.electron_rank(modes) * s.photon_dim;
    for (std::size_t pr = 0; pr < s.photon_dim; ++pr) {
      rho += std::norm(state.amplitudes()[static_cast<Eigen::Index>(base + pr)]);
    }
  }
  return rho * weight;
}

std::map<SectorId, double> sector_probabilities(const SectorState& state) {
  std::map<SectorId, double> p;
  for (const auto& s : state.space().sectors()) p[s.id] = state.sector(s.id).squaredNorm();
  return p;
}

double expectation(const SectorState& state, const SparseOperator& op) {
  return state.amplitudes().dot(op * state.amplitudes()).real();
}

// ---------------------------------------------------------------- serialization

void save_sector_state(const SectorState& state, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const SectorSpace& space = state.space();
  nlohmann::json header;
  header["format"] = "diraclab-sector-state/1";
  header["lattice"] = {{"sites", space.lattice().sites()}, {"spacing", space.lattice().spacing()}};
  header["truncation"] = {{"max_electrons", space.truncation().max_electrons},
                          {"max_photons", space.truncation().max_photons}};
  header["index"] =
      "row index = electron_rank * photon_dim + photon_rank; electron_rank is the colex rank "
      "sum_i C(mode_i, i+1) of the sorted electron modes (mode = 2*site + spin); photon_rank is "
      "the colex rank of (site_i + i) over the sorted photon sites";
  header["amplitude_convention"] =
      "orthonormal (anti)symmetrized occupation basis; one-electron coefficient = sqrt(spacing) * psi";
  nlohmann::json sectors = nlohmann::json::array();
  for (const auto& s : space.sectors()) {
    const std::string file = "sector_" + std::to_string(s.id.electrons) + "_" + std::to_string(s.id.photons) + ".csv";
    sectors.push_back({{"electrons", s.id.electrons},
                       {"photons", s.id.photons},
                       {"dim", s.dim()},
                       {"electron_dim", s.electron_dim},
                       {"photon_dim", s.photon_dim},
                       {"file", file}});
    std::ofstream out(directory / file);
    out.precision(17);
    out << "index,re,im\n";
    const auto block = state.sector(s.id);
    for (Eigen::Index i = 0; i < block.size(); ++i) {
      out << i << ',' << block[i].real() << ',' << block[i].imag() << '\n';
    }
  }
  header["sectors"] = sectors;
  std::ofstream(directory / "header.json") << header.dump(2) << '\n';
}

SectorState load_sector_state(const std::filesystem::path& directory) {
  std::ifstream in(directory / "header.json");
  if (!in) throw InvalidInput("missing header.json in " + directory.string());
  const nlohmann::json header = nlohmann::json::parse(in);
  if (header.value("format", "") != "diraclab-sector-state/1") throw InvalidInput("unknown sector state format");
  const Lattice1D lattice(header["lattice"]["sites"].get<std::size_t>(), header["lattice"]["spacing"].get<double>());
  Truncation trunc;
  trunc.max_electrons = header["truncation"]["max_electrons"].get<int>();
  trunc.max_photons = header["truncation"]["max_photons"].get<int>();
  auto space = build_sector_space(lattice, trunc);
  SectorState state(space);
  for (const auto& entry : header["sectors"]) {
    const SectorId id{entry["electrons"].get<int>(), entry["photons"].get<int>()};
    auto block = state.sector(id);
    if (entry["dim"].get<std::size_t>() != static_cast<std::size_t>(block.size())) {
      throw InvalidInput("sector dimension mismatch in header");
    }
    std::ifstream csv(directory / entry["file"].get<std::string>());
    if (!csv) throw InvalidInput("missing sector file " + entry["file"].get<std::string>());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string idx, re, im;
      std::getline(row, idx, ',');
      std::getline(row, re, ',');
      std::getline(row, im, ',');
      const auto i = static_cast<Eigen::Index>(std::stoul(idx));
      if (i >= block.size()) throw InvalidInput("sector row index out of range");
      block[i] = complex(std::stod(re), std::stod(im));
    }
  }
  return state;
}

}  // namespace diraclab
