#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "diraclab/errors.hpp"
#include "diraclab/sea.hpp"

namespace diraclab {
namespace {

// Dense Jordan-Wigner annihilator for mode k in a space of `modes` modes.
CMatrix dense_annihilator(std::size_t modes, std::size_t k) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << modes);
  CMatrix c = CMatrix::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (!(b >> k & 1)) continue;
    int parity = 0;
    for (std::size_t j = 0; j < k; ++j) parity += static_cast<int>(b >> j & 1);
    c(b ^ (Eigen::Index{1} << k), b) = parity % 2 ? -1.0 : 1.0;
  }
  return c;
}

// Q(A) from field operators a_j = sum_k U_jk c_k, normal ordered by subtracting
// the filled-sea expectation of the particle number in A.
CMatrix oracle_charge(const FockBasis& basis, const std::vector<std::size_t>& cell) {
  const std::size_t modes = basis.modes();
  std::vector<CMatrix> c;
  for (std::size_t k = 0; k < modes; ++k) c.push_back(dense_annihilator(modes, k));
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  CMatrix number = CMatrix::Zero(dim, dim);
  const CMatrix& u = basis.mode_vectors();
  for (std::size_t site : cell) {
    for (std::size_t s = 0; s < 2; ++s) {
      CMatrix a = CMatrix::Zero(dim, dim);
      const auto j = static_cast<Eigen::Index>(2 * site + s);
      for (std::size_t k = 0; k < modes; ++k) a += u(j, static_cast<Eigen::Index>(k)) * c[k];
      number += a.adjoint() * a;
    }
  }
  CVector omega = CVector::Zero(dim);
  omega[static_cast<Eigen::Index>((std::size_t{1} << basis.negative_modes()) - 1)] = 1.0;
  const complex mean = omega.dot(number * omega);
  return -basis.charge() * (number - mean * CMatrix::Identity(dim, dim));
}

double expectation(const CMatrix& op, const CVector& v) { return v.dot(op * v).real(); }

std::vector<std::vector<std::size_t>> all_proper_cells(std::size_t sites) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << sites); ++mask) {
    std::vector<std::size_t> cell;
    for (std::size_t i = 0; i < sites; ++i) {
      if (mask >> i & 1) cell.push_back(i);
    }
    out.push_back(cell);
  }
  return out;
}

TEST(FockBasis, DimensionAndGuard) {
  EXPECT_EQ(FockBasis(Lattice1D(2, 1.0), 1.0, SeaConvention::filled).dimension(), 16u);
  EXPECT_EQ(FockBasis(Lattice1D(3, 1.0), 1.0, SeaConvention::empty).dimension(), 64u);
  try {
    FockBasis(Lattice1D(7, 1.0), 1.0, SeaConvention::filled);
    FAIL() << "expected rejection";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("16384"), std::string::npos);
  }
  EXPECT_THROW(FockBasis(Lattice1D(4, 1.0), 0.0, SeaConvention::filled), GaplessSpectrum);
}

TEST(FockBasis, ReferenceStatesAndEnergies) {
  const Lattice1D lat(3, 0.7);
  const FockBasis filled(lat, 1.0, SeaConvention::filled);
  const FockBasis empty(lat, 1.0, SeaConvention::empty);
  EXPECT_EQ(filled.negative_modes(), 3u);
  EXPECT_NEAR(filled.reference_state().norm(), 1.0, 1e-15);
  EXPECT_NEAR(empty.reference_state().norm(), 1.0, 1e-15);

  const Eigen::VectorXd single = DiracOperator::free(lat, 1.0).spectrum().values;
  double negative_sum = 0.0;
  for (Eigen::Index i = 0; i < single.size(); ++i) negative_sum += std::min(0.0, single[i]);

  Eigen::SelfAdjointEigenSolver<CMatrix> hf{CMatrix(filled.hamiltonian())};
  Eigen::SelfAdjointEigenSolver<CMatrix> he{CMatrix(empty.hamiltonian())};
  EXPECT_NEAR(hf.eigenvalues().minCoeff(), 0.0, 1e-12);
  EXPECT_NEAR(expectation(CMatrix(filled.hamiltonian()), filled.reference_state()), 0.0, 1e-12);
  EXPECT_LT(he.eigenvalues().minCoeff(), 0.0);
  EXPECT_NEAR(he.eigenvalues().minCoeff(), negative_sum, 1e-12);
}

TEST(ChargeOperator, MatchesFieldOperatorOracle) {
  for (std::size_t sites : {2u, 3u}) {
    const FockBasis basis(Lattice1D(sites, 0.5), 1.3, SeaConvention::filled, 0.7);
    for (const auto& cell : all_proper_cells(sites)) {
      const CMatrix q = charge_operator(basis, cell);
      EXPECT_LT((q - oracle_charge(basis, cell)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ChargeOperator, EmptyCellIsZero) {
  const FockBasis basis(Lattice1D(3, 1.0), 1.0, SeaConvention::filled);
  EXPECT_EQ(charge_operator(basis, {}).nonZeros(), 0);
}

TEST(ChargeOperator, SpectrumIsIntegral) {
  const double e = 0.3;
  for (std::size_t sites : {2u, 3u, 4u}) {
    for (auto conv : {SeaConvention::filled, SeaConvention::empty}) {
      const FockBasis basis(Lattice1D(sites, 1.0), 0.8, conv, e);
      for (const auto& cell : split_cells(sites, 2)) {
        const CMatrix q = charge_operator(basis, cell);
        EXPECT_LT((q - q.adjoint()).norm(), 1e-13);
        Eigen::SelfAdjointEigenSolver<CMatrix> es(q, Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
          const double v = es.eigenvalues()[i] / e;
          EXPECT_NEAR(v, std::round(v), 1e-10);
        }
      }
    }
  }
}

TEST(ChargeOperator, CellsCommuteAndAddUp) {
  const std::size_t sites = 4;
  for (auto conv : {SeaConvention::filled, SeaConvention::empty}) {
    const FockBasis basis(Lattice1D(sites, 1.0), 1.0, conv);
    const auto cells = split_cells(sites, 3);
    std::vector<CMatrix> q;
    for (const auto& cell : cells) q.emplace_back(charge_operator(basis, cell));
    double worst = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (std::size_t j = i + 1; j < q.size(); ++j) worst = std::max(worst, (q[i] * q[j] - q[j] * q[i]).norm());
    }
    EXPECT_LT(worst, 1e-12);
    CMatrix sum = CMatrix::Zero(q[0].rows(), q[0].cols());
    for (const auto& m : q) sum += m;
    EXPECT_LT((sum - CMatrix(total_charge(basis))).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(ChargeOperator, OneElectronHasTotalChargeMinusE) {
  const FockBasis basis(Lattice1D(3, 1.0), 1.0, SeaConvention::filled, 0.5);
  const SparseOperator q = total_charge(basis);
  // sea plus one positive-energy electron
  const CVector state = basis.basis_state(basis.reference_bits() | (std::uint64_t{1} << 4));
  EXPECT_LT((q * state + 0.5 * state).norm(), 1e-12);
  // sea with one hole: +e
  const CVector hole = basis.basis_state(basis.reference_bits() ^ 1u);
  EXPECT_LT((q * hole - 0.5 * hole).norm(), 1e-12);
}

TEST(ChargeOperator, VacuumHasZeroMeanAndFluctuates) {
  for (std::size_t sites : {3u, 4u}) {
    const FockBasis basis(Lattice1D(sites, 1.0), 1.0, SeaConvention::filled);
    const CVector omega = basis.reference_state();
    for (const auto& cell : all_proper_cells(sites)) {
      const CMatrix q = charge_operator(basis, cell);
      EXPECT_NEAR(expectation(q, omega), 0.0, 1e-13);
      EXPECT_GT(expectation(q * q, omega), 1e-3);
    }
  }
}

TEST(ChargeOperator, TwoSiteVacuumDoesNotFluctuate) {
  // with two sites the only momenta are 0 and Nyquist, both with zero symbol,
  // so the free modes are site-local and the sea is an eigenstate of every Q(A)
  const FockBasis basis(Lattice1D(2, 1.0), 1.0, SeaConvention::filled);
  const CMatrix q = charge_operator(basis, {0});
  EXPECT_NEAR(expectation(q * q, basis.reference_state()), 0.0, 1e-13);
}

TEST(SiteOccupation, TransformIsUnitary) {
  const FockBasis basis(Lattice1D(3, 1.0), 1.0, SeaConvention::filled);
  CVector v = CVector::Random(static_cast<Eigen::Index>(basis.dimension()));
  v.normalize();
  const CVector s = site_occupation_amplitudes(basis, v);
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
  EXPECT_LT((from_site_occupation(basis, s) - v).norm(), 1e-12);
}

// Joint Born probabilities from spectral projectors of each dense Q(cell).
std::map<std::vector<int>, double> oracle_joint(const FockBasis& basis, const CVector& psi,
                                                const std::vector<std::vector<std::size_t>>& cells) {
  std::map<std::vector<int>, CVector> branches{{{}, psi}};
  for (const auto& cell : cells) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(oracle_charge(basis, cell));
    std::map<int, CMatrix> projectors;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const int q = static_cast<int>(std::lround(es.eigenvalues()[i] / basis.charge()));
      auto& p = projectors[q];
      if (p.size() == 0) p = CMatrix::Zero(es.eigenvectors().rows(), es.eigenvectors().rows());
      p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
    std::map<std::vector<int>, CVector> next;
    for (const auto& [key, v] : branches) {
      for (const auto& [q, p] : projectors) {
        auto k = key;
        k.push_back(q);
        next[k] = p * v;
      }
    }
    branches = std::move(next);
  }
  std::map<std::vector<int>, double> out;
  for (const auto& [key, v] : branches) {
    if (v.squaredNorm() > 1e-14) out[key] = v.squaredNorm();
  }
  return out;
}

TEST(SignedConfiguration, VacuumSamplingMatchesSpectralOracle) {
  const std::size_t sites = 4;
  const FockBasis basis(Lattice1D(sites, 1.0), 1.0, SeaConvention::filled);
  const auto cells = split_cells(sites, 2);
  const CVector omega = basis.reference_state();
  const auto oracle = oracle_joint(basis, omega, cells);

  const auto exact = cell_charge_distribution(basis, omega, cells);
  double total = 0.0;
  for (const auto& [key, p] : exact) {
    total += p;
    EXPECT_NEAR(p, oracle.count(key) ? oracle.at(key) : 0.0, 1e-10);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_GT(oracle.size(), 1u);

  const std::size_t n = 10000;
  const auto samples = sample_signed_config(basis, omega, cells, n, 2024);
  std::map<std::vector<int>, double> counts;
  std::size_t nonempty = 0;
  for (const auto& s : samples) {
    counts[s.cell_charges] += 1.0;
    int net = 0;
    for (int q : s.cell_charges) net += q;
    EXPECT_EQ(net, 0);
    EXPECT_EQ(s.positive_points.size() + s.negative_points.size(),
              static_cast<std::size_t>(std::abs(s.cell_charges[0]) + std::abs(s.cell_charges[1])));
    if (!s.positive_points.empty() || !s.negative_points.empty()) ++nonempty;
  }
  for (const auto& [key, p] : oracle) {
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    EXPECT_NEAR(counts[key] / static_cast<double>(n), p, 3.0 * sigma) << "outcome " << key[0] << "," << key[1];
  }
  for (const auto& [key, c] : counts) EXPECT_TRUE(oracle.count(key)) << "impossible outcome sampled";
  EXPECT_GT(nonempty, 0u);
}

TEST(SignedConfiguration, LocalizedElectronIsCertain) {
  const std::size_t sites = 4;
  const FockBasis basis(Lattice1D(sites, 1.0), 1.0, SeaConvention::filled);
  const auto cells = split_cells(sites, 2);
  // one particle per site plus an extra electron on site 0
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sites; ++i) bits |= std::uint64_t{1} << (2 * i);
  bits |= 2u;
  CVector site_state = CVector::Zero(static_cast<Eigen::Index>(basis.dimension()));
  site_state[static_cast<Eigen::Index>(bits)] = 1.0;
  const CVector psi = from_site_occupation(basis, site_state);

  const auto dist = cell_charge_distribution(basis, psi, cells);
  ASSERT_EQ(dist.size(), 1u);
  EXPECT_EQ(dist.begin()->first, (std::vector<int>{-1, 0}));
  for (const auto& s : sample_signed_config(basis, psi, cells, 200, 5)) {
    ASSERT_EQ(s.negative_points.size(), 1u);
    EXPECT_TRUE(s.positive_points.empty());
    EXPECT_DOUBLE_EQ(s.negative_points[0], 0.5);
  }
}

TEST(SignedConfiguration, DeterministicAndValidated) {
  const FockBasis basis(Lattice1D(3, 1.0), 1.0, SeaConvention::filled);
  const auto cells = split_cells(3, 3);
  const auto a = sample_signed_config(basis, basis.reference_state(), cells, 50, 9);
  const auto b = sample_signed_config(basis, basis.reference_state(), cells, 50, 9);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].cell_charges, b[i].cell_charges);
  EXPECT_THROW(sample_signed_config(basis, basis.reference_state(), {{0, 1}}, 1, 0), InvalidInput);
  EXPECT_THROW(sample_signed_config(basis, 2.0 * basis.reference_state(), cells, 1, 0), InvalidInput);
}

TEST(HoleMap, UnitaryInvolutionBetweenReferences) {
  const FockBasis filled(Lattice1D(3, 1.0), 1.0, SeaConvention::filled);
  const FockBasis empty(Lattice1D(3, 1.0), 1.0, SeaConvention::empty);
  const CMatrix w = hole_map(empty);
  const auto dim = w.rows();
  EXPECT_LT((w.adjoint() * w - CMatrix::Identity(dim, dim)).norm(), 1e-14);
  EXPECT_LT((w * w - CMatrix::Identity(dim, dim)).norm(), 1e-14);
  for (std::uint64_t b = 0; b < empty.dimension(); ++b) {
    const CVector v = empty.basis_state(b);
    EXPECT_LT((hole_map_apply(empty, hole_map_apply(empty, v)) - v).norm(), 1e-14);
  }
  EXPECT_NEAR(std::abs(filled.reference_state().dot(hole_map_apply(empty, empty.reference_state()))), 1.0, 1e-14);
  // one negative-mode particle becomes a hole in mode 0
  const CVector one = empty.basis_state(1u);
  const CVector hole = filled.basis_state(filled.reference_bits() ^ 1u);
  EXPECT_NEAR(std::abs(hole.dot(hole_map_apply(empty, one))), 1.0, 1e-14);
}

TEST(HoleMap, IntertwinesCharges) {
  for (std::size_t sites : {2u, 3u}) {
    const FockBasis filled(Lattice1D(sites, 0.8), 1.1, SeaConvention::filled, 0.6);
    const FockBasis empty(Lattice1D(sites, 0.8), 1.1, SeaConvention::empty, 0.6);
    const CMatrix w = hole_map(empty);
    for (const auto& cell : all_proper_cells(sites)) {
      const CMatrix qf = oracle_charge(filled, cell);
      const CMatrix qe = charge_operator(empty, cell);
      EXPECT_LT((w.adjoint() * qf * w - qe).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(expectation(qe, empty.reference_state()), 0.0, 1e-13);
    }
    // a positron (occupied negative mode) carries +e in the hole picture
    const CVector positron = empty.basis_state(1u);
    EXPECT_LT((total_charge(empty) * positron - 0.6 * positron).norm(), 1e-12);
  }
}

TEST(HoleMap, SamplingAgreesAcrossConventions) {
  const FockBasis filled(Lattice1D(3, 1.0), 1.0, SeaConvention::filled);
  const FockBasis empty(Lattice1D(3, 1.0), 1.0, SeaConvention::empty);
  const auto cells = split_cells(3, 3);
  const auto a = cell_charge_distribution(empty, empty.reference_state(), cells);
  const auto b = cell_charge_distribution(filled, filled.reference_state(), cells);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [k, p] : a) EXPECT_NEAR(p, b.at(k), 1e-12);
}

SpinorField negative_packet(const Lattice1D& lat, double center, double width, double p) {
  const auto proj = spectral_split(DiracOperator::free(lat, 1.0));
  return proj.apply_minus(gaussian_packet(lat, center, width, p, Eigen::Vector2cd(0.3, 1.0))).normalized();
}

TEST(PositronMotion, FreeCase) {
  const Lattice1D lat(64, 0.25);
  const auto r = positron_motion_check(negative_packet(lat, 8.0, 1.0, 1.0), 1.0, 1.0, std::vector<double>(64, 0.0), 2.0);
  EXPECT_LT(r.deviation, 1e-12);
  EXPECT_FALSE(r.warning);
  EXPECT_LT(r.positive_fraction, 1e-10);
}

TEST(PositronMotion, StepPotential) {
  const Lattice1D lat(64, 0.25);
  std::vector<double> v(64, 0.0);
  for (std::size_t i = 40; i < 64; ++i) v[i] = 1.5;
  const auto r = positron_motion_check(negative_packet(lat, 8.0, 1.0, 1.0), 1.0, 1.0, v, 2.0);
  EXPECT_LT(r.deviation, 1e-9);
  EXPECT_FALSE(r.warning);
}

TEST(PositronMotion, BrokenConjugationIsDetected) {
  const Lattice1D lat(64, 0.25);
  std::vector<double> v(64, 0.0);
  for (std::size_t i = 40; i < 64; ++i) v[i] = 1.5;
  const auto r = positron_motion_check(negative_packet(lat, 8.0, 1.0, 1.0), 1.0, 1.0, v, 2.0,
                                       Eigen::Matrix2cd::Identity());
  EXPECT_GT(r.deviation, 1e-3);
}

TEST(PositronMotion, WarnsOnPositiveEnergyContent) {
  const Lattice1D lat(64, 0.25);
  const SpinorField mixed = gaussian_packet(lat, 8.0, 1.0, 0.0, Eigen::Vector2cd(1.0, 0.0)).normalized();
  const auto r = positron_motion_check(mixed, 1.0, 1.0, std::vector<double>(64, 0.0), 1.0);
  ASSERT_TRUE(r.warning);
  EXPECT_GT(r.positive_fraction, 0.1);
  EXPECT_NE(r.warning->find("positive-energy fraction"), std::string::npos);
}

}  // namespace
}  // namespace diraclab
