#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "diraclab/bohm.hpp"
#include "diraclab/errors.hpp"
#include "diraclab/jumps.hpp"
#include "diraclab/stats.hpp"
#include "test_support.hpp"

namespace diraclab {
namespace {

using testing::random_field;

SpinorField moving_packet(const Lattice1D& lat, double center, double width, double p) {
  const auto proj = spectral_split(DiracOperator::free(lat, 1.0));
  return proj.apply_plus(gaussian_packet(lat, center, width, p, Eigen::Vector2cd(1.0, 0.0))).normalized();
}

TEST(Velocity, PlaneWaveMovesAtGroupVelocity) {
  const Lattice1D lat(64, 0.25);
  auto space = build_sector_space(lat, {1, 0});
  const auto grid = lat.momentum_grid();
  for (std::size_t k : {1u, 3u, 7u, 60u}) {
    const SpinorField pw = plane_wave(lat, 1.0, k, +1);
    const double p = grid[k];
    const double e = std::sqrt(1.0 + p * p);
    const auto state = embed_single_electron(space, pw);
    std::mt19937_64 rng(k);
    std::uniform_real_distribution<double> u(0.0, lat.length());
    for (int i = 0; i < 20; ++i) {
      const auto v = velocity(state, Configuration{{u(rng)}, {1, 0}});
      EXPECT_NEAR(v[0], p / e, 1e-12);
    }
  }
}

TEST(Velocity, SymmetricPacketAtRestHasZeroVelocityAtCenter) {
  const Lattice1D lat(128, 0.125);
  const double x0 = lat.coordinate(64);
  // a spreading packet: parity-symmetric with an odd, nonzero current
  const SpinorField spread = evolve(DiracOperator::free(lat, 1.0), moving_packet(lat, x0, 0.5, 0.0), 1.0);
  const auto state = embed_single_electron(build_sector_space(lat, {1, 0}), spread);
  EXPECT_NEAR(velocity(state, Configuration{{x0}, {1, 0}})[0], 0.0, 1e-13);
  // odd about the center
  const double left = velocity(state, Configuration{{x0 - 0.37}, {1, 0}})[0];
  const double right = velocity(state, Configuration{{x0 + 0.37}, {1, 0}})[0];
  EXPECT_NEAR(left, -right, 1e-12);
  EXPECT_GT(std::fabs(left), 1e-6);
}

TEST(Velocity, SpeedBoundOnRandomStates) {
  const Lattice1D lat(8, 0.5);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, lat.length());
  auto space = build_sector_space(lat, {2, 1});
  CVector amps(static_cast<Eigen::Index>(space->dimension()));
  for (auto& z : amps) z = complex(g(rng), g(rng));
  const SectorState state(space, amps.normalized());
  for (int i = 0; i < 200; ++i) {
    for (SectorId id : {SectorId{1, 0}, SectorId{1, 1}, SectorId{2, 0}, SectorId{2, 1}}) {
      Configuration q{std::vector<double>(static_cast<std::size_t>(id.electrons)), id};
      for (double& x : q.positions) x = u(rng);
      const LocalCurrent lc = local_current(state, q);
      for (double f : lc.flux) EXPECT_LE(std::fabs(f), lc.density * (1.0 + 1e-12));
    }
  }
}

TEST(Velocity, TwoElectronCurrentMatchesTensorInterpolation) {
  const Lattice1D lat(8, 0.5);
  auto space = build_sector_space(lat, {2, 0});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  CMatrix t(16, 16);
  for (auto& z : t.reshaped()) z = complex(g(rng), g(rng));
  SectorState state(space);
  set_two_electron_tensor(state, t);
  state = state.normalized();
  const CMatrix psi = two_electron_tensor(state);

  // independent oracle: Lagrange-interpolate the antisymmetric tensor directly
  auto weights = [&](double x, std::array<long, 4>& sites) {
    const double u = x / lat.spacing();
    const double f = u - std::floor(u);
    const long i0 = static_cast<long>(std::floor(u));
    for (long k = 0; k < 4; ++k) sites[k] = ((i0 + k - 1) % 8 + 8) % 8;
    return std::array<double, 4>{-f * (f - 1) * (f - 2) / 6, (f + 1) * (f - 1) * (f - 2) / 2,
                                 -(f + 1) * f * (f - 2) / 2, (f + 1) * f * (f - 1) / 6};
  };
  std::uniform_real_distribution<double> u(0.0, lat.length());
  for (int trial = 0; trial < 25; ++trial) {
    const double x1 = u(rng), x2 = u(rng);
    std::array<long, 4> s1{}, s2{};
    const auto w1 = weights(x1, s1);
    const auto w2 = weights(x2, s2);
    Eigen::Matrix2cd amp = Eigen::Matrix2cd::Zero();  // (spin1, spin2)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) amp(a, b) += w1[i] * w2[j] * psi(2 * s1[i] + a, 2 * s2[j] + b);
    const double density = amp.squaredNorm();
    const double flux1 = 2.0 * (amp.row(0).conjugate().cwiseProduct(amp.row(1))).sum().real();
    const double flux2 = 2.0 * (amp.col(0).conjugate().cwiseProduct(amp.col(1))).sum().real();
    const LocalCurrent lc = local_current(state, Configuration{{x1, x2}, {2, 0}});
    const double scale = lat.spacing() * lat.spacing();  // tensor -> field normalization
    EXPECT_NEAR(lc.density * scale, density, 1e-12);
    EXPECT_NEAR(lc.flux[0] * scale, flux1, 1e-12);
    EXPECT_NEAR(lc.flux[1] * scale, flux2, 1e-12);
  }
}

TEST(Velocity, NodeIsReportedExplicitly) {
  const Lattice1D lat(16, 1.0);
  auto space = build_sector_space(lat, {1, 0});
  const SpinorField f = box_packet(lat, 0.0, 3.0, Eigen::Vector2cd(1.0, 0.0)).normalized();
  const auto state = embed_single_electron(space, f);
  EXPECT_NO_THROW(velocity(state, Configuration{{1.0}, {1, 0}}));
  try {
    velocity(state, Configuration{{10.0}, {1, 0}});
    FAIL() << "expected NodeError";
  } catch (const NodeError& e) {
    EXPECT_LT(e.density(), kNodeDensity);
  }
  EXPECT_THROW(velocity(state, Configuration{{1.0, 2.0}, {1, 0}}), InvalidInput);
}

TEST(Sampling, DeltaStateStaysInItsCell) {
  const Lattice1D lat(32, 0.5);
  auto space = build_sector_space(lat, {1, 0});
  SectorState s(space);
  s.sector({1, 0})[2 * 7 + 1] = 1.0;
  const auto qs = sample_initial(s, 2000, 3);
  for (const auto& q : qs) {
    ASSERT_EQ(q.sector, (SectorId{1, 0}));
    EXPECT_GE(q.positions[0], (7 - 0.5) * 0.5);
    EXPECT_LT(q.positions[0], (7 + 0.5) * 0.5);
  }
}

TEST(Sampling, UniformDensityPassesChiSquare) {
  const Lattice1D lat(64, 0.25);
  auto space = build_sector_space(lat, {1, 0});
  SectorState s(space);
  for (std::size_t i = 0; i < 64; ++i) s.sector({1, 0})[static_cast<Eigen::Index>(2 * i)] = 1.0;
  s = s.normalized();
  const auto qs = sample_initial(s, 10000, 11);
  std::vector<double> obs(16, 0.0);
  for (const auto& q : qs) {
    const double u = cell_coordinate(lat, q.positions[0]);
    obs[std::min<std::size_t>(15, static_cast<std::size_t>(u / lat.length() * 16))] += 1.0;
  }
  const std::vector<double> prob(16, 1.0 / 16.0);
  EXPECT_GT(chi_square_test(obs, prob).p_value, 0.01);
}

TEST(Sampling, SectorFrequenciesFollowProbabilities) {
  const Lattice1D lat(8, 1.0);
  auto space = build_sector_space(lat, {1, 1});
  std::mt19937_64 rng(5);
  SectorState s(space);
  s.sector({1, 0}) = random_field(lat, rng).amplitudes().normalized() / std::sqrt(2.0);
  s.sector({1, 1})[17] = 1.0 / std::sqrt(2.0);
  const std::size_t n = 10000;
  const auto qs = sample_initial(s, n, 21);
  const double f = static_cast<double>(std::count_if(qs.begin(), qs.end(), [](const Configuration& q) {
                     return q.sector == SectorId{1, 1};
                   })) / static_cast<double>(n);
  EXPECT_NEAR(f, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(Sampling, DeterministicPerMember) {
  const Lattice1D lat(16, 1.0);
  std::mt19937_64 rng(7);
  const auto s = embed_single_electron(build_sector_space(lat, {1, 0}), random_field(lat, rng));
  const auto a = sample_initial(s, 50, 99);
  const auto b = sample_initial(s, 80, 99);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a[i].positions, b[i].positions);
  const auto c = sample_initial(s, 50, 100);
  EXPECT_NE(a[0].positions, c[0].positions);
}

TEST(Sampling, TwoElectronSlotsAreExchangeable) {
  const Lattice1D lat(8, 1.0);
  auto space = build_sector_space(lat, {2, 0});
  SectorState s(space);
  CMatrix t = CMatrix::Zero(16, 16);
  t(2 * 1, 2 * 6) = 1.0;  // electrons at sites 1 and 6
  set_two_electron_tensor(s, t);
  s = s.normalized();
  const auto qs = sample_initial(s, 4000, 1);
  std::size_t first_at_one = 0;
  for (const auto& q : qs) first_at_one += std::fabs(q.positions[0] - 1.0) < 0.5 ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(first_at_one) / 4000.0, 0.5, 3.0 * std::sqrt(0.25 / 4000.0));
}

TEST(Integrate, PlaneWaveGivesStraightLines) {
  const Lattice1D lat(64, 0.25);
  const DiracOperator op = DiracOperator::free(lat, 1.0);
  const std::size_t k = 3;
  const double p = lat.momentum_grid()[k];
  const double v = p / std::sqrt(1.0 + p * p);
  const FrameSeries frames = record_frames(plane_wave(lat, 1.0, k, +1), op, 20.0, 0.1);
  IntegrationOptions opt{.dt = 0.05, .duration = 20.0, .record_stride = 40, .guidance = Guidance::bohm};
  for (double x0 : {0.3, 5.0, 15.9}) {
    const Trajectory tr = integrate(frames, Configuration{{x0}, {1, 0}}, opt);
    ASSERT_FALSE(tr.excluded);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double expected = lat.wrap(x0 + v * tr.times[i]);
      EXPECT_NEAR(lat.distance(tr.positions[i][0], expected), 0.0, 1e-9);
    }
  }
}

TEST(Integrate, CentralTrajectoryOfSymmetricPacketIsStationary) {
  const Lattice1D lat(256, 0.1);
  const double x0 = lat.coordinate(128);
  const SpinorField psi = moving_packet(lat, x0, 1.0, 0.0);
  const FrameSeries frames = record_frames(psi, DiracOperator::free(lat, 1.0), 2.0, 0.05);
  const Trajectory tr = integrate(frames, Configuration{{x0}, {1, 0}}, {.dt = 0.01, .duration = 2.0});
  EXPECT_NEAR(tr.final_positions()[0], x0, 1e-6);
}

TEST(Integrate, EnsembleNeverCrosses) {
  const Lattice1D lat(256, 0.1);
  const SpinorField psi = moving_packet(lat, 8.0, 1.0, 1.5);
  const FrameSeries frames = record_frames(psi, DiracOperator::free(lat, 1.0), 2.0, 0.05);
  auto initial = sample_initial(frames.frame(0), 1000, 17);
  std::sort(initial.begin(), initial.end(),
            [](const Configuration& a, const Configuration& b) { return a.positions[0] < b.positions[0]; });
  const auto ens = integrate_ensemble(frames, initial, {.dt = 0.01, .duration = 2.0, .record_stride = 20});
  ASSERT_EQ(ens.excluded, 0u);
  const std::size_t steps = ens.members[0].times.size();
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 1; i < ens.members.size(); ++i) {
      ASSERT_LE(ens.members[i - 1].positions[s][0], ens.members[i].positions[s][0]) << "step " << s;
    }
  }
}

TEST(Integrate, ResultsIndependentOfThreadCount) {
  const Lattice1D lat(128, 0.1);
  const FrameSeries frames = record_frames(moving_packet(lat, 6.0, 0.8, 1.0), DiracOperator::free(lat, 1.0), 1.0, 0.05);
  const auto initial = sample_initial(frames.frame(0), 200, 4);
  const IntegrationOptions opt{.dt = 0.01, .duration = 1.0};
  const auto one = integrate_ensemble(frames, initial, opt, 1);
  const auto four = integrate_ensemble(frames, initial, opt, 4);
  for (std::size_t i = 0; i < initial.size(); ++i) {
    EXPECT_EQ(one.members[i].final_positions(), four.members[i].final_positions());
  }
}

TEST(Integrate, NodeExcludesTrajectory) {
  const Lattice1D lat(32, 1.0);
  const SpinorField f = box_packet(lat, 4.0, 10.0, Eigen::Vector2cd(1.0, 0.0)).normalized();
  // frozen-in-time frames: the support never changes
  const FrameSeries frames(0.0, 1.0, {embed_single_electron(build_sector_space(lat, {1, 0}), f)});
  const Trajectory tr = integrate(frames, Configuration{{20.0}, {1, 0}}, {.dt = 0.1, .duration = 0.0});
  EXPECT_FALSE(tr.excluded);  // zero duration: nothing evaluated
  const FrameSeries two(0.0, 0.5, {frames.frame(0), frames.frame(0)});
  const Trajectory bad = integrate(two, Configuration{{20.0}, {1, 0}}, {.dt = 0.1, .duration = 0.5});
  EXPECT_TRUE(bad.excluded);
  const EnsembleResult ens =
      integrate_ensemble(two, {Configuration{{5.0}, {1, 0}}, Configuration{{20.0}, {1, 0}}}, {.dt = 0.1, .duration = 0.5});
  EXPECT_EQ(ens.excluded, 1u);
  EXPECT_EQ(ens.final_first_positions().size(), 1u);
}

TEST(Integrate, RejectsSparseFramesAndOverrun) {
  const Lattice1D lat(64, 0.25);
  const FrameSeries frames = record_frames(moving_packet(lat, 8.0, 1.0, 0.0), DiracOperator::free(lat, 1.0), 1.0, 0.1);
  EXPECT_THROW(integrate(frames, Configuration{{8.0}, {1, 0}}, {.dt = 0.01, .duration = 1.0}), InvalidInput);
  EXPECT_NO_THROW(integrate(frames, Configuration{{8.0}, {1, 0}}, {.dt = 0.02, .duration = 1.0}));
  EXPECT_THROW(integrate(frames, Configuration{{8.0}, {1, 0}}, {.dt = 0.02, .duration = 1.5}), InvalidInput);
}

TEST(Equivariance, InitialSamplesPassKs) {
  const Lattice1D lat(256, 0.1);
  const auto s = embed_single_electron(build_sector_space(lat, {1, 0}), moving_packet(lat, 8.0, 1.0, 1.5));
  const std::size_t n = 10000;
  const auto qs = sample_initial(s, n, 42);
  EXPECT_LT(equivariance_ks(qs, s), ks_critical(n, 0.01));
}

TEST(Equivariance, FreePacketStaysBornDistributed) {
  const Lattice1D lat(256, 0.1);
  const SpinorField psi = moving_packet(lat, 8.0, 1.0, 1.5);
  const FrameSeries frames = record_frames(psi, DiracOperator::free(lat, 1.0), 2.0, 0.05);
  const std::size_t n = 10000;
  const auto initial = sample_initial(frames.frame(0), n, 42);
  const SectorState& final_state = frames.frame(frames.size() - 1);

  const auto bohm = integrate_ensemble(frames, initial, {.dt = 0.01, .duration = 2.0});
  ASSERT_EQ(bohm.excluded, 0u);
  EXPECT_LT(equivariance_ks(bohm.final_first_positions(), final_state, {1, 0}), 0.03);

  const auto frozen =
      integrate_ensemble(frames, initial, {.dt = 0.01, .duration = 2.0, .guidance = Guidance::frozen});
  EXPECT_GT(equivariance_ks(frozen.final_first_positions(), final_state, {1, 0}), 0.1);
}

TEST(Equivariance, SectorEvolutionWithPotential) {
  // photon-free sector dynamics through the assembled sector operator
  const Lattice1D lat(64, 0.25);
  auto space = build_sector_space(lat, {1, 0});
  const SectorHamiltonian h(space, build_dirac(lat, 1.0, 1.0, testing::step_potential(64, 0.5)),
                            make_coupling_kernel(lat, 0.3, 0.5));
  const auto s0 = embed_single_electron(space, moving_packet(lat, 5.0, 1.0, 1.0));
  const FrameSeries frames = record_frames(s0, h, 2.0, 0.05);
  const std::size_t n = 10000;
  const auto ens = integrate_ensemble(frames, sample_initial(s0, n, 8), {.dt = 0.01, .duration = 2.0});
  ASSERT_EQ(ens.excluded, 0u);
  EXPECT_LT(equivariance_ks(ens.final_first_positions(), frames.frame(frames.size() - 1), {1, 0}), 0.03);
}

TEST(Equivariance, KsStatisticMatchesHandComputation) {
  const std::vector<double> x{0.1, 0.4, 0.7};
  // uniform CDF on [0,1): D = max(1/3-0.1, 0.4-1/3, 2/3-0.4, 0.7-2/3, 1-0.7)
  EXPECT_NEAR(ks_statistic(x, [](double v) { return v; }), 0.3, 1e-15);
  EXPECT_NEAR(ks_critical(10000, 0.01), 0.0163, 1e-12);
}

TEST(Stats, ChiSquarePoolsSmallBins) {
  const std::vector<double> obs{1, 0, 50, 49};
  const std::vector<double> p{0.01, 0.01, 0.49, 0.49};
  const auto r = chi_square_test(obs, p);
  EXPECT_EQ(r.pooled_bins, 2u);
  EXPECT_EQ(r.dof, 1);
  // pooled: [51 vs 51], [49 vs 49]
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-9);
}

TEST(DoubleSlit, BuildUpAndFringes) {
  DoubleSlitParams p;
  p.bins = 32;
  const auto r = double_slit_experiment(p, {10, 100, 3000, 20000}, 2024);
  ASSERT_EQ(r.cumulative.size(), 4u);
  EXPECT_EQ(r.cumulative[0].count, 10u);
  EXPECT_EQ(r.cumulative[3].count, 20000u);
  EXPECT_LE(static_cast<double>(r.excluded), 0.01 * static_cast<double>(r.simulated));
  // cumulative: earlier panels are prefixes of later ones
  for (std::size_t b = 0; b < p.bins; ++b) EXPECT_LE(r.cumulative[1].counts[b], r.cumulative[2].counts[b]);
  EXPECT_GT(chi_square_test(r.cumulative[3].counts, r.born_bin_probability).p_value, 0.01);
  const FringeCheck fc = check_fringes(r.born_bin_probability, r.cumulative[3].counts);
  EXPECT_GE(fc.born_peaks.size(), 3u);
  EXPECT_TRUE(fc.ok) << "max offset " << fc.max_offset;
  EXPECT_NEAR(std::accumulate(r.born_bin_probability.begin(), r.born_bin_probability.end(), 0.0), 1.0, 1e-12);
}

TEST(DoubleSlit, SingleSlitIsUnimodal) {
  DoubleSlitParams p;
  p.bins = 32;
  p.single_slit = true;
  p.slit_width = 1.0;  // narrower slits develop light-cone horns, a relativistic spreading effect
  const auto r = double_slit_experiment(p, {3000}, 5);
  EXPECT_EQ(significant_maxima(r.born_bin_probability, 0.05).size(), 1u);
  EXPECT_GT(chi_square_test(r.cumulative[0].counts, r.born_bin_probability).p_value, 0.01);
}

TEST(DoubleSlit, RejectsBadThresholds) {
  DoubleSlitParams p;
  p.bins = 32;
  EXPECT_THROW(double_slit_experiment(p, {100, 10}, 1), InvalidInput);
  p.bins = 30;
  EXPECT_THROW(double_slit_experiment(p, {10}, 1), InvalidInput);
}

TEST(DoubleSlit, FringeCheckOnSyntheticProfiles) {
  const std::vector<double> born{0, 1, 2, 3, 4, 5, 4, 3, 2, 1, 0};
  EXPECT_TRUE(check_fringes(born, {0, 1, 2, 3, 4, 6, 7, 3, 2, 1, 0}).ok);
  const auto bad = check_fringes(born, {0, 1, 2, 3, 4, 5, 4, 3, 9, 1, 0});
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.max_offset, 3u);
}

// ---------------------------------------------------------------- jumps

TEST(Jumps, NoCouplingNoJumps) {
  PairToyParams p;
  p.strength = 0.0;
  const PairToy toy(p);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto run = bell_jump_simulate(toy, toy.vacuum(), 0, 8.0, {2.0, 8.0}, 3, i);
    EXPECT_TRUE(run.events.empty());
    EXPECT_EQ(run.checkpoint_configs, (std::vector<std::size_t>{0, 0}));
  }
}

TEST(Jumps, HamiltonianIsHermitianAndCouplesOnlyVacuumToPairs) {
  const PairToy toy(PairToyParams{});
  const CMatrix& h = toy.hamiltonian();
  EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(h.imag().cwiseAbs().maxCoeff(), 1e-14);  // real: time reversal is complex conjugation
  EXPECT_GT(h.row(0).cwiseAbs().maxCoeff(), 0.0);
  // no hopping inside the pair sector on two sites
  for (Eigen::Index i = 1; i < 7; ++i)
    for (Eigen::Index j = 1; j < 7; ++j)
      if (i != j) EXPECT_EQ(std::abs(h(i, j)), 0.0);
}

TEST(Jumps, TimeReversalSwapsCreationAndAnnihilation) {
  PairToyParams p;
  p.potential = {0.3, -0.2};
  const PairToy toy(p);
  for (double t : {0.4, 1.3, 2.9}) {
    const CVector psi = toy.evolve(toy.vacuum(), t);
    const CVector rev = psi.conjugate();
    for (std::size_t q = 1; q < 4; ++q) {
      const double up_rev = toy.rate(rev, q, 0) * toy.probability(rev, 0);
      const double down = toy.rate(psi, 0, q) * toy.probability(psi, q);
      const double up = toy.rate(psi, q, 0) * toy.probability(psi, 0);
      const double down_rev = toy.rate(rev, 0, q) * toy.probability(rev, q);
      EXPECT_NEAR(up_rev, down, 1e-14);
      EXPECT_NEAR(down_rev, up, 1e-14);
    }
  }
}

TEST(Jumps, ContinuityOfConfigurationProbabilities) {
  const PairToy toy(PairToyParams{});
  const double t = 1.1, h = 1e-5;
  const CVector psi = toy.evolve(toy.vacuum(), t);
  for (std::size_t q = 0; q < 4; ++q) {
    const double dp = (toy.probability(toy.evolve(toy.vacuum(), t + h), q) -
                       toy.probability(toy.evolve(toy.vacuum(), t - h), q)) / (2 * h);
    double flow = 0.0;
    for (std::size_t r = 0; r < 4; ++r) if (r != q) flow += toy.current(psi, q, r);
    EXPECT_NEAR(dp, flow, 1e-8);
  }
}

TEST(Jumps, EnsembleMatchesExactSectorFlow) {
  const PairToy toy(PairToyParams{});
  const std::vector<double> checkpoints{1.0, 2.5, 4.0, 5.5, 8.0};
  const auto s = jump_ensemble(toy, 10000, 8.0, checkpoints, 42);
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    EXPECT_LE(std::fabs(s.empirical_pair[c] - s.exact_pair[c]), 3.0 * s.standard_error[c]) << "t=" << checkpoints[c];
  }
  EXPECT_LE(std::fabs(s.mean_up_jumps - s.expected_up_jumps), 3.0 * s.up_jumps_standard_error);
  EXPECT_GT(s.total_jumps, 0u);
}

TEST(Jumps, EventsAreDeterministicAndWellFormed) {
  const PairToy toy(PairToyParams{});
  const auto a = bell_jump_simulate(toy, toy.vacuum(), 0, 6.0, {}, 9, 3);
  const auto b = bell_jump_simulate(toy, toy.vacuum(), 0, 6.0, {}, 9, 3);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].time, b.events[i].time);
    const auto& e = a.events[i];
    const bool up = e.pre == SectorId{0, 1} && e.post == SectorId{2, 0};
    const bool down = e.pre == SectorId{2, 0} && e.post == SectorId{0, 1};
    EXPECT_TRUE(up || down);
    EXPECT_EQ(e.positions.size(), 2u);
    if (i > 0) EXPECT_GT(e.time, a.events[i - 1].time);
  }
}

TEST(Jumps, LooseBoundsAreCaughtNotClipped) {
  const PairToy toy(PairToyParams{});
  JumpOptions loose;
  loose.initial_interval = 8.0;
  loose.bound_samples = 1;
  loose.max_refinements = 0;
  std::size_t failures = 0;
  for (std::uint64_t i = 0; i < 300; ++i) {
    try {
      bell_jump_simulate(toy, toy.vacuum(), 0, 8.0, {}, 1, i, loose);
    } catch (const RateBoundError&) {
      ++failures;
    }
  }
  EXPECT_GT(failures, 0u);
  // refinement recovers
  JumpOptions refined = loose;
  refined.max_refinements = 60;
  std::size_t retries = 0;
  for (std::uint64_t i = 0; i < 300; ++i) retries += bell_jump_simulate(toy, toy.vacuum(), 0, 8.0, {}, 1, i, refined).bound_retries;
  EXPECT_GT(retries, 0u);
}

}  // namespace
}  // namespace diraclab
