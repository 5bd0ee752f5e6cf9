#pragma once

#include <cstdint>
#include <vector>

#include "diraclab/sectors.hpp"

namespace diraclab {

/// Two-site pair-creation toy. The photon is a prescribed classical amplitude,
/// so the state lives on the vacuum (one amplitude, labelled sector (0,1))
/// plus the six two-electron occupation states (sector (2,0)). On two sites
/// the spectral derivative vanishes, so the free part is beta*m + V and never
/// moves an electron between sites; configurations only change by pair jumps.
struct PairToyParams {
  double mass = 1.0;
  double spacing = 1.0;
  double strength = 0.5;           // lambda
  double photon_amplitude = 1.0;   // classical stand-in for the photon slot
  double width = 1.0;              // pair profile width
  std::vector<double> potential{0.0, 0.0};
};

/// Electron site multiset (sorted) of a toy configuration; empty = vacuum.
using ToyConfiguration = std::vector<std::size_t>;

class PairToy {
 public:
  explicit PairToy(const PairToyParams& params);

  const PairToyParams& params() const noexcept { return params_; }
  const Lattice1D& lattice() const noexcept { return lattice_; }
  std::size_t dimension() const noexcept { return 7; }
  /// Basis: 0 = vacuum, 1 + r = two-electron state of colex rank r.
  const CMatrix& hamiltonian() const noexcept { return h_; }

  const std::vector<ToyConfiguration>& configurations() const noexcept { return configs_; }
  std::size_t configuration_index(const ToyConfiguration& q) const;
  SectorId sector_of(std::size_t q) const { return configs_[q].empty() ? SectorId{0, 1} : SectorId{2, 0}; }

  /// exp(-i H t) psi0 via the cached eigen-decomposition.
  CVector evolve(const CVector& psi0, double t) const;
  CVector vacuum() const;

  double probability(const CVector& psi, std::size_t q) const;
  /// J(q' <- q) = 2 Im <psi| P_q' H P_q |psi>; the net probability flow.
  double current(const CVector& psi, std::size_t to, std::size_t from) const;
  /// Jump rate J^+ / rho_q; zero when rho_q vanishes.
  double rate(const CVector& psi, std::size_t to, std::size_t from) const;
  double total_rate(const CVector& psi, std::size_t from) const;
  /// Probability of the two-electron sector.
  double pair_probability(const CVector& psi) const;

 private:
  PairToyParams params_;
  Lattice1D lattice_;
  CMatrix h_;
  Eigen::VectorXd energies_;
  CMatrix vectors_;
  std::vector<ToyConfiguration> configs_;
  std::vector<std::vector<std::size_t>> members_;  // basis indices per configuration
};

struct JumpEvent {
  double time = 0.0;
  SectorId pre;
  SectorId post;
  std::vector<double> positions;  // created or removed electron positions
};

struct JumpRun {
  std::vector<std::size_t> checkpoint_configs;  // configuration index at each checkpoint
  std::vector<JumpEvent> events;
  std::size_t bound_retries = 0;
  std::size_t up_jumps() const;
};

struct JumpOptions {
  double initial_interval = 0.05;  // thinning window
  int bound_samples = 8;           // rate samples per window for the bound
  double bound_factor = 1.5;
  int max_refinements = 60;        // halvings before giving up
};

/// Piecewise-deterministic Bell-type process driven by psi(t) = exp(-iHt) psi0,
/// realized by thinning against a per-window rate bound. A proposal whose
/// true rate exceeds the bound discards the window and retries it with a
/// refined bound; exhausting the refinements throws RateBoundError.
/// Uses the stream (seed, "jumps", run_index).
JumpRun bell_jump_simulate(const PairToy& toy, const CVector& psi0, std::size_t q0, double duration,
                           const std::vector<double>& checkpoints, std::uint64_t seed, std::uint64_t run_index,
                           const JumpOptions& options = {});

struct JumpEnsembleSummary {
  std::vector<double> checkpoints;
  std::vector<double> empirical_pair;  // fraction of runs in sector (2,0)
  std::vector<double> exact_pair;
  std::vector<double> standard_error;  // binomial, from the exact probability
  double mean_up_jumps = 0.0;
  double expected_up_jumps = 0.0;      // integral of J^+ out of the vacuum
  double up_jumps_standard_error = 0.0;
  std::size_t runs = 0;
  std::size_t total_jumps = 0;
};

/// Runs the process from the vacuum `runs` times and compares with the
/// exact sector probabilities. Thread count does not affect results.
JumpEnsembleSummary jump_ensemble(const PairToy& toy, std::size_t runs, double duration,
                                  const std::vector<double>& checkpoints, std::uint64_t seed, unsigned threads = 1);

/// Integral over [0, T] of the summed positive vacuum-to-pair currents.
double expected_up_jumps(const PairToy& toy, const CVector& psi0, double duration, std::size_t intervals = 4000);

}  // namespace diraclab
