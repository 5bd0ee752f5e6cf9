#pragma once

#include <cstdint>
#include <vector>

#include "diraclab/sectors.hpp"

namespace diraclab {

/// Continuous electron positions in [0, L a) plus the sector label.
struct Configuration {
  std::vector<double> positions;
  SectorId sector;
};

/// States at uniformly spaced times start, start + spacing, ...
class FrameSeries {
 public:
  FrameSeries(double start, double spacing, std::vector<SectorState> frames);

  double start() const noexcept { return start_; }
  double spacing() const noexcept { return spacing_; }
  double end() const noexcept { return start_ + spacing_ * static_cast<double>(frames_.size() - 1); }
  std::size_t size() const noexcept { return frames_.size(); }
  const SectorState& frame(std::size_t i) const { return frames_.at(i); }
  const SectorSpace& space() const noexcept { return frames_.front().space(); }

 private:
  double start_;
  double spacing_;
  std::vector<SectorState> frames_;
};

/// Frames of a sector evolution on [0, T] every frame_dt (last frame at T).
FrameSeries record_frames(const SectorState& initial, const SectorHamiltonian& hamiltonian, double duration,
                          double frame_dt);
/// One-electron evolution under a lattice Dirac operator, embedded in sector (1,0).
FrameSeries record_frames(const SpinorField& initial, const DiracOperator& op, double duration, double frame_dt);

/// Psi^dagger Psi and Psi^dagger alpha_j Psi at a configuration, with Psi
/// interpolated in every slot by 4-point cubic Lagrange interpolation on the
/// periodic grid and summed over spinor and photon indices.
struct LocalCurrent {
  double density = 0.0;
  std::vector<double> flux;  // one per electron slot
};

LocalCurrent local_current(const SectorState& state, const Configuration& config);

/// Below this density a configuration counts as a node.
inline constexpr double kNodeDensity = 1e-300;

/// Guidance velocities v_j = flux_j / density; throws NodeError at a node.
std::vector<double> velocity(const SectorState& state, const Configuration& config);
/// Same, with the bilinears interpolated linearly in time between frames.
std::vector<double> velocity(const FrameSeries& frames, const Configuration& config, double t);

/// Draws i.i.d. configurations from the Born density: sector first, then a
/// basis configuration from |c|^2, slot order randomly permuted, positions
/// jittered uniformly within the cell [(i - 1/2) a, (i + 1/2) a) of each site.
/// Member k uses the stream (seed, "sample_initial", k).
std::vector<Configuration> sample_initial(const SectorState& state, std::size_t count, std::uint64_t seed);

enum class Guidance {
  bohm,    // dq/dt = v(q, t)
  frozen,  // dq/dt = 0; negative control
};

struct IntegrationOptions {
  double dt = 0.01;
  double duration = 1.0;
  std::size_t record_stride = 0;  // 0: keep only start and end points
  Guidance guidance = Guidance::bohm;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  // per recorded time
  bool excluded = false;                       // hit a node
  double node_time = 0.0;

  const std::vector<double>& final_positions() const { return positions.back(); }
};

/// RK4 integration of the guidance equation from frames.start(); positions
/// wrap periodically. A node encounter flags the trajectory as excluded.
Trajectory integrate(const FrameSeries& frames, const Configuration& q0, const IntegrationOptions& options);

struct EnsembleResult {
  std::vector<Trajectory> members;  // in member order
  std::size_t excluded = 0;

  /// First-slot positions of non-excluded members at the final time.
  std::vector<double> final_first_positions() const;
};

/// Independent members; results are independent of the thread count.
EnsembleResult integrate_ensemble(const FrameSeries& frames, const std::vector<Configuration>& initial,
                                  const IntegrationOptions& options, unsigned threads = 1);

/// Marginal Born probability of the first electron slot per lattice cell
/// within the given sector (sums to 1).
std::vector<double> born_cell_marginal(const SectorState& state, SectorId sector);

/// CDF of the piecewise-constant cell marginal, as a function of the cell
/// coordinate u = wrap(x + a/2) in [0, L a).
double cell_cdf(const std::vector<double>& cell_probabilities, double spacing, double u);
/// Maps a position to the cell coordinate used by cell_cdf.
double cell_coordinate(const Lattice1D& lattice, double x);

/// KS distance between the first-slot positions and the Born marginal of
/// `state` in the ensemble's sector.
double equivariance_ks(const std::vector<Configuration>& ensemble, const SectorState& state);
double equivariance_ks(const std::vector<double>& first_positions, const SectorState& state, SectorId sector);

// ---------------------------------------------------------------- detection

struct DoubleSlitParams {
  std::size_t sites = 512;
  double spacing = 1.0 / 16.0;
  double mass = 1.0;
  double center = 16.0;
  double separation = 6.0;
  double slit_width = 0.4;
  double momentum = 0.0;
  bool single_slit = false;
  double duration = 8.0;
  double dt = 0.02;
  std::size_t frame_stride = 5;
  std::size_t bins = 64;
  double max_excluded_fraction = 0.01;
  std::size_t sample_trajectories = 0;  // members 0..k-1 re-integrated with every frame recorded
};

struct Histogram {
  std::size_t count = 0;            // arrivals included
  std::vector<double> bin_left;     // physical position of the left bin edge
  std::vector<double> counts;
};

struct DoubleSlitResult {
  std::vector<double> arrivals;           // kept members, member order
  std::vector<Histogram> cumulative;      // one per requested count
  std::vector<double> born_bin_probability;
  std::vector<double> bin_left;
  double bin_width = 0.0;
  std::size_t excluded = 0;
  std::size_t simulated = 0;
  SpinorField initial;
  SpinorField final_state;
  std::vector<Trajectory> samples;
};

/// Two Gaussian slits (or one), projected onto positive energy, evolved
/// freely to the screen time; arrivals are positions at that time.
SpinorField slit_packet(const DoubleSlitParams& params);
DoubleSlitResult double_slit_experiment(const DoubleSlitParams& params, const std::vector<std::size_t>& counts,
                                        std::uint64_t seed, unsigned threads = 1);

/// Histogram bins cover whole cells, starting at the cell edge -a/2.
std::vector<double> bin_born_marginal(const std::vector<double>& cell_probabilities, std::size_t bins);
Histogram histogram_arrivals(const Lattice1D& lattice, std::span<const double> arrivals, std::size_t bins);

/// Local maxima of a binned profile whose height exceeds `fraction` of the
/// global maximum.
std::vector<std::size_t> significant_maxima(const std::vector<double>& profile, double fraction);

/// For every significant Born maximum, the histogram's argmax within that
/// fringe (between the neighbouring Born minima) must lie within one bin.
struct FringeCheck {
  std::vector<std::size_t> born_peaks;
  std::vector<std::size_t> histogram_peaks;
  std::size_t max_offset = 0;
  bool ok = false;
};
FringeCheck check_fringes(const std::vector<double>& born, const std::vector<double>& counts, double fraction = 0.2);

}  // namespace diraclab
