#include "diraclab/bohm.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numeric>
#include <exception>
#include <mutex>
#include <thread>

#include "diraclab/errors.hpp"
#include "diraclab/random.hpp"
#include "diraclab/stats.hpp"

namespace diraclab {
namespace {

struct Stencil {
  std::array<std::size_t, 4> site{};
  std::array<double, 4> weight{};
};

// 4-point Lagrange weights around floor(x / a) on the periodic grid.
Stencil make_stencil(const Lattice1D& lat, double x) {
  const std::size_t n = lat.sites();
  const double u = lat.wrap(x) / lat.spacing();
  double base = std::floor(u);
  double f = u - base;
  auto i0 = static_cast<std::size_t>(base);
  if (i0 >= n) {  // wrap() may return values a hair below length
    i0 = n - 1;
    f = u - static_cast<double>(i0);
  }
  Stencil s;
  for (std::size_t k = 0; k < 4; ++k) s.site[k] = (i0 + n + k - 1) % n;
  s.weight[0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
  s.weight[1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
  s.weight[2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
  s.weight[3] = (f + 1.0) * f * (f - 1.0) / 6.0;
  return s;
}

void check_config(const SectorSpace& space, const Configuration& config) {
  if (!space.contains(config.sector)) throw InvalidInput("configuration sector lies outside the truncation");
  if (config.positions.size() != static_cast<std::size_t>(config.sector.electrons)) {
    throw InvalidInput("configuration has the wrong number of positions for its sector");
  }
  for (double x : config.positions) {
    if (!std::isfinite(x)) throw InvalidInput("configuration position is not finite");
  }
}

// One electron: psi(x) = sum_k w_k c_k / sqrt(a), summed over photon states.
LocalCurrent one_electron_current(const SectorState& state, const Configuration& config) {
  const SectorSpace& space = state.space();
  const auto& sec = space.sector(config.sector);
  const Stencil st = make_stencil(space.lattice(), config.positions[0]);
  const CVector& c = state.amplitudes();
  const std::size_t pd = sec.photon_dim;
  double density = 0.0, flux = 0.0;
  for (std::size_t p = 0; p < pd; ++p) {
    complex up = 0.0, down = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      up += st.weight[k] * c[static_cast<Eigen::Index>(sec.offset + (2 * st.site[k]) * pd + p)];
      down += st.weight[k] * c[static_cast<Eigen::Index>(sec.offset + (2 * st.site[k] + 1) * pd + p)];
    }
    density += std::norm(up) + std::norm(down);
    flux += 2.0 * (std::conj(up) * down).real();
  }
  const double a = space.lattice().spacing();
  return LocalCurrent{density / a, {flux / a}};
}

LocalCurrent many_electron_current(const SectorState& state, const Configuration& config) {
  const SectorSpace& space = state.space();
  const auto& sec = space.sector(config.sector);
  const auto m = static_cast<std::size_t>(config.sector.electrons);
  const std::size_t pd = sec.photon_dim;
  std::vector<Stencil> st;
  for (double x : config.positions) st.push_back(make_stencil(space.lattice(), x));

  const std::size_t spin_states = std::size_t{1} << m;
  std::vector<complex> amp(spin_states * pd, 0.0);
  std::vector<std::size_t> modes(m), sorted(m);
  std::vector<std::size_t> digits(m, 0);
  std::size_t stencil_tuples = 1;
  for (std::size_t j = 0; j < m; ++j) stencil_tuples *= 4;
  double inv_norm = 1.0;
  for (std::size_t i = 2; i <= m; ++i) inv_norm /= static_cast<double>(i);
  inv_norm = std::sqrt(inv_norm / std::pow(space.lattice().spacing(), static_cast<double>(m)));

  for (std::size_t t = 0; t < stencil_tuples; ++t) {
    double w = inv_norm;
    std::size_t rest = t;
    for (std::size_t j = 0; j < m; ++j) {
      digits[j] = rest % 4;
      rest /= 4;
      w *= st[j].weight[digits[j]];
    }
    if (w == 0.0) continue;
    for (std::size_t spins = 0; spins < spin_states; ++spins) {
      for (std::size_t j = 0; j < m; ++j) modes[j] = 2 * st[j].site[digits[j]] + ((spins >> j) & 1u);
      // sort with permutation parity
      sorted = modes;
      int parity = 0;
      bool repeated = false;
      for (std::size_t i = 1; i < m; ++i) {
        for (std::size_t k = i; k > 0 && sorted[k - 1] >= sorted[k]; --k) {
          if (sorted[k - 1] == sorted[k]) {
            repeated = true;
            break;
          }
          std::swap(sorted[k - 1], sorted[k]);
          parity ^= 1;
        }
        if (repeated) break;
      }
      if (repeated) continue;
      const std::size_t base = sec.offset + space.electron_rank(sorted) * pd;
      const double sw = parity ? -w : w;
      for (std::size_t p = 0; p < pd; ++p) {
        amp[spins * pd + p] += sw * state.amplitudes()[static_cast<Eigen::Index>(base + p)];
      }
    }
  }
  LocalCurrent out;
  out.flux.assign(m, 0.0);
  for (const complex& z : amp) out.density += std::norm(z);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t spins = 0; spins < spin_states; ++spins) {
      if ((spins >> j) & 1u) continue;
      const std::size_t flipped = spins | (std::size_t{1} << j);
      for (std::size_t p = 0; p < pd; ++p) {
        out.flux[j] += 2.0 * (std::conj(amp[spins * pd + p]) * amp[flipped * pd + p]).real();
      }
    }
  }
  return out;
}

std::vector<double> ratio(const LocalCurrent& lc) {
  if (!(lc.density >= kNodeDensity)) throw NodeError("configuration sits at a node of the wave function", lc.density);
  std::vector<double> v(lc.flux.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::clamp(lc.flux[j] / lc.density, -1.0, 1.0);
  return v;
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, threads);
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t frame_count(double duration, double frame_dt) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidInput("duration must be finite and nonnegative");
  if (!(frame_dt > 0.0)) throw InvalidInput("frame spacing must be positive");
  return duration == 0.0 ? 1 : static_cast<std::size_t>(std::ceil(duration / frame_dt - 1e-9));
}

}  // namespace

// ---------------------------------------------------------------- frames

FrameSeries::FrameSeries(double start, double spacing, std::vector<SectorState> frames)
    : start_(start), spacing_(spacing), frames_(std::move(frames)) {
  if (frames_.empty()) throw InvalidInput("frame series needs at least one frame");
  if (frames_.size() > 1 && !(spacing_ > 0.0)) throw InvalidInput("frame spacing must be positive");
}

FrameSeries record_frames(const SectorState& initial, const SectorHamiltonian& hamiltonian, double duration,
                          double frame_dt) {
  const std::size_t n = frame_count(duration, frame_dt);
  const double spacing = duration == 0.0 ? frame_dt : duration / static_cast<double>(n);
  std::vector<SectorState> frames{initial};
  const bool dense = hamiltonian.space().dimension() <= SectorHamiltonian::kDenseLimit;
  for (std::size_t k = 1; k <= n && duration > 0.0; ++k) {
    if (dense) {
      frames.push_back(evolve_sectors(initial, hamiltonian, spacing * static_cast<double>(k)));
    } else {
      frames.push_back(evolve_sectors(frames.back(), hamiltonian, spacing));
    }
  }
  return FrameSeries(0.0, spacing, std::move(frames));
}

FrameSeries record_frames(const SpinorField& initial, const DiracOperator& op, double duration, double frame_dt) {
  const std::size_t n = frame_count(duration, frame_dt);
  const double spacing = duration == 0.0 ? frame_dt : duration / static_cast<double>(n);
  auto space = build_sector_space(initial.lattice(), {1, 0});
  std::vector<SectorState> frames{embed_single_electron(space, initial)};
  for (std::size_t k = 1; k <= n && duration > 0.0; ++k) {
    frames.push_back(embed_single_electron(space, evolve(op, initial, spacing * static_cast<double>(k))));
  }
  return FrameSeries(0.0, spacing, std::move(frames));
}

// ---------------------------------------------------------------- guidance

LocalCurrent local_current(const SectorState& state, const Configuration& config) {
  check_config(state.space(), config);
  if (config.sector.electrons == 0) return LocalCurrent{state.sector(config.sector).squaredNorm(), {}};
  if (config.sector.electrons == 1) return one_electron_current(state, config);
  return many_electron_current(state, config);
}

std::vector<double> velocity(const SectorState& state, const Configuration& config) {
  return ratio(local_current(state, config));
}

std::vector<double> velocity(const FrameSeries& frames, const Configuration& config, double t) {
  if (frames.size() == 1) return velocity(frames.frame(0), config);
  const double rel = (t - frames.start()) / frames.spacing();
  const double last = static_cast<double>(frames.size() - 1);
  if (rel < -1e-9 || rel > last + 1e-9) throw InvalidInput("time outside the recorded frames");
  auto k = static_cast<std::size_t>(std::clamp(std::floor(rel), 0.0, last - 1.0));
  const double s = std::clamp(rel - static_cast<double>(k), 0.0, 1.0);
  if (s == 0.0) return velocity(frames.frame(k), config);
  if (s == 1.0) return velocity(frames.frame(k + 1), config);
  LocalCurrent a = local_current(frames.frame(k), config);
  const LocalCurrent b = local_current(frames.frame(k + 1), config);
  a.density = (1.0 - s) * a.density + s * b.density;
  for (std::size_t j = 0; j < a.flux.size(); ++j) a.flux[j] = (1.0 - s) * a.flux[j] + s * b.flux[j];
  return ratio(a);
}

std::vector<Configuration> sample_initial(const SectorState& state, std::size_t count, std::uint64_t seed) {
  const SectorSpace& space = state.space();
  const CVector& c = state.amplitudes();
  std::vector<double> cdf(static_cast<std::size_t>(c.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) cdf[static_cast<std::size_t>(i)] = acc += std::norm(c[i]);
  if (!(acc > 0.0)) throw InvalidInput("cannot sample from the zero state");
  const double a = space.lattice().spacing();
  const Lattice1D& lat = space.lattice();

  std::vector<Configuration> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto rng = make_stream(seed, "sample_initial", k);
    const double target = uniform01(rng) * acc;
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
    idx = std::min(idx, cdf.size() - 1);
    while (std::norm(c[static_cast<Eigen::Index>(idx)]) == 0.0 && idx > 0) --idx;  // guard round-off at the end
    const auto& sectors = space.sectors();
    const auto sec = std::find_if(sectors.begin(), sectors.end(), [idx](const SectorSpace::Sector& s) {
      return idx >= s.offset && idx < s.offset + s.dim();
    });
    const auto m = static_cast<std::size_t>(sec->id.electrons);
    std::vector<std::size_t> modes(m);
    space.electron_unrank((idx - sec->offset) / sec->photon_dim, modes);
    // random slot order (Fisher-Yates) so ordered tuples are uniform
    for (std::size_t i = m; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(modes[i - 1], modes[std::min(j, i - 1)]);
    }
    Configuration q{std::vector<double>(m), sec->id};
    for (std::size_t j = 0; j < m; ++j) {
      const double site = static_cast<double>(modes[j] / 2);
      q.positions[j] = lat.wrap((site + uniform01(rng) - 0.5) * a);
    }
    out[k] = std::move(q);
  }
  return out;
}

Trajectory integrate(const FrameSeries& frames, const Configuration& q0, const IntegrationOptions& options) {
  check_config(frames.space(), q0);
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) throw InvalidInput("time step must be positive");
  if (!(options.duration >= 0.0)) throw InvalidInput("duration must be nonnegative");
  if (frames.start() + options.duration > frames.end() + 1e-9 * std::max(1.0, options.duration)) {
    throw InvalidInput("integration runs past the last recorded frame");
  }
  const auto steps = static_cast<std::size_t>(std::ceil(options.duration / options.dt - 1e-9));
  const double dt = steps == 0 ? 0.0 : options.duration / static_cast<double>(steps);
  if (frames.size() > 1 && steps > 0 && frames.spacing() > 5.0 * dt * (1.0 + 1e-9)) {
    throw InvalidInput("frames are too sparse: spacing must not exceed 5 time steps");
  }
  const Lattice1D& lat = frames.space().lattice();
  const std::size_t m = q0.positions.size();

  Trajectory tr;
  Configuration q = q0;
  double t = frames.start();
  tr.times.push_back(t);
  tr.positions.push_back(q.positions);

  Configuration probe = q;
  auto advance = [&](const std::vector<double>& k, double h) {
    for (std::size_t j = 0; j < m; ++j) probe.positions[j] = lat.wrap(q.positions[j] + h * k[j]);
    return probe;
  };
  for (std::size_t step = 0; step < steps; ++step) {
    if (options.guidance == Guidance::bohm && m > 0) {
      try {
        const auto k1 = velocity(frames, q, t);
        const auto k2 = velocity(frames, advance(k1, 0.5 * dt), t + 0.5 * dt);
        const auto k3 = velocity(frames, advance(k2, 0.5 * dt), t + 0.5 * dt);
        const auto k4 = velocity(frames, advance(k3, dt), t + dt);
        for (std::size_t j = 0; j < m; ++j) {
          q.positions[j] = lat.wrap(q.positions[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
        }
      } catch (const NodeError&) {
        tr.excluded = true;
        tr.node_time = t;
        tr.times.push_back(t);
        tr.positions.push_back(q.positions);
        return tr;
      }
    }
    t = frames.start() + dt * static_cast<double>(step + 1);
    const bool last = step + 1 == steps;
    if (last || (options.record_stride > 0 && (step + 1) % options.record_stride == 0)) {
      tr.times.push_back(t);
      tr.positions.push_back(q.positions);
    }
  }
  if (tr.times.size() == 1) {  // zero-length run still reports an end point
    tr.times.push_back(t);
    tr.positions.push_back(q.positions);
  }
  return tr;
}

std::vector<double> EnsembleResult::final_first_positions() const {
  std::vector<double> out;
  out.reserve(members.size());
  for (const auto& m : members) {
    if (!m.excluded && !m.final_positions().empty()) out.push_back(m.final_positions()[0]);
  }
  return out;
}

EnsembleResult integrate_ensemble(const FrameSeries& frames, const std::vector<Configuration>& initial,
                                  const IntegrationOptions& options, unsigned threads) {
  EnsembleResult r;
  r.members.resize(initial.size());
  parallel_for(initial.size(), threads, [&](std::size_t i) { r.members[i] = integrate(frames, initial[i], options); });
  for (const auto& m : r.members) r.excluded += m.excluded ? 1 : 0;
  return r;
}

// ---------------------------------------------------------------- Born marginals

std::vector<double> born_cell_marginal(const SectorState& state, SectorId sector) {
  const SectorSpace& space = state.space();
  const auto& sec = space.sector(sector);
  const auto m = static_cast<std::size_t>(sector.electrons);
  if (m == 0) throw InvalidInput("the vacuum sector has no position marginal");
  std::vector<double> marg(space.lattice().sites(), 0.0);
  std::vector<std::size_t> modes(m);
  double total = 0.0;
  for (std::size_t er = 0; er < sec.electron_dim; ++er) {
    double w = 0.0;
    for (std::size_t p = 0; p < sec.photon_dim; ++p) {
      w += std::norm(state.amplitudes()[static_cast<Eigen::Index>(sec.offset + er * sec.photon_dim + p)]);
    }
    if (w == 0.0) continue;
    space.electron_unrank(er, modes);
    for (std::size_t mode : modes) marg[mode / 2] += w / static_cast<double>(m);
    total += w;
  }
  if (!(total > 0.0)) throw InvalidInput("sector carries no probability");
  for (double& v : marg) v /= total;
  return marg;
}

double cell_coordinate(const Lattice1D& lattice, double x) {
  return lattice.wrap(x + 0.5 * lattice.spacing());
}

double cell_cdf(const std::vector<double>& cell_probabilities, double spacing, double u) {
  const double r = u / spacing;
  if (r <= 0.0) return 0.0;
  const auto k = static_cast<std::size_t>(r);
  if (k >= cell_probabilities.size()) return 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += cell_probabilities[i];
  return std::min(1.0, acc + cell_probabilities[k] * (r - static_cast<double>(k)));
}

double equivariance_ks(const std::vector<double>& first_positions, const SectorState& state, SectorId sector) {
  const Lattice1D& lat = state.space().lattice();
  const std::vector<double> marg = born_cell_marginal(state, sector);
  std::vector<double> prefix(marg.size() + 1, 0.0);
  for (std::size_t i = 0; i < marg.size(); ++i) prefix[i + 1] = prefix[i] + marg[i];
  std::vector<double> u;
  u.reserve(first_positions.size());
  for (double x : first_positions) u.push_back(cell_coordinate(lat, x));
  const double a = lat.spacing();
  return ks_statistic(std::move(u), [&](double v) {
    const double r = v / a;
    const auto k = std::min(static_cast<std::size_t>(std::max(r, 0.0)), marg.size() - 1);
    return std::clamp(prefix[k] + marg[k] * (r - static_cast<double>(k)), 0.0, 1.0);
  });
}

double equivariance_ks(const std::vector<Configuration>& ensemble, const SectorState& state) {
  if (ensemble.empty()) throw InvalidInput("empty ensemble");
  const SectorId sector = ensemble.front().sector;
  std::vector<double> first;
  first.reserve(ensemble.size());
  for (const auto& q : ensemble) {
    if (q.sector != sector) throw InvalidInput("equivariance check needs a single-sector ensemble");
    first.push_back(q.positions.at(0));
  }
  return equivariance_ks(first, state, sector);
}

// ---------------------------------------------------------------- detection

SpinorField slit_packet(const DoubleSlitParams& p) {
  const Lattice1D lat(p.sites, p.spacing);
  if (!(p.mass > 0.0)) throw InvalidInput("double slit needs mass > 0");
  if (!(p.slit_width > 0.0)) throw InvalidInput("slit width must be positive");
  const Eigen::Vector2cd up(1.0, 0.0);
  SpinorField psi = p.single_slit
                        ? gaussian_packet(lat, p.center, p.slit_width, p.momentum, up)
                        : gaussian_packet(lat, p.center - 0.5 * p.separation, p.slit_width, p.momentum, up) +
                              gaussian_packet(lat, p.center + 0.5 * p.separation, p.slit_width, p.momentum, up);
  const EnergyProjectors proj = spectral_split(DiracOperator::free(lat, p.mass));
  return proj.apply_plus(psi).normalized();
}

std::vector<double> bin_born_marginal(const std::vector<double>& cell_probabilities, std::size_t bins) {
  if (bins == 0 || cell_probabilities.size() % bins != 0) {
    throw InvalidInput("bin count must divide the number of lattice sites");
  }
  const std::size_t per = cell_probabilities.size() / bins;
  std::vector<double> out(bins, 0.0);
  for (std::size_t i = 0; i < cell_probabilities.size(); ++i) out[i / per] += cell_probabilities[i];
  return out;
}

Histogram histogram_arrivals(const Lattice1D& lattice, std::span<const double> arrivals, std::size_t bins) {
  if (bins == 0 || lattice.sites() % bins != 0) throw InvalidInput("bin count must divide the number of lattice sites");
  const double width = lattice.length() / static_cast<double>(bins);
  Histogram h;
  h.count = arrivals.size();
  h.counts.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) h.bin_left.push_back(static_cast<double>(b) * width - 0.5 * lattice.spacing());
  for (double x : arrivals) {
    const auto b = std::min(static_cast<std::size_t>(cell_coordinate(lattice, x) / width), bins - 1);
    h.counts[b] += 1.0;
  }
  return h;
}

std::vector<std::size_t> significant_maxima(const std::vector<double>& profile, double fraction) {
  std::vector<std::size_t> out;
  if (profile.empty()) return out;
  const double top = *std::max_element(profile.begin(), profile.end());
  const std::size_t n = profile.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double left = profile[(i + n - 1) % n];
    const double right = profile[(i + 1) % n];
    if (profile[i] > left && profile[i] >= right && profile[i] >= fraction * top) out.push_back(i);
  }
  return out;
}

FringeCheck check_fringes(const std::vector<double>& born, const std::vector<double>& counts, double fraction) {
  if (born.size() != counts.size()) throw InvalidInput("fringe check needs matching bins");
  FringeCheck fc;
  fc.born_peaks = significant_maxima(born, fraction);
  const std::size_t n = born.size();
  for (std::size_t b : fc.born_peaks) {
    std::size_t lo = b, hi = b;
    while (lo > 0 && born[lo - 1] < born[lo]) --lo;
    while (hi + 1 < n && born[hi + 1] < born[hi]) ++hi;
    std::size_t best = b;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (counts[i] > counts[best]) best = i;
    }
    fc.histogram_peaks.push_back(best);
    fc.max_offset = std::max(fc.max_offset, best > b ? best - b : b - best);
  }
  fc.ok = !fc.born_peaks.empty() && fc.max_offset <= 1;
  return fc;
}

DoubleSlitResult double_slit_experiment(const DoubleSlitParams& params, const std::vector<std::size_t>& counts,
                                        std::uint64_t seed, unsigned threads) {
  if (counts.empty()) throw InvalidInput("double slit needs at least one count threshold");
  if (!std::is_sorted(counts.begin(), counts.end()) || counts.front() == 0) {
    throw InvalidInput("count thresholds must be positive and increasing");
  }
  if (params.frame_stride == 0 || params.frame_stride > 5) throw InvalidInput("frame stride must be in 1..5");
  const Lattice1D lat(params.sites, params.spacing);
  if (params.bins == 0 || lat.sites() % params.bins != 0) {
    throw InvalidInput("bin count must divide the number of lattice sites");
  }
  const DiracOperator op = DiracOperator::free(lat, params.mass);
  const SpinorField psi0 = slit_packet(params);
  const FrameSeries frames =
      record_frames(psi0, op, params.duration, params.dt * static_cast<double>(params.frame_stride));

  const std::size_t total = counts.back();
  const auto initial = sample_initial(frames.frame(0), total, seed);
  IntegrationOptions opt;
  opt.dt = params.dt;
  opt.duration = params.duration;
  const EnsembleResult ens = integrate_ensemble(frames, initial, opt, threads);

  DoubleSlitResult r{.arrivals = ens.final_first_positions(),
                     .cumulative = {},
                     .born_bin_probability = {},
                     .bin_left = {},
                     .bin_width = lat.length() / static_cast<double>(params.bins),
                     .excluded = ens.excluded,
                     .simulated = total,
                     .initial = psi0,
                     .final_state = single_electron_field(frames.frame(frames.size() - 1)),
                     .samples = {}};
  for (std::size_t c : counts) {
    const std::size_t used = std::min(c, r.arrivals.size());
    r.cumulative.push_back(histogram_arrivals(lat, std::span(r.arrivals).first(used), params.bins));
  }
  r.bin_left = r.cumulative.front().bin_left;
  r.born_bin_probability =
      bin_born_marginal(born_cell_marginal(frames.frame(frames.size() - 1), {1, 0}), params.bins);
  opt.record_stride = params.frame_stride;
  for (std::size_t k = 0; k < std::min(params.sample_trajectories, total); ++k) {
    r.samples.push_back(integrate(frames, initial[k], opt));
  }
  return r;
}

}  // namespace diraclab
