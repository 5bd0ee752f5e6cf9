#include "diraclab/jumps.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "diraclab/errors.hpp"
#include "diraclab/random.hpp"

namespace diraclab {

PairToy::PairToy(const PairToyParams& params) : params_(params), lattice_(2, params.spacing) {
  if (params.potential.size() != 2) throw InvalidInput("pair toy potential needs two sites");
  if (!(params.mass > 0.0)) throw InvalidInput("pair toy needs mass > 0");
  if (params.strength < 0.0 || !std::isfinite(params.strength)) throw InvalidInput("pair strength must be >= 0");
  if (!std::isfinite(params.photon_amplitude)) throw InvalidInput("photon amplitude must be finite");

  const DiracOperator dirac = build_dirac(lattice_, params.mass, 1.0, params.potential);
  const SectorSpace space(lattice_, {2, 0});
  const auto& pair = space.sector({2, 0});
  const SparseOperator free = build_free_part(space, dirac);

  h_ = CMatrix::Zero(7, 7);
  const auto off = static_cast<Eigen::Index>(pair.offset);
  h_.bottomRightCorner(6, 6) = CMatrix(free).block(off, off, 6, 6);

  CMatrix kernel = CMatrix::Zero(4, 4);
  if (params.strength > 0.0) {
    const auto proj = spectral_split(DiracOperator::free(lattice_, params.mass));
    for (const CMatrix& k : pair_amplitudes(lattice_, proj, params.width)) kernel += k;
    kernel *= params.strength * params.photon_amplitude;
  }
  configs_ = {{}, {0, 0}, {0, 1}, {1, 1}};
  members_.assign(4, {});
  members_[0].push_back(0);
  std::array<std::size_t, 2> pq{};
  for (std::size_t r = 0; r < 6; ++r) {
    space.electron_unrank(r, pq);
    const auto row = static_cast<Eigen::Index>(r + 1);
    h_(row, 0) = kernel(static_cast<Eigen::Index>(pq[0]), static_cast<Eigen::Index>(pq[1]));
    h_(0, row) = std::conj(h_(row, 0));
    members_[configuration_index({pq[0] / 2, pq[1] / 2})].push_back(r + 1);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h_);
  energies_ = es.eigenvalues();
  vectors_ = es.eigenvectors();
}

std::size_t PairToy::configuration_index(const ToyConfiguration& q) const {
  const auto it = std::find(configs_.begin(), configs_.end(), q);
  if (it == configs_.end()) throw InvalidInput("not a configuration of the pair toy");
  return static_cast<std::size_t>(it - configs_.begin());
}

CVector PairToy::vacuum() const {
  CVector v = CVector::Zero(7);
  v[0] = 1.0;
  return v;
}

CVector PairToy::evolve(const CVector& psi0, double t) const {
  CVector c = vectors_.adjoint() * psi0;
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::exp(complex(0.0, -energies_[i] * t));
  return vectors_ * c;
}

double PairToy::probability(const CVector& psi, std::size_t q) const {
  double p = 0.0;
  for (std::size_t i : members_.at(q)) p += std::norm(psi[static_cast<Eigen::Index>(i)]);
  return p;
}

double PairToy::current(const CVector& psi, std::size_t to, std::size_t from) const {
  complex acc = 0.0;
  for (std::size_t i : members_.at(to)) {
    for (std::size_t j : members_.at(from)) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      acc += std::conj(psi[ii]) * h_(ii, jj) * psi[jj];
    }
  }
  return 2.0 * acc.imag();
}

double PairToy::rate(const CVector& psi, std::size_t to, std::size_t from) const {
  if (to == from) return 0.0;
  const double rho = probability(psi, from);
  if (!(rho > 0.0)) return 0.0;
  return std::max(0.0, current(psi, to, from)) / rho;
}

double PairToy::total_rate(const CVector& psi, std::size_t from) const {
  double r = 0.0;
  for (std::size_t q = 0; q < configs_.size(); ++q) r += rate(psi, q, from);
  return r;
}

double PairToy::pair_probability(const CVector& psi) const {
  return 1.0 - std::norm(psi[0]);
}

std::size_t JumpRun::up_jumps() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const JumpEvent& e) {
    return e.post.electrons > e.pre.electrons;
  }));
}

JumpRun bell_jump_simulate(const PairToy& toy, const CVector& psi0, std::size_t q0, double duration,
                           const std::vector<double>& checkpoints, std::uint64_t seed, std::uint64_t run_index,
                           const JumpOptions& options) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidInput("duration must be finite and >= 0");
  if (q0 >= toy.configurations().size()) throw InvalidInput("initial configuration out of range");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) throw InvalidInput("checkpoints must be sorted");
  if (!checkpoints.empty() && (checkpoints.front() < 0.0 || checkpoints.back() > duration)) {
    throw InvalidInput("checkpoints must lie in [0, duration]");
  }
  if (!(options.initial_interval > 0.0) || options.bound_samples < 1 || !(options.bound_factor > 1.0)) {
    throw InvalidInput("invalid thinning options");
  }
  auto rng = make_stream(seed, "jumps", run_index);
  JumpRun run;
  std::size_t q = q0;
  double t = 0.0;
  double h = options.initial_interval;
  std::size_t next_checkpoint = 0;
  auto record_until = [&](double time) {  // checkpoints strictly before `time` see the current q
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] < time) {
      run.checkpoint_configs.push_back(q);
      ++next_checkpoint;
    }
  };
  const double a = toy.lattice().spacing();

  int refinements = 0;
  while (t < duration) {
    const double t_end = std::min(t + h, duration);
    double bound = 0.0;
    for (int k = 0; k <= options.bound_samples; ++k) {
      const double s = t + (t_end - t) * k / options.bound_samples;
      bound = std::max(bound, toy.total_rate(toy.evolve(psi0, s), q));
    }
    bound = options.bound_factor * bound + 1e-9;

    bool violated = false;
    bool jumped = false;
    double s = t;
    while (true) {
      s += -std::log1p(-uniform01(rng)) / bound;
      if (s >= t_end) break;
      const CVector psi = toy.evolve(psi0, s);
      const double r = toy.total_rate(psi, q);
      if (r > bound) {
        violated = true;
        break;
      }
      if (uniform01(rng) * bound >= r) continue;
      // accepted: choose the target in proportion to its rate
      double pick = uniform01(rng) * r;
      std::size_t target = q;
      for (std::size_t c = 0; c < toy.configurations().size(); ++c) {
        const double rc = toy.rate(psi, c, q);
        if (rc <= 0.0) continue;
        target = c;
        if (pick < rc) break;
        pick -= rc;
      }
      record_until(s);
      JumpEvent ev{s, toy.sector_of(q), toy.sector_of(target), {}};
      const auto& moved = toy.configurations()[target].empty() ? toy.configurations()[q] : toy.configurations()[target];
      for (std::size_t site : moved) ev.positions.push_back(static_cast<double>(site) * a);
      run.events.push_back(std::move(ev));
      q = target;
      t = s;
      jumped = true;
      break;
    }
    if (violated) {
      ++run.bound_retries;
      if (++refinements > options.max_refinements) {
        throw RateBoundError("jump rate exceeded its thinning bound at t = " + std::to_string(s) +
                             " even after " + std::to_string(options.max_refinements) + " refinements");
      }
      h *= 0.5;
      continue;
    }
    refinements = 0;
    if (!jumped) {
      record_until(t_end);
      t = t_end;
    }
    h = std::min(2.0 * h, options.initial_interval);
  }
  // checkpoints at or after the final time
  while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] <= duration) {
    run.checkpoint_configs.push_back(q);
    ++next_checkpoint;
  }
  return run;
}

double expected_up_jumps(const PairToy& toy, const CVector& psi0, double duration, std::size_t intervals) {
  if (intervals % 2) ++intervals;
  const double h = duration / static_cast<double>(intervals);
  auto flow = [&](double t) {
    const CVector psi = toy.evolve(psi0, t);
    double f = 0.0;
    for (std::size_t q = 1; q < toy.configurations().size(); ++q) f += std::max(0.0, toy.current(psi, q, 0));
    return f;
  };
  // composite Simpson
  double acc = flow(0.0) + flow(duration);
  for (std::size_t i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * flow(h * static_cast<double>(i));
  return acc * h / 3.0;
}

JumpEnsembleSummary jump_ensemble(const PairToy& toy, std::size_t runs, double duration,
                                  const std::vector<double>& checkpoints, std::uint64_t seed, unsigned threads) {
  if (runs == 0) throw InvalidInput("jump ensemble needs at least one run");
  std::vector<JumpRun> results(runs);
  const CVector psi0 = toy.vacuum();
  auto work = [&](std::size_t i) { results[i] = bell_jump_simulate(toy, psi0, 0, duration, checkpoints, seed, i); };
  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < runs; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex m;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < runs; i += threads) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(m);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  JumpEnsembleSummary s;
  s.runs = runs;
  s.checkpoints = checkpoints;
  const auto n = static_cast<double>(runs);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& r : results) {
    const auto u = static_cast<double>(r.up_jumps());
    sum += u;
    sum2 += u * u;
    s.total_jumps += r.events.size();
  }
  s.mean_up_jumps = sum / n;
  s.up_jumps_standard_error = std::sqrt(std::max(0.0, sum2 / n - s.mean_up_jumps * s.mean_up_jumps) / n);
  s.expected_up_jumps = expected_up_jumps(toy, psi0, duration);
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    double in_pair = 0.0;
    for (const auto& r : results) in_pair += toy.configurations()[r.checkpoint_configs.at(c)].empty() ? 0.0 : 1.0;
    const double p = toy.pair_probability(toy.evolve(psi0, checkpoints[c]));
    s.empirical_pair.push_back(in_pair / n);
    s.exact_pair.push_back(p);
    s.standard_error.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return s;
}

}  // namespace diraclab
