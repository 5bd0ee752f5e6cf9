#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "diraclab/bohm.hpp"
#include "diraclab/jumps.hpp"
#include "diraclab/locality.hpp"
#include "diraclab/sea.hpp"
#include "diraclab/stats.hpp"
#include "run_context.hpp"

namespace diraclab {

using nlohmann::json;
using detail::RunContext;

namespace {

ParamSpec positive(std::string name, double def, std::string doc) {
  return {std::move(name), ParamType::number, def, 0.0, true, std::move(doc), {}};
}
ParamSpec nonnegative(std::string name, double def, std::string doc) {
  return {std::move(name), ParamType::number, def, 0.0, false, std::move(doc), {}};
}
ParamSpec real(std::string name, double def, std::string doc) {
  return {std::move(name), ParamType::number, def, std::nullopt, false, std::move(doc), {}};
}
ParamSpec integer(std::string name, long long def, long long min, std::string doc) {
  return {std::move(name), ParamType::integer, def, static_cast<double>(min), false, std::move(doc), {}};
}
ParamSpec integers(std::string name, std::vector<long long> def, long long min, std::string doc) {
  return {std::move(name), ParamType::integer_list, def, static_cast<double>(min), false, std::move(doc), {}};
}
ParamSpec reals(std::string name, std::vector<double> def, std::optional<double> min, std::string doc) {
  return {std::move(name), ParamType::number_list, def, min, false, std::move(doc), {}};
}
ParamSpec text(std::string name, std::string def, std::string doc) {
  return {std::move(name), ParamType::string, def, std::nullopt, false, std::move(doc), {}};
}
ParamSpec boolean(std::string name, bool def, std::string doc) {
  return {std::move(name), ParamType::boolean, def, std::nullopt, false, std::move(doc), {}};
}
ParamSpec smearing() {
  ParamSpec p{"epsilon", ParamType::number, nullptr, 0.0, true,
              "smearing length of the photon coupling; default 2 * spacing (inert without a photon sector)", {}};
  p.derive = [](const json& params) { return json(2.0 * params.at("spacing").get<double>()); };
  return p;
}

void require_grid(const json& p, std::vector<std::string>& problems, const char* key = "sites") {
  const auto n = p.at(key).get<std::size_t>();
  if (n < 8 || (n & (n - 1)) != 0) {
    problems.push_back(std::string("params.") + key + ": propagation grids need a power of two >= 8 (got " +
                       std::to_string(n) + ")");
  }
}

void require_increasing(const json& p, const char* key, std::vector<std::string>& problems) {
  const auto v = p.at(key).get<std::vector<double>>();
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      problems.push_back(std::string("params.") + key + ": values must be strictly increasing");
      return;
    }
  }
}

void require_divides(const json& p, const char* bins, std::vector<std::string>& problems) {
  const auto n = p.at("sites").get<std::size_t>();
  const auto b = p.at(bins).get<std::size_t>();
  if (b == 0 || n % b != 0) {
    problems.push_back(std::string("params.") + bins + ": must divide sites (" + std::to_string(n) + ")");
  }
}

void require_stride(const json& p, std::vector<std::string>& problems) {
  if (p.at("frame_stride").get<long long>() > 5) problems.push_back("params.frame_stride: must be at most 5");
}

double relative_drift(double before, double after) { return std::fabs(after - before) / before; }

void write_trajectories(RunContext& ctx, const std::vector<Trajectory>& sample) {
  auto& out = ctx.csv("trajectories.csv", {"trajectory", "time", "position"});
  for (std::size_t k = 0; k < sample.size(); ++k) {
    for (std::size_t i = 0; i < sample[k].times.size(); ++i) out.row(k, sample[k].times[i], sample[k].positions[i][0]);
  }
}

void write_histogram(RunContext& ctx, const std::string& name, const Histogram& h) {
  auto& out = ctx.csv(name, {"bin_left", "count"});
  for (std::size_t b = 0; b < h.counts.size(); ++b) out.row(h.bin_left[b], static_cast<long long>(std::llround(h.counts[b])));
}

void write_born(RunContext& ctx, const std::vector<double>& left, const std::vector<double>& prob) {
  auto& out = ctx.csv("born_marginal.csv", {"bin_left", "probability"});
  for (std::size_t b = 0; b < prob.size(); ++b) out.row(left[b], prob[b]);
}

// ---------------------------------------------------------------- double_slit

void run_double_slit(RunContext& ctx) {
  DoubleSlitParams p;
  p.sites = ctx.count("sites");
  p.spacing = ctx.number("spacing");
  p.mass = ctx.number("mass");
  p.center = ctx.number("center");
  p.separation = ctx.number("separation");
  p.slit_width = ctx.number("slit_width");
  p.momentum = ctx.number("momentum");
  p.single_slit = ctx.flag("single_slit");
  p.duration = ctx.number("duration");
  p.dt = ctx.number("dt");
  p.frame_stride = ctx.count("frame_stride");
  p.bins = ctx.count("bins");
  p.max_excluded_fraction = ctx.number("max_excluded_fraction");
  p.sample_trajectories = ctx.count("trajectories");
  const auto counts = ctx.counts("counts");
  const auto r = double_slit_experiment(p, counts, ctx.seed(), ctx.threads());

  auto& arrivals = ctx.csv("arrivals.csv", {"index", "position"});
  for (std::size_t i = 0; i < r.arrivals.size(); ++i) arrivals.row(i, r.arrivals[i]);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    write_histogram(ctx, "histogram_" + std::to_string(counts[c]) + ".csv", r.cumulative[c]);
  }
  write_born(ctx, r.bin_left, r.born_bin_probability);
  auto& density = ctx.csv("density.csv", {"x", "initial", "final"});
  for (std::size_t i = 0; i < p.sites; ++i) {
    density.row(r.initial.lattice().coordinate(i), r.initial.density(i), r.final_state.density(i));
  }
  write_trajectories(ctx, r.samples);

  const std::size_t at = ctx.count("chi_square_at");
  const std::size_t idx = static_cast<std::size_t>(std::find(counts.begin(), counts.end(), at) - counts.begin());
  const auto chi = chi_square_test(r.cumulative[idx].counts, r.born_bin_probability);
  const auto fringes = check_fringes(r.born_bin_probability, r.cumulative.back().counts);
  const double excluded = static_cast<double>(r.excluded) / static_cast<double>(r.simulated);
  ctx.json("summary.json", {{"simulated", r.simulated},
                            {"excluded", r.excluded},
                            {"chi_square", {{"count", at}, {"statistic", chi.statistic}, {"dof", chi.dof},
                                            {"p_value", chi.p_value}, {"pooled_bins", chi.pooled_bins}}},
                            {"born_peaks", fringes.born_peaks},
                            {"histogram_peaks", fringes.histogram_peaks},
                            {"max_peak_offset", fringes.max_offset}});
  ctx.check("chi_square_p_value", chi.p_value, ">", 0.01);
  if (!p.single_slit) {
    ctx.check("fringe_count", static_cast<double>(fringes.born_peaks.size()), ">=", 2.0);
    ctx.check("fringe_max_offset_bins", fringes.ok ? static_cast<double>(fringes.max_offset) : 1e9, "<=", 1.0);
  }
  ctx.check("excluded_fraction", excluded, "<=", p.max_excluded_fraction);
  ctx.check("norm_drift", relative_drift(r.initial.squared_norm(), r.final_state.squared_norm()), "<", 1e-8);
}

// -------------------------------------------------------------- equivariance

void run_equivariance(RunContext& ctx) {
  const Lattice1D lat(ctx.count("sites"), ctx.number("spacing"));
  const double mass = ctx.number("mass");
  const DiracOperator op = DiracOperator::free(lat, mass);
  const auto proj = spectral_split(op);
  const SpinorField psi = proj.apply_plus(gaussian_packet(lat, ctx.number("center"), ctx.number("width"),
                                                          ctx.number("momentum"), Eigen::Vector2cd(1.0, 0.0)))
                              .normalized();
  const double duration = ctx.number("duration");
  const double dt = ctx.number("dt");
  const std::size_t stride = ctx.count("frame_stride");
  const FrameSeries frames = record_frames(psi, op, duration, dt * static_cast<double>(stride));
  const SectorState& last = frames.frame(frames.size() - 1);
  const std::size_t n = ctx.count("ensemble");
  const auto initial = sample_initial(frames.frame(0), n, ctx.seed());

  IntegrationOptions opt{.dt = dt, .duration = duration, .record_stride = 0, .guidance = Guidance::bohm};
  const auto bohm = integrate_ensemble(frames, initial, opt, ctx.threads());
  opt.guidance = Guidance::frozen;
  const auto frozen = integrate_ensemble(frames, initial, opt, ctx.threads());
  const auto xb = bohm.final_first_positions();
  const auto xf = frozen.final_first_positions();
  const double ks = equivariance_ks(xb, last, {1, 0});
  const double ks_frozen = equivariance_ks(xf, last, {1, 0});

  auto& fin = ctx.csv("final_positions.csv", {"member", "position"});
  for (std::size_t i = 0; i < xb.size(); ++i) fin.row(i, xb[i]);
  const std::size_t bins = ctx.count("bins");
  const Histogram h = histogram_arrivals(lat, xb, bins);
  write_histogram(ctx, "histogram.csv", h);
  write_born(ctx, h.bin_left, bin_born_marginal(born_cell_marginal(last, {1, 0}), bins));

  opt.guidance = Guidance::bohm;
  opt.record_stride = stride;
  std::vector<Trajectory> sample;
  for (std::size_t k = 0; k < std::min(ctx.count("trajectories"), n); ++k) sample.push_back(integrate(frames, initial[k], opt));
  write_trajectories(ctx, sample);

  const double drift = relative_drift(frames.frame(0).squared_norm(), last.squared_norm());
  ctx.json("summary.json", {{"ensemble", n},
                            {"excluded", bohm.excluded},
                            {"ks", ks},
                            {"ks_frozen", ks_frozen},
                            {"ks_critical_0.01", ks_critical(n, 0.01)},
                            {"norm_drift", drift}});
  ctx.check("ks_distance", ks, "<", ctx.number("ks_threshold"));
  ctx.check("ks_distance_frozen_control", ks_frozen, ">", 0.1);
  ctx.check("excluded_fraction", static_cast<double>(bohm.excluded) / static_cast<double>(n), "<=", 0.01);
  ctx.check("norm_drift", drift, "<", 1e-8);
}

// ---------------------------------------------------------------- pair_jumps

void run_pair_jumps(RunContext& ctx) {
  PairToyParams tp;
  tp.mass = ctx.number("mass");
  tp.spacing = ctx.number("spacing");
  tp.strength = ctx.number("strength");
  tp.photon_amplitude = ctx.number("photon_amplitude");
  tp.width = ctx.number("width");
  const PairToy toy(tp);
  const double duration = ctx.number("duration");
  const auto checkpoints = ctx.numbers("checkpoints");
  const std::size_t runs = ctx.count("runs");
  const auto s = jump_ensemble(toy, runs, duration, checkpoints, ctx.seed(), ctx.threads());

  auto& cp = ctx.csv("checkpoints.csv", {"time", "empirical_pair", "exact_pair", "standard_error", "z"});
  double worst = 0.0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const double diff = s.empirical_pair[c] - s.exact_pair[c];
    const double z = s.standard_error[c] > 0.0 ? diff / s.standard_error[c] : (diff == 0.0 ? 0.0 : 1e9);
    worst = std::max(worst, std::fabs(z));
    cp.row(checkpoints[c], s.empirical_pair[c], s.exact_pair[c], s.standard_error[c], z);
  }
  auto& ev = ctx.csv("events.csv", {"run", "time", "pre_electrons", "post_electrons", "x1", "x2"});
  const CVector vac = toy.vacuum();
  for (std::size_t k = 0; k < std::min(ctx.count("event_runs"), runs); ++k) {
    const auto run = bell_jump_simulate(toy, vac, 0, duration, checkpoints, ctx.seed(), k);
    for (const auto& e : run.events) ev.row(k, e.time, e.pre.electrons, e.post.electrons, e.positions.at(0), e.positions.at(1));
  }
  auto& curve = ctx.csv("exact_pair_probability.csv", {"time", "pair_probability"});
  const std::size_t samples = 200;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double t = duration * static_cast<double>(i) / samples;
    curve.row(t, toy.pair_probability(toy.evolve(vac, t)));
  }
  ctx.json("summary.json", {{"runs", runs},
                            {"total_jumps", s.total_jumps},
                            {"mean_up_jumps", s.mean_up_jumps},
                            {"expected_up_jumps", s.expected_up_jumps},
                            {"up_jumps_standard_error", s.up_jumps_standard_error}});
  ctx.check("max_checkpoint_z", worst, "<=", 3.0);
  if (tp.strength == 0.0 || tp.photon_amplitude == 0.0) {
    ctx.check("total_jumps", static_cast<double>(s.total_jumps), "==", 0.0);
  } else {
    const double z = s.up_jumps_standard_error > 0.0
                         ? std::fabs(s.mean_up_jumps - s.expected_up_jumps) / s.up_jumps_standard_error
                         : 0.0;
    ctx.check("up_jumps_z", z, "<=", 3.0);
  }
}

// ------------------------------------------------------------------- charges

void run_charges(RunContext& ctx) {
  const std::size_t sites = ctx.count("sites");
  const auto conv = ctx.text("convention") == "empty" ? SeaConvention::empty : SeaConvention::filled;
  const double e = ctx.number("charge");
  const FockBasis basis(Lattice1D(sites, ctx.number("spacing")), ctx.number("mass"), conv, e);
  const auto cells = split_cells(sites, ctx.count("cells"));
  const CVector omega = basis.reference_state();

  std::vector<CMatrix> q;
  for (const auto& cell : cells) q.emplace_back(charge_operator(basis, cell));
  auto& spectra = ctx.csv("spectra.csv", {"cell", "index", "eigenvalue", "charge_integer"});
  auto& vac = ctx.csv("vacuum.csv", {"cell", "sites", "mean", "variance"});
  double integrality = 0.0;
  double mean_max = 0.0;
  double var_min = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(q[c], Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double v = es.eigenvalues()[i];
      const long long k = std::llround(v / e);
      integrality = std::max(integrality, std::fabs(v - e * static_cast<double>(k)));
      spectra.row(c, i, v, k);
    }
    const double mean = omega.dot(q[c] * omega).real();
    const double var = omega.dot(q[c] * (q[c] * omega)).real() - mean * mean;
    mean_max = std::max(mean_max, std::fabs(mean));
    var_min = std::min(var_min, var);
    std::string members;
    for (std::size_t s : cells[c]) members += (members.empty() ? "" : ";") + std::to_string(s);
    vac.row(c, members, mean, var);
  }
  double commutator = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = i + 1; j < q.size(); ++j) commutator = std::max(commutator, (q[i] * q[j] - q[j] * q[i]).norm());
  }

  const std::size_t n = ctx.count("samples");
  const auto samples = sample_signed_config(basis, omega, cells, n, ctx.seed());
  auto& out = ctx.csv("samples.csv", {"sample_id", "cell", "charge_integer"});
  std::map<std::vector<int>, double> freq;
  std::size_t nonempty = 0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (std::size_t c = 0; c < cells.size(); ++c) out.row(k, c, samples[k].cell_charges[c]);
    freq[samples[k].cell_charges] += 1.0 / static_cast<double>(n);
    if (!samples[k].positive_points.empty() || !samples[k].negative_points.empty()) ++nonempty;
  }
  const auto exact = cell_charge_distribution(basis, omega, cells);
  auto& dist = ctx.csv("distribution.csv", {"outcome", "probability", "empirical", "z"});
  double worst = 0.0;
  for (const auto& [key, p] : exact) {
    std::string label;
    for (int v : key) label += (label.empty() ? "" : ";") + std::to_string(v);
    const double f = freq.count(key) ? freq.at(key) : 0.0;
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    const double z = sigma > 0.0 ? (f - p) / sigma : 0.0;
    worst = std::max(worst, std::fabs(z));
    dist.row(label, p, f, z);
  }
  double impossible = 0.0;
  for (const auto& [key, f] : freq) {
    if (!exact.count(key)) impossible += f;
  }
  ctx.json("summary.json", {{"dimension", basis.dimension()},
                            {"cells", cells.size()},
                            {"nonempty_fraction", static_cast<double>(nonempty) / static_cast<double>(n)},
                            {"max_integrality_error", integrality},
                            {"max_commutator", commutator},
                            {"max_vacuum_mean", mean_max},
                            {"min_vacuum_variance", var_min}});
  ctx.check("integrality", integrality, "<", 1e-10);
  ctx.check("commutator", commutator, "<", 1e-12);
  ctx.check("vacuum_mean", mean_max, "<", 1e-12);
  if (sites >= 3 && cells.size() >= 2) {
    ctx.check("vacuum_variance", var_min, ">", 0.0);
    ctx.check("nonempty_samples", static_cast<double>(nonempty), ">", 0.0);
  }
  ctx.check("sampling_max_z", worst, "<=", 3.0);
  ctx.check("impossible_outcomes", impossible, "==", 0.0);
}

// ------------------------------------------------------------------ locality

void run_locality(RunContext& ctx) {
  const double mass = ctx.number("mass");
  const Eigen::Vector2cd up(1.0, 0.0);

  const Lattice1D dl(ctx.count("defect_sites"), ctx.number("defect_spacing"));
  const auto proj = spectral_split(DiracOperator::free(dl, mass));
  auto& defects = ctx.csv("defect_scan.csv", {"region_sites", "region_fraction", "defect"});
  std::vector<double> defect_values;
  for (double frac : ctx.numbers("region_fractions")) {
    const double width = frac * dl.length();
    const Region a = interval_region(dl, 0.0, width);
    const double d = localization_defect(proj, box_packet(dl, 0.0, width, up), a);
    defect_values.push_back(d);
    defects.row(a.count(), frac, d);
  }

  LeakageSetup s;
  s.domain = ctx.number("domain");
  s.left = ctx.number("box_left");
  s.right = ctx.number("box_right");
  s.smoothing = ctx.number("smoothing");
  s.margin = ctx.number("margin");
  s.mass = mass;
  s.time = ctx.number("leakage_time");
  const auto sizes = ctx.counts("refinement_sizes");
  const auto leak = leakage_refinement(s, sizes);
  auto& scan = ctx.csv("leakage_scan.csv", {"sites", "spacing", "leakage"});
  bool monotone = true;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    scan.row(sizes[i], s.domain / static_cast<double>(sizes[i]), leak[i]);
    if (i > 0 && !(leak[i] < leak[i - 1])) monotone = false;
  }

  const Lattice1D tl(ctx.count("tail_sites"), ctx.number("tail_spacing"));
  const double len = tl.length();
  const double left = len / 2 - len / 16;
  const double right = len / 2 + len / 16;
  const double w = right - left;
  const SpinorField packet = smoothed_box_packet(tl, left + w / 4, right - w / 4, w / 16, w / 4, up).normalized();
  const TailReport tail = superluminal_tail_demo(DiracOperator::free(tl, mass), packet, interval_region(tl, left, right), len / 8);

  ctx.json("locality_report.json",
           {{"outside_mass", defect_values.front()},
            {"defects", defect_values},
            {"lightcone_leakage", leak.back()},
            {"refinement", {{"sites", sizes}, {"leakage", leak}, {"monotone", monotone}}},
            {"tail", {{"full_leakage", tail.full_leakage}, {"projected_leakage", tail.projected_leakage},
                      {"projected_defect", tail.projected_defect}, {"ratio", tail.ratio}}}});
  ctx.check("localization_defect", defect_values.front(), ">", 1e-6);
  bool grows = true;
  for (std::size_t i = 1; i < defect_values.size(); ++i) grows = grows && defect_values[i] > defect_values[i - 1];
  ctx.check("defect_grows_as_region_shrinks", grows ? 1.0 : 0.0, "==", 1.0);
  ctx.check("leakage_monotone", monotone ? 1.0 : 0.0, "==", 1.0);
  ctx.check("tail_ratio", tail.ratio, ">=", 10.0);
}

// ------------------------------------------------------------------- hs_scan

void run_hs_scan(RunContext& ctx) {
  const double mass = ctx.number("mass");
  const double domain = ctx.number("domain");
  const std::string family = ctx.text("family");
  const double shift = ctx.number("shift");
  auto& out = ctx.csv("hs_scan.csv", {"family", "sites", "spacing", "strength", "hs_norm"});
  double worst_shift = 0.0;
  double zero_value = 0.0;
  for (std::size_t n : ctx.counts("sizes")) {
    const Lattice1D lat(n, domain / static_cast<double>(n));
    for (double strength : ctx.numbers("strengths")) {
      auto v = potential_family(lat, family, strength);
      const double hs = hs_norm_offdiag(lat, mass, v);
      out.row(family, n, lat.spacing(), strength, hs);
      if (strength == 0.0) zero_value = std::max(zero_value, hs);
      for (double& x : v) x += shift;
      const double shifted = hs_norm_offdiag(lat, mass, v);
      worst_shift = std::max(worst_shift, hs > 0.0 ? std::fabs(shifted - hs) / hs : std::fabs(shifted));
    }
  }
  ctx.json("summary.json", {{"family", family}, {"max_relative_shift_residual", worst_shift}});
  ctx.check("shift_invariance", worst_shift, "<", 1e-10);
  ctx.check("zero_potential", zero_value, "==", 0.0);
}

// -------------------------------------------------------------- sectors_demo

void run_sectors_demo(RunContext& ctx) {
  const Lattice1D lat(ctx.count("sites"), ctx.number("spacing"));
  const double mass = ctx.number("mass");
  const Truncation trunc{static_cast<int>(ctx.integer("electrons")), static_cast<int>(ctx.integer("photons"))};
  auto space = build_sector_space(lat, trunc);
  const DiracOperator dirac = DiracOperator::free(lat, mass);
  const double lambda = ctx.number("lambda");
  std::optional<PairKernel> pair;
  if (lambda > 0.0) pair = PairKernel{lambda, ctx.number("pair_width")};
  const SectorHamiltonian h(space, dirac, make_coupling_kernel(lat, ctx.number("charge"), ctx.number("epsilon")), pair);

  const SpinorField packet = spectral_split(dirac)
                                 .apply_plus(gaussian_packet(lat, ctx.number("center"), ctx.number("width"),
                                                             ctx.number("momentum"), Eigen::Vector2cd(1.0, 0.0)))
                                 .normalized();
  const SectorState s0 = embed_single_electron(space, packet);
  const double duration = ctx.number("duration");
  const std::size_t steps = ctx.count("samples");

  const SparseOperator diff = SparseOperator(h.matrix() - SparseOperator(h.matrix().adjoint()));
  double herm = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseOperator::InnerIterator it(diff, k); it; ++it) herm = std::max(herm, std::abs(it.value()));
  }

  auto& norms = ctx.csv("sector_norms.csv", {"time", "electrons", "photons", "probability"});
  auto& energy = ctx.csv("energy.csv", {"time", "norm", "energy"});
  const double e0 = expectation(s0, h.matrix());
  double norm_drift = 0.0;
  double energy_drift = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = duration * static_cast<double>(i) / static_cast<double>(steps);
    const SectorState st = evolve_sectors(s0, h, t);
    for (const auto& [id, p] : sector_probabilities(st)) norms.row(t, id.electrons, id.photons, p);
    const double en = expectation(st, h.matrix());
    energy.row(t, st.squared_norm(), en);
    norm_drift = std::max(norm_drift, std::fabs(st.squared_norm() - 1.0));
    energy_drift = std::max(energy_drift, std::fabs(en - e0) / std::max(1.0, std::fabs(e0)));
  }
  ctx.json("summary.json", {{"dimension", space->dimension()},
                            {"sectors", space->sectors().size()},
                            {"hermiticity_residual", herm},
                            {"norm_drift", norm_drift},
                            {"energy_drift", energy_drift}});
  ctx.check("hermiticity", herm, "<", 1e-12);
  ctx.check("norm_drift", norm_drift, "<", 1e-8);
  ctx.check("energy_drift", energy_drift, "<", 1e-8);
  if (trunc.max_photons == 0 && trunc.max_electrons == 1) {
    const SpinorField direct = evolve(dirac, packet, duration);
    const SpinorField via = single_electron_field(evolve_sectors(s0, h, duration));
    ctx.check("one_particle_reduction", (direct - via).norm(), "<", 1e-10);
  }
}

std::vector<ExperimentInfo> build_registry() {
  std::vector<ExperimentInfo> r;

  r.push_back({"double_slit",
               "Bohmian arrivals behind a double slit, cumulative histograms against the Born marginal",
               {integer("sites", 512, 8, "lattice sites (power of two)"),
                positive("spacing", 1.0 / 16.0, "lattice spacing a"),
                positive("mass", 1.0, "electron mass"),
                smearing(),
                real("center", 16.0, "midpoint between the slits"),
                positive("separation", 6.0, "distance between slit centres"),
                positive("slit_width", 0.4, "Gaussian width of each slit"),
                real("momentum", 0.0, "mean momentum of the packet"),
                boolean("single_slit", false, "keep only the left slit"),
                positive("duration", 8.0, "evolution time T"),
                positive("dt", 0.02, "RK4 step"),
                integer("frame_stride", 5, 1, "integrator steps per stored frame (at most 5)"),
                integer("bins", 32, 2, "histogram bins (must divide sites)"),
                integers("counts", {10, 100, 3000, 20000, 70000}, 1, "cumulative histogram thresholds, increasing"),
                integer("chi_square_at", 20000, 1, "threshold used for the chi-square test (one of counts)"),
                nonnegative("max_excluded_fraction", 0.01, "allowed fraction of trajectories stopped at nodes"),
                integer("trajectories", 40, 0, "trajectories written with every frame")},
               [](const json& p, std::vector<std::string>& problems) {
                 require_grid(p, problems);
                 require_divides(p, "bins", problems);
                 require_stride(p, problems);
                 require_increasing(p, "counts", problems);
                 const auto counts = p.at("counts").get<std::vector<long long>>();
                 if (std::find(counts.begin(), counts.end(), p.at("chi_square_at").get<long long>()) == counts.end()) {
                   problems.push_back("params.chi_square_at: must be one of counts");
                 }
               }});

  r.push_back({"equivariance",
               "Bohmian ensemble on a free packet; KS distance to the Born marginal with a frozen control",
               {integer("sites", 256, 8, "lattice sites (power of two)"),
                positive("spacing", 0.1, "lattice spacing a"),
                positive("mass", 1.0, "electron mass"),
                smearing(),
                real("center", 8.0, "packet centre"),
                positive("width", 1.0, "packet width"),
                real("momentum", 1.5, "mean momentum"),
                positive("duration", 2.0, "evolution time T"),
                positive("dt", 0.01, "RK4 step"),
                integer("frame_stride", 5, 1, "integrator steps per stored frame (at most 5)"),
                integer("ensemble", 10000, 1, "number of trajectories"),
                integer("bins", 64, 2, "histogram bins (must divide sites)"),
                positive("ks_threshold", 0.03, "KS distance accepted for the Bohmian ensemble"),
                integer("trajectories", 40, 0, "trajectories written with every frame")},
               [](const json& p, std::vector<std::string>& problems) {
                 require_grid(p, problems);
                 require_divides(p, "bins", problems);
                 require_stride(p, problems);
               }});

  r.push_back({"pair_jumps",
               "Jump process on the two-site pair-creation toy against exact sector probabilities",
               {positive("mass", 1.0, "electron mass"),
                positive("spacing", 1.0, "distance between the two sites"),
                nonnegative("strength", 0.5, "pair-creation coupling lambda"),
                real("photon_amplitude", 1.0, "classical photon amplitude multiplying the pair term"),
                positive("width", 1.0, "pair kernel width"),
                integer("runs", 10000, 1, "number of simulated histories"),
                positive("duration", 8.0, "simulated time"),
                reals("checkpoints", {1.0, 2.5, 4.0, 5.5, 8.0}, 0.0, "times where sector occupation is compared"),
                integer("event_runs", 50, 0, "histories whose jump events are written")},
               [](const json& p, std::vector<std::string>& problems) {
                 require_increasing(p, "checkpoints", problems);
                 if (p.at("checkpoints").back().get<double>() > p.at("duration").get<double>()) {
                   problems.push_back("params.checkpoints: must not exceed duration");
                 }
               }});

  r.push_back({"charges",
               "Cell charge operators on a small Fock space: spectra, vacuum fluctuations, signed samples",
               {integer("sites", 3, 2, "Fock lattice sites (2..5 for the dense spectra)"),
                positive("spacing", 1.0, "lattice spacing a"),
                positive("mass", 1.0, "electron mass"),
                positive("charge", 1.0, "elementary charge e"),
                integer("cells", 2, 1, "number of cells partitioning the lattice"),
                integer("samples", 10000, 1, "signed-configuration samples"),
                text("convention", "filled", "reference state: filled (Dirac sea) or empty")},
               [](const json& p, std::vector<std::string>& problems) {
                 const auto n = p.at("sites").get<long long>();
                 if (n > 5) problems.push_back("params.sites: dense charge spectra need at most 5 sites (dimension 1024)");
                 if (p.at("cells").get<long long>() > n) problems.push_back("params.cells: at most one cell per site");
                 const auto c = p.at("convention").get<std::string>();
                 if (c != "filled" && c != "empty") problems.push_back("params.convention: must be 'filled' or 'empty'");
               }});

  r.push_back({"locality",
               "Localization defect, light-cone leakage under refinement and the projected-packet tail",
               {positive("mass", 1.0, "electron mass"),
                integer("defect_sites", 64, 2, "sites for the localization defect"),
                positive("defect_spacing", 0.25, "spacing for the localization defect"),
                reals("region_fractions", {0.5, 0.25, 0.125}, 0.0, "box sizes as fractions of the domain, shrinking"),
                positive("domain", 32.0, "physical length of the refinement domain"),
                real("box_left", 12.0, "left edge of the smoothed box"),
                real("box_right", 20.0, "right edge of the smoothed box"),
                positive("smoothing", 1.0, "Gaussian smoothing of the box edges"),
                nonnegative("margin", 3.0, "support margin around the box"),
                positive("leakage_time", 4.0, "evolution time for the leakage"),
                integers("refinement_sizes", {128, 256, 512}, 8, "lattice sizes at fixed physics"),
                integer("tail_sites", 256, 8, "sites for the tail comparison"),
                positive("tail_spacing", 0.125, "spacing for the tail comparison")},
               [](const json& p, std::vector<std::string>& problems) {
                 const auto fr = p.at("region_fractions").get<std::vector<double>>();
                 for (std::size_t i = 0; i < fr.size(); ++i) {
                   if (!(fr[i] > 0.0 && fr[i] < 1.0)) problems.push_back("params.region_fractions: values must lie in (0, 1)");
                   if (i > 0 && !(fr[i] < fr[i - 1])) problems.push_back("params.region_fractions: must be decreasing");
                 }
                 require_increasing(p, "refinement_sizes", problems);
                 if (!(p.at("box_right").get<double>() > p.at("box_left").get<double>())) {
                   problems.push_back("params.box_right: must exceed box_left");
                 }
               }});

  r.push_back({"hs_scan",
               "Hilbert-Schmidt norm of the off-diagonal potential part over strengths and lattice cutoffs",
               {positive("mass", 1.0, "electron mass"),
                positive("domain", 16.0, "physical length L a"),
                integers("sizes", {32, 64, 128}, 2, "lattice sizes (cutoffs)"),
                text("family", "step", "potential family: step, gaussian or cosine"),
                reals("strengths", {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}, std::nullopt, "potential strengths"),
                real("shift", 1.0, "constant added for the shift-invariance check")},
               [](const json& p, std::vector<std::string>& problems) {
                 const auto f = p.at("family").get<std::string>();
                 if (f != "step" && f != "gaussian" && f != "cosine") {
                   problems.push_back("params.family: must be step, gaussian or cosine");
                 }
               }});

  r.push_back({"sectors_demo",
               "Truncated electron-photon sector evolution of a one-electron packet",
               {integer("sites", 8, 2, "lattice sites"),
                positive("spacing", 0.5, "lattice spacing a"),
                positive("mass", 1.0, "electron mass"),
                nonnegative("charge", 0.1, "coupling constant e"),
                smearing(),
                nonnegative("lambda", 0.0, "pair-creation strength"),
                positive("pair_width", 1.0, "pair kernel width"),
                integer("electrons", 1, 1, "maximum electron number"),
                integer("photons", 1, 0, "maximum photon number"),
                real("center", 2.0, "packet centre"),
                positive("width", 0.5, "packet width"),
                real("momentum", 1.0, "mean momentum"),
                positive("duration", 5.0, "evolution time"),
                integer("samples", 10, 1, "number of time steps written")},
               {}});
  return r;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> registry = build_registry();
  return registry;
}

namespace detail {

ExperimentFn experiment_function(const std::string& name) {
  static const std::map<std::string, ExperimentFn> table = {
      {"double_slit", run_double_slit}, {"equivariance", run_equivariance}, {"pair_jumps", run_pair_jumps},
      {"charges", run_charges},         {"locality", run_locality},         {"hs_scan", run_hs_scan},
      {"sectors_demo", run_sectors_demo}};
  const auto it = table.find(name);
  if (it == table.end()) throw InvalidInput("unknown experiment '" + name + "'");
  return it->second;
}

}  // namespace detail
}  // namespace diraclab
