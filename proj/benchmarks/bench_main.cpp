#include <benchmark/benchmark.h>

#include "diraclab/bohm.hpp"
#include "diraclab/locality.hpp"
#include "diraclab/runner.hpp"
#include "diraclab/sea.hpp"

using namespace diraclab;

namespace {

SpinorField packet(const Lattice1D& lat) {
  return gaussian_packet(lat, lat.length() / 4, 1.0, 1.5, Eigen::Vector2cd(1.0, 0.0)).normalized();
}

}  // namespace

static void BM_EvolveFree(benchmark::State& state) {
  const Lattice1D lat(static_cast<std::size_t>(state.range(0)), 0.1);
  const DiracOperator op = DiracOperator::free(lat, 1.0);
  const SpinorField psi = packet(lat);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(op, psi, 2.0));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EvolveFree)->RangeMultiplier(2)->Range(64, 2048)->Complexity();

// Potential case goes through the dense eigendecomposition; first call pays for it.
static void BM_EvolveStepPotential(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Lattice1D lat(n, 0.1);
  std::vector<double> v(n, 0.0);
  for (std::size_t i = n / 2; i < n; ++i) v[i] = 1.0;
  const SpinorField psi = packet(lat);
  for (auto _ : state) {
    const DiracOperator op = build_dirac(lat, 1.0, 1.0, v);
    benchmark::DoNotOptimize(evolve(op, psi, 2.0));
  }
}
BENCHMARK(BM_EvolveStepPotential)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SpectralSplit(benchmark::State& state) {
  const Lattice1D lat(static_cast<std::size_t>(state.range(0)), 0.1);
  const auto proj = spectral_split(DiracOperator::free(lat, 1.0));
  const SpinorField psi = packet(lat);
  for (auto _ : state) benchmark::DoNotOptimize(proj.apply_plus(psi));
}
BENCHMARK(BM_SpectralSplit)->Arg(256)->Arg(1024);

static void BM_SectorHamiltonian(benchmark::State& state) {
  const Lattice1D lat(static_cast<std::size_t>(state.range(0)), 0.5);
  const DiracOperator d = DiracOperator::free(lat, 1.0);
  auto space = build_sector_space(lat, {2, 1});
  for (auto _ : state) {
    SectorHamiltonian h(space, d, make_coupling_kernel(lat, 0.1, 1.0), PairKernel{0.5, 1.0});
    benchmark::DoNotOptimize(h.matrix().nonZeros());
  }
}
BENCHMARK(BM_SectorHamiltonian)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_EvolveSectors(benchmark::State& state) {
  const Lattice1D lat(static_cast<std::size_t>(state.range(0)), 0.5);
  const DiracOperator d = DiracOperator::free(lat, 1.0);
  auto space = build_sector_space(lat, {2, 1});
  const SectorHamiltonian h(space, d, make_coupling_kernel(lat, 0.1, 1.0), PairKernel{0.5, 1.0});
  const SectorState s0 = embed_single_electron(space, packet(lat));
  for (auto _ : state) benchmark::DoNotOptimize(evolve_sectors(s0, h, 1.0));
}
BENCHMARK(BM_EvolveSectors)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_BohmEnsemble(benchmark::State& state) {
  const Lattice1D lat(256, 0.1);
  const DiracOperator op = DiracOperator::free(lat, 1.0);
  const SpinorField psi = spectral_split(op).apply_plus(packet(lat)).normalized();
  const FrameSeries frames = record_frames(psi, op, 1.0, 0.05);
  const auto initial = sample_initial(frames.frame(0), static_cast<std::size_t>(state.range(0)), 1);
  const IntegrationOptions opt{.dt = 0.01, .duration = 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate_ensemble(frames, initial, opt, 1).excluded);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BohmEnsemble)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_HsNormOffdiag(benchmark::State& state) {
  const Lattice1D lat(static_cast<std::size_t>(state.range(0)), 16.0 / static_cast<double>(state.range(0)));
  const auto v = potential_family(lat, "gaussian", 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(hs_norm_offdiag(lat, 1.0, v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HsNormOffdiag)->RangeMultiplier(2)->Range(32, 512)->Complexity(benchmark::oNSquared);

static void BM_ChargeOperator(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FockBasis basis(Lattice1D(n, 1.0), 1.0, SeaConvention::filled);
  const auto cells = split_cells(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(charge_operator(basis, cells[0]).nonZeros());
}
BENCHMARK(BM_ChargeOperator)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

static void BM_Sha256(benchmark::State& state) {
  const std::string data(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) benchmark::DoNotOptimize(sha256_hex(data));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sha256)->Arg(1 << 20);
BENCHMARK_MAIN();
