// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "diraclab/jumps.hpp"
#include "diraclab/locality.hpp"
#include "diraclab/runner.hpp"
#include "diraclab/sea.hpp"

namespace {

using namespace diraclab;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const CheckRecord* find_check(const RunManifest& m, const std::string& name) {
  for (const auto& c : m.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

double check_value(const RunManifest& m, const std::string& name) {
  const auto* c = find_check(m, name);
  return c ? c->value : std::nan("");
}

fs::path scratch_root() {
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() / ("diraclab-acceptance-" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

RunOutcome run(const json& doc, const fs::path& root) {
  RunOptions opt = options_from_environment();
  opt.output_root = root;
  return run_experiment(parse_config(doc), opt);
}

std::vector<double> step_potential(std::size_t n, std::size_t from, double height) {
  std::vector<double> v(n, 0.0);
  for (std::size_t i = from; i < n; ++i) v[i] = height;
  return v;
}

// ------------------------------------------------------------------------ 1

Verdict unitarity() {
  Verdict v;
  const auto t0 = Clock::now();
  const Lattice1D lat(64, 0.25);
  const DiracOperator op = build_dirac(lat, 1.0, 1.0, step_potential(64, 40, 1.5));
  const SpinorField psi = gaussian_packet(lat, 6.0, 1.0, 1.0, Eigen::Vector2cd(1.0, 0.5));
  const double n0 = psi.squared_norm();
  const double one = std::fabs(evolve(op, psi, 5.0).squared_norm() / n0 - 1.0);
  v.require(one < 1e-8, "1-particle drift " + num(one));

  const Lattice1D small(8, 0.5);
  const DiracOperator d = DiracOperator::free(small, 1.0);
  const SpinorField packet = gaussian_packet(small, 2.0, 0.5, 1.0, Eigen::Vector2cd(1.0, 0.0)).normalized();
  double worst = 0.0;
  for (const auto& [trunc, pair] :
       std::vector<std::pair<Truncation, std::optional<PairKernel>>>{{{1, 1}, std::nullopt}, {{2, 1}, PairKernel{0.5, 1.0}}}) {
    auto space = build_sector_space(small, trunc);
    const SectorHamiltonian h(space, d, make_coupling_kernel(small, 0.1, 1.0), pair);
    const SectorState s0 = embed_single_electron(space, packet);
    worst = std::max(worst, std::fabs(evolve_sectors(s0, h, 5.0).squared_norm() / s0.squared_norm() - 1.0));
  }
  v.require(worst < 1e-8, "sector drift " + num(worst));
  const double secs = seconds_since(t0);
  v.require(secs < 60.0, "runtime " + num(secs) + " s");
  return v;
}

// ------------------------------------------------------------------------ 2

Verdict spectrum() {
  Verdict v;
  double worst = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  const double m = 1.0;
  for (std::size_t n : {8u, 16u, 32u, 64u}) {
    const Lattice1D lat(n, 0.5);
    std::vector<double> expected;
    for (std::size_t k = 0; k < n; ++k) {
      const long long j = k < n / 2 ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(n);
      const double p = 2 * k == n ? 0.0 : 2.0 * std::numbers::pi * static_cast<double>(j) / lat.length();
      const double e = std::sqrt(m * m + p * p);
      expected.push_back(e);
      expected.push_back(-e);
    }
    std::sort(expected.begin(), expected.end());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(DiracOperator::free(lat, m).matrix(), Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      worst = std::max(worst, std::fabs(es.eigenvalues()[i] - expected[static_cast<std::size_t>(i)]));
      gap = std::min(gap, std::fabs(es.eigenvalues()[i]));
    }
  }
  v.require(worst < 1e-10, "max |E - (+-sqrt(m^2+p^2))| " + num(worst));
  v.require(std::fabs(gap - m) < 1e-10, "min |E| " + num(gap));
  return v;
}

// ------------------------------------------------------------------------ 3

Verdict conjugated_motion() {
  Verdict v;
  const Lattice1D lat(64, 0.25);
  const SpinorField packet = gaussian_packet(lat, 8.0, 1.0, 1.0, Eigen::Vector2cd(0.3, 1.0));
  const auto pot = step_potential(64, 40, 1.5);
  const SpinorField neg = spectral_split(DiracOperator::free(lat, 1.0)).apply_minus(packet).normalized();
  const auto ok = positron_motion_check(neg, 1.0, 1.0, pot, 2.0);
  v.require(ok.deviation < 1e-9 && !ok.warning, "deviation " + num(ok.deviation));
  const auto broken = positron_motion_check(neg, 1.0, 1.0, pot, 2.0, Eigen::Matrix2cd::Identity());
  v.require(broken.deviation > 1e-3, "broken C " + num(broken.deviation));
  return v;
}

// ------------------------------------------------------------------------ 4

// Joint Born weights from dense spectral projectors of each cell charge.
std::map<std::vector<int>, double> dense_joint(const std::vector<CMatrix>& q, double e, const CVector& omega) {
  std::vector<std::map<int, CMatrix>> projectors(q.size());
  for (std::size_t c = 0; c < q.size(); ++c) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(q[c]);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const int k = static_cast<int>(std::lround(es.eigenvalues()[i] / e));
      auto [it, fresh] = projectors[c].try_emplace(k, CMatrix::Zero(q[c].rows(), q[c].cols()));
      it->second += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
  }
  std::map<std::vector<int>, double> out;
  std::function<void(std::size_t, std::vector<int>&, const CVector&)> walk = [&](std::size_t c, std::vector<int>& key,
                                                                               const CVector& phi) {
    if (c == q.size()) {
      const double p = phi.squaredNorm();
      if (p > 1e-14) out[key] = p;
      return;
    }
    for (const auto& [k, proj] : projectors[c]) {
      key.push_back(k);
      walk(c + 1, key, proj * phi);
      key.pop_back();
    }
  };
  std::vector<int> key;
  walk(0, key, omega);
  return out;
}

Verdict charge_suite() {
  Verdict v;
  const auto t0 = Clock::now();
  const double e = 0.3;
  double integrality = 0.0, commutator = 0.0, mean = 0.0, worst_z = 0.0;
  double min_var = std::numeric_limits<double>::infinity();
  for (std::size_t sites : {2u, 3u, 4u}) {
    for (auto conv : {SeaConvention::filled, SeaConvention::empty}) {
      const FockBasis basis(Lattice1D(sites, 1.0), 1.0, conv, e);
      const CVector omega = basis.reference_state();
      for (std::size_t ncell = 1; ncell <= sites; ++ncell) {
        const auto cells = split_cells(sites, ncell);
        std::vector<CMatrix> q;
        for (const auto& cell : cells) q.emplace_back(CMatrix(charge_operator(basis, cell)));
        for (std::size_t i = 0; i < q.size(); ++i) {
          Eigen::SelfAdjointEigenSolver<CMatrix> es(q[i], Eigen::EigenvaluesOnly);
          for (double x : es.eigenvalues()) integrality = std::max(integrality, std::fabs(x - e * std::round(x / e)));
          const double mu = omega.dot(q[i] * omega).real();
          mean = std::max(mean, std::fabs(mu));
          if (sites >= 3 && ncell >= 2) min_var = std::min(min_var, omega.dot(q[i] * (q[i] * omega)).real() - mu * mu);
          for (std::size_t j = i + 1; j < q.size(); ++j) commutator = std::max(commutator, (q[i] * q[j] - q[j] * q[i]).norm());
        }
        if (ncell < 2 || sites < 3) continue;
        const auto exact = dense_joint(q, e, omega);
        const std::size_t n = 10000;
        std::map<std::vector<int>, double> freq;
        for (const auto& s : sample_signed_config(basis, omega, cells, n, 20260 + sites * 10 + ncell)) {
          freq[s.cell_charges] += 1.0;
        }
        for (const auto& [key, count] : freq) {
          if (!exact.count(key)) worst_z = std::numeric_limits<double>::infinity();
        }
        for (const auto& [key, p] : exact) {
          const double f = freq.count(key) ? freq.at(key) / n : 0.0;
          const double sigma = std::sqrt(p * (1 - p) / n);
          worst_z = std::max(worst_z, sigma > 0 ? std::fabs(f - p) / sigma : (f == p ? 0.0 : 1e9));
        }
      }
    }
  }
  v.require(integrality < 1e-10, "integrality " + num(integrality));
  v.require(commutator < 1e-12, "commutators " + num(commutator));
  v.require(mean < 1e-12, "vacuum mean " + num(mean));
  v.require(min_var > 0.0, "min vacuum variance (L_f>=3) " + num(min_var));
  v.require(worst_z <= 3.0, "sampling max |z| " + num(worst_z));
  const double secs = seconds_since(t0);
  v.require(secs < 120.0, "runtime " + num(secs) + " s");
  return v;
}

// ------------------------------------------------------------------------ 5

Verdict equivariance(const fs::path& root) {
  Verdict v;
  const auto t0 = Clock::now();
  const auto out = run({{"experiment", "equivariance"},
                        {"seed", 42},
                        {"params", {{"sites", 256}, {"ensemble", 10000}, {"duration", 2.0}}}},
                       root);
  const double ks = check_value(out.manifest, "ks_distance");
  const double frozen = check_value(out.manifest, "ks_distance_frozen_control");
  v.require(out.exit_code != 2, "run status " + out.manifest.status);
  v.require(ks < 0.03, "KS " + num(ks));
  v.require(frozen > 0.1, "frozen KS " + num(frozen));
  const double secs = seconds_since(t0);
  v.require(secs < 300.0, "runtime " + num(secs) + " s");
  return v;
}

// ------------------------------------------------------------------------ 6

Verdict double_slit(const fs::path& root) {
  Verdict v;
  const auto t0 = Clock::now();
  const std::vector<int> counts{10, 100, 3000, 20000, 70000};
  const auto out = run({{"experiment", "double_slit"}, {"seed", 42}, {"params", {{"counts", counts}}}}, root);
  v.require(out.exit_code != 2, "run status " + out.manifest.status);
  int files = 0;
  for (int c : counts) {
    const auto rows = read_csv(out.directory / ("histogram_" + std::to_string(c) + ".csv"));
    long long total = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) total += std::stoll(rows[r][1]);
    if (total == c) ++files;
  }
  v.require(files == 5, "histograms with matching totals " + std::to_string(files));
  const double p = check_value(out.manifest, "chi_square_p_value");
  v.require(p > 0.01, "chi-square p at 20000 " + num(p));
  std::ifstream in(out.directory / "summary.json");
  const json summary = json::parse(in);
  const auto offset = summary.at("max_peak_offset").get<int>();
  const auto peaks = summary.at("born_peaks").size();
  const bool same_count = peaks == summary.at("histogram_peaks").size();
  v.require(same_count && peaks >= 2 && offset <= 1,
            std::to_string(peaks) + " fringes, max offset " + std::to_string(offset) + " bin");
  const double secs = seconds_since(t0);
  v.require(secs < 600.0, "runtime " + num(secs) + " s");
  return v;
}

// ------------------------------------------------------------------------ 7

Verdict jumps(const fs::path& root) {
  Verdict v;
  const std::size_t runs = 10000;
  const auto out = run({{"experiment", "pair_jumps"}, {"seed", 42}, {"params", {{"runs", runs}}}}, root);
  v.require(out.exit_code != 2, "run status " + out.manifest.status);

  const PairToy toy(PairToyParams{});
  const CVector vac = toy.vacuum();
  double worst = 0.0;
  const auto rows = read_csv(out.directory / "checkpoints.csv");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double t = std::stod(rows[r][0]);
    const CVector psi = (complex(0.0, -t) * toy.hamiltonian()).exp() * vac;
    double exact = 0.0;
    for (std::size_t q = 0; q < toy.configurations().size(); ++q) {
      if (!toy.configurations()[q].empty()) exact += toy.probability(psi, q);
    }
    const double se = std::sqrt(exact * (1 - exact) / runs);
    worst = std::max(worst, std::fabs(std::stod(rows[r][1]) - exact) / se);
  }
  v.require(rows.size() == 6, "5 checkpoints");
  v.require(worst <= 3.0, "max |z| vs dense evolution " + num(worst));

  const auto off = run({{"experiment", "pair_jumps"}, {"seed", 42}, {"params", {{"runs", runs}, {"strength", 0.0}}}}, root);
  std::ifstream in(off.directory / "summary.json");
  const auto total = json::parse(in).at("total_jumps").get<long long>();
  v.require(total == 0, "lambda=0 jumps " + std::to_string(total));
  return v;
}

// ------------------------------------------------------------------------ 8

Verdict localization() {
  Verdict v;
  const Eigen::Vector2cd up(1.0, 0.0);
  const Lattice1D lat(64, 0.25);
  const double half = lat.length() / 2;
  const double d = localization_defect(spectral_split(DiracOperator::free(lat, 1.0)), box_packet(lat, 0.0, half, up),
                                       interval_region(lat, 0.0, half));
  v.require(d > 1e-6, "half-box defect " + num(d));

  const auto leak = leakage_refinement(LeakageSetup{}, {128, 256, 512});
  v.require(leak[1] < leak[0] && leak[2] < leak[1], "leakage " + num(leak[0]) + " > " + num(leak[1]) + " > " + num(leak[2]));

  const Lattice1D tl(256, 0.125);
  const double len = tl.length();
  const double left = len / 2 - len / 16, right = len / 2 + len / 16, w = right - left;
  const SpinorField packet = smoothed_box_packet(tl, left + w / 4, right - w / 4, w / 16, w / 4, up).normalized();
  const auto tail = superluminal_tail_demo(DiracOperator::free(tl, 1.0), packet, interval_region(tl, left, right), len / 8);
  v.require(tail.ratio >= 10.0, "tail ratio " + num(tail.ratio));
  return v;
}

// ------------------------------------------------------------------------ 9

double dense_offdiag_hs(const Lattice1D& lat, double mass, const std::vector<double>& pot) {
  const Eigen::Index n = static_cast<Eigen::Index>(2 * lat.sites());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(DiracOperator::free(lat, mass).matrix());
  CMatrix plus = CMatrix::Zero(n, n), minus = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CMatrix p = es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    (es.eigenvalues()[i] > 0 ? plus : minus) += p;
  }
  CMatrix vm = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) vm(i, i) = pot[static_cast<std::size_t>(i / 2)];
  const CMatrix off = plus * vm * minus;
  return (off.adjoint() * off).trace().real();
}

Verdict shale_stinespring() {
  Verdict v;
  const Lattice1D lat(64, 0.25);
  double worst = 0.0;
  for (const char* family : {"step", "gaussian", "cosine"}) {
    const auto pot = potential_family(lat, family, 1.3);
    const double fast = hs_norm_offdiag(lat, 1.0, pot);
    const double dense = dense_offdiag_hs(lat, 1.0, pot);
    worst = std::max(worst, std::fabs(fast - dense) / dense);
  }
  v.require(worst < 1e-10, "relative error vs dense trace " + num(worst));
  const double zero = hs_norm_offdiag(lat, 1.0, std::vector<double>(64, 0.0));
  const double constant = hs_norm_offdiag(lat, 1.0, std::vector<double>(64, 2.7));
  v.require(zero == 0.0 && constant == 0.0, "V=0 gives " + num(zero) + ", V=c gives " + num(constant));
  return v;
}

// ----------------------------------------------------------------------- 10

Verdict hermiticity_and_reduction() {
  Verdict v;
  const Lattice1D lat(8, 0.5);
  const DiracOperator d = DiracOperator::free(lat, 1.0);
  auto space = build_sector_space(lat, {2, 1});
  const SectorHamiltonian h(space, d, make_coupling_kernel(lat, 0.3, 1.0), PairKernel{0.5, 1.0});
  const CMatrix dense = h.dense();
  const double herm = (dense - dense.adjoint()).cwiseAbs().maxCoeff();
  v.require(herm < 1e-12, "hermiticity " + num(herm));

  auto one = build_sector_space(lat, {1, 0});
  const SectorHamiltonian h1(one, d, make_coupling_kernel(lat, 0.3, 1.0));
  const SpinorField packet = gaussian_packet(lat, 2.0, 0.5, 1.0, Eigen::Vector2cd(1.0, 0.3)).normalized();
  const SpinorField via = single_electron_field(evolve_sectors(embed_single_electron(one, packet), h1, 3.0));
  const double red = (via - evolve(d, packet, 3.0)).norm();
  v.require(red < 1e-10, "photon-free reduction " + num(red));

  auto two = build_sector_space(lat, {2, 0});
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  SectorState s(two);
  auto block = s.sector({2, 0});
  for (Eigen::Index i = 0; i < block.size(); ++i) block[i] = complex(g(rng), g(rng));
  const double mt = multitime_consistency(s.normalized(), d, 0.5);
  v.require(mt < 1e-10, "two-time consistency " + num(mt));
  return v;
}

// ----------------------------------------------------------------------- 11

Verdict determinism(const fs::path& root) {
  Verdict v;
  const json doc = {{"experiment", "equivariance"}, {"seed", 42}, {"params", {{"ensemble", 10000}}}};
  const auto a = run(doc, root / "a");
  const auto b = run(doc, root / "b");
  bool same = a.manifest.files.size() == b.manifest.files.size();
  for (std::size_t i = 0; same && i < a.manifest.files.size(); ++i) {
    same = a.manifest.files[i].name == b.manifest.files[i].name && a.manifest.files[i].sha256 == b.manifest.files[i].sha256;
  }
  v.require(same, "equivariance N=10^4 twice: " + std::to_string(a.manifest.files.size()) + " identical hashes");
  for (const char* name : {"charges", "hs_scan", "sectors_demo", "locality"}) {
    const json d2 = {{"experiment", name}, {"seed", 9}};
    const auto r = run(d2, root / "c");
    const auto rep = replay(r.directory / "manifest.json", std::nullopt, 1);
    v.require(rep.all_match, std::string(name) + " replay");
  }
  return v;
}

}  // namespace

int main() {
  const fs::path root = scratch_root();
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "unitarity", unitarity},
      {2, "free spectrum", spectrum},
      {3, "conjugated motion", conjugated_motion},
      {4, "charge operators", charge_suite},
      {5, "equivariance", [&] { return equivariance(root); }},
      {6, "double-slit build-up", [&] { return double_slit(root); }},
      {7, "jump process", [&] { return jumps(root); }},
      {8, "localization", localization},
      {9, "off-diagonal HS norm", shale_stinespring},
      {10, "hermiticity and reduction", hermiticity_and_reduction},
      {11, "determinism", [&] { return determinism(root); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = c.body();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  %2d %-26s %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  fs::remove_all(root);
  return failed == 0 ? 0 : 1;
}
