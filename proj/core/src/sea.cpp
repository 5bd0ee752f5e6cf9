#include "diraclab/sea.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "diraclab/errors.hpp"
#include "diraclab/random.hpp"

namespace diraclab {
namespace {

using Bits = std::uint64_t;

int jw_sign(Bits b, std::size_t k) {
  const Bits below = (Bits{1} << k) - 1;
  return std::popcount(b & below) % 2 ? -1 : 1;
}

// c_k or c_k^dag on |b>; returns false when the result vanishes.
bool annihilate(Bits& b, std::size_t k, int& sign) {
  if (!(b >> k & 1)) return false;
  sign *= jw_sign(b, k);
  b ^= Bits{1} << k;
  return true;
}

bool create(Bits& b, std::size_t k, int& sign) {
  if (b >> k & 1) return false;
  sign *= jw_sign(b, k);
  b |= Bits{1} << k;
  return true;
}

enum class Ladder { create, annihilate };

struct Quadratic {
  Ladder left;
  std::size_t k;
  Ladder right;
  std::size_t l;
  complex coeff;
};

SparseOperator assemble(std::size_t dim, const std::vector<Quadratic>& terms, complex constant) {
  std::vector<Eigen::Triplet<complex>> trip;
  for (Bits b = 0; b < dim; ++b) {
    if (constant != 0.0) trip.emplace_back(b, b, constant);
    for (const auto& t : terms) {
      Bits out = b;
      int sign = 1;
      const bool ok1 = t.right == Ladder::create ? create(out, t.l, sign) : annihilate(out, t.l, sign);
      if (!ok1) continue;
      const bool ok2 = t.left == Ladder::create ? create(out, t.k, sign) : annihilate(out, t.k, sign);
      if (!ok2) continue;
      trip.emplace_back(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(b), static_cast<double>(sign) * t.coeff);
    }
  }
  const auto n = static_cast<Eigen::Index>(dim);
  SparseOperator m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.prune(complex(0.0));
  return m;
}

complex subdeterminant(const CMatrix& u, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) return 1.0;
  CMatrix s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      s(i, j) = u(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]),
                  static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
    }
  }
  return s.determinant();
}

std::vector<std::size_t> set_bits(Bits b) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; b; ++k, b >>= 1) {
    if (b & 1) out.push_back(k);
  }
  return out;
}

// Second-quantized U: site amplitudes from mode amplitudes (or the adjoint).
CVector transform(const FockBasis& basis, const CVector& in, bool to_sites) {
  if (static_cast<std::size_t>(in.size()) != basis.dimension()) throw InvalidInput("state dimension mismatch");
  const std::size_t dim = basis.dimension();
  std::vector<std::vector<Bits>> by_count(basis.modes() + 1);
  for (Bits b = 0; b < dim; ++b) by_count[static_cast<std::size_t>(std::popcount(b))].push_back(b);
  const CMatrix& u = basis.mode_vectors();
  CVector out = CVector::Zero(in.size());
  for (const auto& block : by_count) {
    for (Bits src : block) {
      const complex c = in[static_cast<Eigen::Index>(src)];
      if (c == 0.0) continue;
      const auto src_set = set_bits(src);
      for (Bits dst : block) {
        const auto dst_set = set_bits(dst);
        // amplitude(S) = sum_K det U[S, K] c_K; the inverse is c_K = sum_S conj(det U[S, K]) amplitude(S)
        const complex d = to_sites ? subdeterminant(u, dst_set, src_set) : std::conj(subdeterminant(u, src_set, dst_set));
        out[static_cast<Eigen::Index>(dst)] += d * c;
      }
    }
  }
  return out;
}

void check_cells(const FockBasis& basis, const std::vector<std::vector<std::size_t>>& cells) {
  std::vector<int> seen(basis.lattice().sites(), 0);
  for (const auto& cell : cells) {
    for (std::size_t s : cell) {
      if (s >= seen.size()) throw InvalidInput("cell site out of range");
      ++seen[s];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw InvalidInput("cells must partition the lattice");
  }
}

}  // namespace

FockBasis::FockBasis(Lattice1D lattice, double mass, SeaConvention convention, double charge)
    : lattice_(lattice), mass_(mass), charge_(charge), convention_(convention) {
  if (lattice_.sites() > kMaxSites) {
    std::ostringstream msg;
    msg << "Fock lattice of " << lattice_.sites() << " sites has dimension 2^" << 2 * lattice_.sites()
        << " = " << std::ldexp(1.0, static_cast<int>(2 * lattice_.sites())) << "; at most " << kMaxSites
        << " sites (dimension 4096) are supported";
    throw InvalidInput(msg.str());
  }
  if (!(charge_ > 0.0)) throw InvalidInput("charge must be > 0");
  const DiracOperator free = DiracOperator::free(lattice_, mass_);
  const auto& spec = free.spectrum();
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    if (std::abs(spec.values[i]) < 1e-12) throw GaplessSpectrum("free spectrum has a zero mode; need mass > 0");
  }
  energies_ = spec.values;
  modes_ = spec.vectors;
  negative_ = static_cast<std::size_t>((energies_.array() < 0.0).count());

  const double shift = convention_ == SeaConvention::filled ? -energies_.head(static_cast<Eigen::Index>(negative_)).sum() : 0.0;
  std::vector<Eigen::Triplet<complex>> trip;
  for (Bits b = 0; b < dimension(); ++b) {
    double e = shift;
    for (std::size_t k : set_bits(b)) e += energies_[static_cast<Eigen::Index>(k)];
    trip.emplace_back(b, b, e);
  }
  const auto n = static_cast<Eigen::Index>(dimension());
  hamiltonian_.resize(n, n);
  hamiltonian_.setFromTriplets(trip.begin(), trip.end());
}

std::uint64_t FockBasis::reference_bits() const noexcept {
  return convention_ == SeaConvention::filled ? (Bits{1} << negative_) - 1 : 0;
}

CVector FockBasis::basis_state(std::uint64_t bits) const {
  if (bits >= dimension()) throw InvalidInput("occupation bits out of range");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(dimension()));
  v[static_cast<Eigen::Index>(bits)] = 1.0;
  return v;
}

CVector FockBasis::reference_state() const { return basis_state(reference_bits()); }

SparseOperator one_body_operator(const FockBasis& basis, const CMatrix& m) {
  const auto n = static_cast<Eigen::Index>(basis.modes());
  if (m.rows() != n || m.cols() != n) throw InvalidInput("one-body matrix must be modes x modes");
  std::vector<Quadratic> terms;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (m(k, l) != 0.0) {
        terms.push_back({Ladder::create, static_cast<std::size_t>(k), Ladder::annihilate, static_cast<std::size_t>(l), m(k, l)});
      }
    }
  }
  return assemble(basis.dimension(), terms, 0.0);
}

CMatrix cell_mode_matrix(const FockBasis& basis, const std::vector<std::size_t>& cell) {
  const CMatrix& u = basis.mode_vectors();
  CMatrix rows = CMatrix::Zero(u.rows(), u.cols());
  for (std::size_t site : cell) {
    if (site >= basis.lattice().sites()) throw InvalidInput("cell site out of range");
    for (std::size_t s = 0; s < 2; ++s) {
      const auto r = static_cast<Eigen::Index>(spinor::index(site, s));
      rows.row(r) = u.row(r);
    }
  }
  return u.adjoint() * rows;
}

SparseOperator charge_operator(const FockBasis& basis, const std::vector<std::size_t>& cell) {
  const CMatrix m = cell_mode_matrix(basis, cell);
  const std::size_t n = basis.negative_modes();
  const double e = basis.charge();
  const auto modes = static_cast<std::size_t>(m.rows());
  std::vector<Quadratic> terms;
  auto add = [&](Ladder left, std::size_t k, Ladder right, std::size_t l, complex c) {
    if (c != 0.0) terms.push_back({left, k, right, l, c});
  };
  complex constant = 0.0;
  if (basis.convention() == SeaConvention::filled) {
    for (std::size_t k = 0; k < modes; ++k) {
      for (std::size_t l = 0; l < modes; ++l) add(Ladder::create, k, Ladder::annihilate, l, -e * m(k, l));
    }
    for (std::size_t k = 0; k < n; ++k) constant += e * m(k, k);
    return assemble(basis.dimension(), terms, constant);
  }
  // hole picture: negative modes carry charge +e, and mixed terms create/annihilate pairs
  for (std::size_t k = 0; k < modes; ++k) {
    for (std::size_t l = 0; l < modes; ++l) {
      const complex c = m(k, l);
      const bool kn = k < n;
      const bool ln = l < n;
      if (!kn && !ln) add(Ladder::create, k, Ladder::annihilate, l, -e * c);
      if (kn && ln) add(Ladder::create, l, Ladder::annihilate, k, e * c);
      if (!kn && ln) add(Ladder::create, k, Ladder::create, l, e * c);
      if (kn && !ln) add(Ladder::annihilate, k, Ladder::annihilate, l, e * c);
    }
  }
  return assemble(basis.dimension(), terms, 0.0);
}

SparseOperator total_charge(const FockBasis& basis) {
  std::vector<std::size_t> all(basis.lattice().sites());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return charge_operator(basis, all);
}

SparseOperator hole_map(const FockBasis& basis) {
  const std::size_t n = basis.negative_modes();
  const std::size_t dim = basis.dimension();
  // i^{n(n-1)/2}
  static const complex powers[4] = {1.0, complex(0.0, 1.0), -1.0, complex(0.0, -1.0)};
  const complex phase = powers[(n * (n - 1) / 2) % 4];
  std::vector<Eigen::Triplet<complex>> trip;
  trip.reserve(dim);
  for (Bits b = 0; b < dim; ++b) {
    Bits out = b;
    int sign = 1;
    for (std::size_t k = n; k-- > 0;) {  // gamma_0 ... gamma_{n-1}, rightmost first
      sign *= jw_sign(out, k);
      out ^= Bits{1} << k;
    }
    trip.emplace_back(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(b), static_cast<double>(sign) * phase);
  }
  const auto d = static_cast<Eigen::Index>(dim);
  SparseOperator w(d, d);
  w.setFromTriplets(trip.begin(), trip.end());
  return w;
}

CVector hole_map_apply(const FockBasis& basis, const CVector& state) {
  if (static_cast<std::size_t>(state.size()) != basis.dimension()) throw InvalidInput("state dimension mismatch");
  return hole_map(basis) * state;
}

CVector site_occupation_amplitudes(const FockBasis& basis, const CVector& state) {
  return transform(basis, state, true);
}

CVector from_site_occupation(const FockBasis& basis, const CVector& site_amplitudes) {
  return transform(basis, site_amplitudes, false);
}

std::vector<std::vector<std::size_t>> split_cells(std::size_t sites, std::size_t cells) {
  if (cells == 0 || cells > sites) throw InvalidInput("need 1 <= cells <= sites");
  std::vector<std::vector<std::size_t>> out(cells);
  for (std::size_t i = 0; i < sites; ++i) out[i * cells / sites].push_back(i);
  return out;
}

namespace {

// Per site-occupation bitstring: probability and the cell charges in units of e.
struct Outcomes {
  std::vector<double> probability;
  std::vector<std::vector<int>> charges;
};

Outcomes site_outcomes(const FockBasis& basis, const CVector& state,
                       const std::vector<std::vector<std::size_t>>& cells) {
  check_cells(basis, cells);
  const double norm = state.squaredNorm();
  if (std::abs(norm - 1.0) > 1e-8) throw InvalidInput("state must be normalized");
  // Q(A) = W^dag Q_filled(A) W in the hole picture, so both conventions reduce to the filled one
  const CVector filled = basis.convention() == SeaConvention::filled ? state : hole_map_apply(basis, state);
  const CVector amps = site_occupation_amplitudes(basis, filled);

  // Q(A)/e = tr(P_A P_-) - N_A; the trace is |A| for the free operator, checked here
  std::vector<int> offsets;
  for (const auto& cell : cells) {
    const CMatrix m = cell_mode_matrix(basis, cell);
    const double tr = m.diagonal().head(static_cast<Eigen::Index>(basis.negative_modes())).real().sum();
    const double r = std::round(tr);
    if (std::abs(tr - r) > 1e-9) throw Error("sea occupation of a cell is not integral");
    offsets.push_back(static_cast<int>(r));
  }
  Outcomes out;
  out.probability.resize(basis.dimension());
  out.charges.resize(basis.dimension());
  for (Bits b = 0; b < basis.dimension(); ++b) {
    out.probability[b] = std::norm(amps[static_cast<Eigen::Index>(b)]);
    auto& q = out.charges[b];
    q.resize(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      int count = 0;
      for (std::size_t site : cells[c]) count += static_cast<int>((b >> (2 * site) & 1) + (b >> (2 * site + 1) & 1));
      q[c] = offsets[c] - count;
    }
  }
  return out;
}

}  // namespace

std::map<std::vector<int>, double> cell_charge_distribution(const FockBasis& basis, const CVector& state,
                                                            const std::vector<std::vector<std::size_t>>& cells) {
  const Outcomes o = site_outcomes(basis, state, cells);
  std::map<std::vector<int>, double> dist;
  for (std::size_t b = 0; b < o.probability.size(); ++b) {
    if (o.probability[b] > 0.0) dist[o.charges[b]] += o.probability[b];
  }
  std::erase_if(dist, [](const auto& kv) { return kv.second < 1e-14; });  // roundoff from the determinants
  return dist;
}

std::vector<SignedConfiguration> sample_signed_config(const FockBasis& basis, const CVector& state,
                                                      const std::vector<std::vector<std::size_t>>& cells,
                                                      std::size_t count, std::uint64_t seed) {
  const Outcomes o = site_outcomes(basis, state, cells);
  std::vector<double> cdf(o.probability.size());
  std::partial_sum(o.probability.begin(), o.probability.end(), cdf.begin());
  const double total = cdf.back();
  std::vector<double> centres;
  for (const auto& cell : cells) {
    double x = 0.0;
    for (std::size_t s : cell) x += basis.lattice().coordinate(s);
    centres.push_back(x / static_cast<double>(cell.size()));
  }
  std::vector<SignedConfiguration> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto rng = make_stream(seed, "signed_config", k);
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<std::size_t>(it - cdf.begin());
    idx = std::min(idx, cdf.size() - 1);
    while (o.probability[idx] == 0.0 && idx > 0) --idx;
    SignedConfiguration cfg;
    cfg.cell_charges = o.charges[idx];
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const int q = cfg.cell_charges[c];
      auto& points = q > 0 ? cfg.positive_points : cfg.negative_points;
      for (int i = 0; i < std::abs(q); ++i) points.push_back(centres[c]);
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

PositronMotionReport positron_motion_check(const SpinorField& packet, double mass, double charge,
                                           const std::vector<double>& potential, double duration,
                                           const std::optional<Eigen::Matrix2cd>& conjugation) {
  const Lattice1D& lattice = packet.lattice();
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidInput("duration must be finite and >= 0");
  PositronMotionReport report;
  const auto projectors = spectral_split(DiracOperator::free(lattice, mass));
  const double total = packet.squared_norm();
  if (!(total > 0.0)) throw InvalidInput("packet has zero norm");
  report.positive_fraction = projectors.apply_plus(packet).squared_norm() / total;
  if (report.positive_fraction > 1e-10) {
    std::ostringstream msg;
    msg << "packet is not purely negative-energy: positive-energy fraction " << report.positive_fraction;
    report.warning = msg.str();
  }
  const DiracOperator plus = build_dirac(lattice, mass, charge, potential);
  const DiracOperator minus = plus.with_charge(-charge);
  const ChargeConjugation c = conjugation ? ChargeConjugation(*conjugation) : ChargeConjugation();
  const SpinorField lhs = c.apply(evolve(plus, packet, duration));
  const SpinorField rhs = evolve(minus, c.apply(packet), duration);
  report.deviation = (lhs - rhs).norm();
  return report;
}

}  // namespace diraclab
