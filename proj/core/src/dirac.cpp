#include "diraclab/dirac.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>

#include <unsupported/Eigen/FFT>

#include "diraclab/errors.hpp"

namespace diraclab {
namespace {

constexpr double kGapTolerance = 1e-12;

// Applies a 2x2 matrix per momentum mode: FFT both components, multiply, invert.
template <typename BlockFn>
SpinorField momentum_apply(const SpinorField& field, BlockFn&& block) {
  const std::size_t n = field.lattice().sites();
  std::vector<complex> up(n), down(n), up_k, down_k;
  for (std::size_t i = 0; i < n; ++i) {
    up[i] = field(i, 0);
    down[i] = field(i, 1);
  }
  Eigen::FFT<double> fft;
  fft.fwd(up_k, up);
  fft.fwd(down_k, down);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Matrix2cd b = block(k);
    const complex u = up_k[k];
    const complex d = down_k[k];
    up_k[k] = b(0, 0) * u + b(0, 1) * d;
    down_k[k] = b(1, 0) * u + b(1, 1) * d;
  }
  fft.inv(up, up_k);
  fft.inv(down, down_k);
  SpinorField out(field.lattice());
  for (std::size_t i = 0; i < n; ++i) {
    out.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 0))] = up[i];
    out.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 1))] = down[i];
  }
  return out;
}

Eigen::Matrix2cd free_block(double mass, double p) {
  return p * spinor::alpha() + mass * spinor::beta();
}

std::vector<double> spectral_derivative(const Lattice1D& lattice, const std::vector<double>& f) {
  const std::size_t n = lattice.sites();
  const auto p = lattice.momentum_grid();
  std::vector<complex> in(f.begin(), f.end()), out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  for (std::size_t k = 0; k < n; ++k) out[k] *= complex(0.0, p[k]);
  fft.inv(in, out);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = in[i].real();
  return d;
}

}  // namespace

struct DiracOperator::Cache {
  std::once_flag matrix_once;
  std::once_flag spectrum_once;
  CMatrix matrix;
  Spectrum spectrum;
};

DiracOperator::DiracOperator(Lattice1D lattice, double mass, double charge,
                             std::vector<double> potential)
    : lattice_(lattice),
      mass_(mass),
      charge_(charge),
      potential_(std::move(potential)),
      translation_invariant_(false),
      cache_(std::make_shared<Cache>()) {
  if (!std::isfinite(mass) || mass < 0.0) throw InvalidInput("mass must be finite and >= 0");
  if (!std::isfinite(charge)) throw InvalidInput("charge must be finite");
  if (potential_.size() != lattice_.sites()) {
    throw InvalidInput("potential length " + std::to_string(potential_.size()) +
                       " does not match lattice size " + std::to_string(lattice_.sites()));
  }
  for (double v : potential_) {
    if (!std::isfinite(v)) throw InvalidInput("potential has non-finite entries");
  }
  translation_invariant_ = std::all_of(potential_.begin(), potential_.end(),
                                       [&](double v) { return v == potential_.front(); });
}

DiracOperator DiracOperator::free(Lattice1D lattice, double mass, double charge) {
  return DiracOperator(lattice, mass, charge, std::vector<double>(lattice.sites(), 0.0));
}

DiracOperator DiracOperator::with_charge(double charge) const {
  return DiracOperator(lattice_, mass_, charge, potential_);
}

DiracOperator DiracOperator::with_potential(std::vector<double> potential) const {
  return DiracOperator(lattice_, mass_, charge_, std::move(potential));
}

const CMatrix& DiracOperator::matrix() const {
  std::call_once(cache_->matrix_once, [this] {
    const std::size_t n = lattice_.sites();
    const Eigen::MatrixXd d = spectral_derivative_matrix(lattice_);
    CMatrix h = CMatrix::Zero(static_cast<Eigen::Index>(2 * n), static_cast<Eigen::Index>(2 * n));
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < n; ++l) {
        const complex p = complex(0.0, -d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)));
        for (int s = 0; s < 2; ++s) {
          for (int t = 0; t < 2; ++t) {
            h(static_cast<Eigen::Index>(2 * j + s), static_cast<Eigen::Index>(2 * l + t)) +=
                spinor::alpha()(s, t) * p;
          }
        }
      }
      for (int s = 0; s < 2; ++s) {
        for (int t = 0; t < 2; ++t) {
          h(static_cast<Eigen::Index>(2 * j + s), static_cast<Eigen::Index>(2 * j + t)) +=
              mass_ * spinor::beta()(s, t) + (s == t ? charge_ * potential_[j] : 0.0);
        }
      }
    }
    cache_->matrix = std::move(h);
  });
  return cache_->matrix;
}

const Spectrum& DiracOperator::spectrum() const {
  std::call_once(cache_->spectrum_once, [this] {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(matrix());
    if (solver.info() != Eigen::Success) throw Error("Dirac eigen-decomposition failed");
    cache_->spectrum.values = solver.eigenvalues();
    cache_->spectrum.vectors = solver.eigenvectors();
  });
  return cache_->spectrum;
}

SpinorField DiracOperator::apply(const SpinorField& field) const {
  if (!(field.lattice() == lattice_)) throw InvalidInput("field and operator lattices differ");
  if (translation_invariant_) {
    const auto p = lattice_.momentum_grid();
    const double shift = constant_shift();
    return momentum_apply(field, [&](std::size_t k) {
      return Eigen::Matrix2cd(free_block(mass_, p[k]) + shift * Eigen::Matrix2cd::Identity());
    });
  }
  return SpinorField(lattice_, matrix() * field.amplitudes());
}

DiracOperator build_dirac(const Lattice1D& lattice, double mass, double charge,
                          std::span<const double> potential) {
  return DiracOperator(lattice, mass, charge, std::vector<double>(potential.begin(), potential.end()));
}

Eigen::MatrixXd spectral_derivative_matrix(const Lattice1D& lattice) {
  const std::size_t n = lattice.sites();
  const auto p = lattice.momentum_grid();
  std::vector<double> c(n, 0.0);
  for (std::size_t d = 1; 2 * d < n; ++d) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>((k * d) % n) / static_cast<double>(n);
      acc += p[k] * std::sin(theta);
    }
    c[d] = -acc / static_cast<double>(n);
    c[n - d] = -c[d];
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = c[(j + n - l) % n];
    }
  }
  return m;
}

CMatrix momentum_function_matrix(const Lattice1D& lattice, const std::vector<double>& symbol) {
  const std::size_t n = lattice.sites();
  if (symbol.size() != n) throw InvalidInput("symbol length must equal lattice size");
  std::vector<complex> g(n);
  for (std::size_t d = 0; 2 * d <= n; ++d) {
    complex acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>((k * d) % n) / static_cast<double>(n);
      acc += symbol[k] * complex(std::cos(theta), std::sin(theta));
    }
    g[d] = acc / static_cast<double>(n);
    if (d != 0 && 2 * d != n) g[n - d] = std::conj(g[d]);
  }
  if (n % 2 == 0) g[n / 2] = g[n / 2].real();
  g[0] = g[0].real();
  CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = g[(j + n - l) % n];
    }
  }
  return m;
}

std::vector<double> free_energies(const Lattice1D& lattice, double mass) {
  auto p = lattice.momentum_grid();
  for (double& e : p) e = std::hypot(mass, e);
  return p;
}

SpinorField evolve(const DiracOperator& op, const SpinorField& field, double t) {
  if (!(field.lattice() == op.lattice())) throw InvalidInput("field and operator lattices differ");
  if (!std::isfinite(t)) throw InvalidInput("evolution time must be finite");
  if (t == 0.0) return field;
  if (op.translation_invariant()) {
    const auto p = op.lattice().momentum_grid();
    const double m = op.mass();
    const complex phase = std::exp(complex(0.0, -op.constant_shift() * t));
    return momentum_apply(field, [&](std::size_t k) {
      const double e = std::hypot(m, p[k]);
      if (e == 0.0) return Eigen::Matrix2cd(phase * Eigen::Matrix2cd::Identity());
      const Eigen::Matrix2cd u = std::cos(e * t) * Eigen::Matrix2cd::Identity() -
                                 complex(0.0, std::sin(e * t) / e) * free_block(m, p[k]);
      return Eigen::Matrix2cd(phase * u);
    });
  }
  const Spectrum& s = op.spectrum();
  CVector coeff = s.vectors.adjoint() * field.amplitudes();
  for (Eigen::Index i = 0; i < coeff.size(); ++i) {
    coeff[i] *= std::exp(complex(0.0, -s.values[i] * t));
  }
  return SpinorField(op.lattice(), s.vectors * coeff);
}

SpinorField plane_wave(const Lattice1D& lattice, double mass, std::size_t k, int sign) {
  if (k >= lattice.sites()) throw InvalidInput("momentum index out of range");
  const double p = lattice.momentum_grid()[k];
  const double e = std::hypot(mass, p);
  Eigen::Vector2cd u;
  if (e == 0.0) {
    u = sign > 0 ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
  } else if (sign > 0) {
    u = Eigen::Vector2cd(e + mass, p);
  } else {
    u = Eigen::Vector2cd(-p, e + mass);
  }
  u /= u.norm();
  const std::size_t n = lattice.sites();
  const double amp = 1.0 / std::sqrt(lattice.length());
  SpinorField f(lattice);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>((k * j) % n) / static_cast<double>(n);
    const complex ph = amp * complex(std::cos(theta), std::sin(theta));
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(j, 0))] = ph * u[0];
    f.amplitudes()[static_cast<Eigen::Index>(spinor::index(j, 1))] = ph * u[1];
  }
  return f;
}

struct EnergyProjectors::Dense {
  std::once_flag once;
  CMatrix plus;
  CMatrix minus;
};

EnergyProjectors::EnergyProjectors(DiracOperator op)
    : op_(std::move(op)), dense_(std::make_shared<Dense>()) {}

SpinorField EnergyProjectors::apply(const SpinorField& field, bool plus) const {
  if (!(field.lattice() == op_.lattice())) throw InvalidInput("field and operator lattices differ");
  if (op_.translation_invariant()) {
    const auto p = op_.lattice().momentum_grid();
    const double m = op_.mass();
    const double shift = op_.constant_shift();
    return momentum_apply(field, [&](std::size_t k) {
      const double e = std::hypot(m, p[k]);
      Eigen::Matrix2cd upper = Eigen::Matrix2cd::Identity();
      Eigen::Matrix2cd lower = Eigen::Matrix2cd::Zero();
      if (e > 0.0) {
        upper = 0.5 * (Eigen::Matrix2cd::Identity() + free_block(m, p[k]) / e);
        lower = Eigen::Matrix2cd::Identity() - upper;
      }
      Eigen::Matrix2cd result = Eigen::Matrix2cd::Zero();
      if ((shift + e >= 0.0) == plus) result += upper;
      if ((shift - e >= 0.0) == plus) result += lower;
      return result;
    });
  }
  const CMatrix& p = plus ? dense_plus() : dense_minus();
  return SpinorField(op_.lattice(), p * field.amplitudes());
}

SpinorField EnergyProjectors::apply_plus(const SpinorField& field) const { return apply(field, true); }
SpinorField EnergyProjectors::apply_minus(const SpinorField& field) const { return apply(field, false); }

const CMatrix& EnergyProjectors::dense_plus() const {
  std::call_once(dense_->once, [this] {
    const Spectrum& s = op_.spectrum();
    const Eigen::Index n = s.values.size();
    Eigen::Index first_plus = 0;
    while (first_plus < n && s.values[first_plus] < 0.0) ++first_plus;
    const CMatrix vp = s.vectors.rightCols(n - first_plus);
    const CMatrix vm = s.vectors.leftCols(first_plus);
    dense_->plus = vp * vp.adjoint();
    dense_->minus = vm * vm.adjoint();
  });
  return dense_->plus;
}

const CMatrix& EnergyProjectors::dense_minus() const {
  dense_plus();
  return dense_->minus;
}

std::size_t EnergyProjectors::rank_plus() const {
  if (op_.translation_invariant()) {
    std::size_t r = 0;
    for (double e : free_energies(op_.lattice(), op_.mass())) {
      r += (op_.constant_shift() + e >= 0.0) ? 1 : 0;
      r += (op_.constant_shift() - e >= 0.0) ? 1 : 0;
    }
    return r;
  }
  const auto& v = op_.spectrum().values;
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double e) { return e >= 0.0; }));
}

EnergyProjectors spectral_split(const DiracOperator& op) {
  double min_abs = 0.0;
  if (op.translation_invariant()) {
    min_abs = std::numeric_limits<double>::infinity();
    for (double e : free_energies(op.lattice(), op.mass())) {
      min_abs = std::min({min_abs, std::fabs(op.constant_shift() + e), std::fabs(op.constant_shift() - e)});
    }
  } else {
    min_abs = op.spectrum().values.cwiseAbs().minCoeff();
  }
  if (min_abs < kGapTolerance) {
    throw GaplessSpectrum("Dirac operator has an eigenvalue at zero (|E| = " + std::to_string(min_abs) +
                          "); the energy split needs a gapped operator, use mass > 0");
  }
  return EnergyProjectors(op);
}

ChargeConjugation::ChargeConjugation() : unitary_(spinor::alpha()) {}

ChargeConjugation::ChargeConjugation(const Eigen::Matrix2cd& unitary) : unitary_(unitary) {}

SpinorField ChargeConjugation::apply(const SpinorField& field) const {
  SpinorField out(field.lattice());
  for (std::size_t i = 0; i < field.lattice().sites(); ++i) {
    const Eigen::Vector2cd v(std::conj(field(i, 0)), std::conj(field(i, 1)));
    const Eigen::Vector2cd w = unitary_ * v;
    out.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 0))] = w[0];
    out.amplitudes()[static_cast<Eigen::Index>(spinor::index(i, 1))] = w[1];
  }
  return out;
}

CMatrix ChargeConjugation::conjugate_operator(const CMatrix& h) const {
  const Eigen::Index n = h.rows() / 2;
  CMatrix u = CMatrix::Zero(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < n; ++i) u.block<2, 2>(2 * i, 2 * i) = unitary_;
  return u * h.conjugate() * u.adjoint();
}

SpinorField charge_conjugate(const SpinorField& field) { return ChargeConjugation().apply(field); }

CurrentField dirac_current(const SpinorField& field) {
  const std::size_t n = field.lattice().sites();
  CurrentField j{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const complex u = field(i, 0);
    const complex d = field(i, 1);
    j.j0[i] = std::norm(u) + std::norm(d);
    j.j1[i] = 2.0 * (std::conj(u) * d).real();
  }
  return j;
}

double continuity_residual(const DiracOperator& op, const SpinorField& field, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("continuity residual needs dt > 0");
  const SpinorField next = evolve(op, field, dt);
  const CurrentField a = dirac_current(field);
  const CurrentField b = dirac_current(next);
  const std::size_t n = field.lattice().sites();
  std::vector<double> j1(n);
  for (std::size_t i = 0; i < n; ++i) j1[i] = 0.5 * (a.j1[i] + b.j1[i]);
  const auto dj1 = spectral_derivative(field.lattice(), j1);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max(worst, std::fabs((b.j0[i] - a.j0[i]) / dt + dj1[i]));
  }
  return worst;
}

void write_matrix_csv(std::ostream& out, const CMatrix& m) {
  const auto old = out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c).real() << ',' << m(r, c).imag();
    }
    out << '\n';
  }
  out.precision(old);
}

}  // namespace diraclab
