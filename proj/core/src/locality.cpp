#include "diraclab/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "diraclab/errors.hpp"

namespace diraclab {

std::size_t Region::count() const {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), true));
}

Region interval_region(const Lattice1D& lattice, double left, double right) {
  Region r;
  r.inside.resize(lattice.sites());
  for (std::size_t i = 0; i < lattice.sites(); ++i) {
    const double x = lattice.coordinate(i);
    r.inside[i] = x >= left && x < right;
  }
  return r;
}

Region light_enlarged(const Lattice1D& lattice, const Region& region, double t) {
  if (region.inside.size() != lattice.sites()) throw InvalidInput("region does not match the lattice");
  Region out;
  out.inside.assign(lattice.sites(), false);
  const double tol = 1e-12 * lattice.length();
  for (std::size_t j = 0; j < lattice.sites(); ++j) {
    if (!region.inside[j]) continue;
    for (std::size_t i = 0; i < lattice.sites(); ++i) {
      if (!out.inside[i] && lattice.distance(lattice.coordinate(i), lattice.coordinate(j)) <= t + tol) {
        out.inside[i] = true;
      }
    }
  }
  return out;
}

double outside_mass(const SpinorField& field, const Region& region) {
  const auto& lat = field.lattice();
  if (region.inside.size() != lat.sites()) throw InvalidInput("region does not match the lattice");
  const double total = field.squared_norm();
  if (!(total > 0.0)) throw InvalidInput("field has zero norm");
  double out = 0.0;
  for (std::size_t i = 0; i < lat.sites(); ++i) {
    if (!region.inside[i]) out += field.density(i);
  }
  return out * lat.spacing() / total;
}

namespace {

void require_support(const SpinorField& packet, const Region& region) {
  if (region.inside.size() != packet.lattice().sites()) throw InvalidInput("region does not match the lattice");
  if (!region.proper()) throw InvalidInput("region must be a nonempty proper subset of the lattice");
  for (std::size_t i = 0; i < region.inside.size(); ++i) {
    if (!region.inside[i] && packet.density(i) != 0.0) {
      throw InvalidInput("packet is not strictly supported in the region (site " + std::to_string(i) + ")");
    }
  }
}

}  // namespace

double localization_defect(const EnergyProjectors& projectors, const SpinorField& packet, const Region& region) {
  require_support(packet, region);
  return outside_mass(projectors.apply_plus(packet), region);
}

double lightcone_leakage(const DiracOperator& op, const SpinorField& packet, const Region& region, double t) {
  const Lattice1D& lat = packet.lattice();
  if (!(op.lattice() == lat)) throw InvalidInput("operator and packet lattices differ");
  if (region.inside.size() != lat.sites() || region.count() == 0) throw InvalidInput("region must be nonempty");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("time must be finite and >= 0");
  if (!(t < 0.5 * lat.length())) {
    throw InvalidInput("time " + std::to_string(t) + " exceeds half the light-crossing time " +
                       std::to_string(0.5 * lat.length()) + " of the periodic domain");
  }
  const Region cone = light_enlarged(lat, region, t);
  if (cone.count() == lat.sites()) throw InvalidInput("light-enlarged region covers the whole lattice");
  if (t == 0.0) return outside_mass(packet, cone);
  return outside_mass(evolve(op, packet, t), cone);
}

TailReport superluminal_tail_demo(const DiracOperator& op, const SpinorField& packet, const Region& region, double t) {
  require_support(packet, region);
  const EnergyProjectors proj = spectral_split(op);
  const SpinorField projected = proj.apply_plus(packet).normalized();
  TailReport r;
  r.full_leakage = lightcone_leakage(op, packet, region, t);
  r.projected_leakage = lightcone_leakage(op, projected, region, t);
  r.projected_defect = outside_mass(projected, region);
  r.ratio = r.full_leakage > 0.0 ? r.projected_leakage / r.full_leakage : std::numeric_limits<double>::infinity();
  return r;
}

std::vector<double> leakage_refinement(const LeakageSetup& s, const std::vector<std::size_t>& sizes) {
  std::vector<double> out;
  for (std::size_t n : sizes) {
    const Lattice1D lat(n, s.domain / static_cast<double>(n));
    const SpinorField packet =
        smoothed_box_packet(lat, s.left, s.right, s.smoothing, s.margin, Eigen::Vector2cd(1.0, 0.0)).normalized();
    const Region support = interval_region(lat, s.left - s.margin, s.right + s.margin);
    out.push_back(lightcone_leakage(DiracOperator::free(lat, s.mass), packet, support, s.time));
  }
  return out;
}

double hs_norm_offdiag(const Lattice1D& lattice, double mass, std::span<const double> potential) {
  const std::size_t n = lattice.sites();
  if (potential.size() != n) throw InvalidInput("potential length must equal the number of sites");
  if (!(mass > 0.0)) throw GaplessSpectrum("hs_norm_offdiag needs mass > 0");
  // a constant shift drops out (P+ P- = 0); removing V[0] makes constant potentials exactly zero
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = potential[i] - potential[0];
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) return 0.0;

  // unitary DFT: <p_i| V |p_j> = vhat[(i - j) mod n]
  std::vector<double> power(n);
  const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    complex acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      acc += v[x] * std::polar(1.0, -w * static_cast<double>((k * x) % n));
    }
    power[k] = std::norm(acc) / static_cast<double>(n * n);
  }
  const auto p = lattice.momentum_grid();
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = std::hypot(mass, p[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (p[i] == p[j]) continue;  // tr(P+(p) P-(p)) = 0
      const double overlap = 0.5 * (1.0 - (p[i] * p[j] + mass * mass) / (e[i] * e[j]));
      sum += power[(i + n - j) % n] * overlap;
    }
  }
  return sum;
}

std::vector<double> potential_family(const Lattice1D& lattice, const std::string& family, double strength) {
  std::vector<double> v(lattice.sites(), 0.0);
  const double len = lattice.length();
  for (std::size_t i = 0; i < lattice.sites(); ++i) {
    const double x = lattice.coordinate(i);
    if (family == "step") {
      v[i] = x >= 0.5 * len ? strength : 0.0;
    } else if (family == "gaussian") {
      const double d = x - 0.5 * len;
      v[i] = strength * std::exp(-0.5 * d * d);
    } else if (family == "cosine") {
      v[i] = strength * std::cos(2.0 * std::numbers::pi * x / len);
    } else {
      throw InvalidInput("unknown potential family '" + family + "' (step, gaussian, cosine)");
    }
  }
  return v;
}

}  // namespace diraclab
