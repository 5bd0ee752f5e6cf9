#pragma once

#include <span>
#include <string>
#include <vector>

#include "diraclab/dirac.hpp"

namespace diraclab {

/// Site subset of a lattice.
struct Region {
  std::vector<bool> inside;

  std::size_t count() const;
  bool proper() const { return count() > 0 && count() < inside.size(); }
};

/// Sites with left <= x_i < right.
Region interval_region(const Lattice1D& lattice, double left, double right);

/// Sites within periodic distance t of the region.
Region light_enlarged(const Lattice1D& lattice, const Region& region, double t);

/// Fraction of the squared norm outside the region.
double outside_mass(const SpinorField& field, const Region& region);

/// Relative mass of P+ psi outside A for a packet vanishing identically outside A.
double localization_defect(const EnergyProjectors& projectors, const SpinorField& packet, const Region& region);

/// Evolves the packet for time t with the full operator and returns the
/// fraction of mass outside {x : dist(x, A) <= t}. Requires t < L a / 2 and a
/// light-enlarged region that leaves some site outside.
double lightcone_leakage(const DiracOperator& op, const SpinorField& packet, const Region& region, double t);

struct TailReport {
  double full_leakage = 0.0;
  double projected_leakage = 0.0;
  double projected_defect = 0.0;  // at t = 0
  double ratio = 0.0;             // projected / full
};

/// Leakage of the full evolution of a compact packet against that of its
/// normalized positive-energy projection.
TailReport superluminal_tail_demo(const DiracOperator& op, const SpinorField& packet, const Region& region, double t);

/// Smoothed box packet on a domain of fixed physical length, sampled with
/// different lattice sizes.
struct LeakageSetup {
  double domain = 32.0;
  double left = 12.0;
  double right = 20.0;
  double smoothing = 1.0;
  double margin = 3.0;
  double mass = 1.0;
  double time = 4.0;
};

std::vector<double> leakage_refinement(const LeakageSetup& setup, const std::vector<std::size_t>& sizes);

/// tr(V+-^dag V+-) for V+- = P+ V P- with the free projectors, evaluated in
/// momentum space: sum_{p,q} |V~(p - q)|^2 tr(P+(p) P-(q)).
double hs_norm_offdiag(const Lattice1D& lattice, double mass, std::span<const double> potential);

/// Potential families for HS scans: "step" (height s on the right half),
/// "gaussian" (s exp(-(x - L a / 2)^2 / 2)) and "cosine" (s cos(2 pi x / (L a))).
std::vector<double> potential_family(const Lattice1D& lattice, const std::string& family, double strength);

}  // namespace diraclab
