#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwm/pulses.hpp"

namespace fwm {

// Units: hbar = k_B = 1. Energies, widths and temperatures are angular
// frequencies in rad per time unit.

enum class Manifold { ground = 0, a = 1, b = 2, c = 3 };

std::string to_string(Manifold m);

struct VibLevel {
  int index = 0;
  double energy = 0.0;
  double width = 0.0;  // decay rate gamma >= 0
};

/// Real dipole couplings (charge/hbar folded in) for the four allowed
/// electronic pairs. Row index belongs to the first manifold named.
struct DipoleTables {
  Eigen::MatrixXd a_ground;  // (l, k)
  Eigen::MatrixXd a_b;       // (l, m)
  Eigen::MatrixXd b_c;       // (m, n)
  Eigen::MatrixXd c_ground;  // (n, k)
};

class MolecularSystem {
 public:
  MolecularSystem() = default;
  MolecularSystem(std::array<std::vector<VibLevel>, 4> manifolds, DipoleTables dipoles,
                  std::string unit_label = "tu");

  const std::vector<VibLevel>& levels(Manifold m) const {
    return manifolds_[static_cast<std::size_t>(m)];
  }
  std::size_t size(Manifold m) const { return levels(m).size(); }
  const VibLevel& level(Manifold m, int index) const;
  double energy(Manifold m, int index) const { return level(m, index).energy; }
  double width(Manifold m, int index) const { return level(m, index).width; }
  std::vector<double> energies(Manifold m) const;

  /// Coupling between (from, i) and (to, j); symmetric in the pair and zero
  /// for electronically forbidden pairs.
  double dipole(Manifold from, int i, Manifold to, int j) const;
  const DipoleTables& dipoles() const { return dipoles_; }
  const std::string& unit_label() const { return unit_label_; }

 private:
  std::array<std::vector<VibLevel>, 4> manifolds_;
  DipoleTables dipoles_;
  std::string unit_label_ = "tu";
};

/// Builds levels with given energies and a common width.
std::vector<VibLevel> make_levels(std::span<const double> energies, double width = 0.0);

struct EnsembleEntry {
  int k = 0;
  double population = 0.0;
};

class ThermalEnsemble {
 public:
  /// Boltzmann weights over the ground manifold; entries below `cutoff` are
  /// dropped with a warning and the remainder renormalized.
  static ThermalEnsemble from_temperature(const MolecularSystem& system, double temperature,
                                          double cutoff = 1e-6);
  static ThermalEnsemble from_populations(std::vector<EnsembleEntry> entries);

  const std::vector<EnsembleEntry>& entries() const { return entries_; }
  std::optional<double> temperature() const { return temperature_; }
  std::vector<int> levels() const;
  double population(int k) const;  // 0 for absent levels
  const std::vector<int>& dropped() const { return dropped_; }

 private:
  std::vector<EnsembleEntry> entries_;
  std::optional<double> temperature_;
  std::vector<int> dropped_;
};

/// Excited-state coefficients {beta_l} for the branch starting in ground level k.
struct BranchState {
  int k = 0;
  std::map<int, cplx> coefficients;

  cplx at(int l) const;
  double norm() const;
};

std::vector<double> boltzmann_populations(std::span<const double> energies, double temperature);

double transition_frequency(const MolecularSystem& system, Manifold alpha, int nu, Manifold alpha2,
                            int nu2);

/// First-order excitation from ground level k: beta_l = -i D(a,l;0,k) E(w_lk).
BranchState synthesize_branch_state(const MolecularSystem& system, const PulseSpec& pulse, int k);

/// Unit norm, lowest-index nonzero coefficient real and positive.
BranchState gauge_fixed(const BranchState& state);

}  // namespace fwm
