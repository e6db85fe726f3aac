#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "fwm/model.hpp"
#include "fwm/pulses.hpp"

namespace fwm {

struct UniformGrid {
  double start = 0.0;
  double step = 1.0;
  std::size_t count = 0;

  double operator[](std::size_t i) const { return start + step * static_cast<double>(i); }
  double back() const { return (*this)[count - 1]; }
  std::vector<double> values() const;
  bool operator==(const UniformGrid&) const = default;
  /// Index of the grid point nearest `x`, or -1 when x is off the grid.
  long nearest(double x) const;
  void validate(const char* name) const;
};

struct ForwardConfig {
  UniformGrid omega;   // emission frequency (rad/tu)
  UniformGrid tau;     // pump time relative to pulse-2 arrival (tu)
  UniformGrid omega2;  // trapezoid quadrature grid over pulse 2
  double gamma_eff = 0.0;  // <= 0 selects 5 x omega spacing
  double noise = 0.0;      // additive gaussian sigma relative to max S
  std::uint64_t seed = 1;
  bool counter_rotating = false;  // integrate the real-field spectra instead

  double pole_width() const;
  void validate() const;
};

/// kC*_l(omega) for one ground level k over every a-manifold level l.
struct MappingTable {
  int k = 0;
  UniformGrid omega;
  Eigen::MatrixXcd conj_coeff;  // rows: a level l, cols: omega index

  cplx conj_at(int l, std::size_t w) const;
};

struct Spectrogram {
  UniformGrid omega;
  UniformGrid tau;
  Eigen::MatrixXd values;  // rows omega, cols tau
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::optional<double> temperature;
};

MappingTable mapping_coefficients(const MolecularSystem& system, const PulseSpec& pulse2,
                                  const PulseSpec& pulse3, int k, const ForwardConfig& config);

/// FW dipole spectrum of one branch: sum_l kC*_l(w) exp(i w_kl tau) conj(beta_l).
cplx fw_field_branch(const MolecularSystem& system, const MappingTable& mapping,
                     const BranchState& branch, double tau, std::size_t omega_index);

/// S(w, tau) = w^4 |sum_k p_k d_k(w, tau)|^2 plus optional noise.
Spectrogram spectrogram(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                        const std::vector<BranchState>& branches,
                        const std::vector<MappingTable>& mappings, const ForwardConfig& config);

/// Population-weighted field sum_k p_k d_k(w, tau) on the omega grid.
Eigen::VectorXcd ensemble_field(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                                const std::vector<BranchState>& branches,
                                const std::vector<MappingTable>& mappings, double tau);

struct OracleConfig {
  double t_start = -40.0;
  double t_end = 2000.0;
  double dt = 0.05;
  double gamma_eff = 0.0;  // used for zero-width levels, must be > 0 then
};

/// Direct nested time quadrature of the third-order amplitude and a numerical
/// Fourier transform of the emitted dipole. Shares no code with
/// mapping_coefficients.
Eigen::VectorXcd time_domain_oracle(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                                    const std::vector<BranchState>& branches,
                                    const PulseSpec& pulse2, const PulseSpec& pulse3, double tau,
                                    const UniformGrid& omega, const OracleConfig& config);

}  // namespace fwm
