#pragma once

#include <map>
#include <string>
#include <vector>

#include "fwm/analysis.hpp"
#include "fwm/forward.hpp"
#include "fwm/model.hpp"

namespace fwm {

struct Probes {
  PulseSpec pulse2;
  PulseSpec pulse3;
};

struct CalibrationOptions {
  double eps_use = 1e-6;
  double eps_iso = 1e-3;
  double delta_omega = 1e-6;
  /// Non-empty: record one spectrogram per temperature and separate the
  /// branch pairs through their Boltzmann weights.
  std::vector<double> temperatures;
};

/// Products N_C kC_l(w) (k'C_l'(w))^* recovered from one calibration pulse.
struct CalibrationRun {
  std::string id;
  PulseSpec pulse;
  std::map<int, BranchState> known;  // divisor coefficients, unit-amplitude spectrum
  ProductTable products;
  bool usable = false;
  double excitation_fraction = 0.0;  // max_k sum_l |beta_cal|^2, first-order population
  std::vector<std::string> log;
};

/// beta_cal_l = -i D(a,l;0,k) E(w_lk); levels outside the spectrum are absent.
BranchState calibration_state(const MolecularSystem& system, const PulseSpec& pulse, int k);

/// Simulates the calibration experiment with the main probes and grids, fits
/// the beat amplitudes and divides out the known calibration coefficients.
CalibrationRun run_calibration(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                               const PulseSpec& pulse, const Probes& probes,
                               const ForwardConfig& config, const CalibrationOptions& options,
                               std::string id = "C1");

struct LinkedCalibration {
  ProductTable products;
  std::vector<std::string> run_ids;
  std::vector<double> scales;  // multiplies each run onto the first
  std::vector<std::string> link_log;
  double residual = 0.0;  // max relative disagreement of shared entries after scaling

  const ProductEntry* find(std::size_t omega_index, const Contributor& c) const;
};

LinkedCalibration link_calibrations(const std::vector<CalibrationRun>& runs);

}  // namespace fwm
