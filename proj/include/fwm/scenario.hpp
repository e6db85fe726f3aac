#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fwm/analysis.hpp"
#include "fwm/calibration.hpp"
#include "fwm/forward.hpp"
#include "fwm/model.hpp"
#include "fwm/reconstruct.hpp"

namespace fwm {

struct CalibrationSpec {
  std::string id;
  PulseSpec pulse;
};

struct ReconstructionSettings {
  std::string method = "auto";  // auto, I, II, III
  double eps_iso = 1e-3;
  double eps_use = 1e-6;
  double delta_omega = 1e-6;
  std::vector<double> temperatures;  // non-empty selects a temperature series
  std::map<int, std::vector<int>> populated;  // empty: taken from the truth
};

struct OracleSettings {
  std::vector<double> tau;
  OracleConfig config;
};

/// Everything needed to simulate, calibrate and reconstruct one experiment.
struct Scenario {
  std::string name;
  MolecularSystem system;
  std::optional<double> temperature;
  std::vector<EnsembleEntry> populations;  // used when no temperature is given
  std::map<int, BranchState> truth;        // explicit excited states, or
  std::optional<PulseSpec> pulse1;         // a perturbative pump creating them
  Probes probes;
  std::vector<CalibrationSpec> calibrations;
  ForwardConfig forward;
  ReconstructionSettings reconstruction;
  OracleSettings oracle;

  void validate() const;
  bool temperature_series() const { return !reconstruction.temperatures.empty(); }
};

ThermalEnsemble make_ensemble(const Scenario& scenario, std::optional<double> temperature = {});

/// Excited states for every k of the ensemble (zero-free; empty when the pump misses k).
std::map<int, BranchState> true_states(const Scenario& scenario, const ThermalEnsemble& ensemble);

/// true_states over every ensemble of the scenario, series included.
std::map<int, BranchState> all_true_states(const Scenario& scenario);

std::map<int, std::vector<int>> populated_levels(const Scenario& scenario);

/// One spectrogram, or one per temperature of a series.
std::vector<Spectrogram> simulate(const Scenario& scenario);

std::vector<CalibrationRun> calibrate(const Scenario& scenario);

/// Inverts measured spectrograms with a linked calibration. Uses only the
/// spectrograms, the calibration products and the ground/a-manifold
/// frequencies; probe pulses and mapping tables are never consulted.
ReconstructionReport reconstruct(const Scenario& scenario, const std::vector<Spectrogram>& spectrograms,
                                 const LinkedCalibration& calibration,
                                 const std::map<int, BranchState>* truth = nullptr);

struct PipelineResult {
  std::vector<Spectrogram> spectrograms;
  std::vector<CalibrationRun> runs;
  LinkedCalibration calibration;
  ReconstructionReport report;
};

PipelineResult run_pipeline(const Scenario& scenario);

struct OracleCheck {
  std::vector<double> tau;
  std::vector<double> residual;  // relative L2 over the omega grid
  double max_residual = 0.0;
};

OracleCheck oracle_check(const Scenario& scenario);

namespace demos {

Scenario case_I();
Scenario case_II();
/// Energies, widths and frequencies multiplied by `scale`, times divided by it.
Scenario case_III(double scale = 1000.0);
Scenario degeneracy();
Scenario oracle_toy();

std::vector<std::string> names();
Scenario by_name(const std::string& name);

}  // namespace demos

}  // namespace fwm
