#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fwm/analysis.hpp"
#include "fwm/calibration.hpp"
#include "fwm/forward.hpp"
#include "fwm/reconstruct.hpp"
#include "fwm/scenario.hpp"

namespace fwm::io {

using Json = nlohmann::ordered_json;

// Scenario files are JSON. Dimensioned keys carry their unit as a suffix:
// _rad_per_tu for energies and frequencies, _tu for times.

/// Unknown keys and wrong types are configuration errors. Relative
/// table_file paths resolve against `base_dir`.
Scenario scenario_from_json(const Json& json, const std::filesystem::path& base_dir = {});
Json scenario_to_json(const Scenario& scenario);

/// Missing or unreadable file: Error(io). Malformed JSON: Error(configuration).
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

Json pulse_to_json(const PulseSpec& pulse);
PulseSpec pulse_from_json(const Json& json, const std::filesystem::path& base_dir = {});

/// "# key: value" header lines followed by one row per omega, one column per
/// tau, printed with 17 significant digits.
void write_spectrogram(std::ostream& out, const Spectrogram& spectrogram);
Spectrogram read_spectrogram(std::istream& in, const std::string& source = "input");
void save_spectrogram(const Spectrogram& spectrogram, const std::filesystem::path& path);
Spectrogram load_spectrogram(const std::filesystem::path& path);

/// Columns: run w omega Omega k k' l l' Re Im cond degenerate quotient,
/// where w is the omega grid index.
void write_product_table(std::ostream& out, const ProductTable& table, const std::string& run = "-");
ProductTable read_product_table(std::istream& in, const std::string& source = "input");

/// Linked table with the run scales in the header; read back by reconstruct.
void write_calibration(std::ostream& out, const LinkedCalibration& calibration);
LinkedCalibration read_calibration(std::istream& in, const std::string& source = "input");
LinkedCalibration load_calibration(const std::filesystem::path& path);

/// Beat amplitude magnitudes: one row per omega, one column per non-negative line.
void write_beat_spectrum(std::ostream& out, const BeatFit& fit);

void write_report(std::ostream& out, const ReconstructionReport& report);
Json report_to_json(const ReconstructionReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fwm::io
