#include "fwm/app.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "fwm/io.hpp"
#include "fwm/scenario.hpp"

namespace fwm::app {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::lookup:
    case ErrorKind::configuration: return 2;
    case ErrorKind::resolution:
    case ErrorKind::consistency:
    case ErrorKind::ill_conditioned: return 3;
    case ErrorKind::unavailable:
    case ErrorKind::linking:
    case ErrorKind::degenerate: return 4;
    case ErrorKind::io: return 5;
  }
  return 1;
}

namespace {

struct Common {
  std::string config;
  std::string demo;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::vector<double> temperatures;
  bool verbose = false;
  bool json = false;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* cfg = cmd->add_option("-c,--config", c.config, "scenario JSON file");
  auto* demo = cmd->add_option("-d,--demo", c.demo, "built-in scenario instead of a file");
  cfg->excludes(demo);
  cmd->add_option("-o,--out", c.out_dir, "output directory");
  cmd->add_option("--seed", c.seed, "noise seed");
  cmd->add_option("--noise", c.noise, "noise level relative to max S")->check(CLI::NonNegativeNumber);
  cmd->add_option("--temperatures", c.temperatures, "temperature series (rad/tu)");
  cmd->add_flag("-v,--verbose", c.verbose, "print logs and diagnostics");
  cmd->add_flag("--json", c.json, "print the report as JSON");
}

Scenario load(const Common& c) {
  if (c.config.empty() && c.demo.empty())
    throw Error(ErrorKind::configuration, "give --config FILE or --demo NAME");
  Scenario s = c.config.empty() ? demos::by_name(c.demo) : io::load_scenario(c.config);
  if (c.seed) s.forward.seed = *c.seed;
  if (c.noise) s.forward.noise = *c.noise;
  if (!c.temperatures.empty()) s.reconstruction.temperatures = c.temperatures;
  s.validate();
  return s;
}

fs::path out_path(const Common& c, const std::string& name) {
  return c.out_dir.empty() ? fs::path(name) : fs::path(c.out_dir) / name;
}

std::string spectrogram_name(std::size_t i, std::size_t n) {
  return n == 1 ? "spectrogram.txt" : "spectrogram_" + std::to_string(i) + ".txt";
}

void print_runs(std::ostream& out, const std::vector<CalibrationRun>& runs, bool verbose) {
  for (const auto& r : runs) {
    out << "calibration " << r.id << ": " << r.products.entries.size() << " products"
        << (r.usable ? "" : " (unusable)") << ", excitation " << std::setprecision(3) << r.excitation_fraction
        << '\n';
    if (verbose)
      for (const auto& l : r.log) out << "  " << l << '\n';
  }
}

void write_calibration_files(const Common& c, const std::vector<CalibrationRun>& runs,
                             const LinkedCalibration& linked) {
  for (const auto& r : runs) {
    std::ostringstream ss;
    io::write_product_table(ss, r.products, r.id);
    io::write_text_file(out_path(c, "calibration_" + r.id + ".txt"), ss.str());
  }
  std::ostringstream ss;
  io::write_calibration(ss, linked);
  io::write_text_file(out_path(c, "calibration.txt"), ss.str());
}

// The calibration must come from the same omega grid as the scenario.
void check_grid(const LinkedCalibration& c, const UniformGrid& omega, const std::string& source) {
  for (const auto& e : c.products.entries)
    if (e.omega_index >= omega.count || std::abs(omega[e.omega_index] - e.omega) > 1e-9 * (1.0 + std::abs(e.omega)))
      throw Error(ErrorKind::configuration, source + ": calibration omega grid differs from the scenario grid");
}

void write_plot_data(const Common& c, const Scenario& s, const PipelineResult& r) {
  const auto populated = populated_levels(s);
  std::vector<int> ks;
  for (const auto& [k, ls] : populated) ks.push_back(k);
  const auto lines = enumerate_beat_frequencies(s.system, ks, populated, s.reconstruction.delta_omega);
  std::ostringstream beat;
  io::write_beat_spectrum(beat, extract_amplitudes(r.spectrograms.front(), lines));
  io::write_text_file(out_path(c, "beat_spectrum.txt"), beat.str());

  const auto truth = all_true_states(s);
  std::ostringstream bars;
  bars << "# k l |estimate| arg(estimate) |truth| arg(truth), truth gauge-fixed\n";
  for (const auto& b : r.report.branches) {
    BranchState t{b.k, {}};
    if (auto it = truth.find(b.k); it != truth.end() && it->second.norm() > 0.0) t = gauge_fixed(it->second);
    std::set<int> ls;
    for (const auto& [l, v] : b.estimate.coefficients) ls.insert(l);
    for (const auto& [l, v] : t.coefficients) ls.insert(l);
    for (int l : ls) {
      const cplx e = b.estimate.at(l), x = t.at(l);
      bars << b.k << ' ' << l << ' ' << std::abs(e) << ' ' << std::arg(e) << ' ' << std::abs(x) << ' ' << std::arg(x)
           << '\n';
    }
  }
  io::write_text_file(out_path(c, "bars.txt"), bars.str());
}

void emit_report(std::ostream& out, const Common& c, const ReconstructionReport& report) {
  if (c.json)
    out << io::report_to_json(report).dump(2) << '\n';
  else
    io::write_report(out, report);
  if (!c.out_dir.empty()) {
    std::ostringstream ss;
    io::write_report(ss, report);
    io::write_text_file(out_path(c, "report.txt"), ss.str());
    io::write_text_file(out_path(c, "report.json"), io::report_to_json(report).dump(2) + "\n");
  }
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reconstruct excited vibrational states from four-wave-mixing spectrograms"};
  app.require_subcommand(1);

  Common common;
  auto* sim = app.add_subcommand("simulate", "write the spectrogram(s) of a scenario");
  add_common(sim, common);
  auto* cal = app.add_subcommand("calibrate", "run and link the calibration experiments");
  add_common(cal, common);
  auto* rec = app.add_subcommand("reconstruct", "reconstruct from measured spectrogram files");
  add_common(rec, common);
  std::vector<std::string> spectrogram_files;
  std::string calibration_file;
  rec->add_option("-s,--spectrogram", spectrogram_files, "spectrogram file(s), one per temperature")->required();
  rec->add_option("--calibration", calibration_file, "linked calibration table written by calibrate")->required();
  auto* pipe = app.add_subcommand("pipeline", "simulate, calibrate and reconstruct");
  add_common(pipe, common);
  auto* oracle = app.add_subcommand("oracle-check", "compare the forward model with direct time integration");
  add_common(oracle, common);
  auto* demo = app.add_subcommand("demo", "list built-in scenarios or export one as JSON");
  std::string demo_name, demo_out;
  demo->add_option("name", demo_name, "scenario to export");
  demo->add_option("-o,--out", demo_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  set_warnings_enabled(common.verbose);
  try {
    if (*demo) {
      if (demo_name.empty()) {
        for (const auto& n : demos::names()) out << n << '\n';
        return 0;
      }
      const auto json = io::scenario_to_json(demos::by_name(demo_name)).dump(2) + "\n";
      if (demo_out.empty())
        out << json;
      else
        io::write_text_file(demo_out, json);
      return 0;
    }

    const Scenario s = load(common);
    if (*sim) {
      const auto specs = simulate(s);
      for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto path = out_path(common, spectrogram_name(i, specs.size()));
        io::save_spectrogram(specs[i], path);
        out << "wrote " << path.string() << '\n';
      }
    } else if (*cal) {
      const auto runs = calibrate(s);
      print_runs(out, runs, common.verbose);
      const auto linked = link_calibrations(runs);
      out << "linked " << linked.products.entries.size() << " products, residual " << std::setprecision(3)
          << linked.residual << '\n';
      if (common.verbose)
        for (const auto& l : linked.link_log) out << "  " << l << '\n';
      write_calibration_files(common, runs, linked);
    } else if (*rec) {
      std::vector<Spectrogram> specs;
      for (const auto& f : spectrogram_files) specs.push_back(io::load_spectrogram(f));
      const auto linked = io::load_calibration(calibration_file);
      check_grid(linked, s.forward.omega, calibration_file);
      const auto truth = all_true_states(s);
      emit_report(out, common, reconstruct(s, specs, linked, truth.empty() ? nullptr : &truth));
    } else if (*pipe) {
      const auto r = run_pipeline(s);
      if (common.verbose) print_runs(out, r.runs, true);
      if (!common.out_dir.empty()) {
        for (std::size_t i = 0; i < r.spectrograms.size(); ++i)
          io::save_spectrogram(r.spectrograms[i], out_path(common, spectrogram_name(i, r.spectrograms.size())));
        write_calibration_files(common, r.runs, r.calibration);
        write_plot_data(common, s, r);
      }
      emit_report(out, common, r.report);
    } else if (*oracle) {
      const auto check = oracle_check(s);
      for (std::size_t i = 0; i < check.tau.size(); ++i)
        out << "tau " << check.tau[i] << "  relative residual " << std::setprecision(3) << check.residual[i]
            << '\n';
      out << "max residual " << check.max_residual << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace fwm::app
