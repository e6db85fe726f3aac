#include "fwm/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm {

void Scenario::validate() const {
  if (system.size(Manifold::ground) == 0) throw Error(ErrorKind::validation, "scenario has no molecular system");
  if (temperature) {
    if (!(*temperature > 0.0) || !std::isfinite(*temperature))
      throw Error(ErrorKind::validation, "temperature must be positive");
  } else if (populations.empty() && !temperature_series()) {
    throw Error(ErrorKind::validation, "scenario needs a temperature or explicit populations");
  }
  if (truth.empty() && !pulse1)
    throw Error(ErrorKind::validation, "scenario needs truth branches or a pump pulse");
  for (const auto& [k, b] : truth) {
    system.level(Manifold::ground, k);
    for (const auto& [l, c] : b.coefficients) {
      system.level(Manifold::a, l);
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw Error(ErrorKind::validation, "truth coefficient is not finite");
    }
  }
  if (pulse1) pulse1->validate();
  probes.pulse2.validate();
  probes.pulse3.validate();
  std::set<std::string> ids;
  for (const auto& c : calibrations) {
    c.pulse.validate();
    if (!c.pulse.perturbative) throw Error(ErrorKind::validation, "calibration " + c.id + " is not perturbative");
    if (!ids.insert(c.id).second) throw Error(ErrorKind::validation, "duplicate calibration id " + c.id);
  }
  forward.validate();
  const auto& r = reconstruction;
  if (r.method != "auto" && r.method != "I" && r.method != "II" && r.method != "III")
    throw Error(ErrorKind::validation, "unknown reconstruction method '" + r.method + "'");
  if (!(r.eps_iso > 0.0 && r.eps_iso < 1.0) || !(r.eps_use > 0.0 && r.eps_use < 1.0))
    throw Error(ErrorKind::validation, "eps_iso and eps_use must lie in (0, 1)");
  if (!(r.delta_omega > 0.0)) throw Error(ErrorKind::validation, "delta_omega must be positive");
  for (double t : r.temperatures)
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::validation, "series temperatures must be positive");
  if (r.method == "III" && r.temperatures.empty())
    throw Error(ErrorKind::configuration, "method III needs a temperature series");
  for (const auto& [k, ls] : r.populated) {
    system.level(Manifold::ground, k);
    for (int l : ls) system.level(Manifold::a, l);
  }
}

ThermalEnsemble make_ensemble(const Scenario& s, std::optional<double> temperature) {
  if (temperature) return ThermalEnsemble::from_temperature(s.system, *temperature, 0.0);
  if (s.temperature) return ThermalEnsemble::from_temperature(s.system, *s.temperature);
  return ThermalEnsemble::from_populations(s.populations);
}

std::map<int, BranchState> true_states(const Scenario& s, const ThermalEnsemble& ensemble) {
  std::map<int, BranchState> out;
  for (const auto& e : ensemble.entries()) {
    if (auto it = s.truth.find(e.k); it != s.truth.end()) {
      BranchState b{e.k, {}};
      for (const auto& [l, c] : it->second.coefficients)
        if (c != cplx{}) b.coefficients[l] = c;
      out[e.k] = b;
    } else if (s.pulse1) {
      try {
        out[e.k] = synthesize_branch_state(s.system, *s.pulse1, e.k);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::degenerate) throw;
        out[e.k] = BranchState{e.k, {}};
      }
    } else {
      out[e.k] = BranchState{e.k, {}};
    }
  }
  return out;
}

namespace {

std::vector<ThermalEnsemble> series_ensembles(const Scenario& s) {
  std::vector<ThermalEnsemble> out;
  if (s.temperature_series())
    for (double t : s.reconstruction.temperatures) out.push_back(make_ensemble(s, t));
  else
    out.push_back(make_ensemble(s));
  return out;
}

}  // namespace

std::map<int, BranchState> all_true_states(const Scenario& s) {
  std::map<int, BranchState> out;
  for (const auto& ens : series_ensembles(s))
    for (auto& [k, b] : true_states(s, ens)) out.emplace(k, std::move(b));
  return out;
}

std::map<int, std::vector<int>> populated_levels(const Scenario& s) {
  if (!s.reconstruction.populated.empty()) return s.reconstruction.populated;
  std::map<int, std::vector<int>> out;
  for (const auto& [k, b] : all_true_states(s))
    for (const auto& [l, c] : b.coefficients) out[k].push_back(l);
  return out;
}

std::vector<Spectrogram> simulate(const Scenario& s) {
  s.validate();
  const auto states = all_true_states(s);
  std::map<int, MappingTable> maps;
  for (const auto& [k, b] : states)
    maps.emplace(k, mapping_coefficients(s.system, s.probes.pulse2, s.probes.pulse3, k, s.forward));
  std::vector<Spectrogram> out;
  const auto ensembles = series_ensembles(s);
  for (std::size_t i = 0; i < ensembles.size(); ++i) {
    const auto& ens = ensembles[i];
    std::vector<BranchState> branches;
    std::vector<MappingTable> mappings;
    for (const auto& e : ens.entries()) {
      branches.push_back(states.at(e.k));
      mappings.push_back(maps.at(e.k));
    }
    ForwardConfig cfg = s.forward;
    cfg.seed = s.forward.seed + i;
    out.push_back(spectrogram(s.system, ens, branches, mappings, cfg));
  }
  return out;
}

std::vector<CalibrationRun> calibrate(const Scenario& s) {
  s.validate();
  if (s.calibrations.empty()) throw Error(ErrorKind::configuration, "scenario defines no calibration pulse");
  CalibrationOptions opt;
  opt.eps_use = s.reconstruction.eps_use;
  opt.eps_iso = s.reconstruction.eps_iso;
  opt.delta_omega = s.reconstruction.delta_omega;
  opt.temperatures = s.reconstruction.temperatures;
  const ThermalEnsemble ens = make_ensemble(s);
  std::vector<CalibrationRun> runs;
  for (std::size_t j = 0; j < s.calibrations.size(); ++j) {
    ForwardConfig cfg = s.forward;
    cfg.seed = s.forward.seed + 7919 * (j + 1);
    runs.push_back(run_calibration(s.system, ens, s.calibrations[j].pulse, s.probes, cfg, opt,
                                   s.calibrations[j].id));
  }
  return runs;
}

namespace {

std::vector<std::size_t> every_omega(const UniformGrid& g) {
  std::vector<std::size_t> v(g.count);
  for (std::size_t i = 0; i < g.count; ++i) v[i] = i;
  return v;
}

// Contributors on lines that hold only terms of one branch pair.
std::set<Contributor> pure_contributors(const std::vector<BeatLine>& lines) {
  std::set<Contributor> out;
  for (const auto& line : lines) {
    if (line.is_dc() || line.contributors.empty()) continue;
    const auto& f = line.contributors.front();
    if (std::all_of(line.contributors.begin(), line.contributors.end(),
                    [&](auto& c) { return c.k == f.k && c.kp == f.kp; }))
      out.insert(line.contributors.begin(), line.contributors.end());
  }
  return out;
}

void append(ProductTable& into, ProductTable&& from) {
  for (auto& e : from.entries) {
    const bool dup = std::any_of(into.entries.begin(), into.entries.end(), [&](auto& x) {
      return x.omega_index == e.omega_index && x.index == e.index && x.beat == e.beat;
    });
    if (!dup) into.entries.push_back(std::move(e));
  }
  for (auto& d : from.discarded) into.discarded.push_back(std::move(d));
}

BranchReport single_level(int k, int l) {
  BranchReport rep;
  rep.k = k;
  rep.method = "single-level";
  rep.estimate = BranchState{k, {{l, 1.0}}};
  rep.notes.push_back("one populated level: the state is fixed by the gauge convention");
  return rep;
}

}  // namespace

ReconstructionReport reconstruct(const Scenario& s, const std::vector<Spectrogram>& spectrograms,
                                 const LinkedCalibration& calibration,
                                 const std::map<int, BranchState>* truth) {
  if (spectrograms.empty()) throw Error(ErrorKind::configuration, "no spectrogram to reconstruct from");
  const auto& rs = s.reconstruction;
  const auto populated = populated_levels(s);
  ReconstructionReport report;
  std::map<int, BranchReport> solved;
  std::vector<int> ks;

  const bool series = spectrograms.size() > 1 || rs.method == "III";
  if (series) {
    std::vector<ThermalEnsemble> ensembles;
    for (std::size_t i = 0; i < spectrograms.size(); ++i) {
      std::optional<double> t = spectrograms[i].temperature;
      if (!t && i < rs.temperatures.size()) t = rs.temperatures[i];
      if (!t) throw Error(ErrorKind::configuration, "temperature series spectrogram lacks its temperature");
      ensembles.push_back(make_ensemble(s, t));
    }
    std::set<int> kset;
    for (const auto& ens : ensembles)
      for (const auto& e : ens.entries())
        if (populated.count(e.k) && !populated.at(e.k).empty()) kset.insert(e.k);
    ks.assign(kset.begin(), kset.end());
    const auto lines = enumerate_beat_frequencies(s.system, ks, populated, rs.delta_omega);
    std::vector<BeatFit> fits;
    for (const auto& sp : spectrograms) fits.push_back(extract_amplitudes(sp, lines));
    ProductTable separated = separate_temperature_series(fits, ensembles);
    const double peak = separated.max_magnitude();
    std::erase_if(separated.entries,
                  [&](const ProductEntry& e) { return std::abs(e.value) < rs.eps_use * peak; });
    separated = resolve_degeneracies(separated, rs.eps_use);
    report.diagnostics.push_back("temperature series of " + std::to_string(fits.size()) + " spectrograms, " +
                                 std::to_string(separated.entries.size()) + " separated products");
    for (int k : ks) {
      const auto& pl = populated.at(k);
      if (pl.size() == 1) {
        solved[k] = single_level(k, pl.front());
        continue;
      }
      solved[k] = reconstruct_case_III(separated, calibration, k, pl, rs.eps_use);
    }
  } else {
    const ThermalEnsemble ens = make_ensemble(s);
    for (const auto& e : ens.entries())
      if (populated.count(e.k) && !populated.at(e.k).empty()) ks.push_back(e.k);
    const auto lines = enumerate_beat_frequencies(s.system, ks, populated, rs.delta_omega);
    const BeatFit fit = extract_amplitudes(spectrograms.front(), lines);
    const auto pure = pure_contributors(lines);
    const auto all = every_omega(fit.omega);
    const IsolationOptions iso_opt{rs.eps_iso, rs.eps_use, 10.0};
    {
      std::ostringstream os;
      os << lines.size() << " beat lines, design condition " << fit.condition;
      report.diagnostics.push_back(os.str());
    }

    std::vector<int> pending;
    for (int k : ks) {
      const auto& pl = populated.at(k);
      if (pl.size() == 1) {
        solved[k] = single_level(k, pl.front());
        continue;
      }
      if (rs.method == "II" && !solved.empty()) {
        pending.push_back(k);
        continue;
      }
      const auto iso = find_isolating_omega(fit, k, ks, iso_opt);
      ProductTable table = collect_products(
          fit, ens, iso, [&](const Contributor& c) { return c.k == k && c.kp == k && c.l != c.lp; }, rs.eps_use);
      append(table, collect_products(
                        fit, ens, all,
                        [&](const Contributor& c) { return c.k == k && c.kp == k && pure.count(c) > 0; },
                        rs.eps_use));
      drop_insignificant(table, fit, ens, iso_opt.noise_factor);
      table = resolve_degeneracies(table, rs.eps_use);
      try {
        solved[k] = reconstruct_case_I(table, calibration, k, all, pl, rs.eps_use);
        solved[k].notes.push_back(std::to_string(iso.size()) + " isolating omega");
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::unavailable) throw;
        report.diagnostics.push_back(std::string("k=") + std::to_string(k) + " case I: " + err.what());
        pending.push_back(k);
      }
    }

    bool progress = true;
    while (!pending.empty() && progress && rs.method != "I") {
      progress = false;
      for (auto it = pending.begin(); it != pending.end();) {
        const int target = *it;
        bool done = false;
        for (const auto& [k0, known] : solved) {
          if (known.estimate.coefficients.empty()) continue;
          ProductTable cross = collect_products(
              fit, ens, all,
              [&](const Contributor& c) {
                return pure.count(c) > 0 && ((c.k == k0 && c.kp == target) || (c.k == target && c.kp == k0));
              },
              rs.eps_use);
          drop_insignificant(cross, fit, ens, iso_opt.noise_factor);
          cross = resolve_degeneracies(cross, rs.eps_use);
          try {
            BranchReport rep =
                reconstruct_case_II(cross, calibration, known.estimate, target, populated.at(target), rs.eps_use);
            solved[target] = std::move(rep);
            done = true;
            break;
          } catch (const Error& err) {
            if (err.kind() != ErrorKind::unavailable) throw;
            report.diagnostics.push_back("k=" + std::to_string(target) + " case II from k=" +
                                         std::to_string(k0) + ": " + err.what());
          }
        }
        if (done) {
          it = pending.erase(it);
          progress = true;
        } else {
          ++it;
        }
      }
    }
    if (!pending.empty()) {
      std::ostringstream os;
      os << "no reconstruction available for branch(es)";
      for (int k : pending) os << " k=" << k;
      for (const auto& d : report.diagnostics) os << "; " << d;
      throw Error(ErrorKind::unavailable, os.str());
    }
  }

  for (auto& [k, rep] : solved) {
    if (truth) {
      if (auto it = truth->find(k); it != truth->end() && it->second.norm() > 0.0)
        rep.fidelity = fidelity(rep.estimate, it->second);
    }
    report.branches.push_back(std::move(rep));
  }
  for (const auto& line : calibration.link_log) report.diagnostics.push_back("link " + line);
  return report;
}

PipelineResult run_pipeline(const Scenario& s) {
  PipelineResult r;
  r.spectrograms = simulate(s);
  r.runs = calibrate(s);
  r.calibration = link_calibrations(r.runs);
  const auto truth = all_true_states(s);
  r.report = reconstruct(s, r.spectrograms, r.calibration, &truth);
  return r;
}

OracleCheck oracle_check(const Scenario& s) {
  s.validate();
  if (s.oracle.tau.empty()) throw Error(ErrorKind::configuration, "oracle check needs tau values");
  const ThermalEnsemble ens = make_ensemble(s);
  const auto states = true_states(s, ens);
  std::vector<BranchState> branches;
  std::vector<MappingTable> mappings;
  for (const auto& e : ens.entries()) {
    branches.push_back(states.at(e.k));
    mappings.push_back(mapping_coefficients(s.system, s.probes.pulse2, s.probes.pulse3, e.k, s.forward));
  }
  OracleCheck out;
  for (double tau : s.oracle.tau) {
    const Eigen::VectorXcd f = ensemble_field(s.system, ens, branches, mappings, tau);
    const Eigen::VectorXcd o = time_domain_oracle(s.system, ens, branches, s.probes.pulse2, s.probes.pulse3,
                                                  tau, s.forward.omega, s.oracle.config);
    const double norm = o.norm();
    if (!(norm > 0.0)) throw Error(ErrorKind::degenerate, "oracle field vanishes on the omega grid");
    const double r = (f - o).norm() / norm;
    out.tau.push_back(tau);
    out.residual.push_back(r);
    out.max_residual = std::max(out.max_residual, r);
  }
  return out;
}

}  // namespace fwm
