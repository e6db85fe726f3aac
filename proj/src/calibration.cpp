#include "fwm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "fwm/error.hpp"
#include "fwm/reconstruct.hpp"

namespace fwm {

BranchState calibration_state(const MolecularSystem& system, const PulseSpec& pulse, int k) {
  pulse.validate();
  if (!pulse.perturbative)
    throw Error(ErrorKind::validation, "calibration pulse must be marked perturbative");
  PulseSpec unit = pulse;
  unit.amplitude = 1.0;
  try {
    return synthesize_branch_state(system, unit, k);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate) throw;
    return BranchState{k, {}};
  }
}

namespace {

std::map<int, std::vector<int>> populated_sets(const std::map<int, BranchState>& states) {
  std::map<int, std::vector<int>> out;
  for (const auto& [k, s] : states)
    for (const auto& [l, c] : s.coefficients) out[k].push_back(l);
  return out;
}

// Contributors whose line holds a single branch pair; their amplitude is clean at every omega.
std::set<Contributor> clean_contributors(const std::vector<BeatLine>& lines) {
  std::set<Contributor> out;
  for (const auto& line : lines) {
    if (line.is_dc() || line.contributors.empty()) continue;
    const auto& f = line.contributors.front();
    const bool single = std::all_of(line.contributors.begin(), line.contributors.end(),
                                    [&](auto& c) { return c.k == f.k && c.kp == f.kp; });
    if (!single) continue;
    for (const auto& c : line.contributors)
      if (!(c.own() && c.l == c.lp)) out.insert(c);
  }
  return out;
}

void merge(ProductTable& into, ProductTable&& from) {
  for (auto& e : from.entries) {
    const bool dup = std::any_of(into.entries.begin(), into.entries.end(), [&](auto& x) {
      return x.omega_index == e.omega_index && x.index == e.index && x.beat == e.beat;
    });
    if (!dup) into.entries.push_back(std::move(e));
  }
  for (auto& d : from.discarded) into.discarded.push_back(std::move(d));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<BranchState> ordered_branches(const ThermalEnsemble& ensemble,
                                          const std::map<int, BranchState>& states) {
  std::vector<BranchState> out;
  for (const auto& e : ensemble.entries()) {
    auto it = states.find(e.k);
    out.push_back(it == states.end() ? BranchState{e.k, {}} : it->second);
  }
  return out;
}

}  // namespace

CalibrationRun run_calibration(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                               const PulseSpec& pulse, const Probes& probes,
                               const ForwardConfig& config, const CalibrationOptions& options,
                               std::string id) {
  config.validate();
  CalibrationRun run;
  run.id = std::move(id);
  run.pulse = pulse;

  std::vector<ThermalEnsemble> ensembles;
  if (options.temperatures.empty()) {
    ensembles.push_back(ensemble);
  } else {
    for (double t : options.temperatures) ensembles.push_back(ThermalEnsemble::from_temperature(system, t, 0.0));
  }
  std::set<int> ks_set;
  for (const auto& ens : ensembles)
    for (const auto& e : ens.entries()) ks_set.insert(e.k);
  const std::vector<int> ks(ks_set.begin(), ks_set.end());

  std::map<int, BranchState> truth;
  for (int k : ks) {
    BranchState unit = calibration_state(system, pulse, k);
    if (unit.coefficients.empty()) {
      run.log.push_back("k=" + std::to_string(k) + ": calibration band excites no a level");
      continue;
    }
    BranchState actual = synthesize_branch_state(system, pulse, k);
    run.excitation_fraction = std::max(run.excitation_fraction, actual.norm() * actual.norm());
    run.known[k] = std::move(unit);
    truth[k] = std::move(actual);
  }
  if (run.known.empty())
    throw Error(ErrorKind::unavailable,
                "calibration pulse " + run.id + " does not overlap any a-level transition");
  if (run.excitation_fraction > 0.1) {
    std::ostringstream os;
    os << "calibration " << run.id << " first-order excitation " << run.excitation_fraction
       << " is not small";
    run.log.push_back(os.str());
  }

  std::vector<MappingTable> mappings;
  std::map<int, std::size_t> mapping_of;
  for (int k : ks) {
    mapping_of[k] = mappings.size();
    mappings.push_back(mapping_coefficients(system, probes.pulse2, probes.pulse3, k, config));
  }
  const auto populated = populated_sets(run.known);
  std::vector<int> active_ks;
  for (const auto& [k, s] : run.known) active_ks.push_back(k);
  const auto lines = enumerate_beat_frequencies(system, active_ks, populated, options.delta_omega);
  const auto clean = clean_contributors(lines);

  auto measure = [&](const ThermalEnsemble& ens, std::uint64_t seed) {
    std::vector<MappingTable> m;
    for (const auto& e : ens.entries()) m.push_back(mappings[mapping_of.at(e.k)]);
    ForwardConfig c = config;
    c.seed = seed;
    return extract_amplitudes(spectrogram(system, ens, ordered_branches(ens, truth), m, c), lines);
  };

  ProductTable raw;
  const auto every = all_indices(config.omega.count);
  if (options.temperatures.empty()) {
    const BeatFit fit = measure(ensemble, config.seed);
    raw = collect_products(fit, ensemble, every, [&](const Contributor& c) { return clean.count(c) > 0; },
                           options.eps_use);
    drop_insignificant(raw, fit, ensemble, 10.0);
    for (int k : active_ks) {
      const auto iso = find_isolating_omega(fit, k, active_ks, {options.eps_iso, options.eps_use, 10.0});
      run.log.push_back(run.id + " k=" + std::to_string(k) + ": " + std::to_string(iso.size()) +
                        " isolating omega");
      ProductTable own = collect_products(
          fit, ensemble, iso, [&](const Contributor& c) { return c.k == k && c.kp == k && c.l != c.lp; },
          options.eps_use);
      drop_insignificant(own, fit, ensemble, 10.0);
      merge(raw, std::move(own));
    }
  } else {
    std::vector<BeatFit> fits;
    for (std::size_t i = 0; i < ensembles.size(); ++i) fits.push_back(measure(ensembles[i], config.seed + i));
    raw = separate_temperature_series(fits, ensembles);
    const double peak = raw.max_magnitude();
    std::erase_if(raw.entries, [&](const ProductEntry& e) { return std::abs(e.value) < options.eps_use * peak; });
  }
  const ProductTable resolved = resolve_degeneracies(raw, options.eps_use);

  double bmax = 0.0;
  for (const auto& [k, s] : run.known)
    for (const auto& [l, c] : s.coefficients) bmax = std::max(bmax, std::abs(c));
  run.products.discarded = resolved.discarded;
  for (const auto& e : resolved.entries) {
    const auto ik = run.known.find(e.index.k), ikp = run.known.find(e.index.kp);
    if (ik == run.known.end() || ikp == run.known.end()) continue;
    const cplx div = ik->second.at(e.index.l) * std::conj(ikp->second.at(e.index.lp));
    if (std::abs(div) < options.eps_use * bmax * bmax) {
      run.products.discarded.push_back("omega[" + std::to_string(e.omega_index) + "] " + to_string(e.index) +
                                       ": calibration coefficient below threshold");
      continue;
    }
    ProductEntry out = e;
    out.value = e.value / div;
    run.products.entries.push_back(std::move(out));
  }
  run.usable = !run.products.entries.empty();
  run.log.push_back(run.id + ": " + std::to_string(run.products.entries.size()) + " calibrated products");
  return run;
}

const ProductEntry* LinkedCalibration::find(std::size_t omega_index, const Contributor& c) const {
  return products.find(omega_index, c);
}

namespace {

using Key = std::tuple<std::size_t, Contributor>;

std::map<Key, cplx> keyed(const ProductTable& t) {
  std::map<Key, cplx> out;
  for (const auto& e : t.entries)
    if (!e.degenerate) out.emplace(Key{e.omega_index, e.index}, e.value);
  return out;
}

}  // namespace

LinkedCalibration link_calibrations(const std::vector<CalibrationRun>& runs) {
  std::vector<const CalibrationRun*> use;
  for (const auto& r : runs)
    if (r.usable) use.push_back(&r);
  if (use.empty()) throw Error(ErrorKind::unavailable, "no usable calibration run");

  std::vector<std::map<Key, cplx>> tables;
  for (const auto* r : use) tables.push_back(keyed(r->products));
  const std::size_t n = use.size();

  LinkedCalibration out;
  std::vector<double> scale(n, 0.0);
  std::vector<bool> seen(n, false);
  scale[0] = 1.0;
  seen[0] = true;
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t j = queue.front();
    queue.pop_front();
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i]) continue;
      cplx num = 0.0;
      double den = 0.0;
      std::size_t shared = 0;
      for (const auto& [key, vi] : tables[i]) {
        auto it = tables[j].find(key);
        if (it == tables[j].end()) continue;
        num += std::conj(vi) * it->second;
        den += std::norm(vi);
        ++shared;
      }
      if (shared == 0 || !(den > 0.0)) continue;
      const double r = num.real() / den;
      if (!(r > 0.0)) {
        throw Error(ErrorKind::linking, "calibrations " + use[i]->id + " and " + use[j]->id +
                                            " disagree in sign on their shared products");
      }
      scale[i] = scale[j] * r;
      seen[i] = true;
      queue.push_back(i);
      std::ostringstream os;
      os << use[i]->id << " -> " << use[j]->id << ": ratio " << r << " over " << shared << " shared entries";
      out.link_log.push_back(os.str());
    }
  }
  std::vector<std::string> isolated;
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) isolated.push_back(use[i]->id);
  if (!isolated.empty()) {
    std::string msg = "calibrations share no products with " + use[0]->id + ":";
    for (const auto& s : isolated) msg += " " + s;
    throw Error(ErrorKind::linking, msg);
  }

  std::map<Key, std::pair<cplx, int>> sum;
  std::map<Key, ProductEntry> proto;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : use[i]->products.entries) {
      if (e.degenerate) continue;
      const Key key{e.omega_index, e.index};
      auto& s = sum[key];
      s.first += scale[i] * e.value;
      s.second += 1;
      proto.emplace(key, e);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [key, v] : tables[i]) {
      const auto& s = sum[key];
      if (s.second < 2) continue;
      const cplx mean = s.first / static_cast<double>(s.second);
      out.residual = std::max(out.residual, std::abs(scale[i] * v - mean) / std::abs(mean));
    }
  }
  for (auto& [key, e] : proto) {
    const auto& s = sum[key];
    e.value = s.first / static_cast<double>(s.second);
    out.products.entries.push_back(e);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.run_ids.push_back(use[i]->id);
    out.scales.push_back(scale[i]);
  }
  return out;
}

}  // namespace fwm
