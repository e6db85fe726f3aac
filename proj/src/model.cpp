#include "fwm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm {

std::string to_string(Manifold m) {
  switch (m) {
    case Manifold::ground: return "0";
    case Manifold::a: return "a";
    case Manifold::b: return "b";
    case Manifold::c: return "c";
  }
  return "?";
}

namespace {

void check_table(const Eigen::MatrixXd& table, std::size_t rows, std::size_t cols,
                 const char* name) {
  if (static_cast<std::size_t>(table.rows()) != rows || static_cast<std::size_t>(table.cols()) != cols) {
    std::ostringstream os;
    os << "dipole table " << name << " is " << table.rows() << "x" << table.cols() << ", expected "
       << rows << "x" << cols;
    throw Error(ErrorKind::validation, os.str());
  }
  if (!table.allFinite())
    throw Error(ErrorKind::validation, std::string("dipole table ") + name + " has non-finite entries");
}

}  // namespace

MolecularSystem::MolecularSystem(std::array<std::vector<VibLevel>, 4> manifolds,
                                 DipoleTables dipoles, std::string unit_label)
    : manifolds_(std::move(manifolds)), dipoles_(std::move(dipoles)), unit_label_(std::move(unit_label)) {
  for (std::size_t m = 0; m < 4; ++m) {
    const auto& lv = manifolds_[m];
    const std::string name = to_string(static_cast<Manifold>(m));
    if (lv.empty()) throw Error(ErrorKind::validation, "manifold " + name + " has no levels");
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (lv[i].index != static_cast<int>(i))
        throw Error(ErrorKind::validation, "manifold " + name + " level indices must be 0..n-1 in order");
      if (!std::isfinite(lv[i].energy) || !std::isfinite(lv[i].width))
        throw Error(ErrorKind::validation, "manifold " + name + " has non-finite level data");
      if (lv[i].width < 0.0)
        throw Error(ErrorKind::validation, "manifold " + name + " has a negative level width");
      if (i > 0 && !(lv[i].energy > lv[i - 1].energy))
        throw Error(ErrorKind::validation, "manifold " + name + " energies must increase with index");
    }
  }
  if (size(Manifold::a) < 2) throw Error(ErrorKind::validation, "manifold a needs at least 2 levels");
  check_table(dipoles_.a_ground, size(Manifold::a), size(Manifold::ground), "a0");
  check_table(dipoles_.a_b, size(Manifold::a), size(Manifold::b), "ab");
  check_table(dipoles_.b_c, size(Manifold::b), size(Manifold::c), "bc");
  check_table(dipoles_.c_ground, size(Manifold::c), size(Manifold::ground), "c0");
}

const VibLevel& MolecularSystem::level(Manifold m, int index) const {
  const auto& lv = levels(m);
  if (index < 0 || static_cast<std::size_t>(index) >= lv.size())
    throw Error(ErrorKind::lookup,
                "no level " + std::to_string(index) + " in manifold " + to_string(m));
  return lv[static_cast<std::size_t>(index)];
}

std::vector<double> MolecularSystem::energies(Manifold m) const {
  std::vector<double> e;
  for (const auto& l : levels(m)) e.push_back(l.energy);
  return e;
}

double MolecularSystem::dipole(Manifold from, int i, Manifold to, int j) const {
  level(from, i);
  level(to, j);
  auto pick = [&](Manifold first, Manifold second, const Eigen::MatrixXd& t) -> std::optional<double> {
    if (from == first && to == second) return t(i, j);
    if (from == second && to == first) return t(j, i);
    return std::nullopt;
  };
  if (auto v = pick(Manifold::a, Manifold::ground, dipoles_.a_ground)) return *v;
  if (auto v = pick(Manifold::a, Manifold::b, dipoles_.a_b)) return *v;
  if (auto v = pick(Manifold::b, Manifold::c, dipoles_.b_c)) return *v;
  if (auto v = pick(Manifold::c, Manifold::ground, dipoles_.c_ground)) return *v;
  return 0.0;
}

std::vector<VibLevel> make_levels(std::span<const double> energies, double width) {
  std::vector<VibLevel> out;
  for (std::size_t i = 0; i < energies.size(); ++i)
    out.push_back({static_cast<int>(i), energies[i], width});
  return out;
}

std::vector<double> boltzmann_populations(std::span<const double> energies, double temperature) {
  if (energies.empty()) throw Error(ErrorKind::validation, "no energies given");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw Error(ErrorKind::validation, "temperature must be positive and finite");
  for (double e : energies)
    if (!std::isfinite(e)) throw Error(ErrorKind::validation, "non-finite energy");
  const double e0 = *std::min_element(energies.begin(), energies.end());
  std::vector<double> p;
  p.reserve(energies.size());
  for (double e : energies) p.push_back(std::exp(-(e - e0) / temperature));
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= z;
  return p;
}

ThermalEnsemble ThermalEnsemble::from_temperature(const MolecularSystem& system, double temperature,
                                                  double cutoff) {
  const auto energies = system.energies(Manifold::ground);
  const auto p = boltzmann_populations(energies, temperature);
  ThermalEnsemble ens;
  ens.temperature_ = temperature;
  double kept = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < cutoff) {
      ens.dropped_.push_back(static_cast<int>(k));
      continue;
    }
    ens.entries_.push_back({static_cast<int>(k), p[k]});
    kept += p[k];
  }
  if (!ens.dropped_.empty()) {
    std::ostringstream os;
    os << ens.dropped_.size() << " ground level(s) below population cutoff " << cutoff
       << " dropped at T=" << temperature;
    warn(os.str());
  }
  for (auto& e : ens.entries_) e.population /= kept;
  return ens;
}

ThermalEnsemble ThermalEnsemble::from_populations(std::vector<EnsembleEntry> entries) {
  if (entries.empty()) throw Error(ErrorKind::validation, "ensemble has no entries");
  double sum = 0.0;
  for (const auto& e : entries) {
    if (!(e.population > 0.0 && e.population <= 1.0))
      throw Error(ErrorKind::validation, "population must lie in (0, 1]");
    sum += e.population;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::validation, "populations must sum to 1");
  std::sort(entries.begin(), entries.end(), [](auto& x, auto& y) { return x.k < y.k; });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].k == entries[i - 1].k) throw Error(ErrorKind::validation, "duplicate ensemble level");
  ThermalEnsemble ens;
  ens.entries_ = std::move(entries);
  return ens;
}

std::vector<int> ThermalEnsemble::levels() const {
  std::vector<int> ks;
  for (const auto& e : entries_) ks.push_back(e.k);
  return ks;
}

double ThermalEnsemble::population(int k) const {
  for (const auto& e : entries_)
    if (e.k == k) return e.population;
  return 0.0;
}

cplx BranchState::at(int l) const {
  auto it = coefficients.find(l);
  return it == coefficients.end() ? cplx{} : it->second;
}

double BranchState::norm() const {
  double s = 0.0;
  for (const auto& [l, c] : coefficients) s += std::norm(c);
  return std::sqrt(s);
}

double transition_frequency(const MolecularSystem& system, Manifold alpha, int nu, Manifold alpha2,
                            int nu2) {
  return system.energy(alpha, nu) - system.energy(alpha2, nu2);
}

BranchState synthesize_branch_state(const MolecularSystem& system, const PulseSpec& pulse, int k) {
  system.level(Manifold::ground, k);
  BranchState state{k, {}};
  for (const auto& lv : system.levels(Manifold::a)) {
    const double d = system.dipole(Manifold::a, lv.index, Manifold::ground, k);
    if (d == 0.0) continue;
    const cplx e = spectral_amplitude(pulse, transition_frequency(system, Manifold::a, lv.index,
                                                                  Manifold::ground, k));
    if (!std::isfinite(e.real()) || !std::isfinite(e.imag()))
      throw Error(ErrorKind::validation, "pulse amplitude not finite at a transition line");
    if (e == cplx{}) continue;
    state.coefficients[lv.index] = cplx{0.0, -1.0} * d * e;
  }
  if (state.coefficients.empty())
    throw Error(ErrorKind::degenerate,
                "pulse creates no excited coefficients from ground level " + std::to_string(k));
  return state;
}

BranchState gauge_fixed(const BranchState& state) {
  const double n = state.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::degenerate, "cannot gauge-fix a zero state");
  double peak = 0.0;
  for (const auto& [l, c] : state.coefficients) peak = std::max(peak, std::abs(c));
  cplx ref{};
  for (const auto& [l, c] : state.coefficients) {
    if (std::abs(c) > 1e-12 * peak) {
      ref = c;
      break;
    }
  }
  const cplx rot = std::conj(ref) / std::abs(ref) / n;
  BranchState out{state.k, {}};
  for (const auto& [l, c] : state.coefficients) out.coefficients[l] = c * rot;
  // The reference coefficient is made exactly real so fixing is idempotent.
  for (auto& [l, c] : out.coefficients) {
    if (std::abs(state.coefficients.at(l)) > 1e-12 * peak) {
      c = cplx{std::abs(c), 0.0};
      break;
    }
  }
  return out;
}

}  // namespace fwm
