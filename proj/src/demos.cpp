#include <algorithm>
#include <cmath>
#include <numbers>

#include "fwm/error.hpp"
#include "fwm/scenario.hpp"

namespace fwm::demos {

namespace {

using std::numbers::pi;

cplx polar(double r, double phi) { return std::polar(r, phi); }

const std::vector<double> a5{2.0, 2.092, 2.164, 2.276, 2.378};
const std::vector<double> a6{2.0, 2.087, 2.156, 2.264, 2.381, 2.458};
const std::vector<double> a9{2.0, 2.087, 2.157, 2.236, 2.328, 2.422, 2.521, 2.634, 2.738};

Eigen::MatrixXd matrix(int rows, int cols, std::initializer_list<double> v) {
  Eigen::MatrixXd m(rows, cols);
  auto it = v.begin();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = *it++;
  return m;
}

// Two ground levels; a, b and c energies as given.
MolecularSystem two_branch_system(const std::vector<double>& a, double ground_gap,
                                  const std::vector<double>& c = {3.55, 3.75},
                                  const std::vector<double>& b = {0.1, 0.35}) {
  const std::vector<double> g{0.0, ground_gap};
  const double a0[] = {0.5, 0.3, 0.4, 0.6, 0.6, 0.35, 0.3, 0.5, 0.45, 0.4, 0.55, 0.45, 0.35, 0.6, 0.5, 0.3, 0.4, 0.55};
  const double ab[] = {0.7, 0.2, 0.5, 0.5, 0.4, 0.3, 0.3, 0.6, 0.45, 0.6, 0.3, 0.5, 0.4, 0.5, 0.35,
                       0.65, 0.35, 0.55, 0.45, 0.55, 0.4, 0.35, 0.6, 0.3, 0.5, 0.45, 0.6};
  const double bc[] = {0.8, 0.3, 0.4, 0.7, 0.5, 0.6};
  const auto na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  DipoleTables d;
  d.a_ground.resize(na, 2);
  d.a_b.resize(na, nb);
  d.b_c.resize(nb, 2);
  for (int l = 0; l < na; ++l) {
    for (int j = 0; j < 2; ++j) d.a_ground(l, j) = a0[2 * (l % 9) + j];
    for (int m = 0; m < nb; ++m) d.a_b(l, m) = ab[3 * (l % 9) + m % 3];
  }
  for (int m = 0; m < nb; ++m)
    for (int n = 0; n < 2; ++n) d.b_c(m, n) = bc[2 * (m % 3) + n];
  d.c_ground = matrix(2, 2, {0.6, 0.5, 0.3, 0.7});
  return MolecularSystem({make_levels(g), make_levels(a), make_levels(b, 0.02), make_levels(c, 0.025)}, d);
}

struct Band {
  double lo, hi, height;
};

// Hard-edged windows, as a tabulated spectrum.
PulseSpec windows(std::initializer_list<Band> bands) {
  std::vector<double> w;
  std::vector<cplx> v;
  for (const auto& [lo, hi, height] : bands) {
    w.insert(w.end(), {lo - 1e-9, lo, hi, hi + 1e-9});
    v.insert(v.end(), {0.0, height, height, 0.0});
  }
  return PulseSpec::tabulated(w, v);
}

PulseSpec comb(double height, std::initializer_list<double> lines, double half_width = 0.003) {
  std::vector<double> w;
  std::vector<cplx> v;
  std::vector<double> sorted(lines);
  std::sort(sorted.begin(), sorted.end());
  for (double x : sorted) {
    w.insert(w.end(), {x - half_width - 1e-9, x - half_width, x + half_width, x + half_width + 1e-9});
    v.insert(v.end(), {0.0, height, height, 0.0});
  }
  return PulseSpec::tabulated(w, v);
}

Probes flat_probes(double band3_lo = 3.34, double band3_hi = 3.46) {
  return {PulseSpec::flattop(1.0, -2.05, -1.95), PulseSpec::flattop(1.0, band3_lo, band3_hi)};
}

ForwardConfig grids(double omega_start, std::size_t omega_count, std::size_t tau_count, double tau_step = 1.0) {
  ForwardConfig f;
  f.omega = {omega_start, 0.005, omega_count};
  f.tau = {-tau_step * static_cast<double>(tau_count - 1), tau_step, tau_count};
  f.omega2 = {-2.06, 0.002, 61};
  f.seed = 20240611;
  return f;
}

BranchState branch(int k, std::initializer_list<std::pair<int, cplx>> v) {
  BranchState b{k, {}};
  for (const auto& [l, c] : v) b.coefficients[l] = c;
  return b;
}

double gap_for_ratio(double gap, double ratio) { return gap / std::log(ratio); }

Scenario scaled(Scenario s, double f) {
  auto scale_levels = [&](std::vector<VibLevel> lv) {
    for (auto& l : lv) l.energy *= f, l.width *= f;
    return lv;
  };
  const auto& sys = s.system;
  s.system = MolecularSystem({scale_levels(sys.levels(Manifold::ground)), scale_levels(sys.levels(Manifold::a)),
                              scale_levels(sys.levels(Manifold::b)), scale_levels(sys.levels(Manifold::c))},
                             sys.dipoles(), sys.unit_label());
  auto scale_pulse = [&](PulseSpec p) {
    p.center *= f;
    p.sigma *= f;
    p.band_lo *= f;
    p.band_hi *= f;
    p.edge *= f;
    for (std::size_t j = 0; j < p.phase.size(); ++j) p.phase[j] /= std::pow(f, static_cast<double>(j));
    for (auto& w : p.table_omega) w *= f;
    return p;
  };
  s.probes.pulse2 = scale_pulse(s.probes.pulse2);
  s.probes.pulse3 = scale_pulse(s.probes.pulse3);
  if (s.pulse1) s.pulse1 = scale_pulse(*s.pulse1);
  for (auto& c : s.calibrations) c.pulse = scale_pulse(c.pulse);
  if (s.temperature) *s.temperature *= f;
  for (auto* g : {&s.forward.omega, &s.forward.omega2}) g->start *= f, g->step *= f;
  s.forward.tau.start /= f;
  s.forward.tau.step /= f;
  s.forward.gamma_eff *= f;
  s.reconstruction.delta_omega *= f;
  for (auto& t : s.reconstruction.temperatures) t *= f;
  return s;
}

}  // namespace

Scenario case_I() {
  Scenario s;
  s.name = "case-I";
  s.system = two_branch_system(a9, 0.64, {3.0, 4.6}, {0.1, 0.35, 0.6});
  s.temperature = gap_for_ratio(0.64, 2.5);
  s.truth[0] = branch(0, {{4, 0.5}, {5, polar(0.4, 1.1)}, {6, polar(0.6, -0.7)}, {7, polar(0.3, 2.2)},
                          {8, polar(0.35, 0.4)}});
  s.truth[1] = branch(1, {{0, 0.45}, {1, polar(0.5, 0.9)}, {2, polar(0.4, -1.9)}, {3, polar(0.55, 2.8)}});
  s.probes = flat_probes(3.33, 3.47);
  s.calibrations = {{"C1", windows({{1.34, 1.616, 0.01}, {2.308, 2.47, 0.02}, {2.48, 2.654, 0.1}})},
                    {"C2", PulseSpec::flattop(0.01, 2.501, 2.758)}};
  s.forward = grids(-4.27, 330, 3001, 1.5);
  return s;
}

Scenario case_II() {
  Scenario s;
  s.name = "case-II";
  s.system = two_branch_system(a6, 0.128);
  s.temperature = gap_for_ratio(0.128, 2.5);
  s.truth[0] = branch(0, {{0, 0.5}, {1, polar(0.4, 1.1)}, {2, polar(0.6, -0.7)}, {3, polar(0.3, 2.2)},
                          {4, polar(0.35, 0.4)}, {5, polar(0.45, -2.6)}});
  s.truth[1] = branch(1, {{2, 0.5}, {3, polar(0.45, -2.4)}, {4, polar(0.6, 1.3)}});
  s.probes = flat_probes();
  const double d0 = 0.128;
  s.calibrations = {{"C1", comb(0.01, {a6[0], a6[1], a6[2], a6[3], a6[4], a6[5]})},
                    {"C2", comb(0.01, {a6[0], a6[1], a6[2] - d0, a6[3] - d0, a6[4] - d0})}};
  s.forward = grids(-3.98, 140, 3001);
  return s;
}

Scenario case_III(double scale) {
  Scenario s;
  s.name = "case-III";
  s.system = two_branch_system(a5, 0.246);
  s.temperature = 0.3;
  s.truth[0] = branch(0, {{0, 0.5}, {1, polar(0.4, 1.1)}, {2, polar(0.6, -0.7)}, {3, polar(0.3, 2.2)},
                          {4, polar(0.35, 0.4)}});
  s.truth[1] = branch(1, {{0, 0.45}, {1, polar(0.5, 0.9)}, {2, polar(0.4, -1.9)}, {3, polar(0.55, 2.8)}});
  s.probes = flat_probes();
  s.calibrations = {{"C1", windows({{1.74, 2.10, 0.01}, {2.15, 2.39, 0.01}})}};
  s.forward = grids(-3.90, 173, 3001);
  s.reconstruction.method = "III";
  s.reconstruction.temperatures = {0.15, 0.3, 0.6};
  return scaled(s, scale);
}

Scenario degeneracy() {
  Scenario s;
  s.name = "degeneracy";
  DipoleTables d;
  d.a_ground = matrix(4, 1, {0.5, 0.4, 0.6, 0.3});
  d.a_b = matrix(4, 2, {0.7, 0.2, 0.5, 0.4, 0.3, 0.6, 0.6, 0.3});
  d.b_c = matrix(2, 2, {0.8, 0.3, 0.4, 0.7});
  d.c_ground = matrix(2, 1, {0.6, 0.3});
  const std::vector<double> g{0.0}, a{2.0, 2.1, 2.2, 2.237}, b{0.1, 0.35}, c{3.55, 3.75};
  s.system = MolecularSystem({make_levels(g), make_levels(a), make_levels(b, 0.02), make_levels(c, 0.025)}, d);
  s.populations = {{0, 1.0}};
  s.truth[0] = branch(0, {{0, 0.5}, {1, polar(0.4, 1.1)}, {2, polar(0.6, -0.7)}, {3, polar(0.3, 2.2)}});
  s.probes = flat_probes(3.30, 3.46);
  s.calibrations = {{"C1", PulseSpec::flattop(0.01, 1.99, 2.25)}};
  s.forward = grids(-3.76, 104, 1001);
  return s;
}

Scenario oracle_toy() {
  Scenario s;
  s.name = "oracle-toy";
  DipoleTables d;
  d.a_ground = matrix(3, 2, {0.5, 0.3, 0.4, 0.6, 0.2, 0.5});
  d.a_b = matrix(3, 2, {0.7, 0.2, 0.5, 0.4, 0.3, 0.6});
  d.b_c = matrix(2, 2, {0.8, 0.3, 0.4, 0.7});
  d.c_ground = matrix(2, 2, {0.6, 0.5, 0.3, 0.7});
  const std::vector<double> g{0.0, 0.25}, a{2.0, 2.11, 2.215}, b{0.1, 0.35}, c{3.5, 3.62};
  s.system = MolecularSystem({make_levels(g), make_levels(a), make_levels(b, 0.02), make_levels(c, 0.02)}, d);
  s.temperature = 0.3;
  s.pulse1 = PulseSpec::gaussian(1.0, 2.05, 0.2);
  s.probes = {PulseSpec::gaussian(1.0, -2.0, 0.3, {0.0, 0.0}), PulseSpec::gaussian(1.0, 3.3, 0.3, {0.0, 30.0})};
  s.forward.omega = {-3.9, 0.005, 181};
  s.forward.omega2 = {-3.9, 0.004, 951};
  s.forward.tau = {-100.0, 1.0, 101};
  s.oracle.tau = {-100.0, -37.0, -5.0};
  s.oracle.config.t_start = -40.0;
  s.oracle.config.t_end = 30.0 + 25.0 / 0.02;
  s.oracle.config.dt = 0.05;
  return s;
}

std::vector<std::string> names() { return {"case-I", "case-II", "case-III", "degeneracy", "oracle-toy"}; }

Scenario by_name(const std::string& name) {
  if (name == "case-I") return case_I();
  if (name == "case-II") return case_II();
  if (name == "case-III") return case_III();
  if (name == "degeneracy") return degeneracy();
  if (name == "oracle-toy") return oracle_toy();
  throw Error(ErrorKind::lookup, "unknown demo '" + name + "'");
}

}  // namespace fwm::demos
