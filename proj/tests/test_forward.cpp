#include <doctest.h>

#include <cmath>

#include "fwm/error.hpp"
#include "fwm/forward.hpp"
#include "fwm/scenario.hpp"
#include "helpers.hpp"

using namespace fwm;

namespace {

ForwardConfig small_config() {
  ForwardConfig f;
  f.omega = {-3.2, 0.01, 41};
  f.omega2 = {-2.3, 0.001, 601};
  f.tau = {-60.0, 0.5, 121};
  return f;
}

Probes gaussian_probes() {
  return {PulseSpec::gaussian(1.0, -2.0, 0.03), PulseSpec::gaussian(cplx(0.8, 0.3), 3.4, 0.1)};
}

// Independent fine-grid evaluation of one mapping coefficient.
cplx reference_coefficient(const MolecularSystem& sys, const Probes& p, int k, int l, double w) {
  const double ek = sys.energy(Manifold::ground, k), el = sys.energy(Manifold::a, l);
  const std::size_t n = 1000000;
  const double lo = -2.3, hi = -1.7, h = (hi - lo) / static_cast<double>(n - 1);
  cplx total = 0.0;
  for (const auto& c : sys.levels(Manifold::c)) {
    const cplx outer = 1.0 / (w + c.energy - ek + cplx(0.0, c.width));
    for (const auto& b : sys.levels(Manifold::b)) {
      const double chain = sys.dipole(Manifold::a, l, Manifold::b, b.index) *
                           sys.dipole(Manifold::b, b.index, Manifold::c, c.index) *
                           sys.dipole(Manifold::c, c.index, Manifold::ground, k);
      cplx integral = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double w2 = lo + h * static_cast<double>(j);
        const double wt = (j == 0 || j + 1 == n) ? 0.5 * h : h;
        integral += wt * std::conj(spectral_amplitude(p.pulse2, w2)) *
                    std::conj(spectral_amplitude(p.pulse3, ek - el - w2 - w)) /
                    (b.energy - el - w2 + cplx(0.0, b.width));
      }
      total += chain * outer * integral;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("mapping coefficients match a fine reference quadrature") {
  const auto sys = test::small_system();
  const auto probes = gaussian_probes();
  const auto cfg = small_config();
  const auto table = mapping_coefficients(sys, probes.pulse2, probes.pulse3, 0, cfg);
  for (int l : {0, 2})
    for (std::size_t w : {std::size_t{5}, std::size_t{20}, std::size_t{37}}) {
      const cplx ref = reference_coefficient(sys, probes, 0, l, cfg.omega[w]);
      CHECK(std::abs(table.conj_at(l, w) - ref) <= 1e-6 * std::abs(ref));
    }
}

TEST_CASE("zero dipole chain gives zero coefficients") {
  auto sys = test::small_system();
  DipoleTables d = sys.dipoles();
  d.b_c.setZero();
  std::array<std::vector<VibLevel>, 4> lv{sys.levels(Manifold::ground), sys.levels(Manifold::a),
                                          sys.levels(Manifold::b), sys.levels(Manifold::c)};
  const MolecularSystem dead(lv, d);
  const auto probes = gaussian_probes();
  const auto table = mapping_coefficients(dead, probes.pulse2, probes.pulse3, 1, small_config());
  CHECK(table.conj_coeff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mapping grid checks") {
  const auto sys = test::small_system();
  const auto probes = gaussian_probes();
  auto cfg = small_config();
  cfg.omega2 = {-2.3, 0.01, 61};
  try {
    mapping_coefficients(sys, probes.pulse2, probes.pulse3, 0, cfg);
    FAIL("coarse grid accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::resolution);
  }
  cfg = small_config();
  cfg.omega2 = {-2.0, 0.001, 101};
  try {
    mapping_coefficients(sys, probes.pulse2, probes.pulse3, 0, cfg);
    FAIL("short grid accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
}

TEST_CASE("branch field") {
  const auto sys = test::small_system();
  const auto probes = gaussian_probes();
  const auto cfg = small_config();
  const auto map = mapping_coefficients(sys, probes.pulse2, probes.pulse3, 0, cfg);
  const std::size_t w = 22;

  SUBCASE("single level has tau-independent magnitude") {
    const BranchState b{0, {{1, cplx(0.3, 0.4)}}};
    const double m0 = std::abs(fw_field_branch(sys, map, b, 0.0, w));
    for (double tau : {-50.0, -13.7, 4.0}) CHECK(std::abs(fw_field_branch(sys, map, b, tau, w)) == doctest::Approx(m0));
  }
  SUBCASE("global phase of beta conjugates onto the field") {
    const BranchState b{0, {{0, cplx(0.3, 0.4)}, {2, cplx(-0.1, 0.7)}}};
    BranchState r = b;
    const cplx z = std::polar(1.0, 0.8);
    for (auto& [l, c] : r.coefficients) c *= z;
    for (double tau : {-20.0, 3.0})
      CHECK(std::abs(fw_field_branch(sys, map, r, tau, w) - std::conj(z) * fw_field_branch(sys, map, b, tau, w)) <
            1e-15);
  }
  SUBCASE("two equal terms beat with full contrast") {
    const cplx c0 = map.conj_at(0, w), c1 = map.conj_at(1, w);
    const BranchState b{0, {{0, std::conj(1.0 / c0)}, {1, std::conj(1.0 / c1)}}};
    const double period = 2.0 * std::numbers::pi / (sys.energy(Manifold::a, 1) - sys.energy(Manifold::a, 0));
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i < 400; ++i) {
      const double m = std::norm(fw_field_branch(sys, map, b, period * i / 400.0, w));
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    CHECK(hi == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(lo < 1e-3);
  }
  SUBCASE("wrong ground level") {
    CHECK_THROWS_AS(fw_field_branch(sys, map, BranchState{1, {{0, 1.0}}}, 0.0, w), Error);
  }
}

TEST_CASE("spectrogram properties") {
  const auto sys = test::small_system();
  const auto probes = gaussian_probes();
  auto cfg = small_config();
  const auto ens = ThermalEnsemble::from_populations({{0, 0.6}, {1, 0.4}});
  std::vector<MappingTable> maps{mapping_coefficients(sys, probes.pulse2, probes.pulse3, 0, cfg),
                                 mapping_coefficients(sys, probes.pulse2, probes.pulse3, 1, cfg)};
  const std::vector<BranchState> br{{0, {{0, cplx(0.5, 0.1)}, {1, cplx(0.2, -0.4)}, {2, 0.3}}},
                                    {1, {{0, cplx(0.0, 0.6)}, {2, cplx(0.4, 0.4)}}}};
  const auto s = spectrogram(sys, ens, br, maps, cfg);
  CHECK(s.values.minCoeff() >= 0.0);
  CHECK(s.values.maxCoeff() > 0.0);

  SUBCASE("complex scaling of every branch scales S by |c|^2") {
    auto scaled = br;
    const cplx c = std::polar(1.3, 2.0);
    for (auto& b : scaled)
      for (auto& [l, v] : b.coefficients) v *= c;
    const auto s2 = spectrogram(sys, ens, scaled, maps, cfg);
    CHECK((s2.values - std::norm(c) * s.values).cwiseAbs().maxCoeff() <= 1e-12 * s2.values.maxCoeff());
  }
  SUBCASE("zero states give zero signal") {
    const std::vector<BranchState> empty{{0, {}}, {1, {}}};
    CHECK(spectrogram(sys, ens, empty, maps, cfg).values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("ensemble field is the population-weighted sum of branch fields") {
    const double tau = -7.5;
    const auto f = ensemble_field(sys, ens, br, maps, tau);
    for (std::size_t w : {std::size_t{3}, std::size_t{30}}) {
      const cplx want = 0.6 * fw_field_branch(sys, maps[0], br[0], tau, w) +
                        0.4 * fw_field_branch(sys, maps[1], br[1], tau, w);
      CHECK(std::abs(f(static_cast<Eigen::Index>(w)) - want) < 1e-14 * (1.0 + std::abs(want)));
      const double om = cfg.omega[w];
      CHECK(s.values(static_cast<Eigen::Index>(w), 105) ==
            doctest::Approx(std::pow(om, 4) * std::norm(ensemble_field(sys, ens, br, maps, cfg.tau[105])(
                                                  static_cast<Eigen::Index>(w)))));
    }
  }
  SUBCASE("noise is reproducible per seed") {
    cfg.noise = 0.01;
    cfg.seed = 42;
    const auto a = spectrogram(sys, ens, br, maps, cfg);
    const auto b = spectrogram(sys, ens, br, maps, cfg);
    CHECK(a.values == b.values);
    cfg.seed = 43;
    CHECK(spectrogram(sys, ens, br, maps, cfg).values != a.values);
  }
  SUBCASE("mismatched inputs") {
    const std::vector<BranchState> one{br[0]};
    CHECK_THROWS_AS(spectrogram(sys, ens, one, maps, cfg), Error);
  }
}

TEST_CASE("time-domain oracle") {
  Scenario s = demos::oracle_toy();
  const auto ens = make_ensemble(s);
  const auto states = true_states(s, ens);
  std::vector<BranchState> br;
  for (const auto& e : ens.entries()) br.push_back(states.at(e.k));
  OracleConfig oc = s.oracle.config;

  SUBCASE("agrees with the frequency-domain route") {
    const auto check = oracle_check(s);
    REQUIRE(check.tau.size() == 3);
    CHECK(check.max_residual < 1e-3);
  }
  SUBCASE("bilinear in the probe amplitudes") {
    const auto f1 = time_domain_oracle(s.system, ens, br, s.probes.pulse2, s.probes.pulse3, -20.0, s.forward.omega, oc);
    auto p2 = s.probes.pulse2, p3 = s.probes.pulse3;
    p2.amplitude *= 2.0;
    p3.amplitude *= 2.0;
    const auto f2 = time_domain_oracle(s.system, ens, br, p2, p3, -20.0, s.forward.omega, oc);
    CHECK((f2 - 4.0 * f1).norm() <= 1e-12 * f2.norm());
  }
  SUBCASE("zero dipole chain") {
    DipoleTables d = s.system.dipoles();
    d.a_b.setZero();
    std::array<std::vector<VibLevel>, 4> lv{s.system.levels(Manifold::ground), s.system.levels(Manifold::a),
                                            s.system.levels(Manifold::b), s.system.levels(Manifold::c)};
    const MolecularSystem dead(lv, d);
    const auto f = time_domain_oracle(dead, ens, br, s.probes.pulse2, s.probes.pulse3, -20.0, s.forward.omega, oc);
    CHECK(f.norm() == 0.0);
  }
}
