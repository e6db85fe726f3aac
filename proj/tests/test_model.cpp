#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fwm/error.hpp"
#include "fwm/model.hpp"
#include "fwm/pulses.hpp"
#include "helpers.hpp"

using namespace fwm;

TEST_CASE("boltzmann populations") {
  SUBCASE("equal energies give a uniform distribution") {
    const std::vector<double> e{1.0, 1.0, 1.0, 1.0};
    for (double p : boltzmann_populations(e, 0.7)) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("gap equal to T") {
    const std::vector<double> e{0.0, 0.3};
    const auto p = boltzmann_populations(e, 0.3);
    CHECK(p[1] / p[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }
  SUBCASE("ratio 2.5 round trip") {
    const double t = 0.64 / std::log(2.5);
    const std::vector<double> e{0.0, 0.64};
    const auto p = boltzmann_populations(e, t);
    CHECK(p[0] / p[1] == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("invalid input") {
    const std::vector<double> bad{0.0, std::nan("")};
    CHECK_THROWS_AS(boltzmann_populations(bad, 1.0), Error);
    const std::vector<double> e{0.0};
    CHECK_THROWS_AS(boltzmann_populations(e, 0.0), Error);
  }
  SUBCASE("positive, normalized and monotone on random spectra") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> e(1 + trial % 7);
      for (auto& x : e) x = u(rng);
      std::sort(e.begin(), e.end());
      const auto p = boltzmann_populations(e, 0.1 + u(rng));
      double sum = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] > 0.0);
        if (i) CHECK(p[i] <= p[i - 1]);
        sum += p[i];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("ensemble truncation drops tiny populations") {
  const auto sys = test::small_system();
  const auto ens = ThermalEnsemble::from_temperature(sys, 0.01, 1e-6);
  CHECK(ens.entries().size() == 1);
  CHECK(ens.dropped() == std::vector<int>{1});
  CHECK(ens.population(0) == doctest::Approx(1.0));
  CHECK(ens.population(7) == 0.0);
}

TEST_CASE("transition frequencies") {
  const auto sys = test::small_system();
  CHECK(transition_frequency(sys, Manifold::a, 1, Manifold::a, 1) == 0.0);
  CHECK(transition_frequency(sys, Manifold::a, 1, Manifold::a, 0) == doctest::Approx(0.10));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(transition_frequency(sys, Manifold::a, i, Manifold::a, j) ==
            -transition_frequency(sys, Manifold::a, j, Manifold::a, i));
      const double chained = transition_frequency(sys, Manifold::a, i, Manifold::ground, 1) +
                             transition_frequency(sys, Manifold::ground, 1, Manifold::a, j);
      CHECK(chained == doctest::Approx(transition_frequency(sys, Manifold::a, i, Manifold::a, j)).epsilon(1e-14));
    }
  CHECK_THROWS_AS(transition_frequency(sys, Manifold::a, 9, Manifold::a, 0), Error);
  try {
    transition_frequency(sys, Manifold::c, 5, Manifold::a, 0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::lookup);
  }
}

TEST_CASE("dipoles vanish for forbidden pairs") {
  const auto sys = test::small_system();
  CHECK(sys.dipole(Manifold::a, 0, Manifold::ground, 0) == sys.dipole(Manifold::ground, 0, Manifold::a, 0));
  CHECK(sys.dipole(Manifold::a, 0, Manifold::c, 0) == 0.0);
  CHECK(sys.dipole(Manifold::ground, 0, Manifold::b, 0) == 0.0);
}

TEST_CASE("synthesize_branch_state") {
  auto sys = test::small_system();
  SUBCASE("flat-top amplitude 1 gives -i D") {
    const auto p = PulseSpec::flattop(1.0, 1.5, 2.5);
    const auto b = synthesize_branch_state(sys, p, 0);
    for (int l = 0; l < 3; ++l) {
      const double d = sys.dipole(Manifold::a, l, Manifold::ground, 0);
      CHECK(std::abs(b.at(l) - cplx(0.0, -d)) < 1e-15);
    }
  }
  SUBCASE("gaussian evaluated per line") {
    const auto p = PulseSpec::gaussian(cplx(0.5, 0.2), 2.05, 0.07);
    const auto b = synthesize_branch_state(sys, p, 0);
    for (int l = 0; l < 3; ++l) {
      const double w = sys.energy(Manifold::a, l) - sys.energy(Manifold::ground, 0);
      const double x = (w - 2.05) / 0.07;
      const cplx want = cplx(0.0, -1.0) * sys.dipole(Manifold::a, l, Manifold::ground, 0) * cplx(0.5, 0.2) *
                        std::exp(-0.5 * x * x);
      CHECK(std::abs(b.at(l) - want) < 1e-15);
    }
  }
  SUBCASE("no coupling is degenerate") {
    const auto p = PulseSpec::flattop(1.0, 10.0, 11.0);
    try {
      synthesize_branch_state(sys, p, 0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate);
    }
  }
}

TEST_CASE("gauge fixing") {
  BranchState b{0, {{1, cplx(0.0, 2.0)}, {2, cplx(-1.0, 1.0)}, {4, cplx(0.3, 0.0)}}};
  const auto g = gauge_fixed(b);
  CHECK(g.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g.at(1).imag() == 0.0);
  CHECK(g.at(1).real() > 0.0);
  const auto gg = gauge_fixed(g);
  for (const auto& [l, c] : g.coefficients) CHECK(std::abs(gg.at(l) - c) < 1e-15);
  BranchState rotated = b;
  for (auto& [l, c] : rotated.coefficients) c *= std::polar(3.0, -2.2);
  const auto gr = gauge_fixed(rotated);
  for (const auto& [l, c] : g.coefficients) CHECK(std::abs(gr.at(l) - c) < 1e-14);
}

TEST_CASE("spectral amplitudes") {
  const auto flat = PulseSpec::flattop(1.0, 1.0, 2.0);
  CHECK(spectral_amplitude(flat, 1.5) == cplx(1.0));
  CHECK(spectral_amplitude(flat, 3.0) == cplx(0.0));
  const auto g = PulseSpec::gaussian(1.0, 2.0, 0.3);
  CHECK(std::abs(spectral_amplitude(g, 2.0) - 1.0) < 1e-15);
  CHECK(std::abs(spectral_amplitude(g, 2.3)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  const auto smooth = PulseSpec::flattop(1.0, 1.0, 2.0, 0.2);
  CHECK(std::abs(spectral_amplitude(smooth, 2.1)) == doctest::Approx(0.5).epsilon(1e-12));
  const auto table = PulseSpec::tabulated({0.0, 1.0, 2.0}, {0.0, cplx(2.0, 2.0), 0.0});
  CHECK(std::abs(spectral_amplitude(table, 0.5) - cplx(1.0, 1.0)) < 1e-15);
  CHECK(spectral_amplitude(table, 2.5) == cplx(0.0));
}

TEST_CASE("pulse validation") {
  CHECK_THROWS_AS(PulseSpec::gaussian(1.0, 2.0, 0.0), Error);
  CHECK_THROWS_AS(PulseSpec::flattop(1.0, 2.0, 1.0), Error);
  CHECK_THROWS_AS(PulseSpec::tabulated({0.0, 0.0}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(pulse_kind_from_string("square"), Error);
}

TEST_CASE("time-domain fields") {
  const auto g = PulseSpec::gaussian(cplx(0.7, 0.1), 2.0, 0.25);
  CHECK(std::abs(time_domain_field(g, 0.0) - cplx(0.7, 0.1) * 0.25 * std::sqrt(2.0 * std::numbers::pi)) < 1e-14);
  double prev = std::abs(time_domain_field(g, 0.0));
  for (double t = 1.0; t < 40.0; t += 1.0) {
    const double m = std::abs(time_domain_field(g, t));
    CHECK(m < prev);
    prev = m;
  }
  CHECK(prev < 1e-20);

  SUBCASE("quadrature route agrees with the closed form") {
    const TimeQuadrature q{2.0 - 8 * 0.25, 2.0 + 8 * 0.25, 4001};
    auto chirped = PulseSpec::gaussian(1.0, 2.0, 0.25, {0.0, 0.0, 0.0});
    for (double t : {-3.0, 0.0, 2.5})
      CHECK(std::abs(time_domain_field(chirped, t, q) - time_domain_field(g, t) / cplx(0.7, 0.1)) < 1e-10);
  }
  SUBCASE("single-bin table is a plane wave") {
    const auto narrow = PulseSpec::tabulated({1.999, 2.0, 2.001}, {0.0, 1.0, 0.0});
    const TimeQuadrature q{1.999, 2.001, 3};
    for (double t : {0.0, 1.0, 10.0})
      CHECK(std::abs(time_domain_field(narrow, t, q) - 0.001 * std::exp(cplx(0.0, -2.0 * t))) < 1e-15);
  }
  SUBCASE("Parseval") {
    double time = 0.0, freq = 0.0;
    const double dt = 0.05, dw = 0.001;
    for (double t = -60.0; t <= 60.0; t += dt) time += std::norm(time_domain_field(g, t)) * dt;
    for (double w = 0.0; w <= 4.0; w += dw) freq += std::norm(spectral_amplitude(g, w)) * dw;
    CHECK(time == doctest::Approx(2.0 * std::numbers::pi * freq).epsilon(1e-6));
  }
  CHECK_THROWS_AS(time_domain_field(PulseSpec::flattop(1.0, 1.0, 2.0), 0.0), Error);
}

TEST_CASE("real-field spectrum is Hermitian") {
  const auto g = PulseSpec::gaussian(cplx(0.3, 0.4), 2.0, 0.5, {0.1, 2.0});
  for (double w : {0.3, 1.7, 2.2})
    CHECK(std::abs(real_field_spectrum(g, -w) - std::conj(real_field_spectrum(g, w))) < 1e-15);
}
