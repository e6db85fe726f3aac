#include <cmath>
#include <numbers>
#include <sstream>

#include "fwm/error.hpp"
#include "fwm/forward.hpp"

namespace fwm {

namespace {
constexpr cplx I{0.0, 1.0};

double arrival_time(const PulseSpec& p) { return p.phase.size() > 1 ? p.phase[1] : 0.0; }
}  // namespace

Eigen::VectorXcd time_domain_oracle(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                                    const std::vector<BranchState>& branches,
                                    const PulseSpec& pulse2, const PulseSpec& pulse3, double tau,
                                    const UniformGrid& omega, const OracleConfig& config) {
  for (const PulseSpec* p : {&pulse2, &pulse3})
    if (p->kind != PulseKind::gaussian || p->phase.size() > 2)
      throw Error(ErrorKind::configuration,
                  "time-domain oracle needs gaussian probes with at most linear spectral phase");
  if (branches.size() != ensemble.entries().size())
    throw Error(ErrorKind::consistency, "need one branch per ensemble entry");
  if (!(config.dt > 0.0) || !(config.t_end > config.t_start))
    throw Error(ErrorKind::configuration, "oracle time grid is empty");

  const double t2 = arrival_time(pulse2), t3 = arrival_time(pulse3);
  const double dur2 = 1.0 / pulse2.sigma, dur3 = 1.0 / pulse3.sigma;
  if (t3 - t2 < 4.0 * (dur2 + dur3))
    throw Error(ErrorKind::configuration, "oracle requires pulse 3 to follow pulse 2 without overlap");
  if (config.t_start > t2 - 8.0 * dur2)
    throw Error(ErrorKind::configuration, "oracle time grid starts inside pulse 2");

  auto width = [&](const VibLevel& lv) {
    const double g = lv.width > 0.0 ? lv.width : config.gamma_eff;
    if (!(g > 0.0)) throw Error(ErrorKind::configuration, "oracle needs gamma_eff for zero-width levels");
    return g;
  };
  double gmin = std::numeric_limits<double>::infinity();
  for (auto m : {Manifold::b, Manifold::c})
    for (const auto& lv : system.levels(m)) gmin = std::min(gmin, width(lv));
  if (config.t_end - t3 < 5.0 / gmin) {
    std::ostringstream os;
    os << "oracle time grid ends " << config.t_end - t3 << " tu after pulse 3, shorter than 5 decay times ("
       << 5.0 / gmin << ")";
    throw Error(ErrorKind::resolution, os.str());
  }

  const auto nt = static_cast<std::size_t>(std::floor((config.t_end - config.t_start) / config.dt)) + 1;
  const double dt = config.dt;
  std::vector<double> t(nt);
  std::vector<cplx> e2(nt), e3(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    t[j] = config.t_start + dt * static_cast<double>(j);
    e2[j] = time_domain_field(pulse2, t[j]);
    e3[j] = time_domain_field(pulse3, t[j]);
  }

  const auto& b = system.levels(Manifold::b);
  const auto& c = system.levels(Manifold::c);
  Eigen::VectorXcd spectrum = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(omega.count));
  std::vector<cplx> inner(nt);

  for (std::size_t bi = 0; bi < branches.size(); ++bi) {
    const auto& br = branches[bi];
    const int k = br.k;
    const double pk = ensemble.entries()[bi].population;
    const double ek = system.energy(Manifold::ground, k);
    // amp[n][j]: third-order amplitude on c level n.
    std::vector<std::vector<cplx>> amp(c.size(), std::vector<cplx>(nt, 0.0));

    for (const auto& [l, beta] : br.coefficients) {
      const double el = system.energy(Manifold::a, l);
      const cplx a_l = beta * std::exp(I * ((el - ek) * tau));
      for (const auto& mb : b) {
        const double d_ml = system.dipole(Manifold::b, mb.index, Manifold::a, l);
        if (d_ml == 0.0) continue;
        // inner(t3) = int_{-inf}^{t3} dt2 exp(-i(E_m - i g)(t3 - t2)) E2(t2) exp(-i E_l t2)
        const cplx pm = std::exp(-I * cplx(mb.energy, -width(mb)) * dt);
        cplx acc = 0.0;
        cplx prev = e2[0] * std::exp(-I * (el * t[0]));
        inner[0] = 0.0;
        for (std::size_t j = 1; j < nt; ++j) {
          const cplx cur = e2[j] * std::exp(-I * (el * t[j]));
          acc = pm * acc + 0.5 * dt * (pm * prev + cur);
          inner[j] = acc;
          prev = cur;
        }
        for (const auto& nc : c) {
          const double d_nm = system.dipole(Manifold::c, nc.index, Manifold::b, mb.index);
          if (d_nm == 0.0) continue;
          const cplx pn = std::exp(-I * cplx(nc.energy, -width(nc)) * dt);
          const cplx pref = -d_nm * d_ml * a_l;
          auto& out = amp[static_cast<std::size_t>(nc.index)];
          cplx outer = 0.0;
          cplx gprev = e3[0] * inner[0];
          for (std::size_t j = 1; j < nt; ++j) {
            const cplx gcur = e3[j] * inner[j];
            outer = pn * outer + 0.5 * dt * (pn * gprev + gcur);
            out[j] += pref * outer;
            gprev = gcur;
          }
        }
      }
    }

    // d(t) = <psi_c(t)| d |psi_0(t)>
    std::vector<cplx> dip(nt, 0.0);
    for (const auto& nc : c) {
      const double d_nk = system.dipole(Manifold::c, nc.index, Manifold::ground, k);
      if (d_nk == 0.0) continue;
      const auto& a_n = amp[static_cast<std::size_t>(nc.index)];
      for (std::size_t j = 0; j < nt; ++j) dip[j] += std::conj(a_n[j]) * d_nk;
    }
    for (std::size_t j = 0; j < nt; ++j) dip[j] *= std::exp(-I * (ek * t[j]));

    for (std::size_t wi = 0; wi < omega.count; ++wi) {
      const double w = omega[wi];
      cplx sum = 0.0;
      const cplx step = std::exp(I * (w * dt));
      cplx ph = std::exp(I * (w * t[0]));
      for (std::size_t j = 0; j < nt; ++j) {
        const double wt = (j == 0 || j + 1 == nt) ? 0.5 : 1.0;
        sum += wt * ph * dip[j];
        ph *= step;
      }
      spectrum(static_cast<Eigen::Index>(wi)) += pk * sum * dt / (2.0 * std::numbers::pi);
    }
  }
  return spectrum;
}

}  // namespace fwm
