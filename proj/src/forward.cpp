#include "fwm/forward.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm {

namespace {
constexpr cplx I{0.0, 1.0};

double effective_width(double width, double gamma_eff) { return width > 0.0 ? width : gamma_eff; }
}  // namespace

std::vector<double> UniformGrid::values() const {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = (*this)[i];
  return v;
}

long UniformGrid::nearest(double x) const {
  const double f = (x - start) / step;
  const long i = std::lround(f);
  if (i < 0 || static_cast<std::size_t>(i) >= count || std::abs(f - static_cast<double>(i)) > 1e-6)
    return -1;
  return i;
}

void UniformGrid::validate(const char* name) const {
  if (count < 2 || !(step > 0.0) || !std::isfinite(start) || !std::isfinite(step))
    throw Error(ErrorKind::configuration,
                std::string(name) + " grid must have >= 2 points and a positive finite step");
}

double ForwardConfig::pole_width() const { return gamma_eff > 0.0 ? gamma_eff : 5.0 * omega.step; }

void ForwardConfig::validate() const {
  omega.validate("omega");
  tau.validate("tau");
  omega2.validate("omega2");
  if (!(noise >= 0.0)) throw Error(ErrorKind::configuration, "noise must be >= 0");
  if (!(pole_width() > 0.0)) throw Error(ErrorKind::configuration, "gamma_eff must be positive");
}

cplx MappingTable::conj_at(int l, std::size_t w) const {
  if (l < 0 || l >= conj_coeff.rows() || w >= static_cast<std::size_t>(conj_coeff.cols()))
    throw Error(ErrorKind::consistency, "mapping table has no entry for l=" + std::to_string(l));
  return conj_coeff(l, static_cast<Eigen::Index>(w));
}

MappingTable mapping_coefficients(const MolecularSystem& system, const PulseSpec& pulse2,
                                  const PulseSpec& pulse3, int k, const ForwardConfig& config) {
  config.validate();
  system.level(Manifold::ground, k);
  const double gamma_eff = config.pole_width();
  const auto& q = config.omega2;

  const auto [s_lo, s_hi] = pulse2.support(6.0);
  if (!config.counter_rotating && (s_lo < q.start - 0.5 * q.step || s_hi > q.back() + 0.5 * q.step)) {
    std::ostringstream os;
    os << "omega2 quadrature grid [" << q.start << ", " << q.back()
       << "] does not cover the pulse-2 support [" << s_lo << ", " << s_hi << "]";
    throw Error(ErrorKind::configuration, os.str());
  }

  const auto& a = system.levels(Manifold::a);
  const auto& b = system.levels(Manifold::b);
  const auto& c = system.levels(Manifold::c);
  const double ek = system.energy(Manifold::ground, k);

  // Poles of the pulse-2 integral must be resolved by the quadrature grid.
  for (const auto& la : a) {
    for (const auto& mb : b) {
      const double pole = mb.energy - la.energy;
      const double g = effective_width(mb.width, gamma_eff);
      if (pole > q.start - 3.0 * g && pole < q.back() + 3.0 * g && q.step > 2.0 * g / 8.0) {
        std::ostringstream os;
        os << "omega2 step " << q.step << " leaves fewer than 8 points across the pole at " << pole
           << " (width " << g << ", a level " << la.index << ", b level " << mb.index << ")";
        throw Error(ErrorKind::resolution, os.str());
      }
    }
  }

  auto field = [&](const PulseSpec& p, double w) {
    return config.counter_rotating ? real_field_spectrum(p, w) : spectral_amplitude(p, w);
  };

  std::vector<double> weight(q.count, q.step);
  weight.front() = weight.back() = 0.5 * q.step;
  std::vector<cplx> e2c(q.count);
  for (std::size_t j = 0; j < q.count; ++j) e2c[j] = std::conj(field(pulse2, q[j]));

  const auto nw = config.omega.count;
  MappingTable table{k, config.omega, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(a.size()),
                                                           static_cast<Eigen::Index>(nw))};
  std::vector<cplx> product(q.count);
  std::vector<cplx> inner(b.size());
  for (const auto& la : a) {
    const double w_kl = ek - la.energy;
    // Chain weight for each b level summed over c: D_lm D_mn D_nk / (w + w_nk + i g_n).
    for (std::size_t wi = 0; wi < nw; ++wi) {
      const double w = config.omega[wi];
      bool any = false;
      for (std::size_t j = 0; j < q.count; ++j) {
        product[j] = e2c[j] == cplx{} ? cplx{} : e2c[j] * std::conj(field(pulse3, w_kl - q[j] - w));
        any = any || product[j] != cplx{};
      }
      if (!any) continue;
      for (const auto& mb : b) {
        const double d_lm = system.dipole(Manifold::a, la.index, Manifold::b, mb.index);
        if (d_lm == 0.0) {
          inner[static_cast<std::size_t>(mb.index)] = 0.0;
          continue;
        }
        const double pole = mb.energy - la.energy;
        const double g = effective_width(mb.width, gamma_eff);
        cplx sum = 0.0;
        for (std::size_t j = 0; j < q.count; ++j)
          if (product[j] != cplx{}) sum += weight[j] * product[j] / (pole - q[j] + I * g);
        inner[static_cast<std::size_t>(mb.index)] = sum;
      }
      cplx total = 0.0;
      for (const auto& nc : c) {
        const double d_nk = system.dipole(Manifold::c, nc.index, Manifold::ground, k);
        if (d_nk == 0.0) continue;
        const double g = effective_width(nc.width, gamma_eff);
        const cplx lorentz = 1.0 / (w + (nc.energy - ek) + I * g);
        cplx chain = 0.0;
        for (const auto& mb : b) {
          const double d_lm = system.dipole(Manifold::a, la.index, Manifold::b, mb.index);
          const double d_mn = system.dipole(Manifold::b, mb.index, Manifold::c, nc.index);
          chain += d_lm * d_mn * inner[static_cast<std::size_t>(mb.index)];
        }
        total += d_nk * lorentz * chain;
      }
      table.conj_coeff(la.index, static_cast<Eigen::Index>(wi)) = total;
    }
  }
  if (!table.conj_coeff.allFinite())
    throw Error(ErrorKind::resolution, "mapping coefficients are not finite");
  return table;
}

cplx fw_field_branch(const MolecularSystem& system, const MappingTable& mapping,
                     const BranchState& branch, double tau, std::size_t omega_index) {
  if (mapping.k != branch.k)
    throw Error(ErrorKind::consistency, "mapping table and branch refer to different ground levels");
  const double ek = system.energy(Manifold::ground, branch.k);
  cplx sum = 0.0;
  for (const auto& [l, beta] : branch.coefficients) {
    const double w_kl = ek - system.energy(Manifold::a, l);
    sum += mapping.conj_at(l, omega_index) * std::exp(I * (w_kl * tau)) * std::conj(beta);
  }
  return sum;
}

namespace {

// Field matrix F (omega x tau) = A (omega x terms) * B (terms x tau).
Eigen::MatrixXcd field_matrix(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                              const std::vector<BranchState>& branches,
                              const std::vector<MappingTable>& mappings, const UniformGrid& omega,
                              std::span<const double> taus) {
  if (branches.size() != ensemble.entries().size() || mappings.size() != branches.size())
    throw Error(ErrorKind::consistency, "need one branch and one mapping table per ensemble entry");
  std::vector<std::pair<std::size_t, int>> terms;  // (branch index, l)
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (branches[i].k != ensemble.entries()[i].k || mappings[i].k != branches[i].k)
      throw Error(ErrorKind::consistency, "branch/mapping order does not follow the ensemble");
    if (!(mappings[i].omega == omega))
      throw Error(ErrorKind::consistency, "mapping table omega grid does not match the configuration");
    for (const auto& [l, beta] : branches[i].coefficients) terms.emplace_back(i, l);
  }
  const auto nw = static_cast<Eigen::Index>(omega.count);
  const auto nt = static_cast<Eigen::Index>(taus.size());
  const auto nterm = static_cast<Eigen::Index>(terms.size());
  Eigen::MatrixXcd A(nw, nterm);
  Eigen::MatrixXcd B(nterm, nt);
  for (Eigen::Index t = 0; t < nterm; ++t) {
    const auto [bi, l] = terms[static_cast<std::size_t>(t)];
    const auto& br = branches[bi];
    const double p = ensemble.entries()[bi].population;
    const cplx beta_conj = std::conj(br.coefficients.at(l));
    for (Eigen::Index w = 0; w < nw; ++w)
      A(w, t) = p * mappings[bi].conj_at(l, static_cast<std::size_t>(w)) * beta_conj;
    const double w_kl = system.energy(Manifold::ground, br.k) - system.energy(Manifold::a, l);
    for (Eigen::Index j = 0; j < nt; ++j) B(t, j) = std::exp(I * (w_kl * taus[static_cast<std::size_t>(j)]));
  }
  return A * B;
}

}  // namespace

Eigen::VectorXcd ensemble_field(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                                const std::vector<BranchState>& branches,
                                const std::vector<MappingTable>& mappings, double tau) {
  if (mappings.empty()) throw Error(ErrorKind::consistency, "no mapping tables");
  const double taus[1] = {tau};
  return field_matrix(system, ensemble, branches, mappings, mappings.front().omega, taus).col(0);
}

Spectrogram spectrogram(const MolecularSystem& system, const ThermalEnsemble& ensemble,
                        const std::vector<BranchState>& branches,
                        const std::vector<MappingTable>& mappings, const ForwardConfig& config) {
  config.validate();
  const auto taus = config.tau.values();
  const Eigen::MatrixXcd f = field_matrix(system, ensemble, branches, mappings, config.omega, taus);
  Spectrogram s{config.omega, config.tau, Eigen::MatrixXd(f.rows(), f.cols()), config.seed,
                config.noise, ensemble.temperature()};
  for (Eigen::Index w = 0; w < f.rows(); ++w) {
    const double om = config.omega[static_cast<std::size_t>(w)];
    const double w4 = om * om * om * om;
    for (Eigen::Index j = 0; j < f.cols(); ++j) s.values(w, j) = w4 * std::norm(f(w, j));
  }
  if (config.noise > 0.0) {
    const double sigma = config.noise * s.values.maxCoeff();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Eigen::Index w = 0; w < s.values.rows(); ++w)
      for (Eigen::Index j = 0; j < s.values.cols(); ++j) s.values(w, j) += sigma * gauss(rng);
  }
  return s;
}

}  // namespace fwm
