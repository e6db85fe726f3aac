#include "fwm/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm {

namespace {

constexpr cplx I{0.0, 1.0};

cplx phase_factor(const std::vector<double>& phase, double x) {
  if (phase.empty()) return 1.0;
  double phi = 0.0;
  for (std::size_t j = phase.size(); j-- > 0;) phi = phi * x + phase[j];
  return std::exp(I * phi);
}

double flattop_envelope(double lo, double hi, double edge, double omega) {
  if (omega >= lo && omega <= hi) return 1.0;
  if (edge <= 0.0) return 0.0;
  const double d = omega < lo ? lo - omega : omega - hi;
  if (d >= edge) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * d / edge);
  return c * c;
}

}  // namespace

PulseSpec PulseSpec::gaussian(cplx amplitude, double center, double sigma,
                              std::vector<double> phase) {
  PulseSpec p;
  p.kind = PulseKind::gaussian;
  p.amplitude = amplitude;
  p.center = center;
  p.sigma = sigma;
  p.phase = std::move(phase);
  p.validate();
  return p;
}

PulseSpec PulseSpec::flattop(cplx amplitude, double lo, double hi, double edge,
                             std::vector<double> phase) {
  PulseSpec p;
  p.kind = PulseKind::flattop;
  p.amplitude = amplitude;
  p.band_lo = lo;
  p.band_hi = hi;
  p.center = 0.5 * (lo + hi);
  p.edge = edge;
  p.phase = std::move(phase);
  p.validate();
  return p;
}

PulseSpec PulseSpec::tabulated(std::vector<double> omega, std::vector<cplx> value) {
  PulseSpec p;
  p.kind = PulseKind::tabulated;
  p.table_omega = std::move(omega);
  p.table_value = std::move(value);
  p.validate();
  return p;
}

void PulseSpec::validate() const {
  if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
    throw Error(ErrorKind::validation, "pulse amplitude is not finite");
  for (double c : phase)
    if (!std::isfinite(c)) throw Error(ErrorKind::validation, "spectral phase coefficient is not finite");
  switch (kind) {
    case PulseKind::gaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::validation, "gaussian pulse width must be positive");
      if (!std::isfinite(center)) throw Error(ErrorKind::validation, "gaussian center is not finite");
      break;
    case PulseKind::flattop:
      if (!(band_lo < band_hi))
        throw Error(ErrorKind::validation, "flat-top band requires lo < hi");
      if (!(edge >= 0.0)) throw Error(ErrorKind::validation, "flat-top edge width must be >= 0");
      break;
    case PulseKind::tabulated:
      if (table_omega.size() < 2 || table_omega.size() != table_value.size())
        throw Error(ErrorKind::validation, "tabulated pulse needs >= 2 matching (omega, value) rows");
      for (std::size_t i = 1; i < table_omega.size(); ++i)
        if (!(table_omega[i] > table_omega[i - 1]))
          throw Error(ErrorKind::validation, "tabulated pulse grid must be strictly increasing");
      break;
  }
}

double PulseSpec::reference_frequency() const {
  switch (kind) {
    case PulseKind::gaussian: return center;
    case PulseKind::flattop: return 0.5 * (band_lo + band_hi);
    case PulseKind::tabulated: return 0.5 * (table_omega.front() + table_omega.back());
  }
  return 0.0;
}

std::pair<double, double> PulseSpec::support(double gaussian_cut) const {
  switch (kind) {
    case PulseKind::gaussian: return {center - gaussian_cut * sigma, center + gaussian_cut * sigma};
    case PulseKind::flattop: return {band_lo - edge, band_hi + edge};
    case PulseKind::tabulated: return {table_omega.front(), table_omega.back()};
  }
  return {0.0, 0.0};
}

cplx spectral_amplitude(const PulseSpec& pulse, double omega) {
  switch (pulse.kind) {
    case PulseKind::gaussian: {
      const double x = omega - pulse.center;
      return pulse.amplitude * std::exp(-x * x / (2.0 * pulse.sigma * pulse.sigma)) *
             phase_factor(pulse.phase, x);
    }
    case PulseKind::flattop: {
      const double env = flattop_envelope(pulse.band_lo, pulse.band_hi, pulse.edge, omega);
      if (env == 0.0) return 0.0;
      return pulse.amplitude * env * phase_factor(pulse.phase, omega - pulse.reference_frequency());
    }
    case PulseKind::tabulated: {
      const auto& w = pulse.table_omega;
      if (omega < w.front() || omega > w.back()) return 0.0;
      auto it = std::upper_bound(w.begin(), w.end(), omega);
      if (it == w.end()) return pulse.table_value.back();
      const std::size_t hi = static_cast<std::size_t>(it - w.begin());
      const std::size_t lo = hi - 1;
      const double f = (omega - w[lo]) / (w[hi] - w[lo]);
      return pulse.table_value[lo] * (1.0 - f) + pulse.table_value[hi] * f;
    }
  }
  return 0.0;
}

cplx real_field_spectrum(const PulseSpec& pulse, double omega) {
  return spectral_amplitude(pulse, omega) + std::conj(spectral_amplitude(pulse, -omega));
}

cplx time_domain_field(const PulseSpec& pulse, double t, const std::optional<TimeQuadrature>& grid) {
  if (pulse.kind == PulseKind::gaussian && pulse.phase.size() <= 2) {
    const double phi0 = pulse.phase.empty() ? 0.0 : pulse.phase[0];
    const double arrival = pulse.phase.size() > 1 ? pulse.phase[1] : 0.0;
    const double s = pulse.sigma;
    const double dt = t - arrival;
    return pulse.amplitude * std::exp(I * phi0) * s * std::sqrt(2.0 * std::numbers::pi) *
           std::exp(-0.5 * s * s * dt * dt) * std::exp(-I * pulse.center * t);
  }
  if (!grid || grid->points < 2 || !(grid->omega_hi > grid->omega_lo))
    throw Error(ErrorKind::configuration,
                "time-domain field of a " + to_string(pulse.kind) +
                    " pulse needs a frequency quadrature grid");
  const double h = (grid->omega_hi - grid->omega_lo) / static_cast<double>(grid->points - 1);
  cplx sum = 0.0;
  for (std::size_t j = 0; j < grid->points; ++j) {
    const double w = grid->omega_lo + h * static_cast<double>(j);
    const double weight = (j == 0 || j + 1 == grid->points) ? 0.5 : 1.0;
    sum += weight * spectral_amplitude(pulse, w) * std::exp(-I * w * t);
  }
  return sum * h;
}

PulseSpec load_tabulated_pulse(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open tabulated pulse file " + path.string());
  std::vector<double> w;
  std::vector<cplx> v;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double omega, re, im = 0.0;
    if (!(ss >> omega)) continue;
    if (!(ss >> re)) throw Error(ErrorKind::io, "malformed row in " + path.string());
    ss >> im;
    w.push_back(omega);
    v.emplace_back(re, im);
  }
  return PulseSpec::tabulated(std::move(w), std::move(v));
}

std::string to_string(PulseKind kind) {
  switch (kind) {
    case PulseKind::gaussian: return "gaussian";
    case PulseKind::flattop: return "flattop";
    case PulseKind::tabulated: return "tabulated";
  }
  return "unknown";
}

PulseKind pulse_kind_from_string(const std::string& name) {
  if (name == "gaussian") return PulseKind::gaussian;
  if (name == "flattop") return PulseKind::flattop;
  if (name == "tabulated") return PulseKind::tabulated;
  throw Error(ErrorKind::configuration, "unknown pulse kind '" + name + "'");
}

}  // namespace fwm
