#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fwm {

using cplx = std::complex<double>;

enum class PulseKind { gaussian, flattop, tabulated };

/// Complex spectral amplitude of a laser pulse, with the time-domain field
/// E(t) = \int d\omega  A(\omega) exp(-i \omega t).
///
/// Gaussian and flat-top spectra may carry a polynomial spectral phase
/// phi(x) = sum_j phase[j] x^j evaluated at x = omega - center. A linear
/// coefficient is an arrival time.
struct PulseSpec {
  PulseKind kind = PulseKind::gaussian;
  cplx amplitude{1.0, 0.0};
  double center = 0.0;  // gaussian center; flat-top uses the band midpoint
  double sigma = 1.0;   // gaussian spectral width
  double band_lo = 0.0;
  double band_hi = 0.0;
  double edge = 0.0;  // raised-cosine ramp width outside the flat-top band
  std::vector<double> phase;
  std::vector<double> table_omega;
  std::vector<cplx> table_value;
  bool perturbative = true;

  static PulseSpec gaussian(cplx amplitude, double center, double sigma,
                            std::vector<double> phase = {});
  static PulseSpec flattop(cplx amplitude, double lo, double hi, double edge = 0.0,
                           std::vector<double> phase = {});
  static PulseSpec tabulated(std::vector<double> omega, std::vector<cplx> value);

  /// Throws Error(validation) when an invariant is broken.
  void validate() const;

  double reference_frequency() const;
  /// Frequency interval outside which the amplitude is zero (or negligible
  /// for gaussians, cut at `gaussian_cut` widths).
  std::pair<double, double> support(double gaussian_cut = 8.0) const;
};

cplx spectral_amplitude(const PulseSpec& pulse, double omega);

/// Spectrum of the physical real field 2 Re E(t): A(w) + conj(A(-w)).
cplx real_field_spectrum(const PulseSpec& pulse, double omega);

struct TimeQuadrature {
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  std::size_t points = 0;
};

/// Closed form for gaussians with at most linear spectral phase; trapezoid
/// quadrature over `grid` otherwise.
cplx time_domain_field(const PulseSpec& pulse, double t,
                       const std::optional<TimeQuadrature>& grid = std::nullopt);

/// Two- or three-column delimited text: omega, Re, Im. '#' starts a comment.
PulseSpec load_tabulated_pulse(const std::filesystem::path& path);

std::string to_string(PulseKind kind);
PulseKind pulse_kind_from_string(const std::string& name);

}  // namespace fwm
