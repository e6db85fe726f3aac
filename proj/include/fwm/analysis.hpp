#pragma once

#include <Eigen/Dense>
#include <compare>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fwm/forward.hpp"
#include "fwm/model.hpp"

namespace fwm {

/// Index tuple of one term p_k p_k' kC_l kβ_l (k'C_l' k'β_l')^* of the signal.
struct Contributor {
  int k = 0;
  int kp = 0;
  int l = 0;
  int lp = 0;

  auto operator<=>(const Contributor&) const = default;
  Contributor conjugate() const { return {kp, k, lp, l}; }
  bool own() const { return k == kp; }
};

std::string to_string(const Contributor& c);

/// Omega = w_ll'^{aa} - w_kk'^{00}.
double beat_frequency(const MolecularSystem& system, const Contributor& c);

struct BeatLine {
  double omega = 0.0;
  std::vector<Contributor> contributors;

  bool is_dc() const { return omega == 0.0; }
};

/// Every beat line of the populated sets, clustered within `delta`. The list
/// is sorted by frequency, closed under negation and, with include_dc, holds
/// one zero-frequency line carrying the l = l', k = k' terms.
std::vector<BeatLine> enumerate_beat_frequencies(const MolecularSystem& system,
                                                 std::span<const int> ks,
                                                 const std::map<int, std::vector<int>>& populated,
                                                 double delta, bool include_dc = true);

/// Least-squares amplitudes of S/w^4 at known beat frequencies, per omega.
struct BeatFit {
  std::vector<BeatLine> lines;
  UniformGrid omega;
  std::size_t tau_count = 0;
  Eigen::MatrixXcd amplitude;   // lines x omega
  Eigen::VectorXd residual_rms; // per omega, in units of S/w^4
  double condition = 1.0;
  bool noisy = false;

  long line_index(double beat, double tol = 1e-12) const;
  /// Approximate standard deviation of a fitted amplitude at omega index w.
  double amplitude_sigma(std::size_t w) const;
};

BeatFit extract_amplitudes(const Spectrogram& spectrogram, const std::vector<BeatLine>& lines);

/// Hann-windowed discrete Fourier transform over tau (diagnostic).
cplx windowed_dft(const Spectrogram& spectrogram, std::size_t omega_index, double beat);

struct IsolationOptions {
  double eps_iso = 1e-3;
  double eps_use = 1e-6;
  double noise_factor = 10.0;
};

/// Omega indices where only branch k contributes: lines that belong to k
/// alone are above the floor while cross lines and lines of other branches
/// are below eps_iso x the own-line maximum. A branch with no line of its own
/// is never isolated when other branches are present. An empty result means
/// case I is unavailable for k.
std::vector<std::size_t> find_isolating_omega(const BeatFit& fit, int k, std::span<const int> ks,
                                              const IsolationOptions& options = {});

struct ProductEntry {
  std::size_t omega_index = 0;
  double omega = 0.0;
  double beat = 0.0;
  Contributor index;
  cplx value;
  double condition = 1.0;
  bool degenerate = false;
  std::vector<Contributor> degenerate_with;  // all contributors of a degenerate sum
  bool quotient_derived = false;
};

/// Extracted beat amplitudes with populations divided out:
/// value = kC_l kβ_l (k'C_l' k'β_l')^* (or a sum of such terms when degenerate).
struct ProductTable {
  std::vector<ProductEntry> entries;
  std::vector<std::string> discarded;

  const ProductEntry* find(std::size_t omega_index, const Contributor& c) const;
  double max_magnitude() const;
};

/// Collects, at the given omega indices, every non-DC line with at least one
/// contributor accepted by `active`. Lines with several active contributors
/// become degenerate entries. Entries below eps_use x max|c| are discarded.
ProductTable collect_products(const BeatFit& fit, const ThermalEnsemble& ensemble,
                              std::span<const std::size_t> omega_indices,
                              const std::function<bool(const Contributor&)>& active,
                              double eps_use);

/// With noise, removes entries whose raw amplitude lies within `factor`
/// standard errors of zero. Noiseless fits are left untouched.
void drop_insignificant(ProductTable& table, const BeatFit& fit, const ThermalEnsemble& ensemble,
                        double factor);

}  // namespace fwm
