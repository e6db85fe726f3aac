#include "fwm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm {

namespace {
constexpr cplx I{0.0, 1.0};
}

std::string to_string(const Contributor& c) {
  std::ostringstream os;
  os << "(k=" << c.k << ",k'=" << c.kp << ",l=" << c.l << ",l'=" << c.lp << ")";
  return os.str();
}

double beat_frequency(const MolecularSystem& system, const Contributor& c) {
  return transition_frequency(system, Manifold::a, c.l, Manifold::a, c.lp) -
         transition_frequency(system, Manifold::ground, c.k, Manifold::ground, c.kp);
}

std::vector<BeatLine> enumerate_beat_frequencies(const MolecularSystem& system,
                                                 std::span<const int> ks,
                                                 const std::map<int, std::vector<int>>& populated,
                                                 double delta, bool include_dc) {
  if (!(delta > 0.0)) throw Error(ErrorKind::validation, "line clustering width must be positive");
  std::vector<std::pair<double, Contributor>> pos;  // Omega > delta/2
  std::vector<Contributor> dc;
  auto levels_of = [&](int k) -> const std::vector<int>& {
    auto it = populated.find(k);
    if (it == populated.end())
      throw Error(ErrorKind::lookup, "no populated level set for ground level " + std::to_string(k));
    return it->second;
  };
  for (int k : ks)
    for (int kp : ks)
      for (int l : levels_of(k))
        for (int lp : levels_of(kp)) {
          const Contributor c{k, kp, l, lp};
          const double w = beat_frequency(system, c);
          if (std::abs(w) <= 0.5 * delta)
            dc.push_back(c);
          else if (w > 0.0)
            pos.emplace_back(w, c);
        }
  std::sort(pos.begin(), pos.end());
  std::sort(dc.begin(), dc.end());

  std::vector<BeatLine> positive;
  for (std::size_t i = 0; i < pos.size();) {
    std::size_t j = i;
    while (j + 1 < pos.size() && pos[j + 1].first - pos[i].first <= delta) ++j;
    BeatLine line{0.5 * (pos[i].first + pos[j].first), {}};
    for (std::size_t q = i; q <= j; ++q) line.contributors.push_back(pos[q].second);
    std::sort(line.contributors.begin(), line.contributors.end());
    positive.push_back(std::move(line));
    i = j + 1;
  }

  std::vector<BeatLine> out;
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    BeatLine neg{-it->omega, {}};
    for (const auto& c : it->contributors) neg.contributors.push_back(c.conjugate());
    std::sort(neg.contributors.begin(), neg.contributors.end());
    out.push_back(std::move(neg));
  }
  if (include_dc) out.push_back({0.0, dc});
  for (auto& line : positive) out.push_back(std::move(line));
  return out;
}

long BeatFit::line_index(double beat, double tol) const {
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (std::abs(lines[i].omega - beat) <= tol) return static_cast<long>(i);
  return -1;
}

double BeatFit::amplitude_sigma(std::size_t w) const {
  return residual_rms(static_cast<Eigen::Index>(w)) / std::sqrt(static_cast<double>(tau_count));
}

BeatFit extract_amplitudes(const Spectrogram& spectrogram, const std::vector<BeatLine>& lines) {
  const auto& tau = spectrogram.tau;
  const auto nt = static_cast<Eigen::Index>(tau.count);
  const auto nw = static_cast<Eigen::Index>(spectrogram.omega.count);
  if (spectrogram.values.rows() != nw || spectrogram.values.cols() != nt)
    throw Error(ErrorKind::consistency, "spectrogram matrix does not match its grids");

  // Nonnegative frequencies define the real parameters; negative lines mirror them.
  std::vector<double> freqs;
  bool has_dc = false;
  for (const auto& l : lines) {
    if (l.omega == 0.0) has_dc = true;
    if (l.omega > 0.0) freqs.push_back(l.omega);
  }
  if (!has_dc) throw Error(ErrorKind::consistency, "beat line list must contain the zero-frequency line");
  std::sort(freqs.begin(), freqs.end());
  for (const auto& l : lines) {
    if (l.omega >= 0.0) continue;
    const bool mirrored = std::any_of(freqs.begin(), freqs.end(),
                                      [&](double f) { return std::abs(f + l.omega) <= 1e-12 * f; });
    if (!mirrored) throw Error(ErrorKind::consistency, "beat line list is not closed under negation");
  }
  for (double f : freqs) {
    const bool mirrored = std::any_of(lines.begin(), lines.end(),
                                      [&](const BeatLine& l) { return std::abs(f + l.omega) <= 1e-12 * f; });
    if (!mirrored) throw Error(ErrorKind::consistency, "beat line list is not closed under negation");
  }

  std::vector<double> all = freqs;
  all.insert(all.begin(), 0.0);
  const double span = tau.back() - tau.start;
  for (std::size_t i = 1; i < all.size(); ++i) {
    const double sep = all[i] - all[i - 1];
    if (span < 20.0 / sep) {
      std::ostringstream os;
      os << "tau window " << span << " cannot resolve beat lines " << all[i - 1] << " and " << all[i]
         << " (needs >= " << 20.0 / sep << ")";
      throw Error(ErrorKind::ill_conditioned, os.str());
    }
  }

  const auto np = static_cast<Eigen::Index>(1 + 2 * freqs.size());
  Eigen::MatrixXd X(nt, np);
  for (Eigen::Index j = 0; j < nt; ++j) {
    const double t = tau[static_cast<std::size_t>(j)];
    X(j, 0) = 1.0;
    for (std::size_t p = 0; p < freqs.size(); ++p) {
      X(j, static_cast<Eigen::Index>(1 + 2 * p)) = 2.0 * std::cos(freqs[p] * t);
      X(j, static_cast<Eigen::Index>(2 + 2 * p)) = -2.0 * std::sin(freqs[p] * t);
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(sv.size() - 1);
  if (!(cond <= 1e8)) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t at = 1;
    for (std::size_t i = 1; i < all.size(); ++i)
      if (all[i] - all[i - 1] < best) best = all[i] - all[i - 1], at = i;
    std::ostringstream os;
    os << "beat design matrix condition number " << cond << " exceeds 1e8; closest lines "
       << all[at - 1] << " and " << all[at];
    throw Error(ErrorKind::ill_conditioned, os.str());
  }

  Eigen::MatrixXd Y(nt, nw);
  for (Eigen::Index w = 0; w < nw; ++w) {
    const double om = spectrogram.omega[static_cast<std::size_t>(w)];
    if (om == 0.0) throw Error(ErrorKind::validation, "omega grid contains 0; cannot divide by w^4");
    Y.col(w) = spectrogram.values.row(w).transpose() / (om * om * om * om);
  }
  const Eigen::MatrixXd P = svd.solve(Y);
  const Eigen::MatrixXd R = X * P - Y;

  BeatFit fit;
  fit.lines = lines;
  fit.omega = spectrogram.omega;
  fit.tau_count = tau.count;
  fit.condition = cond;
  fit.noisy = spectrogram.noise > 0.0;
  fit.residual_rms.resize(nw);
  const double dof = std::max<double>(1.0, static_cast<double>(nt - np));
  for (Eigen::Index w = 0; w < nw; ++w) fit.residual_rms(w) = std::sqrt(R.col(w).squaredNorm() / dof);

  fit.amplitude.resize(static_cast<Eigen::Index>(lines.size()), nw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const double f = lines[i].omega;
    Eigen::Index p = -1;
    if (f != 0.0) {
      const double af = std::abs(f);
      for (std::size_t q = 0; q < freqs.size(); ++q)
        if (std::abs(freqs[q] - af) <= 1e-12 * af) p = static_cast<Eigen::Index>(q);
    }
    for (Eigen::Index w = 0; w < nw; ++w) {
      cplx c = f == 0.0 ? cplx(P(0, w), 0.0) : cplx(P(1 + 2 * p, w), P(2 + 2 * p, w));
      if (f < 0.0) c = std::conj(c);
      fit.amplitude(static_cast<Eigen::Index>(i), w) = c;
    }
  }
  return fit;
}

cplx windowed_dft(const Spectrogram& spectrogram, std::size_t omega_index, double beat) {
  const auto& tau = spectrogram.tau;
  const double om = spectrogram.omega[omega_index];
  const double w4 = om * om * om * om;
  const std::size_t n = tau.count;
  cplx sum = 0.0;
  double wsum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double win = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                            static_cast<double>(n - 1));
    sum += win * spectrogram.values(static_cast<Eigen::Index>(omega_index), static_cast<Eigen::Index>(j)) /
           w4 * std::exp(-I * (beat * tau[j]));
    wsum += win;
  }
  return sum / wsum;
}

std::vector<std::size_t> find_isolating_omega(const BeatFit& fit, int k, std::span<const int> ks,
                                              const IsolationOptions& options) {
  // own: every term is a k'=k term and one belongs to k; pure: every term belongs to k;
  // cross: a term pairs k with another branch; foreign: no term involves k.
  enum Kind { own = 1, pure = 2, cross = 4, foreign = 8 };
  auto in_set = [&](int x) { return std::find(ks.begin(), ks.end(), x) != ks.end(); };
  std::vector<int> kind(fit.lines.size(), 0);
  bool has_pure = false, has_other = false;
  for (std::size_t i = 0; i < fit.lines.size(); ++i) {
    const auto& cs = fit.lines[i].contributors;
    if (fit.lines[i].is_dc() || cs.empty()) continue;
    const bool all_own = std::all_of(cs.begin(), cs.end(), [](auto& c) { return c.own() && c.l != c.lp; });
    const bool all_k = std::all_of(cs.begin(), cs.end(), [&](auto& c) { return c.k == k && c.kp == k; });
    const bool any_k = std::any_of(cs.begin(), cs.end(), [&](auto& c) { return c.k == k || c.kp == k; });
    const bool any_cross = std::any_of(cs.begin(), cs.end(), [&](auto& c) {
      return (c.k == k && c.kp != k && in_set(c.kp)) || (c.kp == k && c.k != k && in_set(c.k));
    });
    if (all_own && any_k) kind[i] |= own;
    if (all_own && all_k) kind[i] |= pure, has_pure = true;
    if (any_cross) kind[i] |= cross;
    if (!any_k) kind[i] |= foreign;
    for (const auto& c : cs)
      if (c.k != k || c.kp != k) has_other = true;
  }
  // Without lines of its own, branch k cannot be told apart from a branch that shares its lines.
  if (!has_pure && has_other) return {};
  const int evidence = has_pure ? pure : own;

  double global = 0.0;
  for (std::size_t i = 0; i < fit.lines.size(); ++i)
    if (kind[i] & own) global = std::max(global, fit.amplitude.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());

  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < fit.omega.count; ++w) {
    double own_max = 0.0, seen = 0.0, other = 0.0;
    for (std::size_t i = 0; i < fit.lines.size(); ++i) {
      const double a = std::abs(fit.amplitude(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)));
      if (kind[i] & own) own_max = std::max(own_max, a);
      if (kind[i] & evidence) seen = std::max(seen, a);
      if (kind[i] & (cross | foreign)) other = std::max(other, a);
    }
    double floor = options.eps_use * global;
    double threshold = options.eps_iso * own_max;
    if (fit.noisy) {
      const double sigma = options.noise_factor * fit.amplitude_sigma(w);
      floor = std::max(floor, sigma);
      threshold = std::max(threshold, sigma);
    }
    if (seen > floor && seen > 0.0 && other <= threshold) out.push_back(w);
  }
  return out;
}

const ProductEntry* ProductTable::find(std::size_t omega_index, const Contributor& c) const {
  for (const auto& e : entries)
    if (e.omega_index == omega_index && !e.degenerate && e.index == c) return &e;
  return nullptr;
}

double ProductTable::max_magnitude() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, std::abs(e.value));
  return m;
}

ProductTable collect_products(const BeatFit& fit, const ThermalEnsemble& ensemble,
                              std::span<const std::size_t> omega_indices,
                              const std::function<bool(const Contributor&)>& active,
                              double eps_use) {
  double peak = 0.0;
  for (std::size_t i = 0; i < fit.lines.size(); ++i)
    if (!fit.lines[i].is_dc())
      peak = std::max(peak, fit.amplitude.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());

  ProductTable table;
  for (std::size_t w : omega_indices) {
    if (w >= fit.omega.count) throw Error(ErrorKind::lookup, "omega index out of range");
    for (std::size_t i = 0; i < fit.lines.size(); ++i) {
      const auto& line = fit.lines[i];
      if (line.is_dc()) continue;
      std::vector<Contributor> act;
      for (const auto& c : line.contributors)
        if (active(c)) act.push_back(c);
      if (act.empty()) continue;
      const cplx raw = fit.amplitude(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w));
      if (std::abs(raw) < eps_use * peak || raw == cplx{}) {
        std::ostringstream os;
        os << "omega[" << w << "] Omega=" << line.omega << " " << to_string(act.front()) << " |c|="
           << std::abs(raw) << " below threshold";
        table.discarded.push_back(os.str());
        continue;
      }
      ProductEntry e;
      e.omega_index = w;
      e.omega = fit.omega[w];
      e.beat = line.omega;
      e.index = act.front();
      e.condition = fit.condition;
      if (act.size() > 1) {
        // A degenerate sum only shares populations when all terms have the same (k, k').
        const bool same_pair = std::all_of(act.begin(), act.end(), [&](auto& c) {
          return c.k == act.front().k && c.kp == act.front().kp;
        });
        if (!same_pair) {
          table.discarded.push_back("omega[" + std::to_string(w) + "] line " + std::to_string(line.omega) +
                                    " mixes branch pairs");
          continue;
        }
        e.degenerate = true;
        e.degenerate_with = act;
      }
      const double pp = ensemble.population(e.index.k) * ensemble.population(e.index.kp);
      if (!(pp > 0.0)) throw Error(ErrorKind::consistency, "product refers to a level outside the ensemble");
      e.value = raw / pp;
      table.entries.push_back(std::move(e));
    }
  }
  return table;
}

void drop_insignificant(ProductTable& table, const BeatFit& fit, const ThermalEnsemble& ensemble,
                        double factor) {
  if (!fit.noisy) return;
  std::erase_if(table.entries, [&](const ProductEntry& e) {
    const double pp = ensemble.population(e.index.k) * ensemble.population(e.index.kp);
    return std::abs(e.value) * pp < factor * fit.amplitude_sigma(e.omega_index);
  });
}

}  // namespace fwm
