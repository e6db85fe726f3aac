#include "fwm/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "fwm/error.hpp"

namespace fwm {

namespace {

std::optional<cplx> lookup(const ProductTable& table, std::size_t w, const Contributor& c) {
  if (const auto* e = table.find(w, c)) return e->value;
  if (const auto* e = table.find(w, c.conjugate())) return std::conj(e->value);
  return std::nullopt;
}

}  // namespace

std::vector<ProductEntry> resolve_degeneracy(const ProductTable& table, const ProductEntry& degenerate,
                                             double eps_use) {
  if (!degenerate.degenerate) return {degenerate};
  const std::size_t w = degenerate.omega_index;
  const int k = degenerate.index.k, kp = degenerate.index.kp;
  const double floor = eps_use * table.max_magnitude();

  std::set<int> levels;
  for (const auto& e : table.entries) {
    if (e.omega_index != w || e.degenerate) continue;
    levels.insert(e.index.l);
    levels.insert(e.index.lp);
  }

  std::vector<Contributor> remaining = degenerate.degenerate_with;
  cplx rest = degenerate.value;
  std::vector<ProductEntry> out;
  auto emit = [&](const Contributor& c, cplx v) {
    ProductEntry e = degenerate;
    e.index = c;
    e.value = v;
    e.degenerate = false;
    e.degenerate_with.clear();
    e.quotient_derived = true;
    out.push_back(e);
  };

  while (remaining.size() > 1) {
    bool progressed = false;
    for (auto it = remaining.begin(); it != remaining.end() && !progressed; ++it) {
      const int l1 = it->l, l1p = it->lp;
      for (int l3 : levels) {
        for (int l3p : levels) {
          if (k == kp && l3p == l3) continue;
          const auto a = lookup(table, w, {k, kp, l1, l3});
          const auto b = lookup(table, w, {k, kp, l3p, l1p});
          const auto d = lookup(table, w, {k, kp, l3p, l3});
          if (!a || !b || !d || std::abs(*d) < floor || *d == cplx{}) continue;
          const cplx v = *a * *b / *d;
          emit(*it, v);
          rest -= v;
          remaining.erase(it);
          progressed = true;
          break;
        }
        if (progressed) break;
      }
    }
    if (!progressed) {
      std::ostringstream os;
      os << "degenerate line at Omega=" << degenerate.beat << " omega[" << w << "] with";
      for (const auto& c : remaining) os << ' ' << to_string(c);
      os << " has no usable intermediate products";
      throw Error(ErrorKind::unavailable, os.str());
    }
  }
  emit(remaining.front(), rest);
  return out;
}

ProductTable resolve_degeneracies(const ProductTable& table, double eps_use) {
  ProductTable out;
  out.discarded = table.discarded;
  for (const auto& e : table.entries)
    if (!e.degenerate) out.entries.push_back(e);
  for (const auto& e : table.entries) {
    if (!e.degenerate) continue;
    try {
      for (auto& r : resolve_degeneracy(table, e, eps_use)) {
        if (out.find(r.omega_index, r.index) == nullptr) out.entries.push_back(std::move(r));
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::unavailable) throw;
      out.discarded.push_back(err.what());
    }
  }
  return out;
}

void ProductGraph::add(int from, int to, cplx value, double weight, std::string provenance) {
  for (int n : {from, to})
    if (std::find(nodes.begin(), nodes.end(), n) == nodes.end()) nodes.push_back(n);
  std::sort(nodes.begin(), nodes.end());
  edges.push_back({from, to, value, weight, std::move(provenance)});
}

GraphSolution solve_product_graph(const ProductGraph& graph) {
  GraphSolution sol;
  if (graph.nodes.empty() || graph.edges.empty())
    throw Error(ErrorKind::unavailable, "product graph has no edges");
  for (const auto& e : graph.edges)
    if (!(std::abs(e.value) > 0.0) || !std::isfinite(std::abs(e.value)))
      throw Error(ErrorKind::validation, "product graph edge values must be finite and nonzero");

  std::vector<int> nodes = graph.nodes;
  std::sort(nodes.begin(), nodes.end());
  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) pos[nodes[i]] = i;
  const std::size_t n = nodes.size();

  // Breadth-first spanning tree from the lowest node; neighbours in ascending order.
  std::vector<std::vector<std::size_t>> adj(n);  // edge indices
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    adj[pos[graph.edges[i].from]].push_back(i);
    if (graph.edges[i].to != graph.edges[i].from) adj[pos[graph.edges[i].to]].push_back(i);
  }
  std::vector<cplx> phase(n, 0.0);
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{0};
  seen[0] = true;
  phase[0] = 1.0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    sol.order.push_back(nodes[u]);
    std::vector<std::pair<int, std::size_t>> next;  // (neighbour node, edge)
    for (std::size_t ei : adj[u]) {
      const auto& e = graph.edges[ei];
      const int other = nodes[u] == e.from ? e.to : e.from;
      next.emplace_back(other, ei);
    }
    std::sort(next.begin(), next.end(), [&](auto& x, auto& y) {
      if (x.first != y.first) return x.first < y.first;
      return graph.edges[x.second].weight > graph.edges[y.second].weight;
    });
    for (const auto& [other, ei] : next) {
      const std::size_t v = pos[other];
      if (seen[v]) continue;
      const auto& e = graph.edges[ei];
      const cplx unit = e.value / std::abs(e.value);
      // value = g_from g_to^*  =>  phase_to = phase_from * conj(unit)
      phase[v] = nodes[u] == e.from ? phase[u] * std::conj(unit) : phase[u] * unit;
      seen[v] = true;
      queue.push_back(v);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) sol.unreachable.push_back(nodes[i]);

  std::vector<std::size_t> comp;  // indices into nodes reached
  for (std::size_t i = 0; i < n; ++i)
    if (seen[i]) comp.push_back(i);
  std::map<std::size_t, Eigen::Index> col;
  for (std::size_t i = 0; i < comp.size(); ++i) col[comp[i]] = static_cast<Eigen::Index>(i);
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < graph.edges.size(); ++i)
    if (seen[pos[graph.edges[i].from]] && seen[pos[graph.edges[i].to]]) used.push_back(i);

  // Phase refinement over all cycles (weighted synchronization sweeps).
  if (used.size() + 1 > comp.size()) {
    for (int sweep = 0; sweep < 50; ++sweep) {
      for (std::size_t i : comp) {
        if (i == comp.front()) continue;
        cplx s = 0.0;
        for (std::size_t ei : adj[i]) {
          const auto& e = graph.edges[ei];
          if (e.from == e.to) continue;
          const cplx unit = e.value / std::abs(e.value);
          if (nodes[i] == e.to) s += e.weight * phase[pos[e.from]] * std::conj(unit);
          else s += e.weight * phase[pos[e.to]] * unit;
        }
        if (std::abs(s) > 0.0) phase[i] = s / std::abs(s);
      }
    }
  }

  // Log magnitudes: a_from + a_to = log|value|, min-norm weighted least squares.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(used.size()),
                                            static_cast<Eigen::Index>(comp.size()));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(used.size()));
  for (std::size_t r = 0; r < used.size(); ++r) {
    const auto& e = graph.edges[used[r]];
    const double sw = std::sqrt(e.weight);
    const auto ri = static_cast<Eigen::Index>(r);
    A(ri, col[pos[e.from]]) += sw;
    A(ri, col[pos[e.to]]) += sw;
    rhs(ri) = sw * std::log(std::abs(e.value));
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-10);
  const Eigen::VectorXd logmag = cod.solve(rhs);
  sol.parity_ambiguous = cod.rank() < static_cast<Eigen::Index>(comp.size());

  std::map<int, cplx> g;
  for (std::size_t i : comp) g[nodes[i]] = std::exp(logmag(col[i])) * phase[i];
  for (std::size_t ei : used) {
    const auto& e = graph.edges[ei];
    const cplx model = g[e.from] * std::conj(g[e.to]);
    sol.closure_residual = std::max(sol.closure_residual, std::abs(model - e.value) / std::abs(e.value));
  }
  BranchState tmp{0, g};
  sol.coefficients = gauge_fixed(tmp).coefficients;
  return sol;
}

const BranchReport* ReconstructionReport::branch(int k) const {
  for (const auto& b : branches)
    if (b.k == k) return &b;
  return nullptr;
}

namespace {

double ratio_weight(cplx measured, double m_max, cplx cal, double c_max) {
  const double m = std::abs(measured) / m_max, c = std::abs(cal) / c_max;
  return 1.0 / (1.0 / (m * m) + 1.0 / (c * c));
}

BranchReport solve_own_products(const ProductTable& measured, const LinkedCalibration& calibration,
                                int k, std::span<const std::size_t> omega_indices,
                                std::span<const int> populated, double eps_use, const char* method) {
  const std::set<std::size_t> allowed(omega_indices.begin(), omega_indices.end());
  const double m_max = measured.max_magnitude();
  const double c_max = calibration.products.max_magnitude();
  ProductGraph graph;
  std::set<std::size_t> omegas;
  std::set<std::pair<int, int>> missing;
  std::set<int> measured_levels;
  for (const auto& e : measured.entries) {
    if (e.degenerate || e.index.k != k || e.index.kp != k || e.index.l == e.index.lp) continue;
    if (!allowed.count(e.omega_index)) continue;
    if (std::abs(e.value) < eps_use * m_max) continue;
    measured_levels.insert(e.index.l);
    measured_levels.insert(e.index.lp);
    const auto* cal = calibration.find(e.omega_index, e.index);
    if (cal == nullptr || std::abs(cal->value) < eps_use * c_max || cal->value == cplx{}) {
      missing.insert(std::minmax(e.index.l, e.index.lp));
      continue;
    }
    std::ostringstream prov;
    prov << "omega[" << e.omega_index << "]" << (e.quotient_derived ? " quotient" : " direct");
    graph.add(e.index.l, e.index.lp, e.value / cal->value,
              ratio_weight(e.value, m_max, cal->value, c_max), prov.str());
    omegas.insert(e.omega_index);
  }
  if (graph.edges.empty()) {
    std::ostringstream os;
    os << "no calibrated products for branch k=" << k;
    if (!missing.empty()) {
      os << "; calibration lacks";
      for (auto [a, b] : missing) os << " (" << a << "," << b << ")";
    }
    throw Error(ErrorKind::unavailable, os.str());
  }
  GraphSolution sol = solve_product_graph(graph);
  std::vector<int> gap;
  for (int l : measured_levels)
    if (!sol.coefficients.count(l)) gap.push_back(l);
  if (!gap.empty()) {
    std::ostringstream os;
    os << "calibration gap disconnects levels";
    for (int l : gap) os << ' ' << l;
    os << " of branch k=" << k;
    if (!missing.empty()) {
      os << "; uncalibrated pairs";
      for (auto [a, b] : missing) os << " (" << a << "," << b << ")";
    }
    throw Error(ErrorKind::unavailable, os.str());
  }

  BranchReport rep;
  rep.k = k;
  rep.method = method;
  rep.estimate = BranchState{k, sol.coefficients};
  rep.parity_ambiguous = sol.parity_ambiguous;
  rep.closure_residual = sol.closure_residual;
  rep.edges_used = graph.edges.size();
  rep.omega_used = omegas.size();
  for (int l : populated)
    if (!sol.coefficients.count(l)) rep.unconstrained.push_back(l);
  if (sol.parity_ambiguous)
    rep.notes.push_back("product graph is bipartite: even/odd magnitude split is ambiguous");
  if (!missing.empty()) rep.notes.push_back(std::to_string(missing.size()) + " level pair(s) lacked calibration");
  return rep;
}

}  // namespace

BranchReport reconstruct_case_I(const ProductTable& measured, const LinkedCalibration& calibration,
                                int k, std::span<const std::size_t> omega_indices,
                                std::span<const int> populated, double eps_use) {
  if (omega_indices.empty())
    throw Error(ErrorKind::unavailable, "case I unavailable for k=" + std::to_string(k));
  return solve_own_products(measured, calibration, k, omega_indices, populated, eps_use, "I");
}

BranchReport reconstruct_case_II(const ProductTable& measured, const LinkedCalibration& calibration,
                                 const BranchState& known, int target, std::span<const int> populated,
                                 double eps_use) {
  const int k0 = known.k;
  const double m_max = measured.max_magnitude();
  const double c_max = calibration.products.max_magnitude();
  double b_max = 0.0;
  for (const auto& [l, b] : known.coefficients) b_max = std::max(b_max, std::abs(b));

  std::map<int, cplx> num;
  std::map<int, double> den;
  std::set<std::size_t> omegas;
  std::size_t used = 0;
  for (const auto& e : measured.entries) {
    if (e.degenerate) continue;
    Contributor c = e.index;
    cplx value = e.value;
    if (c.k == target && c.kp == k0) {
      c = c.conjugate();
      value = std::conj(value);
    } else if (!(c.k == k0 && c.kp == target)) {
      continue;
    }
    if (std::abs(value) < eps_use * m_max) continue;
    const auto* cal = calibration.find(e.omega_index, c);
    cplx cv;
    if (cal != nullptr) cv = cal->value;
    else if (const auto* cc = calibration.find(e.omega_index, c.conjugate())) cv = std::conj(cc->value);
    else continue;
    if (std::abs(cv) < eps_use * c_max || cv == cplx{}) continue;
    const cplx b0 = known.at(c.l);
    if (std::abs(b0) <= 1e-9 * b_max) continue;
    // y = N'' beta0_l conj(beta_target_lp)
    const cplx y = value / cv;
    const double w = ratio_weight(value, m_max, cv, c_max);
    num[c.lp] += w * std::conj(b0) * y;
    den[c.lp] += w * std::norm(b0);
    omegas.insert(e.omega_index);
    ++used;
  }
  if (num.empty())
    throw Error(ErrorKind::unavailable, "case II unavailable for k=" + std::to_string(target) +
                                            ": no resolved cross products with k=" + std::to_string(k0));
  BranchState est{target, {}};
  for (const auto& [l, s] : num) est.coefficients[l] = std::conj(s / den[l]);
  BranchReport rep;
  rep.k = target;
  rep.method = "II";
  rep.estimate = gauge_fixed(est);
  rep.edges_used = used;
  rep.omega_used = omegas.size();
  for (int l : populated)
    if (!est.coefficients.count(l)) rep.unconstrained.push_back(l);
  rep.notes.push_back("reference branch k=" + std::to_string(k0));
  return rep;
}

ProductTable separate_temperature_series(const std::vector<BeatFit>& fits,
                                         const std::vector<ThermalEnsemble>& ensembles) {
  if (fits.empty() || fits.size() != ensembles.size())
    throw Error(ErrorKind::consistency, "need one ensemble per temperature spectrogram");
  const auto& ref = fits.front();
  for (const auto& f : fits) {
    if (f.lines.size() != ref.lines.size() || !(f.omega == ref.omega))
      throw Error(ErrorKind::consistency, "temperature series fits do not share lines and grids");
    for (std::size_t i = 0; i < f.lines.size(); ++i)
      if (f.lines[i].omega != ref.lines[i].omega)
        throw Error(ErrorKind::consistency, "temperature series fits do not share lines");
  }
  const auto nt = static_cast<Eigen::Index>(fits.size());
  ProductTable out;
  for (std::size_t i = 0; i < ref.lines.size(); ++i) {
    const auto& line = ref.lines[i];
    if (line.is_dc()) continue;
    std::vector<std::pair<int, int>> pairs;
    for (const auto& c : line.contributors)
      if (std::find(pairs.begin(), pairs.end(), std::pair{c.k, c.kp}) == pairs.end())
        pairs.emplace_back(c.k, c.kp);
    const auto np = static_cast<Eigen::Index>(pairs.size());
    if (nt < np) {
      std::ostringstream os;
      os << "line Omega=" << line.omega << " has " << np << " branch pairs but only " << nt
         << " temperatures; add temperatures";
      throw Error(ErrorKind::ill_conditioned, os.str());
    }
    Eigen::MatrixXd W(nt, np);
    for (Eigen::Index t = 0; t < nt; ++t)
      for (Eigen::Index p = 0; p < np; ++p)
        W(t, p) = ensembles[static_cast<std::size_t>(t)].population(pairs[static_cast<std::size_t>(p)].first) *
                  ensembles[static_cast<std::size_t>(t)].population(pairs[static_cast<std::size_t>(p)].second);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond < 1e8)) {
      std::ostringstream os;
      os << "temperature weight matrix for line Omega=" << line.omega << " has condition number " << cond
         << "; use additional or more widely spread temperatures";
      throw Error(ErrorKind::ill_conditioned, os.str());
    }
    for (std::size_t w = 0; w < ref.omega.count; ++w) {
      Eigen::VectorXcd F(nt);
      for (Eigen::Index t = 0; t < nt; ++t)
        F(t) = fits[static_cast<std::size_t>(t)].amplitude(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w));
      const Eigen::VectorXcd G = svd.solve(F);
      for (Eigen::Index p = 0; p < np; ++p) {
        ProductEntry e;
        e.omega_index = w;
        e.omega = ref.omega[w];
        e.beat = line.omega;
        e.condition = cond;
        e.value = G(p);
        for (const auto& c : line.contributors)
          if (c.k == pairs[static_cast<std::size_t>(p)].first && c.kp == pairs[static_cast<std::size_t>(p)].second)
            e.degenerate_with.push_back(c);
        e.index = e.degenerate_with.front();
        e.degenerate = e.degenerate_with.size() > 1;
        if (!e.degenerate) e.degenerate_with.clear();
        if (e.value == cplx{}) continue;
        out.entries.push_back(std::move(e));
      }
    }
  }
  return out;
}

BranchReport reconstruct_case_III(const ProductTable& separated, const LinkedCalibration& calibration,
                                  int k, std::span<const int> populated, double eps_use) {
  std::set<std::size_t> all;
  for (const auto& e : separated.entries) all.insert(e.omega_index);
  const std::vector<std::size_t> omegas(all.begin(), all.end());
  return solve_own_products(separated, calibration, k, omegas, populated, eps_use, "III");
}

double fidelity(const BranchState& estimate, const BranchState& truth) {
  cplx overlap = 0.0;
  double ne = 0.0, nt = 0.0;
  for (const auto& [l, c] : estimate.coefficients) {
    ne += std::norm(c);
    overlap += std::conj(c) * truth.at(l);
  }
  for (const auto& [l, c] : truth.coefficients) nt += std::norm(c);
  if (!(ne > 0.0) || !(nt > 0.0)) throw Error(ErrorKind::degenerate, "fidelity undefined for a zero vector");
  return std::clamp(std::norm(overlap) / (ne * nt), 0.0, 1.0);
}

}  // namespace fwm
