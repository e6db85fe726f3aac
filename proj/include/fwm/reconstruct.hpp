#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fwm/analysis.hpp"
#include "fwm/calibration.hpp"
#include "fwm/model.hpp"

namespace fwm {

/// Splits one degenerate sum into its terms with the quotient
/// P(l1,l1') = P(l1,l3) P(l3',l1') / P(l3',l3), measured at the same omega.
/// Throws Error(unavailable) when no usable intermediate exists.
std::vector<ProductEntry> resolve_degeneracy(const ProductTable& table, const ProductEntry& degenerate,
                                             double eps_use);

/// Applies resolve_degeneracy to every degenerate entry. Unresolved sums are
/// moved to `discarded`.
ProductTable resolve_degeneracies(const ProductTable& table, double eps_use);

struct GraphEdge {
  int from = 0;
  int to = 0;
  cplx value;  // N' g_from g_to^*
  double weight = 1.0;
  std::string provenance;
};

struct ProductGraph {
  std::vector<int> nodes;
  std::vector<GraphEdge> edges;

  void add(int from, int to, cplx value, double weight = 1.0, std::string provenance = {});
};

struct GraphSolution {
  std::map<int, cplx> coefficients;  // gauge-fixed
  bool parity_ambiguous = false;
  std::vector<int> order;        // breadth-first traversal from the lowest node
  std::vector<int> unreachable;  // nodes outside the first component
  double closure_residual = 0.0;
};

GraphSolution solve_product_graph(const ProductGraph& graph);

struct BranchReport {
  int k = 0;
  std::string method;
  BranchState estimate;
  std::optional<double> fidelity;
  bool parity_ambiguous = false;
  double closure_residual = 0.0;
  std::vector<int> unconstrained;
  std::size_t edges_used = 0;
  std::size_t omega_used = 0;
  std::vector<std::string> notes;
};

struct ReconstructionReport {
  std::vector<BranchReport> branches;
  std::vector<std::string> diagnostics;

  const BranchReport* branch(int k) const;
};

/// Products of branch k measured where k is isolated, divided by the linked
/// calibration, solved as a product graph.
BranchReport reconstruct_case_I(const ProductTable& measured, const LinkedCalibration& calibration,
                                int k, std::span<const std::size_t> omega_indices,
                                std::span<const int> populated, double eps_use);

/// Branch `target` from cross-branch interference with an already known branch.
BranchReport reconstruct_case_II(const ProductTable& measured, const LinkedCalibration& calibration,
                                 const BranchState& known, int target, std::span<const int> populated,
                                 double eps_use);

/// Solves F(T_i) = sum p_k(T_i) p_k'(T_i) G_kk' per line and omega. The fits
/// must share their line list and omega grid.
ProductTable separate_temperature_series(const std::vector<BeatFit>& fits,
                                         const std::vector<ThermalEnsemble>& ensembles);

/// Case III: separated main and calibration tables, each branch solved from
/// its own terms over the whole omega grid.
BranchReport reconstruct_case_III(const ProductTable& separated, const LinkedCalibration& calibration,
                                  int k, std::span<const int> populated, double eps_use);

/// |<b_hat, b>|^2 / (|b_hat|^2 |b|^2)
double fidelity(const BranchState& estimate, const BranchState& truth);

}  // namespace fwm
