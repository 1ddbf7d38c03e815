// Coupled canonical-system networks: coupling graphs, block Laplacians,
// heterogeneous node parameters, sparse inhibition and the full network
// hierarchy used by the gait scenario.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sidmp/dynamics.hpp"
#include "sidmp/simulate.hpp"

namespace sidmp::network {

/// Directed influence arc: node `to` receives K(R(φ)x_from − x_to).
struct Arc {
  int to = 0;
  int from = 0;
  Mat gain;
  double phase = 0.0;
};

class CouplingGraph {
 public:
  enum class Mode { symmetric, directed };

  CouplingGraph() = default;
  CouplingGraph(int nodes, int node_dim, Mode mode = Mode::symmetric);

  /// Symmetric mode adds both arcs (i←j with K, φ) and (j←i with K, −φ).
  /// Directed mode adds only i←j.
  void add_edge(int i, int j, const Mat& gain, double phase = 0.0);

  /// Complete graph with φ_ij = ψ_i − ψ_j for the given node phases.
  static CouplingGraph all_to_all(int nodes, const Mat& gain,
                                  const std::vector<double>& node_phases = {});

  int nodes() const { return nodes_; }
  int node_dim() const { return node_dim_; }
  Mode mode() const { return mode_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  bool has_phase_offsets() const;

  /// Throws ValidationError on asymmetric gains, non-antisymmetric offsets or
  /// gains whose symmetric part is not positive definite.
  void validate() const;
  /// Connectivity of the underlying undirected graph.
  bool connected() const;
  /// True when every node is influenced, directly or through others, by `source`.
  bool all_reachable_from(int source) const;
  /// Node phases ψ with φ_ij = ψ_i − ψ_j accumulated along a spanning tree
  /// (ψ = 0 at the root of each component).
  std::vector<double> node_phases() const;

 private:
  int nodes_ = 0;
  int node_dim_ = 0;
  Mode mode_ = Mode::symmetric;
  std::vector<Arc> arcs_;
};

struct BlockLaplacian {
  int nodes = 0;
  int node_dim = 0;
  Mat L;          // coupled dynamics read ẋ = F(x) − Lx
  Mat L_K;        // symmetric part of L
  Vec eigenvalues;  // of L_K, non-increasing
  int kernel_dim = 0;
  bool connected = false;
  Mat sync_basis;  // nN × n, orthonormal columns spanning the synchronization subspace
  Mat V;           // n(N−1) × nN, orthonormal rows, V·sync_basis = 0

  /// λ_{N+1} of L_K with eigenvalues in non-increasing order.
  double lambda_n_plus_1() const;
  /// Smallest eigenvalue of V L_K Vᵀ.
  double projected_min_eigenvalue() const;
};

BlockLaplacian assemble_block_laplacian(const CouplingGraph& graph, int node_dim);

/// Per-node canonical systems and the nominal one they perturb.
struct HeterogeneousParams {
  std::vector<dynamics::CanonicalSystem> nodes;
  dynamics::CanonicalSystem nominal;

  static HeterogeneousParams uniform(int count, const dynamics::CanonicalSystem& sys);
  void validate() const;
};

struct InhibitionRule {
  std::vector<int> nodes;
  std::vector<Vec> goals;      // x_{i,d}
  double radius = 0.3;         // r₀
  double gain = 1.0;           // k_inh, 1/s
  std::vector<double> weights;  // α_i; empty means 1 for every listed node
  std::vector<std::pair<double, double>> schedule;  // enable intervals [on, off); empty = always
  bool latch = true;

  void validate(int node_count, int node_dim) const;
  bool enabled(double t) const;
  double weight(std::size_t k) const { return weights.empty() ? 1.0 : weights[k]; }
};

/// ẋ_i = f_x(x_i, r, ω_i) + Σ_j K_ij(R(φ_ij)x_j − x_i) + α_i g_i(x_i)[armed]
///
/// Each inhibited node carries one mode flag. In latch mode the flag arms when
/// the schedule is enabled and the node enters 𝒞 = {|x_d − x| ≤ r₀}, then holds
/// while enabled; strict mode applies g only while inside 𝒞. Flags change
/// between integration steps and are logged as "inhibit_<node>:arm" and
/// "inhibit_<node>:release".
class CoupledCanonical final : public simulate::SwitchedSystem {
 public:
  CoupledCanonical(CouplingGraph graph, HeterogeneousParams hetero,
                   std::optional<InhibitionRule> inhibition = std::nullopt);

  int dim() const override { return nodes_ * node_dim_; }
  int nodes() const { return nodes_; }
  int node_dim() const { return node_dim_; }
  const BlockLaplacian& laplacian() const { return lap_; }
  const CouplingGraph& graph() const { return graph_; }
  const HeterogeneousParams& params() const { return hetero_; }
  const std::optional<InhibitionRule>& inhibition() const { return inhibition_; }

  simulate::Mode initial_mode(double t0, const Vec& x0) const override;
  Vec eval(double t, const Vec& x, const simulate::Mode& mode) const override;
  void update_mode(double t_prev, const Vec& x_prev, double t, const Vec& x,
                   simulate::Mode& mode, std::vector<simulate::Event>& log) const override;

  /// Right-hand side with an explicit reference state (for Hopf radius commands).
  Vec eval_with_reference(const Vec& x, const Vec& r, const simulate::Mode& mode) const;
  /// Field with the mode frozen, e.g. all flags armed for analysis.
  VectorField frozen(const simulate::Mode& mode, const Vec& r = Vec()) const;
  simulate::Mode all_armed() const;

  /// Signed distance indicator r₀ − |x_d − x_i| for the k-th inhibited node.
  double inside_indicator(std::size_t k, const Vec& x) const;

 private:
  CouplingGraph graph_;
  HeterogeneousParams hetero_;
  std::optional<InhibitionRule> inhibition_;
  BlockLaplacian lap_;
  int nodes_ = 0;
  int node_dim_ = 0;
  bool all_hopf_ = false;
  std::vector<double> lap_rowmajor_;
  std::vector<double> h_omega_, h_rho_, h_radius_sq_, h_inv_tau_;
};

/// Max over samples with t ≥ t_end − window of the max pairwise node distance.
/// With node phases ψ the nodes are first rotated back by R(−ψ_i).
double sync_error(const simulate::Trajectory& traj, double window, int node_dim,
                  const std::vector<double>& node_phases = {}, int state_offset = 0);

/// d̄ = max over samples and nodes of |f(x_i, ω_i) − f(x_i, ω₀)|.
double heterogeneity_disturbance(const HeterogeneousParams& hetero,
                                 const simulate::Trajectory& traj, int state_offset = 0);

/// Reference → coupled canonical network → per-node transformation systems.
/// State layout: [r, x_1..x_N, y_1..y_N] with y_i = (positions, velocities).
class NetworkHierarchy final : public simulate::SwitchedSystem {
 public:
  NetworkHierarchy(dynamics::ReferenceSystem reference, CoupledCanonical canonical,
                   std::vector<dynamics::TransformationSystem> transforms);

  int dim() const override { return total_; }
  int r_dim() const { return reference_.dim(); }
  int x_offset() const { return reference_.dim(); }
  int y_offset(int node) const;
  const CoupledCanonical& canonical() const { return canonical_; }

  simulate::Mode initial_mode(double t0, const Vec& x0) const override;
  Vec eval(double t, const Vec& state, const simulate::Mode& mode) const override;
  void update_mode(double t_prev, const Vec& x_prev, double t, const Vec& x,
                   simulate::Mode& mode, std::vector<simulate::Event>& log) const override;

 private:
  dynamics::ReferenceSystem reference_;
  CoupledCanonical canonical_;
  std::vector<dynamics::TransformationSystem> transforms_;
  std::vector<int> y_offsets_;
  int total_ = 0;
};

}  // namespace sidmp::network
