#include "sidmp/network.hpp"

#include <cmath>
#include <numbers>
#include <queue>

#include "sidmp/kernels.hpp"

namespace sidmp::network {

namespace {

/// Block rotation acting on a node state; identity for non-planar nodes.
Mat node_rotation(int n, double angle) {
  if (n != 2 || angle == 0.0) return Mat::Identity(n, n);
  return rotation2(angle);
}

void check_node(int i, int nodes, const char* what) {
  if (i < 0 || i >= nodes)
    throw ValidationError(std::string(what) + " index " + std::to_string(i) + " out of range");
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

CouplingGraph::CouplingGraph(int nodes, int node_dim, Mode mode)
    : nodes_(nodes), node_dim_(node_dim), mode_(mode) {
  if (nodes < 1) throw ValidationError("coupling graph needs at least one node");
  if (node_dim < 1) throw DimensionError("node dimension must be positive");
}

void CouplingGraph::add_edge(int i, int j, const Mat& gain, double phase) {
  check_node(i, nodes_, "edge endpoint");
  check_node(j, nodes_, "edge endpoint");
  if (i == j) throw ValidationError("self-loops are not allowed");
  if (gain.rows() != node_dim_ || gain.cols() != node_dim_)
    throw DimensionError("edge gain must be " + std::to_string(node_dim_) + "x" +
                         std::to_string(node_dim_));
  arcs_.push_back({i, j, gain, phase});
  if (mode_ == Mode::symmetric) arcs_.push_back({j, i, gain, -phase});
}

CouplingGraph CouplingGraph::all_to_all(int nodes, const Mat& gain,
                                        const std::vector<double>& node_phases) {
  if (!node_phases.empty() && static_cast<int>(node_phases.size()) != nodes)
    throw DimensionError("one phase per node is required");
  CouplingGraph g(nodes, static_cast<int>(gain.rows()));
  for (int i = 0; i < nodes; ++i)
    for (int j = i + 1; j < nodes; ++j) {
      const double phi = node_phases.empty() ? 0.0
                                             : node_phases[static_cast<std::size_t>(i)] -
                                                   node_phases[static_cast<std::size_t>(j)];
      g.add_edge(i, j, gain, phi);
    }
  return g;
}

bool CouplingGraph::has_phase_offsets() const {
  for (const Arc& a : arcs_)
    if (a.phase != 0.0) return true;
  return false;
}

void CouplingGraph::validate() const {
  for (const Arc& a : arcs_) {
    check_node(a.to, nodes_, "arc");
    check_node(a.from, nodes_, "arc");
    const Mat sym = 0.5 * (a.gain + a.gain.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ValidationError("gain on arc " + std::to_string(a.to) + "<-" + std::to_string(a.from) +
                            " has a symmetric part that is not positive definite");
    if (a.phase != 0.0 && node_dim_ != 2)
      throw ValidationError("phase offsets require planar oscillator nodes");
    if (mode_ == Mode::directed && (a.gain - a.gain.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("directed mode requires symmetric gains K = K^T");
  }
  if (mode_ == Mode::symmetric) {
    for (const Arc& a : arcs_) {
      bool matched = false;
      for (const Arc& b : arcs_) {
        if (b.to != a.from || b.from != a.to) continue;
        if ((a.gain - b.gain).cwiseAbs().maxCoeff() > 1e-12)
          throw ValidationError("asymmetric gains between nodes " + std::to_string(a.to) +
                                " and " + std::to_string(a.from));
        if (std::abs(std::remainder(a.phase + b.phase, 2.0 * std::numbers::pi)) > 1e-12)
          throw ValidationError("phase offsets between nodes " + std::to_string(a.to) + " and " +
                                std::to_string(a.from) + " are not antisymmetric");
        matched = true;
      }
      if (!matched)
        throw ValidationError("arc " + std::to_string(a.to) + "<-" + std::to_string(a.from) +
                              " has no reverse arc in symmetric mode");
    }
  }
}

bool CouplingGraph::connected() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(nodes_));
  for (const Arc& a : arcs_) {
    adj[static_cast<std::size_t>(a.to)].push_back(a.from);
    adj[static_cast<std::size_t>(a.from)].push_back(a.to);
  }
  std::vector<bool> seen(static_cast<std::size_t>(nodes_), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        q.push(v);
      }
  }
  return count == nodes_;
}

bool CouplingGraph::all_reachable_from(int source) const {
  check_node(source, nodes_, "source");
  std::vector<std::vector<int>> influences(static_cast<std::size_t>(nodes_));
  for (const Arc& a : arcs_) influences[static_cast<std::size_t>(a.from)].push_back(a.to);
  std::vector<bool> seen(static_cast<std::size_t>(nodes_), false);
  std::queue<int> q;
  q.push(source);
  seen[static_cast<std::size_t>(source)] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : influences[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        q.push(v);
      }
  }
  return count == nodes_;
}

std::vector<double> CouplingGraph::node_phases() const {
  std::vector<double> psi(static_cast<std::size_t>(nodes_), 0.0);
  std::vector<bool> seen(static_cast<std::size_t>(nodes_), false);
  for (int root = 0; root < nodes_; ++root) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    seen[static_cast<std::size_t>(root)] = true;
    std::queue<int> q;
    q.push(root);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (const Arc& a : arcs_) {
        // φ_{to,from} = ψ_to − ψ_from
        if (a.from == u && !seen[static_cast<std::size_t>(a.to)]) {
          psi[static_cast<std::size_t>(a.to)] = psi[static_cast<std::size_t>(u)] + a.phase;
          seen[static_cast<std::size_t>(a.to)] = true;
          q.push(a.to);
        } else if (a.to == u && !seen[static_cast<std::size_t>(a.from)]) {
          psi[static_cast<std::size_t>(a.from)] = psi[static_cast<std::size_t>(u)] - a.phase;
          seen[static_cast<std::size_t>(a.from)] = true;
          q.push(a.from);
        }
      }
    }
  }
  return psi;
}

// ---------------------------------------------------------------------------
// Block Laplacian
// ---------------------------------------------------------------------------

double BlockLaplacian::lambda_n_plus_1() const {
  if (eigenvalues.size() <= nodes) return 0.0;
  return eigenvalues[nodes];
}

double BlockLaplacian::projected_min_eigenvalue() const {
  if (V.rows() == 0) return 0.0;
  const Mat P = V * L_K * V.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (P + P.transpose()));
  return es.eigenvalues().minCoeff();
}

BlockLaplacian assemble_block_laplacian(const CouplingGraph& graph, int node_dim) {
  if (node_dim != graph.node_dim())
    throw DimensionError("node dimension differs from the graph's gain size");
  graph.validate();
  const int N = graph.nodes(), n = node_dim, total = N * n;
  BlockLaplacian lap;
  lap.nodes = N;
  lap.node_dim = n;
  lap.L = Mat::Zero(total, total);
  for (const Arc& a : graph.arcs()) {
    lap.L.block(a.to * n, a.to * n, n, n) += a.gain;
    lap.L.block(a.to * n, a.from * n, n, n) -= a.gain * node_rotation(n, a.phase);
  }
  lap.L_K = 0.5 * (lap.L + lap.L.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(lap.L_K);
  lap.eigenvalues = es.eigenvalues().reverse();
  const double scale = std::max(1.0, lap.eigenvalues.cwiseAbs().maxCoeff());
  lap.kernel_dim = static_cast<int>((lap.eigenvalues.array().abs() <= 1e-9 * scale).count());
  lap.connected = graph.connected();

  // x_i = R(ψ_i) z on the synchronization subspace.
  const std::vector<double> psi = graph.node_phases();
  Mat S(total, n);
  for (int i = 0; i < N; ++i)
    S.block(i * n, 0, n, n) = node_rotation(n, psi[static_cast<std::size_t>(i)]);
  Eigen::HouseholderQR<Mat> qr(S);
  const Mat Q = qr.householderQ() * Mat::Identity(total, total);
  lap.sync_basis = Q.leftCols(n);
  lap.V = Q.rightCols(total - n).transpose();
  return lap;
}

// ---------------------------------------------------------------------------
// Heterogeneity and inhibition parameters
// ---------------------------------------------------------------------------

HeterogeneousParams HeterogeneousParams::uniform(int count, const dynamics::CanonicalSystem& sys) {
  if (count < 1) throw ParameterError("network needs at least one node");
  HeterogeneousParams h;
  h.nodes.assign(static_cast<std::size_t>(count), sys);
  h.nominal = sys;
  return h;
}

void HeterogeneousParams::validate() const {
  if (nodes.empty()) throw ParameterError("network needs at least one node");
  nominal.validate();
  for (const auto& s : nodes) {
    s.validate();
    if (s.dim() != nominal.dim())
      throw DimensionError("heterogeneous nodes must share the nominal dimension");
  }
}

void InhibitionRule::validate(int node_count, int node_dim) const {
  if (nodes.empty()) throw ValidationError("inhibition rule lists no nodes");
  if (goals.size() != nodes.size())
    throw ValidationError("inhibition rule needs one goal per node");
  if (!weights.empty() && weights.size() != nodes.size())
    throw ValidationError("inhibition rule needs one weight per node");
  if (!(radius > 0.0)) throw ParameterError("inhibition radius r0 must be positive");
  if (!(gain > 0.0)) throw ParameterError("inhibition gain k_inh must be positive");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= node_count)
      throw ValidationError("inhibition node index " + std::to_string(nodes[k]) +
                            " out of range");
    if (goals[k].size() != node_dim) throw DimensionError("inhibition goal dimension mismatch");
    if (!weights.empty() && !(weights[k] >= 0.0))
      throw ParameterError("inhibition weights must be nonnegative");
  }
  for (const auto& [on, off] : schedule)
    if (!(off > on)) throw ParameterError("inhibition schedule interval must have off > on");
}

bool InhibitionRule::enabled(double t) const {
  if (schedule.empty()) return true;
  for (const auto& [on, off] : schedule)
    if (t >= on && t < off) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Coupled canonical network
// ---------------------------------------------------------------------------

CoupledCanonical::CoupledCanonical(CouplingGraph graph, HeterogeneousParams hetero,
                                   std::optional<InhibitionRule> inhibition)
    : graph_(std::move(graph)), hetero_(std::move(hetero)), inhibition_(std::move(inhibition)) {
  hetero_.validate();
  nodes_ = graph_.nodes();
  node_dim_ = hetero_.nominal.dim();
  if (static_cast<int>(hetero_.nodes.size()) != nodes_)
    throw DimensionError("one canonical system per graph node is required");
  if (graph_.node_dim() != node_dim_)
    throw DimensionError("graph gain size differs from the canonical dimension");
  if (graph_.has_phase_offsets())
    for (const auto& s : hetero_.nodes)
      if (!s.rotation_invariant())
        throw ValidationError("phase offsets require rotation-invariant oscillators");
  if (inhibition_) inhibition_->validate(nodes_, node_dim_);
  lap_ = assemble_block_laplacian(graph_, node_dim_);

  lap_rowmajor_.resize(static_cast<std::size_t>(lap_.L.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      lap_rowmajor_.data(), lap_.L.rows(), lap_.L.cols()) = lap_.L;

  all_hopf_ = true;
  for (const auto& s : hetero_.nodes)
    if (s.kind != dynamics::CanonicalKind::hopf || s.radius_ref_index) all_hopf_ = false;
  if (all_hopf_) {
    for (const auto& s : hetero_.nodes) {
      h_omega_.push_back(s.hopf.omega);
      h_rho_.push_back(s.hopf.rho);
      h_radius_sq_.push_back(s.hopf.radius * s.hopf.radius);
      h_inv_tau_.push_back(1.0 / s.hopf.tau);
    }
  }
}

double CoupledCanonical::inside_indicator(std::size_t k, const Vec& x) const {
  const InhibitionRule& rule = *inhibition_;
  const Vec xi = x.segment(rule.nodes[k] * node_dim_, node_dim_);
  return rule.radius - (rule.goals[k] - xi).norm();
}

simulate::Mode CoupledCanonical::initial_mode(double t0, const Vec& x0) const {
  if (!inhibition_) return {};
  simulate::Mode mode(inhibition_->nodes.size(), 0);
  if (inhibition_->enabled(t0))
    for (std::size_t k = 0; k < mode.size(); ++k) mode[k] = inside_indicator(k, x0) >= 0.0;
  return mode;
}

simulate::Mode CoupledCanonical::all_armed() const {
  if (!inhibition_) return {};
  return simulate::Mode(inhibition_->nodes.size(), 1);
}

Vec CoupledCanonical::eval_with_reference(const Vec& x, const Vec& r,
                                          const simulate::Mode& mode) const {
  const int total = dim();
  if (x.size() != total) throw DimensionError("network state dimension mismatch");
  const auto& k = kernels::active();
  Vec out(total);
  if (all_hopf_) {
    const kernels::HopfParamsSoa p{h_omega_, h_rho_, h_radius_sq_, h_inv_tau_};
    k.hopf_interleaved(std::span<double>(out.data(), out.size()),
                       std::span<const double>(x.data(), x.size()), p);
  } else {
    for (int i = 0; i < nodes_; ++i)
      out.segment(i * node_dim_, node_dim_) =
          hetero_.nodes[static_cast<std::size_t>(i)].eval(x.segment(i * node_dim_, node_dim_), r);
  }
  if (!graph_.arcs().empty()) {
    Vec lx(total);
    k.matvec(std::span<double>(lx.data(), lx.size()), lap_rowmajor_,
             std::span<const double>(x.data(), x.size()), static_cast<std::size_t>(total),
             static_cast<std::size_t>(total));
    out -= lx;
  }
  if (inhibition_) {
    const InhibitionRule& rule = *inhibition_;
    for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
      if (m >= mode.size() || !mode[m]) continue;
      const int i = rule.nodes[m];
      out.segment(i * node_dim_, node_dim_) +=
          rule.weight(m) * rule.gain * (rule.goals[m] - x.segment(i * node_dim_, node_dim_));
    }
  }
  return out;
}

Vec CoupledCanonical::eval(double, const Vec& x, const simulate::Mode& mode) const {
  return eval_with_reference(x, Vec(), mode);
}

void CoupledCanonical::update_mode(double t_prev, const Vec& x_prev, double t, const Vec& x,
                                   simulate::Mode& mode, std::vector<simulate::Event>& log) const {
  if (!inhibition_) return;
  const InhibitionRule& rule = *inhibition_;
  const bool was_enabled = rule.enabled(t_prev);
  const bool now_enabled = rule.enabled(t);
  // Schedule edge inside the step, if any.
  double edge_time = t;
  for (const auto& [on, off] : rule.schedule) {
    if (on > t_prev && on <= t) edge_time = on;
    if (off > t_prev && off <= t) edge_time = off;
  }
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const double h0 = inside_indicator(m, x_prev);
    const double h1 = inside_indicator(m, x);
    const bool inside = h1 >= 0.0;
    const bool armed = rule.latch ? now_enabled && (mode[m] || inside) : now_enabled && inside;
    if (armed == static_cast<bool>(mode[m])) continue;
    double when = t;
    if (was_enabled != now_enabled) {
      when = edge_time;
    } else if ((h0 >= 0.0) != inside && h0 != h1) {
      when = t_prev + (t - t_prev) * (h0 / (h0 - h1));
    }
    const std::string id = "inhibit_" + std::to_string(rule.nodes[m]);
    log.push_back({when, id + (armed ? ":arm" : ":release")});
    mode[m] = armed;
  }
}

VectorField CoupledCanonical::frozen(const simulate::Mode& mode, const Vec& r) const {
  const CoupledCanonical self = *this;
  return VectorField(dim(), [self, mode, r](double, const Vec& x) {
    return self.eval_with_reference(x, r, mode);
  });
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

double sync_error(const simulate::Trajectory& traj, double window, int node_dim,
                  const std::vector<double>& node_phases, int state_offset) {
  if (traj.size() == 0) throw PreconditionError("sync error needs a non-empty trajectory");
  if (!(window >= 0.0)) throw ParameterError("sync error window must be nonnegative");
  if (node_dim < 1) throw DimensionError("node dimension must be positive");
  const int avail = traj.dim() - state_offset;
  if (state_offset < 0 || avail < node_dim) throw DimensionError("sync error state layout invalid");
  const int N = node_phases.empty() ? avail / node_dim : static_cast<int>(node_phases.size());
  if (N * node_dim > avail) throw DimensionError("more nodes than the trajectory holds");

  std::vector<Mat> unrotate;
  for (int i = 0; i < N; ++i)
    unrotate.push_back(node_phases.empty()
                           ? Mat::Identity(node_dim, node_dim)
                           : node_rotation(node_dim, -node_phases[static_cast<std::size_t>(i)]));

  const double t_start = traj.t.back() - window;
  double worst = 0.0;
  bool any = false;
  std::vector<Vec> z(static_cast<std::size_t>(N));
  for (std::size_t s = 0; s < traj.size(); ++s) {
    if (traj.t[s] < t_start - 1e-12) continue;
    any = true;
    const auto row = traj.x.row(static_cast<Eigen::Index>(s));
    for (int i = 0; i < N; ++i)
      z[static_cast<std::size_t>(i)] =
          unrotate[static_cast<std::size_t>(i)] *
          row.segment(state_offset + i * node_dim, node_dim).transpose();
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        worst = std::max(worst, (z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)]).norm());
  }
  if (!any) throw PreconditionError("sync error window contains no samples");
  return worst;
}

double heterogeneity_disturbance(const HeterogeneousParams& hetero,
                                 const simulate::Trajectory& traj, int state_offset) {
  hetero.validate();
  const int n = hetero.nominal.dim();
  const int N = static_cast<int>(hetero.nodes.size());
  if (traj.dim() < state_offset + N * n) throw DimensionError("trajectory too small for the network");
  double worst = 0.0;
  for (std::size_t s = 0; s < traj.size(); ++s) {
    const Vec row = traj.state(s);
    for (int i = 0; i < N; ++i) {
      const Vec xi = row.segment(state_offset + i * n, n);
      const Vec d = hetero.nodes[static_cast<std::size_t>(i)].eval(xi, Vec()) -
                    hetero.nominal.eval(xi, Vec());
      worst = std::max(worst, d.norm());
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Network hierarchy
// ---------------------------------------------------------------------------

NetworkHierarchy::NetworkHierarchy(dynamics::ReferenceSystem reference, CoupledCanonical canonical,
                                   std::vector<dynamics::TransformationSystem> transforms)
    : reference_(std::move(reference)),
      canonical_(std::move(canonical)),
      transforms_(std::move(transforms)) {
  reference_.validate();
  if (static_cast<int>(transforms_.size()) != canonical_.nodes())
    throw DimensionError("one transformation system per network node is required");
  int offset = reference_.dim() + canonical_.dim();
  for (auto& ts : transforms_) {
    ts.validate();
    if (ts.forcing && ts.forcing->phase_dim() != canonical_.node_dim())
      throw DimensionError("forcing phase dimension differs from the canonical dimension");
    y_offsets_.push_back(offset);
    offset += ts.state_dim();
  }
  total_ = offset;
}

int NetworkHierarchy::y_offset(int node) const {
  if (node < 0 || node >= static_cast<int>(y_offsets_.size()))
    throw DimensionError("node index out of range");
  return y_offsets_[static_cast<std::size_t>(node)];
}

simulate::Mode NetworkHierarchy::initial_mode(double t0, const Vec& x0) const {
  return canonical_.initial_mode(t0, x0.segment(x_offset(), canonical_.dim()));
}

Vec NetworkHierarchy::eval(double t, const Vec& state, const simulate::Mode& mode) const {
  if (state.size() != total_) throw DimensionError("hierarchy state dimension mismatch");
  const int rd = reference_.dim(), xd = canonical_.dim(), n = canonical_.node_dim();
  const Vec r = state.head(rd);
  const Vec x = state.segment(rd, xd);
  Vec out(total_);
  const Vec r_dot = reference_.eval(t, r);
  const Vec x_dot = canonical_.eval_with_reference(x, r, mode);
  out.head(rd) = r_dot;
  out.segment(rd, xd) = x_dot;
  for (std::size_t i = 0; i < transforms_.size(); ++i) {
    const auto& ts = transforms_[i];
    const int off = y_offsets_[i];
    const int node = static_cast<int>(i);
    out.segment(off, ts.state_dim()) =
        ts.eval(state.segment(off, ts.state_dim()), x.segment(node * n, n),
                x_dot.segment(node * n, n), r, r_dot);
  }
  return out;
}

void NetworkHierarchy::update_mode(double t_prev, const Vec& x_prev, double t, const Vec& x,
                                   simulate::Mode& mode, std::vector<simulate::Event>& log) const {
  canonical_.update_mode(t_prev, x_prev.segment(x_offset(), canonical_.dim()), t,
                         x.segment(x_offset(), canonical_.dim()), mode, log);
}

}  // namespace sidmp::network
