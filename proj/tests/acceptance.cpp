// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line with
// the figures it was judged on; the exit code is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "sidmp/contraction.hpp"
#include "sidmp/inhibition.hpp"
#include "sidmp/learning.hpp"
#include "sidmp/metric_synthesis.hpp"
#include "sidmp/network.hpp"
#include "sidmp/simulate.hpp"

using namespace sidmp;
namespace ct = sidmp::contraction;
namespace nw = sidmp::network;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds, 0 for none
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

simulate::IntegratorConfig integrator(double duration, double step = 1e-3, int stride = 1) {
  simulate::IntegratorConfig ic;
  ic.step = step;
  ic.duration = duration;
  ic.record_stride = stride;
  return ic;
}

dynamics::CanonicalSystem hopf(double omega = 2 * kPi, double rho = 1.0, double radius = 1.0) {
  dynamics::HopfParams p;
  p.omega = omega;
  p.rho = rho;
  p.radius = radius;
  return dynamics::CanonicalSystem::make_hopf(p);
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  return (*hi - *lo) / mean;
}

Mat lyapunov(const Mat& A, const Mat& Q) {
  const Eigen::Index n = A.rows();
  const Mat I = Mat::Identity(n, n);
  const Mat K = Eigen::kroneckerProduct(I, A.transpose()) + Eigen::kroneckerProduct(A.transpose(), I);
  const Vec q = Eigen::Map<const Vec>(Q.data(), n * n);
  const Vec m = K.fullPivLu().solve(-q);
  return Eigen::Map<const Mat>(m.data(), n, n);
}

// ---------------------------------------------------------------------------

Outcome vdp_locking() {
  const std::vector<double> wscale{0.9, 1.0, 1.1}, mus{1.6, 2.0, 2.4};
  nw::HeterogeneousParams hetero;
  dynamics::VanDerPolParams nominal;
  nominal.classical = true;
  nominal.mu = 2.0;
  hetero.nominal = dynamics::CanonicalSystem::make_vanderpol(nominal);
  for (std::size_t i = 0; i < mus.size(); ++i) {
    auto p = nominal;
    p.omega = wscale[i] * nominal.omega;
    p.mu = mus[i];
    hetero.nodes.push_back(dynamics::CanonicalSystem::make_vanderpol(p));
  }
  const int N = static_cast<int>(mus.size());
  Vec x0(2 * N);
  x0 << 1.0, 0.0, 0.5, 0.5, -1.0, 0.2;

  auto periods = [&](const nw::CouplingGraph& g) {
    const nw::CoupledCanonical net(g, hetero);
    const auto traj = simulate::integrate(net, x0, integrator(40.0));
    std::vector<double> out;
    for (int i = 0; i < N; ++i)
      out.push_back(simulate::estimate_period(traj, simulate::Section::coordinate(2 * N, 2 * i, 20.0)).period);
    return out;
  };
  const auto coupled = periods(nw::CouplingGraph::all_to_all(N, 4.0 * Mat::Identity(2, 2)));
  const auto uncoupled = periods(nw::CouplingGraph(N, 2));
  const double sc = spread(coupled), su = spread(uncoupled);
  return {sc <= 0.01 && su >= 0.10,
          "coupled period spread " + fmt(sc) + " (<= 0.01), uncoupled " + fmt(su) + " (>= 0.10)"};
}

Outcome sync_threshold() {
  const double rho = 2.0, r = 1.5;
  const auto node = hopf(2 * kPi, rho, r);
  const double k_expected = rho * r * r / 4.0;
  const auto region = RegionSampler::ball(Vec::Zero(2), 1.2 * r, 2048, 3);
  const double k_probe = 1.0;
  const auto cert = ct::check_sync_condition(
      nw::assemble_block_laplacian(nw::CouplingGraph::all_to_all(4, k_probe * Mat::Identity(2, 2)), 2),
      {node.field()}, region);
  const double k_star = k_probe * cert.value("threshold_factor");
  const bool threshold_ok = std::abs(k_star - k_expected) <= 1e-9 * k_expected;

  const nw::CoupledCanonical net(nw::CouplingGraph::all_to_all(4, 2 * k_star * Mat::Identity(2, 2)),
                                 nw::HeterogeneousParams::uniform(4, node));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vec x0(8);
    for (int i = 0; i < 8; ++i) x0[i] = u(rng);
    const auto traj = simulate::integrate(net, x0, integrator(20.0, 1e-3, 10));
    worst = std::max(worst, nw::sync_error(traj, 0.0, 2));
  }
  return {threshold_ok && worst < 1e-6, "k* = " + fmt(k_star) + " (expected " + fmt(k_expected) +
                                            "), worst sync error after 20 periods " + fmt(worst)};
}

Outcome sparse_inhibition() {
  const Vec goal = (Vec(2) << 1.0, 0.0).finished();
  const double r0 = 0.3;
  const auto node = hopf();
  const VectorField g(2, [goal](double, const Vec& x) { return Vec(goal - x); },
                      [](double, const Vec&) { return Mat(-Mat::Identity(2, 2)); });
  const auto est = nw::inhibition_threshold_estimate(node.field(), g, RegionSampler::ball(goal, r0, 1024, 5),
                                                     ct::Metric::identity(2));

  nw::InhibitionRule rule;
  rule.nodes = {0};
  rule.goals = {goal};
  rule.radius = r0;
  rule.gain = 50.0;
  const double release = 10.0;
  rule.schedule = {{4.0, release}};
  std::vector<double> psi;
  for (const char* leg : {"LF", "RF", "LH", "RH"}) {
    const std::string s = leg;
    psi.push_back(s == "LH" ? 0.0 : s == "LF" ? kPi / 2 : s == "RH" ? kPi : 3 * kPi / 2);
  }
  const nw::CoupledCanonical net(nw::CouplingGraph::all_to_all(4, 8.0 * Mat::Identity(2, 2), psi),
                                 nw::HeterogeneousParams::uniform(4, node), rule);
  Vec x0(8);
  for (int i = 0; i < 4; ++i) x0.segment(2 * i, 2) = rotation2(psi[i]) * goal;
  const auto traj = simulate::integrate(net, x0, integrator(release + 5.0));
  double armed = -1.0;
  for (const auto& e : traj.events)
    if (e.id == "inhibit_0:arm" && armed < 0) armed = e.time;
  if (armed < 0) return {false, "inhibition never armed"};

  double amp = 0.0, radius_err = 0.0;
  for (int i = 0; i < 8; ++i) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t s = 0; s < traj.size(); ++s)
      if (traj.t[s] >= armed + 2.0 && traj.t[s] <= release) {
        lo = std::min(lo, traj.x(static_cast<Eigen::Index>(s), i));
        hi = std::max(hi, traj.x(static_cast<Eigen::Index>(s), i));
      }
    amp = std::max(amp, 0.5 * (hi - lo));
  }
  for (std::size_t s = 0; s < traj.size(); ++s)
    if (traj.t[s] >= release + 3.0)
      for (int i = 0; i < 4; ++i)
        radius_err = std::max(radius_err, std::abs(traj.state(s).segment(2 * i, 2).norm() - 1.0));
  const bool gain_ok = rule.gain >= 2 * est.alpha0;
  return {gain_ok && amp < 1e-3 && radius_err <= 0.02,
          "alpha0 " + fmt(est.alpha0) + ", k_inh " + fmt(rule.gain) + ", armed at " + fmt(armed) +
              " s, amplitude from arm+2 s " + fmt(amp) + ", radius error from release+3 s " + fmt(radius_err)};
}

Outcome weighted_monotonicity() {
  const int N = 4;
  const auto graph = nw::CouplingGraph::all_to_all(N, 2.0 * Mat::Identity(2, 2));
  const auto hetero = nw::HeterogeneousParams::uniform(N, hopf());
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<Vec> states(200, Vec(2 * N));
  for (auto& s : states)
    for (int i = 0; i < 2 * N; ++i) s[i] = u(rng);

  // λ_max at every grid vector and state, indexed by the base-5 grid code.
  const int G = static_cast<int>(grid.size());
  int total = 1;
  for (int i = 0; i < N; ++i) total *= G;
  std::vector<std::vector<double>> lmax(static_cast<std::size_t>(total));
  for (int code = 0; code < total; ++code) {
    nw::InhibitionRule rule;
    for (int i = 0, c = code; i < N; ++i, c /= G) {
      rule.nodes.push_back(i);
      rule.goals.push_back(rotation2(0.7 * i) * Vec::Unit(2, 0));
      rule.weights.push_back(grid[static_cast<std::size_t>(c % G)]);
    }
    const auto field = nw::weighted_inhibition_field(graph, hetero, rule).standalone;
    for (const auto& s : states) lmax[static_cast<std::size_t>(code)].push_back(nw::symmetric_jacobian_max(field, s));
  }
  int comparisons = 0, violations = 0;
  double worst = -1e300;
  int stride = 1;
  for (int i = 0; i < N; ++i, stride *= G)
    for (int code = 0; code < total; ++code) {
      if ((code / stride) % G == G - 1) continue;
      const auto& a = lmax[static_cast<std::size_t>(code)];
      const auto& b = lmax[static_cast<std::size_t>(code + stride)];
      for (std::size_t s = 0; s < a.size(); ++s) {
        ++comparisons;
        worst = std::max(worst, b[s] - a[s]);
        if (b[s] > a[s] + 1e-9) ++violations;
      }
    }
  return {violations == 0, std::to_string(comparisons) + " comparisons, " + std::to_string(violations) +
                               " increases, largest change " + fmt(worst)};
}

Outcome metric_construction() {
  const auto f = hopf().field();
  const auto ring = RegionSampler::annulus(0.8, 1.2, 4096, 1);
  ct::SingularMetricOptions so;
  so.rate = ct::certified_rate(f, ct::Metric::identity(2), ring, true);
  const auto sing = ct::build_singular_metric(f, circle_points(16, 1.0), so);
  const auto full = ct::build_full_metric(sing);
  double residual = 0.0, ratio = 0.0, l2max = -1e300;
  bool rank_ok = true;
  for (std::size_t k = 0; k < sing.points.size(); ++k) {
    const auto& sp = sing.points[k];
    residual = std::max(residual, sp.residual);
    const double tr = sp.Ms.trace();
    int small = 0;
    for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
      if (sp.eigenvalues[i] < 1e-6 * tr) ++small;
    rank_ok = rank_ok && small == 1;
    const Vec& e = full.points[k].fs_eigenvalues;
    ratio = std::max(ratio, std::abs(e[0]) / std::abs(e[1]));
    l2max = std::max(l2max, e[1]);
  }
  return {residual < 1e-6 && rank_ok && ratio <= 1e-3 && l2max < 0.0,
          "16 points: worst residual " + fmt(residual) + ", one null eigenvalue " + (rank_ok ? "yes" : "no") +
              ", worst |l1|/|l2| " + fmt(ratio) + ", max l2 " + fmt(l2max)};
}

Outcome tube_bound() {
  const auto f = hopf().field();
  const auto ring = RegionSampler::annulus(0.8, 1.2, 4096, 1);
  const double rate = ct::certified_rate(f, ct::Metric::identity(2), ring, true);
  ct::TubeBoundConfig cfg;
  cfg.x0 = Vec::Unit(2, 0);
  cfg.w_bar = 0.05;
  cfg.runs = 100;
  cfg.seed = 7;
  cfg.rate = rate;
  cfg.region = ring;
  const auto rep = ct::tube_bound_check(f, cfg);
  return {rep.pass && rep.violations == 0 && rep.inconclusive == 0,
          "lambda " + fmt(rate) + ", R " + fmt(rep.R) + ", bound " + fmt(rep.bound) + ", worst distance " +
              fmt(rep.worst_distance) + ", violations " + std::to_string(rep.violations) + "/" +
              std::to_string(rep.runs)};
}

// Rolls out a primitive with the given canonical system and forcing and
// returns the demonstration, its phase and the fitted weights' worst error.
double learn_round_trip(const dynamics::CanonicalSystem& canon, const Vec& x0,
                        const dynamics::ForcingFunction& truth, double duration) {
  dynamics::TransformationSystem ts;
  ts.stiffness = Vec::Constant(1, 100.0);
  ts.damping = Vec::Constant(1, 20.0);
  ts.goals = {dynamics::Goal::fixed(1.0)};
  ts.forcing = truth;
  const auto ref = dynamics::ReferenceSystem::constant(Vec::Ones(1), Vec::Zero(1));
  const auto h = dynamics::compose_hierarchy(ref, canon, {ts});
  // Sampled every 1e-3 s but integrated at the 1e-4 s substep phase_rollout uses.
  const auto traj =
      simulate::integrate(h.field, h.pack(Vec::Zero(1), x0, {Vec::Zero(2)}), integrator(duration, 1e-4, 10));
  const int yo = h.layout.y_offsets[0];
  learning::Demonstration d;
  d.t = traj.t;
  const auto S = static_cast<Eigen::Index>(traj.size());
  d.y.resize(S, 1);
  d.y_dot.resize(S, 1);
  d.y_ddot = Mat(S, 1);
  for (Eigen::Index i = 0; i < S; ++i) {
    const Vec s = traj.state(static_cast<std::size_t>(i));
    d.y(i, 0) = s[yo];
    d.y_dot(i, 0) = s[yo + 1];
    (*d.y_ddot)(i, 0) = h.field(s)[yo + 1];
  }
  d.stiffness = ts.stiffness;
  d.damping = ts.damping;
  d.goal = Vec::Ones(1);
  auto basis = truth;
  basis.weights.setZero();
  const Mat phase = learning::phase_rollout(canon, x0, d.t);
  const auto fit = learning::fit_weights(learning::compute_target_forcing(d), phase, basis, 0.0);
  return (fit.forcing.weights - truth.weights).cwiseAbs().maxCoeff();
}

Outcome learning_round_trip() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> centers;
  for (int i = 0; i < 10; ++i) centers.push_back(std::exp(-4.0 * i / 9.0));
  Mat wg(10, 1);
  for (int i = 0; i < 10; ++i) wg(i, 0) = 200.0 * u(rng);
  const double eg = learn_round_trip(dynamics::CanonicalSystem::exponential(4.0),
                                     Vec::Ones(1), dynamics::ForcingFunction::gaussian(centers, 0.05, wg), 1.5);
  Mat wv(12, 2);
  for (int i = 0; i < 12; ++i) wv.row(i) << 50.0 * u(rng), 50.0 * u(rng);
  const double ev = learn_round_trip(hopf(), (Vec(2) << 0.5, 0.0).finished(),
                                     dynamics::ForcingFunction::von_mises(
                                         dynamics::ForcingFunction::uniform_angles(12), 0.4, wv),
                                     3.0);
  return {eg < 1e-6 && ev < 1e-6,
          "max weight error: 10 Gaussian " + fmt(eg) + ", 12 von Mises " + fmt(ev)};
}

Outcome diffeomorphic_scaling() {
  const auto f = hopf().field();
  const double s = 2.5;
  const Vec yT = (Vec(2) << 0.7, -1.2).finished();
  const auto T = dynamics::Diffeomorphism::affine(s, rotation2(kPi / 3), yT);
  const auto fT = dynamics::apply_diffeomorphism(f, T);

  const auto base = simulate::integrate(f, (Vec(2) << 0.3, 0.1).finished(), integrator(20.0));
  const auto moved = simulate::integrate(fT, T.forward((Vec(2) << 0.3, 0.1).finished()), integrator(20.0));
  double radius_err = 0.0;
  for (std::size_t k = 0; k < moved.size(); ++k)
    if (moved.t[k] >= 10.0) radius_err = std::max(radius_err, std::abs((moved.state(k) - yT).norm() - s));
  simulate::Section sec;
  sec.normal = Vec::Unit(2, 0);
  sec.offset = yT[0];
  sec.t_min = 10.0;
  const double p0 = simulate::estimate_period(base, simulate::Section::coordinate(2, 0, 10.0)).period;
  const double p1 = simulate::estimate_period(moved, sec).period;

  const auto ring = RegionSampler::annulus(0.8, 1.2, 1024, 2);
  const double rate = ct::certified_rate(f, ct::Metric::identity(2), ring, true);
  std::vector<Vec> mapped;
  for (const auto& p : ring.samples()) mapped.push_back(T.forward(p));
  const auto cert = ct::check_transverse_contraction(fT, ct::pushforward_metric(ct::Metric::identity(2), T),
                                                     RegionSampler::points(mapped), rate);
  return {radius_err <= 1e-4 && std::abs(p1 - p0) <= 1e-4 && cert.pass,
          "radius error " + fmt(radius_err) + ", period " + fmt(p1) + " vs " + fmt(p0) +
              ", pushforward certificate at rate " + fmt(rate) + " margin " + fmt(cert.worst_margin)};
}

Outcome hierarchy_certificates() {
  std::vector<std::string> notes;
  bool ok = true;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes.push_back("failed: " + what);
    }
  };

  // Reference layer: ṙ = 2(c − r).
  const auto ref = dynamics::ReferenceSystem::constant(Vec::Constant(1, 2.0), Vec::Constant(1, 1.5));
  const VectorField fr(1, [ref](double t, const Vec& r) { return ref.eval(t, r); });
  const auto R = ct::check_contraction(fr, ct::Metric::identity(1),
                                       RegionSampler::box(Vec::Zero(1), Vec::Constant(1, 3.0), 64, 0), 1.5);
  // Canonical layers.
  const auto Cexp = ct::check_contraction(dynamics::CanonicalSystem::exponential(4.0).field(), ct::Metric::identity(1),
                                          RegionSampler::box(Vec::Zero(1), Vec::Ones(1), 64, 0), 3.0);
  const auto Chopf = ct::check_transverse_contraction(hopf().field(), ct::Metric::identity(2),
                                                      RegionSampler::annulus(0.8, 1.2, 512, 0), 0.5);
  // Transformation layer with the phase frozen; a Lyapunov metric handles the
  // spring-damper's non-normal Jacobian.
  dynamics::TransformationSystem ts;
  ts.stiffness = Vec::Constant(1, 100.0);
  ts.damping = Vec::Constant(1, 20.0);
  ts.goals = {dynamics::Goal::fixed(1.0)};
  const VectorField ft(2, [ts](double, const Vec& y) {
    return ts.eval(y, Vec::Ones(1), Vec::Zero(1), Vec::Zero(1), Vec::Zero(1));
  });
  const Mat M = lyapunov(ft.jacobian(Vec::Zero(2)), Mat::Identity(2, 2));
  const auto box2 = RegionSampler::box(-Vec::Ones(2), Vec::Ones(2), 64, 0);
  const double t_rate = 0.9 * ct::certified_rate(ft, ct::Metric::constant(M, "lyapunov"), box2, false);
  const auto T = ct::check_contraction(ft, ct::Metric::constant(M, "lyapunov"), box2, t_rate);
  const double layer_min = std::min({R.rate, T.rate});

  const auto discrete = ct::check_hierarchy({R, Cexp, T});
  expect(R.pass && Cexp.pass && Chopf.pass && T.pass, "individual layers");
  expect(discrete.pass && discrete.kind == ct::CertificateKind::contraction &&
             discrete.rate == std::min(layer_min, Cexp.rate),
         "contracting cascade");
  const auto rhythmic = ct::check_hierarchy({R, Chopf, T});
  expect(rhythmic.pass && rhythmic.kind == ct::CertificateKind::transverse &&
             rhythmic.rate == std::min(layer_min, Chopf.rate),
         "cascade with one transverse layer");
  auto broken = T;
  broken.pass = false;
  expect(!ct::check_hierarchy({R, Chopf, broken}).pass, "failing layer propagates");
  bool refused = false;
  try {
    ct::check_hierarchy({Chopf, Chopf});
  } catch (const PreconditionError&) {
    refused = true;
  }
  expect(refused, "two transverse layers refused");

  // Hopf plus a contracting pull towards x_d: transverse on the annulus 𝒦,
  // contracting on the ball 𝒞, so every start in 𝒦 ∪ 𝒞 meets one equilibrium.
  const Vec xd = (Vec(2) << 1.0, 0.0).finished();
  // |f(x_d)| = ω, so k_inh > ω/r₀ keeps the equilibrium inside 𝒞.
  const double k_inh = 30.0;
  const VectorField h = hopf().field();
  const VectorField fi(2, [h, xd, k_inh](double, const Vec& x) { return Vec(h(x) + k_inh * (xd - x)); },
                       [h, k_inh](double, const Vec& x) { return Mat(h.jacobian(x) - k_inh * Mat::Identity(2, 2)); });
  const auto K = ct::check_transverse_contraction(fi, ct::Metric::identity(2), RegionSampler::annulus(0.7, 1.3, 1024, 4), 0.5);
  const auto C = ct::check_contraction(fi, ct::Metric::identity(2), RegionSampler::ball(xd, 0.3, 512, 4), 0.5);
  const auto U = ct::check_unique_equilibrium(K, C);
  expect(U.pass, "unique-equilibrium certificate");

  std::vector<Vec> starts;
  for (const auto& p : RegionSampler::annulus(0.7, 1.3, 10, 8).samples()) starts.push_back(p);
  for (const auto& p : RegionSampler::ball(xd, 0.3, 10, 8).samples()) starts.push_back(p);
  std::vector<Vec> ends;
  for (const auto& x0 : starts) ends.push_back(simulate::integrate(fi, x0, integrator(20.0, 1e-3, 100)).final_state());
  double diameter = 0.0;
  for (const auto& a : ends)
    for (const auto& b : ends) diameter = std::max(diameter, (a - b).norm());
  expect(diameter <= 1e-4, "20 starts reach one point");
  expect((ends[0] - xd).norm() <= 0.3, "common end point lies in C");

  std::string detail = "cascade rates " + fmt(discrete.rate) + "/" + fmt(rhythmic.rate) + ", K margin " +
                       fmt(K.worst_margin) + ", C margin " + fmt(C.worst_margin) + ", spread of 20 end points " +
                       fmt(diameter) + " at (" + fmt(ends[0][0]) + ", " + fmt(ends[0][1]) + ")";
  for (const auto& n : notes) detail += "; " + n;
  return {ok, detail};
}

Outcome numerics() {
  // RK4 convergence on ẋ = −x and the harmonic oscillator.
  auto final_error = [](const VectorField& f, const Vec& x0, double T, const Vec& exact, double h) {
    return (simulate::integrate(f, x0, integrator(T, h, 1000000)).final_state() - exact).norm();
  };
  const VectorField decay(1, [](double, const Vec& x) { return Vec(-x); });
  const VectorField osc(2, [](double, const Vec& x) { return Vec((Vec(2) << x[1], -x[0]).finished()); });
  double rmin = 1e300, rmax = -1e300;
  for (double h : {0.1, 0.05}) {
    const double r1 = final_error(decay, Vec::Ones(1), 1.0, Vec::Constant(1, std::exp(-1.0)), h) /
                      final_error(decay, Vec::Ones(1), 1.0, Vec::Constant(1, std::exp(-1.0)), h / 2);
    const Vec e2 = (Vec(2) << std::cos(2.0), -std::sin(2.0)).finished();
    const double r2 = final_error(osc, Vec::Unit(2, 0), 2.0, e2, h) / final_error(osc, Vec::Unit(2, 0), 2.0, e2, h / 2);
    rmin = std::min({rmin, r1, r2});
    rmax = std::max({rmax, r1, r2});
  }
  const bool order_ok = rmin >= 8.0 && rmax <= 32.0;

  // Matrix-measure subadditivity.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> dim(2, 6);
  int sub_fail = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng);
    Mat X(n, n), Y(n, n);
    for (int i = 0; i < n * n; ++i) {
      X(i / n, i % n) = n01(rng);
      Y(i / n, i % n) = n01(rng);
    }
    for (auto nm : {ct::Norm::one, ct::Norm::two, ct::Norm::inf})
      if (ct::matrix_measure(X + Y, nm) > ct::matrix_measure(X, nm) + ct::matrix_measure(Y, nm) + 1e-12) ++sub_fail;
  }

  // Transverse restriction against brute-force projected sampling.
  const VectorField f(3, [](double, const Vec& x) {
    Vec v(3);
    v << x[1] - 0.3 * x[0] * x[2], -x[0] + 0.2 * std::sin(x[2]), -0.8 * x[2] + x[0] * x[1];
    return v;
  });
  Mat M(3, 3);
  M << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0;
  double worst_gap = 0.0;
  for (const Vec& x : RegionSampler::box(-Vec::Ones(3), Vec::Ones(3), 8, 4).samples()) {
    const double rate = 0.4;
    const double margin = ct::transverse_margin(f, ct::Metric::constant(M), x, rate);
    const Mat A = f.jacobian(x);
    const Mat S = A.transpose() * M + M * A + 2 * rate * M;
    const Vec c = M * f(x);
    double best = -1e300;
    for (int k = 0; k < 20000; ++k) {
      Vec d(3);
      d << n01(rng), n01(rng), n01(rng);
      d -= c * (c.dot(d) / c.squaredNorm());
      best = std::max(best, 0.5 * d.dot(S * d) / d.dot(M * d));
    }
    worst_gap = std::max(worst_gap, std::abs(best - margin));
  }
  return {order_ok && sub_fail == 0 && worst_gap <= 1e-6,
          "RK4 halving ratios in [" + fmt(rmin) + ", " + fmt(rmax) + "], subadditivity violations " +
              std::to_string(sub_fail) + "/3000, transverse brute-force gap " + fmt(worst_gap)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "heterogeneous Van der Pol locking", 10.0, vdp_locking},
      {2, "synchronization threshold and sync", 30.0, sync_threshold},
      {3, "sparse inhibition stops and releases the network", 10.0, sparse_inhibition},
      {4, "weighted inhibition monotonicity", 0.0, weighted_monotonicity},
      {5, "transverse metric construction on Hopf", 60.0, metric_construction},
      {6, "disturbance tube bound", 60.0, tube_bound},
      {7, "learning round trip", 5.0, learning_round_trip},
      {8, "diffeomorphic scaling", 0.0, diffeomorphic_scaling},
      {9, "hierarchy certificates and unique equilibrium", 0.0, hierarchy_certificates},
      {10, "integrator order, matrix measures, transverse restriction", 0.0, numerics},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.pass = false;
      o.detail += "; took longer than " + fmt(c.time_limit) + " s";
    }
    if (!o.pass) ++failures;
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.title << " [" << fmt(secs) << " s]: " << o.detail;
    std::cout << line.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " acceptance criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
