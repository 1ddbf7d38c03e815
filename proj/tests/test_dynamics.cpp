#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sidmp/dynamics.hpp"
#include "sidmp/simulate.hpp"

using namespace sidmp;
using namespace sidmp::dynamics;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

TransformationSystem spring(double k, double b, double g, double tau = 1.0) {
  TransformationSystem ts;
  ts.stiffness = Vec::Constant(1, k);
  ts.damping = Vec::Constant(1, b);
  ts.tau = tau;
  ts.goals = {Goal::fixed(g)};
  return ts;
}

}  // namespace

TEST_CASE("discrete primitive rests at its goal") {
  DmpNode node;
  node.canonical = CanonicalSystem::exponential(4.0);
  node.transform = spring(37.0, 5.0, 0.8);
  node.x = Vec::Zero(1);
  node.y = Vec::Constant(1, 0.8);
  node.y_dot = Vec::Zero(1);
  const auto rate = eval_discrete_dmp(node, 0.0);
  CHECK(rate.y_ddot[0] == 0.0);
  CHECK(rate.y_dot[0] == 0.0);
  CHECK(rate.x_dot == 0.0);
}

TEST_CASE("exponential phase decays analytically") {
  const double alpha = 3.0;
  const auto c = CanonicalSystem::exponential(alpha);
  simulate::IntegratorConfig ic;
  ic.step = 1e-3;
  ic.duration = 1.0;
  const auto traj = simulate::integrate(c.field(), Vec::Constant(1, 2.0), ic);
  CHECK(traj.final_state()[0] / 2.0 == Approx(std::exp(-alpha)).epsilon(1e-8));
}

TEST_CASE("Hopf field values") {
  HopfParams p;
  p.omega = 3.0;
  p.rho = 2.0;
  p.radius = 1.5;
  p.tau = 1.0;
  const Vec on = eval_hopf(p, v2(1.5, 0.0));
  CHECK(on[0] == Approx(0.0));
  CHECK(on[1] == Approx(-3.0 * 1.5));
  CHECK(eval_hopf(p, v2(0, 0)).norm() == 0.0);
  HopfParams slow = p;
  slow.tau = 2.0;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 50; ++i) {
    const Vec x = v2(u(rng), u(rng));
    CHECK((eval_hopf(slow, x) - 0.5 * eval_hopf(p, x)).norm() < 1e-14);
  }
}

TEST_CASE("Hopf radial invariance") {
  HopfParams p;
  p.rho = 1.3;
  p.radius = 0.9;
  p.tau = 0.7;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const Vec x = v2(u(rng), u(rng));
    const double s = x.squaredNorm();
    const double d = 2.0 * x.dot(eval_hopf(p, x));
    CHECK(d == Approx(2.0 * p.rho * (p.radius * p.radius - s) * s / p.tau).epsilon(1e-12));
    if (s > 1e-6 && std::abs(s - p.radius * p.radius) > 1e-9) CHECK((d > 0) == (s < p.radius * p.radius));
  }
}

TEST_CASE("Van der Pol caption and classical forms") {
  VanDerPolParams p;
  p.omega = 1.0;
  p.mu = 2.0;
  CHECK(eval_vanderpol(p, v2(0, 0)).norm() == 0.0);
  Vec f = eval_vanderpol(p, v2(1, 1));
  CHECK(f[0] == Approx(1.0));
  CHECK(f[1] == Approx(-1.0));
  p.classical = true;
  f = eval_vanderpol(p, v2(1, 1));
  CHECK(f[0] == Approx(1.0));
  CHECK(f[1] == Approx(-1.0));
  // Jacobians agree with finite differences.
  for (bool classical : {false, true}) {
    p.classical = classical;
    const Vec x = v2(0.3, -0.7);
    const Mat fd = finite_difference_jacobian([&](const Vec& z) { return eval_vanderpol(p, z); }, x);
    CHECK((fd - vanderpol_jacobian(p, x)).norm() < 1e-7);
  }
}

TEST_CASE("forcing basis identities") {
  const std::vector<double> centers{1.0, 0.7, 0.4, 0.2, 0.05};
  const auto equal = ForcingFunction::gaussian(centers, 0.1, Mat::Constant(5, 1, 2.5));
  for (double x : {0.0, 0.03, 0.33, 0.9, 1.2}) CHECK(eval_forcing(equal, Vec::Constant(1, x))[0] == Approx(2.5 * x));
  const auto zero = ForcingFunction::gaussian(centers, 0.1, Mat::Zero(5, 1));
  CHECK(eval_forcing(zero, Vec::Constant(1, 0.6))[0] == 0.0);

  Mat w(5, 1);
  w << 3, -1, 4, 1, -5;
  auto shifted = ForcingFunction::gaussian(centers, 0.1, (w.array() + 0.75).matrix());
  const auto base = ForcingFunction::gaussian(centers, 0.1, w);
  for (double x : {0.0, 0.1, 0.5, 0.95}) {
    const Vec ph = Vec::Constant(1, x);
    CHECK(eval_forcing(shifted, ph)[0] - eval_forcing(base, ph)[0] == Approx(0.75 * x));
    CHECK(eval_forcing(base, Vec::Zero(1))[0] == 0.0);
  }

  const auto angles = ForcingFunction::uniform_angles(8);
  const auto vm = ForcingFunction::von_mises(angles, 0.4, Mat::Zero(8, 2));
  const Vec peak = v2(std::cos(angles[3]), std::sin(angles[3]));
  CHECK(vm.activations(peak)[3] == Approx(1.0));
  CHECK(vm.normalized(peak).sum() == Approx(1.0));
}

TEST_CASE("hierarchy Jacobian is block lower triangular") {
  HopfParams hp;
  auto canon = CanonicalSystem::make_hopf(hp);
  canon.radius_ref_index = 0;
  const auto ref = ReferenceSystem::constant(Vec::Constant(1, 2.0), Vec::Constant(1, 1.0));
  TransformationSystem ts;
  ts.stiffness = Vec::Constant(2, 50.0);
  ts.damping = Vec::Constant(2, 14.0);
  HarmonicGoal hg;
  hg.amp = 0.0;
  hg.amp_gain = 0.3;
  hg.amp_ref_index = 0;
  hg.sin_coeffs = {1.0};
  ts.goals = {Goal::phase_based(hg), Goal::from_reference(0)};
  ts.forcing = ForcingFunction::von_mises(ForcingFunction::uniform_angles(6), 0.5, Mat::Constant(6, 4, 0.3));
  const auto h = compose_hierarchy(ref, canon, {ts});
  const auto& L = h.layout;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int s = 0; s < 100; ++s) {
    Vec x(L.total);
    for (int i = 0; i < L.total; ++i) x[i] = u(rng);
    x[0] = 1.0 + 0.5 * u(rng);  // keep the commanded radius positive
    x.segment(L.x_offset, 2) += v2(1.5, 0.0);
    const Mat J = finite_difference_jacobian([&](const Vec& z) { return h.field(0.0, z); }, x);
    const double scale = 1.0 + J.cwiseAbs().maxCoeff();
    CHECK(J.block(L.r_offset, L.x_offset, L.r_dim, L.total - L.x_offset).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    CHECK(J.block(L.x_offset, L.y_offsets[0], L.x_dim, L.total - L.y_offsets[0]).cwiseAbs().maxCoeff() <=
          1e-6 * scale);
  }
}

TEST_CASE("discrete hierarchy converges to the referenced goal") {
  const auto ref = ReferenceSystem::constant(Vec::Constant(1, 5.0), Vec::Constant(1, 0.7));
  TransformationSystem ts = spring(100.0, 20.0, 0.0);
  ts.goals = {Goal::from_reference(0)};
  const auto h = compose_hierarchy(ref, CanonicalSystem::exponential(4.0), {ts});
  simulate::IntegratorConfig ic;
  ic.duration = 8.0;
  const auto traj = simulate::integrate(h.field, h.pack(Vec::Zero(1), Vec::Ones(1), {Vec::Zero(2)}), ic);
  const Vec xf = traj.final_state();
  CHECK(xf[0] == Approx(0.7).epsilon(1e-9));
  CHECK(std::abs(xf[1]) < 1e-9);
  CHECK(xf[h.layout.y_offsets[0]] == Approx(0.7).epsilon(1e-6));
  CHECK(std::abs(xf[h.layout.y_offsets[0] + 1]) < 1e-6);
}

TEST_CASE("rhythmic hierarchy output inherits the canonical period") {
  HopfParams hp;
  hp.omega = 2.0 * kPi;
  const auto ref = ReferenceSystem::constant(Vec::Constant(1, 1.0), Vec::Constant(1, 1.0));
  TransformationSystem ts = spring(60.0, 15.0, 0.0);
  Mat w = Mat::Zero(5, 2);
  w.col(0).setConstant(20.0);  // f = 20·x₁, a pure first harmonic
  ts.forcing = ForcingFunction::von_mises(ForcingFunction::uniform_angles(5), 0.6, w);
  const auto h = compose_hierarchy(ref, CanonicalSystem::make_hopf(hp), {ts});
  simulate::IntegratorConfig ic;
  ic.duration = 12.0;
  const auto traj = simulate::integrate(h.field, h.pack(Vec::Ones(1), v2(1, 0), {Vec::Zero(2)}), ic);
  const int yo = h.layout.y_offsets[0];
  // Mean-crossing section on the output.
  double mean = 0.0;
  int count = 0;
  for (std::size_t s = 0; s < traj.size(); ++s)
    if (traj.t[s] > 6.0) mean += traj.x(static_cast<Eigen::Index>(s), yo), ++count;
  mean /= count;
  simulate::Section sec;
  sec.normal = Vec::Zero(traj.dim());
  sec.normal[yo] = 1.0;
  sec.offset = mean;
  sec.t_min = 6.0;
  const auto est = simulate::estimate_period(traj, sec);
  CHECK(est.period == Approx(1.0).epsilon(1e-4));
}

TEST_CASE("diffeomorphic scaling of the Hopf cycle") {
  HopfParams hp;
  const VectorField f = CanonicalSystem::make_hopf(hp).field();
  simulate::IntegratorConfig ic;
  ic.duration = 10.0;

  SUBCASE("identity leaves the field unchanged") {
    const auto g = apply_diffeomorphism(f, Diffeomorphism::identity(2));
    for (double a : {0.1, 1.0, 2.5}) {
      const Vec x = v2(std::cos(a) * a, std::sin(a));
      CHECK((g(x) - f(x)).norm() < 1e-14);
    }
  }
  SUBCASE("uniform scaling doubles the radius") {
    const auto T = Diffeomorphism::affine(2.0, Mat::Identity(2, 2), Vec::Zero(2));
    const auto traj = simulate::integrate(apply_diffeomorphism(f, T), v2(1.0, 0.3), ic);
    for (std::size_t s = traj.size() / 2; s < traj.size(); ++s)
      CHECK(traj.state(s).norm() == Approx(2.0).epsilon(1e-4));
  }
  SUBCASE("rotation keeps the radius and rotates the flow") {
    const Mat R = rotation2(kPi / 3);
    const auto T = Diffeomorphism::affine(1.0, R, Vec::Zero(2));
    const Vec x0 = v2(0.4, 0.2);
    const auto a = simulate::integrate(f, x0, ic);
    const auto b = simulate::integrate(apply_diffeomorphism(f, T), R * x0, ic);
    for (std::size_t s = 0; s < a.size(); s += 97) CHECK((R * a.state(s) - b.state(s)).norm() < 1e-9);
    CHECK(b.final_state().norm() == Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("affine conjugacy with translation") {
    const Vec shift = v2(0.5, -1.0);
    const auto T = Diffeomorphism::affine(1.7, rotation2(0.4), shift);
    const Vec x0 = v2(0.2, 0.9);
    const auto a = simulate::integrate(f, x0, ic);
    const auto b = simulate::integrate(apply_diffeomorphism(f, T), T.forward(x0), ic);
    for (std::size_t s = 0; s < a.size(); s += 101) CHECK((T.forward(a.state(s)) - b.state(s)).norm() < 1e-8);
  }
}

TEST_CASE("parameter validation") {
  HopfParams p;
  p.tau = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  CHECK_THROWS_AS(ForcingFunction::gaussian({}, 1.0, Mat()), Error);
  CHECK_THROWS_AS(eval_hopf(HopfParams{}, Vec::Zero(3)), DimensionError);
}
