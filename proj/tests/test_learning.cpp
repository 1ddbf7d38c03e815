#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sidmp/learning.hpp"
#include "sidmp/simulate.hpp"

using namespace sidmp;
using namespace sidmp::learning;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> decaying_centers(int count, double alpha) {
  std::vector<double> c;
  for (int i = 0; i < count; ++i) c.push_back(std::exp(-alpha * i / (count - 1.0)));
  return c;
}

Mat random_weights(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat W(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) W(i, j) = u(rng);
  return W;
}

Mat evaluate(const dynamics::ForcingFunction& f, const Mat& phase) {
  Mat out(phase.rows(), f.output_dim());
  for (Eigen::Index i = 0; i < phase.rows(); ++i)
    out.row(i) = dynamics::eval_forcing(f, phase.row(i).transpose()).transpose();
  return out;
}

Mat decay_phase(int samples) {
  Mat p(samples, 1);
  for (int i = 0; i < samples; ++i) p(i, 0) = std::exp(-4.0 * i / (samples - 1.0));
  return p;
}

// Integrates a discrete primitive with time constant tau and returns the
// demonstration it traces, with exact accelerations.
Demonstration rollout_demo(const dynamics::ForcingFunction& forcing, double tau) {
  const auto canon = dynamics::CanonicalSystem::exponential(4.0, tau);
  dynamics::TransformationSystem ts;
  ts.stiffness = Vec::Constant(1, 100.0);
  ts.damping = Vec::Constant(1, 20.0);
  ts.tau = tau;
  ts.goals = {dynamics::Goal::fixed(1.0)};
  ts.forcing = forcing;
  const auto ref = dynamics::ReferenceSystem::constant(Vec::Ones(1), Vec::Zero(1));
  const auto h = dynamics::compose_hierarchy(ref, canon, {ts});
  simulate::IntegratorConfig ic;
  ic.step = 1e-3;
  ic.duration = 1.5 * tau;
  const Vec s0 = h.pack(Vec::Zero(1), Vec::Ones(1), {Vec::Zero(2)});
  const auto traj = simulate::integrate(h.field, s0, ic);
  const int yo = h.layout.y_offsets[0];
  Demonstration d;
  d.t = traj.t;
  const auto S = static_cast<Eigen::Index>(traj.size());
  d.y.resize(S, 1);
  d.y_dot.resize(S, 1);
  d.y_ddot = Mat(S, 1);
  for (Eigen::Index i = 0; i < S; ++i) {
    const Vec s = traj.state(static_cast<std::size_t>(i));
    d.y(i, 0) = s[yo];
    d.y_dot(i, 0) = s[yo + 1];
    (*d.y_ddot)(i, 0) = h.field(traj.t[static_cast<std::size_t>(i)], s)[yo + 1];
  }
  d.stiffness = ts.stiffness;
  d.damping = ts.damping;
  d.goal = Vec::Ones(1);
  d.tau = tau;
  return d;
}

}  // namespace

TEST_CASE("Gaussian weights are recovered exactly from noiseless targets") {
  std::mt19937_64 rng(5);
  const auto basis = dynamics::ForcingFunction::gaussian(decaying_centers(10, 4.0), 0.05, Mat::Zero(10, 2));
  auto truth = basis;
  truth.weights = random_weights(rng, 10, 2, 100.0);
  const Mat phase = decay_phase(1500);
  const auto fit = fit_weights(evaluate(truth, phase), phase, basis, 0.0);
  CHECK((fit.forcing.weights - truth.weights).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(fit.rmse < 1e-9);
  CHECK(fit.rmse <= fit.baseline_rmse);
}

TEST_CASE("von Mises weights are recovered exactly from noiseless targets") {
  std::mt19937_64 rng(8);
  const auto centers = dynamics::ForcingFunction::uniform_angles(12);
  const auto basis = dynamics::ForcingFunction::von_mises(centers, 0.4, Mat::Zero(12, 2));
  auto truth = basis;
  truth.weights = random_weights(rng, 12, 2, 5.0);
  Mat phase(720, 2);
  for (int i = 0; i < 720; ++i) {
    const double a = 2 * kPi * i / 720.0, r = 0.8 + 0.4 * ((i * 7) % 11) / 10.0;
    phase(i, 0) = r * std::cos(a);
    phase(i, 1) = r * std::sin(a);
  }
  const auto fit = fit_weights(evaluate(truth, phase), phase, basis, 0.0);
  CHECK((fit.forcing.weights - truth.weights).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero targets give zero weights") {
  const auto basis = dynamics::ForcingFunction::gaussian(decaying_centers(6, 4.0), 0.05, Mat::Zero(6, 1));
  const Mat phase = decay_phase(300);
  const auto fit = fit_weights(Mat::Zero(300, 1), phase, basis);
  CHECK(fit.forcing.weights.norm() < 1e-12);
  CHECK(fit.rmse == 0.0);
}

TEST_CASE("ridge shrinks the weights and never beats the unregularized residual") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 2.0);
  const auto basis = dynamics::ForcingFunction::gaussian(decaying_centers(10, 4.0), 0.05, Mat::Zero(10, 1));
  auto truth = basis;
  truth.weights = random_weights(rng, 10, 1, 50.0);
  const Mat phase = decay_phase(800);
  Mat targets = evaluate(truth, phase);
  for (Eigen::Index i = 0; i < targets.rows(); ++i) targets(i, 0) += noise(rng);

  const auto plain = fit_weights(targets, phase, basis, 0.0);
  double prev_norm = plain.forcing.weights.norm(), prev_rmse = plain.rmse;
  for (double eps : {1e-2, 1.0, 1e2, 1e4}) {
    const auto r = fit_weights(targets, phase, basis, eps);
    CHECK(r.ridge == eps);
    CHECK(r.forcing.weights.norm() <= prev_norm + 1e-9);
    CHECK(r.rmse >= prev_rmse - 1e-12);
    CHECK(r.rmse <= r.baseline_rmse);
    prev_norm = r.forcing.weights.norm();
    prev_rmse = r.rmse;
  }
  const auto automatic = fit_weights(targets, phase, basis, -1.0);
  CHECK(automatic.ridge > 0.0);
  CHECK(automatic.rmse == Approx(plain.rmse).epsilon(1e-6));
}

TEST_CASE("rank-deficient designs are refused without ridge") {
  const auto basis = dynamics::ForcingFunction::gaussian({0.5, 0.5, 0.2}, 0.05, Mat::Zero(3, 1));
  const Mat phase = decay_phase(200);
  CHECK_THROWS_AS(fit_weights(Mat::Ones(200, 1), phase, basis, 0.0), ConditioningError);
  CHECK_NOTHROW(fit_weights(Mat::Ones(200, 1), phase, basis, 1e-6));
}

TEST_CASE("target forcing follows the transformation system") {
  Demonstration d;
  d.t = {0.0, 0.1, 0.2};
  d.y = (Mat(3, 1) << 0.0, 0.5, 0.9).finished();
  d.y_dot = (Mat(3, 1) << 1.0, 2.0, 0.5).finished();
  d.y_ddot = (Mat(3, 1) << 3.0, -1.0, 0.0).finished();
  d.stiffness = Vec::Constant(1, 25.0);
  d.damping = Vec::Constant(1, 10.0);
  d.goal = Vec::Constant(1, 2.0);
  d.tau = 0.5;
  const Mat f = compute_target_forcing(d);
  for (int i = 0; i < 3; ++i)
    CHECK(f(i, 0) == Approx(0.5 * (*d.y_ddot)(i, 0) - 25.0 * (2.0 - d.y(i, 0)) + 10.0 * d.y_dot(i, 0)));
}

TEST_CASE("differentiation is exact on quadratics over uneven grids") {
  const std::vector<double> t{0.0, 0.1, 0.25, 0.3, 0.5, 0.9};
  Mat v(6, 1), expect(6, 1);
  for (int i = 0; i < 6; ++i) {
    v(i, 0) = 3.0 * t[i] * t[i] - 2.0 * t[i] + 1.0;
    expect(i, 0) = 6.0 * t[i] - 2.0;
  }
  CHECK((differentiate(t, v) - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(differentiate({0.0, 1.0}, Mat::Zero(2, 1)), PreconditionError);
}

TEST_CASE("phase rollout of exponential decay") {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.01 * i);
  const Mat p = phase_rollout(dynamics::CanonicalSystem::exponential(4.0, 2.0), Vec::Ones(1), t);
  for (int i = 0; i <= 100; ++i) CHECK(p(i, 0) == Approx(std::exp(-2.0 * t[i])).epsilon(1e-10));
}

TEST_CASE("fitted weights do not depend on the demonstration time scale") {
  std::mt19937_64 rng(13);
  const auto basis = dynamics::ForcingFunction::gaussian(decaying_centers(8, 4.0), 0.04, Mat::Zero(8, 1));
  auto truth = basis;
  truth.weights = random_weights(rng, 8, 1, 200.0);
  for (double tau : {1.0, 2.0, 0.5}) {
    CAPTURE(tau);
    const Demonstration d = rollout_demo(truth, tau);
    const Mat phase = phase_rollout(dynamics::CanonicalSystem::exponential(4.0, tau), Vec::Ones(1), d.t);
    const auto fit = fit_weights(compute_target_forcing(d), phase, basis, 0.0);
    CHECK((fit.forcing.weights - truth.weights).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("demonstration CSV parsing") {
  SUBCASE("one output with accelerations") {
    const auto d = parse_demonstration_csv("t,y,ydot,yddot\n0,1,2,3\n0.1,4,5,6\n0.2,7,8,9\n");
    CHECK(d.samples() == 3);
    CHECK(d.outputs() == 1);
    REQUIRE(d.y_ddot.has_value());
    CHECK((*d.y_ddot)(2, 0) == 9.0);
    CHECK(d.y_dot(1, 0) == 5.0);
  }
  SUBCASE("two outputs without accelerations") {
    const auto d = parse_demonstration_csv("t,y_0,ydot_0,y_1,ydot_1\n0,1,2,3,4\n1,5,6,7,8\n2,0,0,0,0\n");
    CHECK(d.outputs() == 2);
    CHECK_FALSE(d.y_ddot.has_value());
    CHECK(d.y(1, 1) == 7.0);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(parse_demonstration_csv("y,ydot\n1,2\n"), ValidationError);
    CHECK_THROWS_AS(parse_demonstration_csv("t,y\n0,1\n"), ValidationError);
    CHECK_THROWS_AS(parse_demonstration_csv("t,y,ydot\n0,1\n"), ValidationError);
    CHECK_THROWS_AS(parse_demonstration_csv("t,y,ydot\n0,1,abc\n"), ValidationError);
  }
}

TEST_CASE("demonstration validation") {
  Demonstration d = parse_demonstration_csv("t,y,ydot\n0,0,0\n0.1,0.1,1\n0.2,0.2,1\n");
  d.stiffness = Vec::Constant(1, 10.0);
  d.damping = Vec::Constant(1, 5.0);
  d.goal = Vec::Constant(1, 1.0);
  CHECK_NOTHROW(d.validate());
  d.t[2] = 0.1;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d.t[2] = 0.2;
  d.tau = 0.0;
  CHECK_THROWS_AS(d.validate(), ParameterError);
}
