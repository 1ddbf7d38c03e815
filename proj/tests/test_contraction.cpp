#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "sidmp/contraction.hpp"

using namespace sidmp;
using namespace sidmp::contraction;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

VectorField hopf_field() {
  return dynamics::CanonicalSystem::make_hopf(dynamics::HopfParams{}).field();
}

VectorField linear(const Mat& A) {
  return VectorField(static_cast<int>(A.rows()), [A](double, const Vec& x) { return Vec(A * x); },
                     [A](double, const Vec&) { return A; });
}

// Solves AᵀM + MA = −Q through the Kronecker form.
Mat lyapunov(const Mat& A, const Mat& Q) {
  const Eigen::Index n = A.rows();
  const Mat I = Mat::Identity(n, n);
  const Mat K = Eigen::kroneckerProduct(I, A.transpose()) + Eigen::kroneckerProduct(A.transpose(), I);
  const Vec q = Eigen::Map<const Vec>(Q.data(), n * n);
  const Vec m = K.fullPivLu().solve(-q);
  return Eigen::Map<const Mat>(m.data(), n, n);
}

}  // namespace

TEST_CASE("matrix measures") {
  CHECK(matrix_measure(-Mat::Identity(3, 3), Norm::two) == Approx(-1.0));
  Mat A(2, 2);
  A << -2, 1, 0, -3;
  // Column sums a_jj + Σ|a_ij|: −2 and −3+1.
  CHECK(matrix_measure(A, Norm::one) == Approx(-2.0));
  // Row sums: −2+1 and −3.
  CHECK(matrix_measure(A, Norm::inf) == Approx(-1.0));
  CHECK(matrix_measure(hopf_field().jacobian(Vec::Zero(2)), Norm::two) == Approx(1.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    Mat X(4, 4), Y(4, 4);
    for (int i = 0; i < 16; ++i) {
      X(i / 4, i % 4) = n01(rng);
      Y(i / 4, i % 4) = n01(rng);
    }
    for (Norm nm : {Norm::one, Norm::two, Norm::inf}) {
      CHECK(matrix_measure(X + Y, nm) <= matrix_measure(X, nm) + matrix_measure(Y, nm) + 1e-12);
      CHECK(matrix_measure(2.5 * X, nm) == Approx(2.5 * matrix_measure(X, nm)));
    }
  }
}

TEST_CASE("contraction of linear fields") {
  const auto box = RegionSampler::box(-Vec::Ones(2), Vec::Ones(2), 64, 2);
  Mat A(2, 2);
  A << -2, 0, 0, -3;
  const auto pass = check_contraction(linear(A), Metric::identity(2), box, 1.5);
  CHECK(pass.pass);
  CHECK(pass.worst_margin == Approx(-0.5));
  const auto fail = check_contraction(linear(A), Metric::identity(2), box, 2.5);
  CHECK_FALSE(fail.pass);
  CHECK(fail.worst_margin == Approx(0.5));
  CHECK(certified_rate(linear(A), Metric::identity(2), box, false) == Approx(2.0));
}

TEST_CASE("a Lyapunov metric certifies what the identity cannot") {
  Mat A(2, 2);
  A << -1, 10, 0, -1;
  const auto box = RegionSampler::box(-Vec::Ones(2), Vec::Ones(2), 16, 0);
  CHECK_FALSE(check_contraction(linear(A), Metric::identity(2), box, 0.1).pass);
  const Mat M = lyapunov(A, Mat::Identity(2, 2));
  CHECK((A.transpose() * M + M * A + Mat::Identity(2, 2)).norm() < 1e-10);
  const auto cert = check_contraction(linear(A), Metric::constant(M, "lyapunov"), box, 0.01);
  CHECK(cert.pass);
  CHECK(cert.metric_id == "lyapunov");
  CHECK(cert.min_metric_eigenvalue > 0.0);
}

TEST_CASE("transverse contraction of the Hopf cycle") {
  const auto circle = RegionSampler::points(circle_points(64, 1.0));
  const auto ok = check_transverse_contraction(hopf_field(), Metric::identity(2), circle, 1.9);
  CHECK(ok.pass);
  CHECK(ok.worst_margin == Approx(-0.1).epsilon(1e-9));
  const auto bad = check_transverse_contraction(hopf_field(), Metric::identity(2), circle, 2.1);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_margin == Approx(0.1).epsilon(1e-9));
  CHECK(certified_rate(hopf_field(), Metric::identity(2), circle, true) == Approx(2.0));

  // Along the cycle plain contraction is marginal at best.
  CHECK(check_contraction(hopf_field(), Metric::identity(2), circle, 0.0).worst_margin == Approx(0.0));
  CHECK_FALSE(check_contraction(hopf_field(), Metric::identity(2), circle, 0.01).pass);

  const auto with_origin = RegionSampler::points({Vec::Zero(2), Vec::Ones(2)});
  CHECK_THROWS_AS(check_transverse_contraction(hopf_field(), Metric::identity(2), with_origin, 1.0),
                  PreconditionError);
}

TEST_CASE("transverse margin matches a brute-force search over admissible directions") {
  const VectorField f(3, [](double, const Vec& x) {
    Vec v(3);
    v << x[1] - 0.3 * x[0] * x[2], -x[0] + 0.2 * std::sin(x[2]), -0.8 * x[2] + x[0] * x[1];
    return v;
  });
  Mat M(3, 3);
  M << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0;
  const Metric metric = Metric::constant(M);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  for (const Vec& x : RegionSampler::box(-Vec::Ones(3), Vec::Ones(3), 5, 4).samples()) {
    const double rate = 0.4;
    const double margin = transverse_margin(f, metric, x, rate);
    const Mat A = f.jacobian(x);
    const Mat S = A.transpose() * M + M * A + 2 * rate * M;
    const Vec c = M * f(x);
    double best = -1e300;
    for (int k = 0; k < 10000; ++k) {
      Vec d(3);
      d << n01(rng), n01(rng), n01(rng);
      d -= c * (c.dot(d) / c.squaredNorm());
      best = std::max(best, 0.5 * d.dot(S * d) / d.dot(M * d));
    }
    CHECK(best <= margin + 1e-9);
    CHECK(best == Approx(margin).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("synchronization condition for all-to-all Hopf networks") {
  const auto lap = [](double k) {
    return network::assemble_block_laplacian(
        network::CouplingGraph::all_to_all(4, k * Mat::Identity(2, 2)), 2);
  };
  const auto disk = RegionSampler::ball(Vec::Zero(2), 1.3, 512, 1);

  SUBCASE("threshold on a disk") {
    const auto weak = check_sync_condition(lap(0.1), {hopf_field()}, disk);
    CHECK(weak.value("lambda_n_plus_1") == Approx(0.4));
    CHECK(weak.value("sup_lambda_max_As") == Approx(1.0));
    CHECK_FALSE(weak.pass);
    const auto strong = check_sync_condition(lap(1.0), {hopf_field()}, disk);
    CHECK(strong.pass);
    CHECK(strong.value("threshold_factor") == Approx(0.25));
    CHECK(check_sync_condition(lap(0.26), {hopf_field()}, disk).pass);
    CHECK_FALSE(check_sync_condition(lap(0.24), {hopf_field()}, disk).pass);
  }
  SUBCASE("annulus around the cycle") {
    const auto ring = RegionSampler::annulus(0.9, 1.1, 2048, 1);
    const auto c = check_sync_condition(lap(1.0), {hopf_field()}, ring);
    CHECK(c.value("sup_lambda_max_As") == Approx(0.19).epsilon(1e-2));
    CHECK(c.value("sup_lambda_max_As") <= 0.19 + 1e-12);
  }
  SUBCASE("zero gain") {
    CHECK_THROWS_AS(check_sync_condition(lap(0.0), {hopf_field()}, disk), ValidationError);
  }
  SUBCASE("disconnected graph") {
    network::CouplingGraph g(4, 2);
    g.add_edge(0, 1, Mat::Identity(2, 2));
    g.add_edge(2, 3, Mat::Identity(2, 2));
    CHECK_THROWS_AS(check_sync_condition(network::assemble_block_laplacian(g, 2), {hopf_field()}, disk),
                    PreconditionError);
  }
}

TEST_CASE("pushforward metrics") {
  const Mat M = (Mat(2, 2) << 3.0, 0.5, 0.5, 1.0).finished();
  const Vec y = (Vec(2) << 0.3, -0.7).finished();

  const auto same = pushforward_metric(Metric::constant(M), dynamics::Diffeomorphism::identity(2));
  CHECK((same(y) - M).norm() < 1e-12);

  const auto T = dynamics::Diffeomorphism::affine(2.0, Mat::Identity(2, 2), Vec::Zero(2));
  const auto scaled = pushforward_metric(Metric::constant(M), T);
  CHECK((scaled(y) - 0.25 * M).norm() < 1e-12);

  // A Hopf field scaled and rotated keeps its certified transverse rate under
  // the pushed-forward metric.
  const auto Tr = dynamics::Diffeomorphism::affine(2.0, rotation2(kPi / 5), (Vec(2) << 1, -2).finished());
  const auto base = circle_points(48, 1.0);
  std::vector<Vec> mapped;
  for (const auto& p : base) mapped.push_back(Tr.forward(p));
  const double rate0 =
      certified_rate(hopf_field(), Metric::identity(2), RegionSampler::points(base), true);
  const double rate1 = certified_rate(dynamics::apply_diffeomorphism(hopf_field(), Tr),
                                      pushforward_metric(Metric::identity(2), Tr),
                                      RegionSampler::points(mapped), true);
  CHECK(rate1 == Approx(rate0).epsilon(1e-6));
}

TEST_CASE("hierarchy composition") {
  const auto box = RegionSampler::box(-Vec::Ones(2), Vec::Ones(2), 16, 0);
  const auto c_fast = check_contraction(linear(-3.0 * Mat::Identity(2, 2)), Metric::identity(2), box, 1.0);
  const auto c_slow = check_contraction(linear(-1.5 * Mat::Identity(2, 2)), Metric::identity(2), box, 1.0);
  const auto c_fail = check_contraction(linear(-0.5 * Mat::Identity(2, 2)), Metric::identity(2), box, 1.0);
  const auto circle = RegionSampler::points(circle_points(32, 1.0));
  const auto t_ok = check_transverse_contraction(hopf_field(), Metric::identity(2), circle, 1.0);

  const auto both = check_hierarchy({c_fast, c_slow});
  CHECK(both.kind == CertificateKind::contraction);
  CHECK(both.pass);
  CHECK(both.rate == Approx(1.0));
  CHECK(both.worst_margin == Approx(std::max(c_fast.worst_margin, c_slow.worst_margin)));

  const auto with_cycle = check_hierarchy({c_fast, t_ok});
  CHECK(with_cycle.kind == CertificateKind::transverse);
  CHECK(with_cycle.pass);

  CHECK_FALSE(check_hierarchy({c_fast, c_fail}).pass);
  CHECK_THROWS_AS(check_hierarchy({t_ok, t_ok}), PreconditionError);
  CHECK_THROWS_AS(check_hierarchy({}), ParameterError);
}

TEST_CASE("unique equilibrium needs overlapping regions") {
  // Hopf plus a strong pull towards (1, 0): transverse on the annulus,
  // contracting on the small disk around the goal.
  const Vec goal = (Vec(2) << 1.0, 0.0).finished();
  const VectorField h = hopf_field();
  const double k = 12.0;
  const VectorField f(2, [h, goal, k](double, const Vec& x) { return Vec(h(x) + k * (goal - x)); },
                      [h, k](double, const Vec& x) { return Mat(h.jacobian(x) - k * Mat::Identity(2, 2)); });
  const auto C = check_contraction(f, Metric::identity(2), RegionSampler::ball(goal, 0.3, 256, 1), 0.5);
  REQUIRE(C.pass);
  const auto ring = RegionSampler::annulus(0.9, 1.1, 256, 1);
  const auto K = check_transverse_contraction(f, Metric::identity(2), ring, 0.1);
  const auto u = check_unique_equilibrium(K, C);
  CHECK(u.kind == CertificateKind::unique_equilibrium);
  CHECK(u.value("intersection_samples") > 0);
  CHECK(u.pass == K.pass);

  const auto far = check_contraction(f, Metric::identity(2),
                                     RegionSampler::ball((Vec(2) << 5.0, 5.0).finished(), 0.3, 64, 1), 0.5);
  CHECK(check_unique_equilibrium(K, far).value("intersection_samples") == 0.0);
  CHECK_FALSE(check_unique_equilibrium(K, far).pass);
  CHECK_THROWS_AS(check_unique_equilibrium(C, K), ParameterError);
}

TEST_CASE("tube bound") {
  TubeBoundConfig cfg;
  cfg.x0 = (Vec(2) << 1.0, 0.0).finished();
  cfg.duration = 3.0;
  cfg.runs = 8;
  cfg.rate = 1.0;

  SUBCASE("no disturbance stays on the orbit") {
    cfg.w_bar = 0.0;
    const auto r = tube_bound_check(hopf_field(), cfg);
    CHECK(r.worst_distance < 1e-6);
    CHECK(r.pass);
  }
  SUBCASE("random and constant disturbances") {
    cfg.w_bar = 0.05;
    const auto r = tube_bound_check(hopf_field(), cfg);
    CHECK(r.bound == Approx(0.05));
    CHECK(r.R == Approx(1.0));
    CHECK(r.worst_distance > 0.0);
    CHECK(r.worst_distance <= r.bound);
    CHECK(r.pass);
    cfg.constant = true;
    const auto c = tube_bound_check(hopf_field(), cfg);
    CHECK(c.pass);
    CHECK(c.per_run_max.size() == 8);
  }
  SUBCASE("scaling the metric leaves the bound alone") {
    cfg.w_bar = 0.05;
    const auto a = tube_bound_check(hopf_field(), cfg);
    cfg.metric = 4.0 * Mat::Identity(2, 2);
    const auto b = tube_bound_check(hopf_field(), cfg);
    CHECK(b.R == Approx(1.0));
    CHECK(b.bound == Approx(a.bound));
    CHECK(b.worst_distance == Approx(a.worst_distance));
  }
  SUBCASE("invalid settings") {
    cfg.rate = 0.0;
    CHECK_THROWS_AS(tube_bound_check(hopf_field(), cfg), ParameterError);
  }
}
