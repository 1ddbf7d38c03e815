#include "sidmp/metric_synthesis.hpp"

#include <cmath>
#include <sstream>

#include "sidmp/parallel.hpp"

namespace sidmp::contraction {

namespace {

/// One RK4 step of ẋ = f(x), Ṗ = B(x)P.
template <class B>
void rk4_flow_step(const VectorField& f, Vec& x, Mat& P, double h, B&& rate) {
  const Vec k1 = f(x);
  const Mat m1 = rate(x) * P;
  const Vec x2 = x + 0.5 * h * k1;
  const Mat P2 = P + 0.5 * h * m1;
  const Vec k2 = f(x2);
  const Mat m2 = rate(x2) * P2;
  const Vec x3 = x + 0.5 * h * k2;
  const Mat P3 = P + 0.5 * h * m2;
  const Vec k3 = f(x3);
  const Mat m3 = rate(x3) * P3;
  const Vec x4 = x + h * k3;
  const Mat P4 = P + h * m3;
  const Vec k4 = f(x4);
  const Mat m4 = rate(x4) * P4;
  x += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
  P += (h / 6.0) * (m1 + 2.0 * (m2 + m3) + m4);
  if (!x.allFinite() || !P.allFinite())
    throw BuildFailure("flow or fundamental matrix became non-finite");
}

Mat default_Q(const Vec& fx) {
  const double s = fx.squaredNorm();
  if (s == 0.0) throw PreconditionError("metric construction reached an equilibrium");
  return Mat::Identity(fx.size(), fx.size()) - fx * fx.transpose() / s;
}

Vec flow_to(const VectorField& f, Vec x, double t, int substeps) {
  const double h = t / substeps;
  for (int i = 0; i < substeps; ++i) {
    const Vec k1 = f(x);
    const Vec k2 = f(Vec(x + 0.5 * h * k1));
    const Vec k3 = f(Vec(x + 0.5 * h * k2));
    const Vec k4 = f(Vec(x + h * k3));
    x += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
  }
  return x;
}

struct ZParts {
  Vec M21;
  Mat C;  // cross-term integral
  Mat G;  // ∫ e^{2rt} U₂ᵀU₂ dt
  Mat E;
  Vec f0;
};

/// Integrals entering M₂₁ and M₂₂ at x0 over a fixed horizon of `steps` steps.
ZParts z_parts(const VectorField& f, const Vec& x0, double h, int steps, double r) {
  const int n = f.dim();
  ZParts z;
  z.f0 = f(x0);
  z.E = transverse_basis(z.f0);
  const int m = n - 1;

  std::vector<Mat> psi(static_cast<std::size_t>(steps + 1));
  std::vector<Mat> psi_dot(static_cast<std::size_t>(steps + 1));
  std::vector<Mat> gram(static_cast<std::size_t>(steps + 1));
  Vec x = x0;
  Mat Phi = Mat::Identity(n, n);
  auto record = [&](int k) {
    const Vec fx = f(x);
    const Mat A = f.jacobian(x);
    const double s = fx.squaredNorm();
    const Mat PE = Phi * z.E;
    const Vec Af = A * fx;
    const double fAf = fx.dot(Af);
    psi[static_cast<std::size_t>(k)] = fx.transpose() * PE / s;
    psi_dot[static_cast<std::size_t>(k)] = Af.transpose() * PE / s + fx.transpose() * A * PE / s -
                                           2.0 * fx.transpose() * PE * (fAf / (s * s));
    const Mat QPE = PE - fx * (fx.transpose() * PE) / s;
    gram[static_cast<std::size_t>(k)] = QPE.transpose() * QPE;
  };
  record(0);
  for (int k = 1; k <= steps; ++k) {
    rk4_flow_step(f, x, Phi, h, [&](const Vec& y) { return f.jacobian(y); });
    record(k);
  }
  const Mat psi_inf = psi.back();
  z.M21 = psi_inf.transpose();
  z.C = Mat::Zero(m, m);
  z.G = Mat::Zero(m, m);
  for (int k = 0; k <= steps; ++k) {
    const double w = (k == 0 || k == steps ? 0.5 : 1.0) * h * std::exp(2.0 * r * k * h);
    const Mat d = psi_inf - psi[static_cast<std::size_t>(k)];
    const Mat cross = d.transpose() * psi_dot[static_cast<std::size_t>(k)];
    z.C += w * (cross + cross.transpose());
    z.G += w * gram[static_cast<std::size_t>(k)];
  }
  return z;
}

struct ZMetric {
  Mat Mz, theta_x, theta, M22;
  Vec M21;
};

ZMetric assemble(const ZParts& z, double q) {
  const int m = static_cast<int>(z.M21.size());
  const int n = m + 1;
  ZMetric out;
  out.M21 = z.M21;
  out.M22 = z.C + q * z.G;
  out.M22 = 0.5 * (out.M22 + out.M22.transpose());
  out.Mz = Mat::Zero(n, n);
  out.Mz(0, 0) = 1.0;
  out.Mz.block(1, 0, m, 1) = z.M21;
  out.Mz.block(0, 1, 1, m) = z.M21.transpose();
  out.Mz.block(1, 1, m, m) = out.M22;
  Mat basis(n, n);
  basis.col(0) = z.f0;
  basis.rightCols(m) = z.E;
  out.theta_x = basis.inverse();
  Eigen::LLT<Mat> llt(out.Mz);
  if (llt.info() != Eigen::Success) throw BuildFailure("M_z is not positive definite");
  out.theta = Mat(llt.matrixL()).transpose() * out.theta_x;
  return out;
}

bool schur_positive(const ZParts& z, double q) {
  const Mat N = z.C + q * z.G - z.M21 * z.M21.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (N + N.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

Mat transverse_basis(const Vec& f) {
  const double s = f.norm();
  if (s == 0.0) throw PreconditionError("transverse basis requested at an equilibrium");
  const Eigen::Index n = f.size();
  if (n == 2) {
    Mat E(2, 1);
    E << -f[1] / s, f[0] / s;
    return E;
  }
  const Mat fm = f;
  Eigen::HouseholderQR<Mat> qr(fm);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  return Q.rightCols(n - 1);
}

SingularMetricBuild build_singular_metric(const VectorField& field, const std::vector<Vec>& base_points,
                                          const SingularMetricOptions& opt) {
  if (base_points.empty()) throw ParameterError("singular metric needs at least one base point");
  if (!(opt.step > 0.0) || !(opt.horizon_max > opt.step)) throw ParameterError("invalid horizon controls");
  if (!(opt.rate > 0.0)) throw ParameterError("singular metric needs the certified transverse rate");
  const int n = field.dim();
  if (n < 2) throw DimensionError("singular metric needs dimension >= 2");
  auto Qfn = [&](const Vec& x, const Vec& fx) { return opt.Q ? opt.Q(x, fx) : default_Q(fx); };

  SingularMetricBuild build;
  build.field = field;
  build.options = opt;
  build.points.resize(base_points.size());
  parallel_for(base_points.size(), [&](std::size_t i) {
    const Vec& x0 = base_points[i];
    if (x0.size() != n) throw DimensionError("base point dimension differs from the field");
    Vec x = x0, xv = x0;
    Mat Phi = Mat::Identity(n, n), V = Mat::Identity(n, n);
    auto A_v = [&](const Vec& y) {
      const Vec fy = field(y);
      const Mat A = field.jacobian(y);
      return Mat(A - fy * (fy.transpose() * (A + A.transpose())) / fy.squaredNorm());
    };
    auto A_phi = [&](const Vec& y) { return field.jacobian(y); };

    Vec fx = field(x);
    Mat Q = Qfn(x, fx);
    Mat prev_v = V.transpose() * Q * V;
    Mat prev_p = Phi.transpose() * Q * Phi;
    Mat Ms = Mat::Zero(n, n), Mflow = Mat::Zero(n, n);
    double t = 0.0, tail = (Q * V).norm();
    while (true) {
      rk4_flow_step(field, xv, V, opt.step, A_v);
      rk4_flow_step(field, x, Phi, opt.step, A_phi);
      t += opt.step;
      fx = field(xv);
      Q = Qfn(xv, fx);
      const Mat cur_v = V.transpose() * Q * V;
      const Mat Qp = Qfn(x, field(x));
      const Mat cur_p = Phi.transpose() * Qp * Phi;
      Ms += 0.5 * opt.step * (prev_v + cur_v);
      Mflow += 0.5 * opt.step * (prev_p + cur_p);
      prev_v = cur_v;
      prev_p = cur_p;
      tail = (Q * V).norm();
      if (tail <= opt.tail_tolerance) break;
      if (t > opt.horizon_max || tail > 1e12) {
        std::ostringstream os;
        os << "transverse part of V did not decay from base point " << i << ": |QV| = " << tail
           << " at t = " << t;
        throw BuildFailure(os.str());
      }
    }
    SingularMetricPoint& p = build.points[i];
    p.x = x0;
    p.Ms = 0.5 * (Ms + Ms.transpose());
    p.Ms_flow = 0.5 * (Mflow + Mflow.transpose());
    p.horizon = t;
    p.tail_norm = tail;
    Eigen::SelfAdjointEigenSolver<Mat> qes(Q, Eigen::EigenvaluesOnly);
    p.tail_bound = tail * tail * qes.eigenvalues().cwiseAbs().maxCoeff() / (2.0 * opt.rate);
    const Vec f0 = field(x0);
    Eigen::SelfAdjointEigenSolver<Mat> es(p.Ms, Eigen::EigenvaluesOnly);
    p.eigenvalues = es.eigenvalues();
    const double norm = p.eigenvalues.cwiseAbs().maxCoeff();
    p.residual = (p.Ms * f0).norm() / (norm * f0.norm());
    const double trace = p.Ms.trace();
    p.rank = static_cast<int>((p.eigenvalues.array() >= opt.rank_tolerance * trace).count());
  });
  return build;
}

Vec generalized_jacobian_eigenvalues(const VectorField& field,
                                     const std::function<Mat(const Vec&)>& theta, const Vec& x,
                                     double delta) {
  const VectorField backward(field.dim(), [&field](double t, const Vec& y) { return Vec(-field(t, y)); });
  const Vec xp = flow_to(field, x, delta, 10);
  const Vec xm = flow_to(backward, x, delta, 10);
  const Mat T = theta(x);
  const Mat T_dot = (theta(xp) - theta(xm)) / (2.0 * delta);
  const Mat F = (T * field.jacobian(x) + T_dot) * T.inverse();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (F + F.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

FullMetricBuild build_full_metric(const SingularMetricBuild& singular, const FullMetricOptions& opt) {
  if (singular.points.empty()) throw PreconditionError("full metric needs a successful singular build");
  const VectorField& f = singular.field;
  const double lam = singular.options.rate;
  const double r = opt.r < 0.0 ? 0.5 * lam : opt.r;
  if (!(r > 0.0) || !(r < lam))
    throw ParameterError("rate parameter r must satisfy 0 < r < certified rate");
  const double h = singular.options.step;
  const double tol = singular.options.tail_tolerance;
  const int n = f.dim();

  // Fixed horizon: e^{rt}|QΦE| below tolerance from every base point, so that
  // nearby evaluations share one quadrature grid.
  double horizon = 0.0;
  for (const auto& p : singular.points) {
    Vec x = p.x;
    Mat PE = transverse_basis(f(x));
    double t = 0.0;
    while (true) {
      rk4_flow_step(f, x, PE, h, [&](const Vec& y) { return f.jacobian(y); });
      t += h;
      const Vec fx = f(x);
      const Mat QPE = PE - fx * (fx.transpose() * PE) / fx.squaredNorm();
      if (std::exp(r * t) * QPE.norm() <= tol) break;
      if (t > singular.options.horizon_max)
        throw BuildFailure("transverse flow did not decay fast enough for r = " + std::to_string(r));
    }
    horizon = std::max(horizon, t);
  }
  const int steps = static_cast<int>(std::ceil(horizon / h)) + 10;

  FullMetricBuild build;
  build.r = r;
  build.horizon = steps * h;

  std::vector<ZParts> parts(singular.points.size());
  parallel_for(parts.size(), [&](std::size_t i) { parts[i] = z_parts(f, singular.points[i].x, h, steps, r); });

  double q = 1.0;
  int tries = 0;
  auto all_positive = [&] {
    for (const auto& z : parts)
      if (!schur_positive(z, q)) return false;
    return true;
  };
  while (!all_positive()) {
    if (++tries > opt.max_doublings) throw BuildFailure("M22 > M21 M21^T not reached by scaling Q");
    q *= 2.0;
  }
  build.q = q;

  build.theta = [f, h, steps, r, q](const Vec& x) { return assemble(z_parts(f, x, h, steps, r), q).theta; };
  build.metric = Metric::function(
      "transverse_full", n,
      [f, h, steps, r, q](const Vec& x) {
        const ZMetric zm = assemble(z_parts(f, x, h, steps, r), q);
        return Mat(zm.theta.transpose() * zm.theta);
      },
      build.theta);

  build.points.resize(parts.size());
  parallel_for(parts.size(), [&](std::size_t i) {
    const ZMetric zm = assemble(parts[i], q);
    FullMetricPoint& p = build.points[i];
    p.x = singular.points[i].x;
    p.M21 = zm.M21;
    p.M22 = zm.M22;
    p.Mz = zm.Mz;
    p.theta_x = zm.theta_x;
    p.theta = zm.theta;
    p.Mx = zm.theta.transpose() * zm.theta;
    p.fs_eigenvalues = generalized_jacobian_eigenvalues(f, build.theta, p.x, opt.fd_delta);
  });
  return build;
}

}  // namespace sidmp::contraction
