#include "sidmp/contraction.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "sidmp/parallel.hpp"

namespace sidmp::contraction {

// ---------------------------------------------------------------------------
// Matrix measures
// ---------------------------------------------------------------------------

double matrix_measure(const Mat& A, Norm norm) {
  if (A.rows() != A.cols() || A.rows() == 0) throw DimensionError("matrix measure needs a square matrix");
  const Eigen::Index n = A.rows();
  switch (norm) {
    case Norm::two: {
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
      return es.eigenvalues().maxCoeff();
    }
    case Norm::one: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        double s = A(j, j);
        for (Eigen::Index i = 0; i < n; ++i)
          if (i != j) s += std::abs(A(i, j));
        best = std::max(best, s);
      }
      return best;
    }
    case Norm::inf: {
      double best = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        double s = A(i, i);
        for (Eigen::Index j = 0; j < n; ++j)
          if (i != j) s += std::abs(A(i, j));
        best = std::max(best, s);
      }
      return best;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Metric
// ---------------------------------------------------------------------------

Metric Metric::identity(int n) {
  Metric m = constant(Mat::Identity(n, n), "identity");
  return m;
}

Metric Metric::constant(Mat M, std::string id) {
  if (M.rows() != M.cols() || M.rows() == 0) throw DimensionError("metric must be square");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
    throw DomainError("metric must be symmetric");
  Metric m;
  m.id_ = std::move(id);
  m.dim_ = static_cast<int>(M.rows());
  m.constant_ = std::move(M);
  return m;
}

Metric Metric::function(std::string id, int n, Eval M, Eval factor, Derivative dM) {
  if (n <= 0) throw DimensionError("metric dimension must be positive");
  if (!M) throw ParameterError("metric function is empty");
  Metric m;
  m.id_ = std::move(id);
  m.dim_ = n;
  m.eval_ = std::move(M);
  m.factor_ = std::move(factor);
  m.derivative_ = std::move(dM);
  return m;
}

Mat Metric::operator()(const Vec& x) const {
  if (x.size() != dim_) throw DimensionError("metric evaluated at a point of the wrong dimension");
  if (constant_) return *constant_;
  return eval_(x);
}

Mat Metric::factor(const Vec& x) const {
  if (factor_) return factor_(x);
  const Mat M = (*this)(x);
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return llt.matrixU();
}

Mat Metric::derivative(const Vec& x, const Vec& fx) const {
  if (constant_) return Mat::Zero(dim_, dim_);
  if (derivative_) return derivative_(x, fx);
  const double speed = fx.norm();
  if (speed == 0.0) return Mat::Zero(dim_, dim_);
  const double h = 1e-6 * (1.0 + x.norm());
  const Vec u = fx / speed;
  return (eval_(x + h * u) - eval_(x - h * u)) * (speed / (2.0 * h));
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

std::string kind_name(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::contraction: return "contraction";
    case CertificateKind::transverse: return "transverse";
    case CertificateKind::synchronization: return "synchronization";
    case CertificateKind::unique_equilibrium: return "unique_equilibrium";
  }
  return "unknown";
}

double Certificate::value(const std::string& name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw ParameterError("certificate has no value named '" + name + "'");
}

namespace {

Mat quadratic_form(const VectorField& f, const Metric& M, const Vec& x, const Vec& fx,
                   const Mat& Mx, double rate) {
  const Mat A = f.jacobian(x);
  if (!A.allFinite()) throw DomainError("Jacobian is not finite");
  const Mat S = M.derivative(x, fx) + A.transpose() * Mx + Mx * A + 2.0 * rate * Mx;
  return 0.5 * (S + S.transpose());
}

double max_generalized(const Mat& S, const Mat& Mx) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(S, Mx, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DomainError("metric is not positive definite");
  return es.eigenvalues().maxCoeff();
}

/// Orthonormal basis of the complement of v (n × (n−1)).
Mat complement_basis(const Vec& v) {
  const Eigen::Index n = v.size();
  const Mat vm = v;
  Eigen::HouseholderQR<Mat> qr(vm);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  return Q.rightCols(n - 1);
}

struct SampleResult {
  double margin = 0.0;
  double min_eig = 0.0;
};

Certificate run_check(CertificateKind kind, const VectorField& f, const Metric& M,
                      const RegionSampler& region, double rate, const CheckOptions& opt) {
  if (f.dim() != M.dim() || f.dim() != region.dim())
    throw DimensionError("field, metric and region dimensions differ");
  const std::vector<Vec> pts = region.samples();
  std::vector<SampleResult> res(pts.size());
  if (kind == CertificateKind::transverse) {
    for (const Vec& x : pts)
      if (f(x).norm() <= 1e-12)
        throw PreconditionError("field vanishes at a sample inside the transverse region: (" +
                                [&] {
                                  std::string s;
                                  for (Eigen::Index i = 0; i < x.size(); ++i)
                                    s += (i ? ", " : "") + std::to_string(x[i]);
                                  return s;
                                }() +
                                ")");
  }
  parallel_for(
      pts.size(),
      [&](std::size_t i) {
        const Mat Mx = M(pts[i]);
        Eigen::SelfAdjointEigenSolver<Mat> es(Mx, Eigen::EigenvaluesOnly);
        res[i].min_eig = es.eigenvalues().minCoeff();
        if (res[i].min_eig <= 0.0) return;
        res[i].margin = kind == CertificateKind::transverse ? transverse_margin(f, M, pts[i], rate)
                                                            : contraction_margin(f, M, pts[i], rate);
      },
      opt.threads);

  Certificate c;
  c.kind = kind;
  c.metric_id = M.id();
  c.region = region.describe();
  c.rate = rate;
  c.samples = static_cast<int>(pts.size());
  c.tolerance = opt.tolerance;
  c.sampler = region;
  c.worst_margin = -std::numeric_limits<double>::infinity();
  c.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (res[i].min_eig <= 0.0)
      throw DomainError("metric is not positive definite at sample " + std::to_string(i));
    c.min_metric_eigenvalue = std::min(c.min_metric_eigenvalue, res[i].min_eig);
    if (res[i].margin > c.worst_margin) {
      c.worst_margin = res[i].margin;
      c.witness = pts[i];
    }
  }
  c.pass = c.worst_margin <= opt.tolerance;
  return c;
}

}  // namespace

double contraction_margin(const VectorField& f, const Metric& M, const Vec& x, double rate) {
  const Vec fx = f(x);
  const Mat Mx = M(x);
  return 0.5 * max_generalized(quadratic_form(f, M, x, fx, Mx, rate), Mx);
}

double transverse_margin(const VectorField& f, const Metric& M, const Vec& x, double rate) {
  if (f.dim() < 2) throw DimensionError("transverse contraction needs dimension >= 2");
  const Vec fx = f(x);
  const Mat Mx = M(x);
  const Mat S = quadratic_form(f, M, x, fx, Mx, rate);
  const Mat E = complement_basis(Mx * fx);
  const Mat Sr = E.transpose() * S * E;
  const Mat Mr = E.transpose() * Mx * E;
  return 0.5 * max_generalized(0.5 * (Sr + Sr.transpose()), 0.5 * (Mr + Mr.transpose()));
}

Certificate check_contraction(const VectorField& f, const Metric& M, const RegionSampler& region,
                              double rate, const CheckOptions& opt) {
  return run_check(CertificateKind::contraction, f, M, region, rate, opt);
}

Certificate check_transverse_contraction(const VectorField& f, const Metric& M,
                                         const RegionSampler& region, double rate,
                                         const CheckOptions& opt) {
  return run_check(CertificateKind::transverse, f, M, region, rate, opt);
}

double certified_rate(const VectorField& f, const Metric& M, const RegionSampler& region,
                      bool transverse, const CheckOptions& opt) {
  const Certificate c = transverse ? check_transverse_contraction(f, M, region, 0.0, opt)
                                   : check_contraction(f, M, region, 0.0, opt);
  return -c.worst_margin;
}

// ---------------------------------------------------------------------------
// Synchronization
// ---------------------------------------------------------------------------

Certificate check_sync_condition(const network::BlockLaplacian& lap,
                                 const std::vector<VectorField>& node_fields,
                                 const RegionSampler& region, const CheckOptions& opt) {
  if (!lap.connected) throw PreconditionError("synchronization check needs a connected graph");
  if (node_fields.empty()) throw ParameterError("no node fields supplied");
  if (node_fields.size() != 1 && static_cast<int>(node_fields.size()) != lap.nodes)
    throw DimensionError("supply one shared node field or one per node");
  for (const auto& f : node_fields)
    if (f.dim() != lap.node_dim || region.dim() != lap.node_dim)
      throw DimensionError("node field, region and Laplacian block sizes differ");

  const std::vector<Vec> pts = region.samples();
  const std::size_t F = node_fields.size();
  // Per (field, sample): λ_max(A_s), μ₁, μ_∞.
  std::vector<std::array<double, 3>> res(F * pts.size());
  parallel_for(
      res.size(),
      [&](std::size_t k) {
        const Mat A = node_fields[k / pts.size()].jacobian(pts[k % pts.size()]);
        res[k] = {matrix_measure(A, Norm::two), matrix_measure(A, Norm::one),
                  matrix_measure(A, Norm::inf)};
      },
      opt.threads);

  double sup2 = -std::numeric_limits<double>::infinity(), sup1 = sup2, supi = sup2;
  Vec witness;
  for (std::size_t k = 0; k < res.size(); ++k) {
    if (res[k][0] > sup2) {
      sup2 = res[k][0];
      witness = pts[k % pts.size()];
    }
    sup1 = std::max(sup1, res[k][1]);
    supi = std::max(supi, res[k][2]);
  }

  const double l_n1 = lap.lambda_n_plus_1();
  const Mat coupling = -(lap.V * lap.L_K * lap.V.transpose());
  const double c1 = matrix_measure(coupling, Norm::one);
  const double c2 = matrix_measure(coupling, Norm::two);
  const double ci = matrix_measure(coupling, Norm::inf);
  const double proj = lap.projected_min_eigenvalue();

  Certificate c;
  c.kind = CertificateKind::synchronization;
  c.metric_id = "identity";
  c.region = region.describe();
  c.rate = 0.0;
  c.samples = static_cast<int>(pts.size());
  c.tolerance = opt.tolerance;
  c.sampler = region;
  c.min_metric_eigenvalue = 1.0;
  c.worst_margin = sup2 - l_n1;
  c.witness = witness;
  c.pass = c.worst_margin < 0.0;
  c.values = {
      {"lambda_n_plus_1", l_n1},
      {"sup_lambda_max_As", sup2},
      {"threshold_factor", l_n1 > 0.0 ? sup2 / l_n1 : std::numeric_limits<double>::infinity()},
      {"projected_min_eigenvalue", proj},
      {"projected_margin", sup2 - proj},
      {"projected_pass", sup2 - proj < 0.0 ? 1.0 : 0.0},
      {"mu_1_nodes", sup1},
      {"mu_1_coupling", c1},
      {"mu_1_sum", sup1 + c1},
      {"mu_2_nodes", sup2},
      {"mu_2_coupling", c2},
      {"mu_2_sum", sup2 + c2},
      {"mu_inf_nodes", supi},
      {"mu_inf_coupling", ci},
      {"mu_inf_sum", supi + ci},
  };
  c.notes.push_back("pass flag uses lambda_{N+1} of L_K sorted non-increasing; the projected form is reported alongside");
  return c;
}

// ---------------------------------------------------------------------------
// Pushforward
// ---------------------------------------------------------------------------

Metric pushforward_metric(const Metric& M, const dynamics::Diffeomorphism& T) {
  if (T.dim != M.dim()) throw DimensionError("diffeomorphism and metric dimensions differ");
  const std::string id = M.id() + "_pushforward";
  if (M.is_constant() && T.linear) {
    Eigen::FullPivLU<Mat> lu(*T.linear);
    if (!lu.isInvertible()) throw DomainError("diffeomorphism Jacobian is singular");
    const Mat Jinv = lu.inverse();
    const Mat Mp = Jinv.transpose() * M(Vec::Zero(M.dim())) * Jinv;
    return Metric::constant(0.5 * (Mp + Mp.transpose()), id);
  }
  auto jinv_at = [T](const Vec& x) {
    Eigen::FullPivLU<Mat> lu(T.jacobian(x));
    if (!lu.isInvertible()) throw DomainError("diffeomorphism Jacobian is singular");
    return Mat(lu.inverse());
  };
  return Metric::function(
      id, M.dim(),
      [M, T, jinv_at](const Vec& yp) {
        const Vec x = T.inverse(yp);
        const Mat Jinv = jinv_at(x);
        const Mat Mp = Jinv.transpose() * M(x) * Jinv;
        return Mat(0.5 * (Mp + Mp.transpose()));
      },
      [M, T, jinv_at](const Vec& yp) {
        const Vec x = T.inverse(yp);
        return Mat(M.factor(x) * jinv_at(x));
      });
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

Certificate check_hierarchy(const std::vector<Certificate>& layers) {
  if (layers.empty()) throw ParameterError("hierarchy needs at least one layer");
  int transverse = 0;
  for (const auto& l : layers) {
    if (l.kind == CertificateKind::transverse) ++transverse;
    else if (l.kind != CertificateKind::contraction)
      throw ParameterError("hierarchy layers must be contraction or transverse certificates");
  }
  if (transverse > 1)
    throw PreconditionError("more than one transverse layer: no composition rule is available");
  Certificate c;
  c.kind = transverse == 1 ? CertificateKind::transverse : CertificateKind::contraction;
  c.metric_id = "block_diagonal";
  c.rate = std::numeric_limits<double>::infinity();
  c.worst_margin = -std::numeric_limits<double>::infinity();
  c.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  c.pass = true;
  std::string region;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    c.rate = std::min(c.rate, l.rate);
    c.samples += l.samples;
    c.tolerance = std::max(c.tolerance, l.tolerance);
    c.pass = c.pass && l.pass;
    c.min_metric_eigenvalue = std::min(c.min_metric_eigenvalue, l.min_metric_eigenvalue);
    if (l.worst_margin > c.worst_margin) {
      c.worst_margin = l.worst_margin;
      c.witness = l.witness;
    }
    region += (i ? " -> " : "") + kind_name(l.kind) + ":" + l.region;
    c.values.emplace_back("layer_" + std::to_string(i) + "_margin", l.worst_margin);
  }
  c.region = region;
  return c;
}

Certificate check_unique_equilibrium(const Certificate& K, const Certificate& C) {
  if (K.kind != CertificateKind::transverse || C.kind != CertificateKind::contraction)
    throw ParameterError("expected a transverse certificate on K and a contraction certificate on C");
  if (!K.sampler || !C.sampler) throw PreconditionError("both certificates must carry their regions");
  int shared = 0;
  for (const Vec& x : C.sampler->samples())
    if (K.sampler->contains(x)) ++shared;
  for (const Vec& x : K.sampler->samples())
    if (C.sampler->contains(x)) ++shared;
  Certificate c;
  c.kind = CertificateKind::unique_equilibrium;
  c.metric_id = K.metric_id + "|" + C.metric_id;
  c.region = "K=" + K.region + " C=" + C.region;
  c.rate = std::min(K.rate, C.rate);
  c.samples = K.samples + C.samples;
  c.tolerance = std::max(K.tolerance, C.tolerance);
  c.min_metric_eigenvalue = std::min(K.min_metric_eigenvalue, C.min_metric_eigenvalue);
  c.worst_margin = std::max(K.worst_margin, C.worst_margin);
  c.witness = K.worst_margin >= C.worst_margin ? K.witness : C.witness;
  c.values = {{"intersection_samples", static_cast<double>(shared)},
              {"transverse_margin", K.worst_margin},
              {"contraction_margin", C.worst_margin}};
  c.pass = K.pass && C.pass && shared > 0;
  c.notes.push_back("predicts a unique equilibrium in K u C attracting every start there; confirm by simulation");
  return c;
}

// ---------------------------------------------------------------------------
// Tube bound
// ---------------------------------------------------------------------------

TubeBoundReport tube_bound_check(const VectorField& f, const TubeBoundConfig& cfg) {
  const int n = f.dim();
  if (cfg.x0.size() != n) throw DimensionError("tube start dimension differs from the field");
  if (!(cfg.rate > 0.0)) throw ParameterError("tube bound needs a positive certified rate");
  if (!(cfg.w_bar >= 0.0)) throw ParameterError("disturbance bound must be nonnegative");
  if (cfg.runs < 1 || cfg.sample_stride < 1) throw ParameterError("tube bound needs runs >= 1");

  const Mat M = cfg.metric.size() == 0 ? Mat::Identity(n, n) : cfg.metric;
  if (M.rows() != n || M.cols() != n) throw DimensionError("tube metric dimension mismatch");
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw DomainError("tube metric is not positive definite");
  const Mat theta = llt.matrixU();
  Eigen::JacobiSVD<Mat> svd(theta);
  const Vec sv = svd.singularValues();

  TubeBoundReport rep;
  rep.R = sv.maxCoeff() / sv.minCoeff();
  rep.bound = rep.R / cfg.rate * cfg.w_bar;
  rep.runs = cfg.runs;

  simulate::IntegratorConfig ic;
  ic.step = cfg.step;
  ic.duration = cfg.duration;
  const simulate::Trajectory nominal = simulate::integrate(f, cfg.x0, ic);

  std::vector<double> worst(static_cast<std::size_t>(cfg.runs), 0.0);
  std::vector<char> outside(static_cast<std::size_t>(cfg.runs), 0);
  parallel_for(
      static_cast<std::size_t>(cfg.runs),
      [&](std::size_t run) {
        simulate::IntegratorConfig dc = ic;
        const std::uint64_t seed = cfg.seed + 7919ULL * run;
        if (cfg.constant) {
          std::mt19937_64 rng(seed);
          std::normal_distribution<double> nd;
          Vec w(n);
          do {
            for (int i = 0; i < n; ++i) w[i] = nd(rng);
          } while (w.norm() < 1e-12);
          dc.disturbance = simulate::Disturbance::constant(cfg.w_bar * w / w.norm());
        } else {
          dc.disturbance = simulate::Disturbance::random_piecewise(n, cfg.w_bar, cfg.hold, seed);
        }
        dc.record_stride = cfg.sample_stride;
        const simulate::Trajectory disturbed = simulate::integrate(f, cfg.x0, dc);
        if (cfg.region)
          for (std::size_t s = 0; s < disturbed.size(); ++s)
            if (!cfg.region->contains(disturbed.state(s), 1e-9)) {
              outside[run] = 1;
              return;
            }
        const auto d = simulate::min_distance_to_orbit(disturbed, nominal);
        worst[run] = *std::max_element(d.begin(), d.end());
      },
      cfg.threads);

  for (std::size_t run = 0; run < worst.size(); ++run) {
    if (outside[run]) {
      ++rep.inconclusive;
      continue;
    }
    rep.per_run_max.push_back(worst[run]);
    rep.worst_distance = std::max(rep.worst_distance, worst[run]);
    if (worst[run] > rep.bound) ++rep.violations;
  }
  rep.worst_ratio = rep.bound > 0.0 ? rep.worst_distance / rep.bound
                                    : (rep.worst_distance > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  rep.pass = rep.violations == 0 && rep.inconclusive < rep.runs;
  return rep;
}

}  // namespace sidmp::contraction
