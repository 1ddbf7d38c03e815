#include "sidmp/learning.hpp"

#include <cmath>

#include "sidmp/csv.hpp"

namespace sidmp::learning {

void Demonstration::validate() const {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (n == 0) throw ValidationError("demonstration is empty");
  if (y.rows() != n || y_dot.rows() != n || y_dot.cols() != y.cols())
    throw DimensionError("demonstration arrays have inconsistent lengths");
  if (y_ddot && (y_ddot->rows() != n || y_ddot->cols() != y.cols()))
    throw DimensionError("demonstration acceleration has inconsistent shape");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(t[static_cast<std::size_t>(i)] > t[static_cast<std::size_t>(i - 1)]))
      throw ValidationError("demonstration time grid must be strictly increasing");
  if (!y.allFinite() || !y_dot.allFinite() || (y_ddot && !y_ddot->allFinite()))
    throw DomainError("demonstration contains non-finite values");
  if (stiffness.size() != y.cols() || damping.size() != y.cols() || goal.size() != y.cols())
    throw DimensionError("demonstration gains and goal need one entry per output");
  if ((stiffness.array() <= 0.0).any() || (damping.array() <= 0.0).any() || !(tau > 0.0))
    throw ParameterError("demonstration needs k > 0, b > 0 and tau > 0");
}

Mat differentiate(const std::vector<double>& t, const Mat& v) {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (v.rows() != n) throw DimensionError("differentiation grid and values differ in length");
  if (n < 3) throw PreconditionError("numerical differentiation needs at least 3 samples");
  Mat d(n, v.cols());
  auto T = [&](Eigen::Index i) { return t[static_cast<std::size_t>(i)]; };
  for (Eigen::Index i = 0; i < n; ++i) {
    // Three-point Lagrange derivative at node i using (a, b, c) around it.
    const Eigen::Index a = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
    const Eigen::Index b = a + 1, c = a + 2;
    const double x = T(i), ta = T(a), tb = T(b), tc = T(c);
    const double wa = (2 * x - tb - tc) / ((ta - tb) * (ta - tc));
    const double wb = (2 * x - ta - tc) / ((tb - ta) * (tb - tc));
    const double wc = (2 * x - ta - tb) / ((tc - ta) * (tc - tb));
    d.row(i) = wa * v.row(a) + wb * v.row(b) + wc * v.row(c);
  }
  return d;
}

Mat compute_target_forcing(const Demonstration& demo) {
  demo.validate();
  const Mat ydd = demo.y_ddot ? *demo.y_ddot : differentiate(demo.t, demo.y_dot);
  Mat f(demo.y.rows(), demo.y.cols());
  for (Eigen::Index j = 0; j < demo.y.cols(); ++j)
    f.col(j) = demo.tau * ydd.col(j) -
               demo.stiffness[j] * (Vec::Constant(demo.y.rows(), demo.goal[j]) - demo.y.col(j)) +
               demo.damping[j] * demo.y_dot.col(j);
  return f;
}

Mat phase_rollout(const dynamics::CanonicalSystem& canonical, const Vec& x0,
                  const std::vector<double>& t, int substeps) {
  canonical.validate();
  if (t.empty()) throw PreconditionError("phase rollout needs a time grid");
  if (x0.size() != canonical.dim()) throw DimensionError("initial phase dimension mismatch");
  if (substeps < 1) throw ParameterError("substeps must be positive");
  const VectorField f = canonical.field();
  Mat out(static_cast<Eigen::Index>(t.size()), canonical.dim());
  Vec x = x0;
  out.row(0) = x.transpose();
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double h = (t[i] - t[i - 1]) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const Vec k1 = f(x);
      const Vec k2 = f(Vec(x + 0.5 * h * k1));
      const Vec k3 = f(Vec(x + 0.5 * h * k2));
      const Vec k4 = f(Vec(x + h * k3));
      x += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
    }
    out.row(static_cast<Eigen::Index>(i)) = x.transpose();
  }
  return out;
}

FitResult fit_weights(const Mat& targets, const Mat& phase, const dynamics::ForcingFunction& basis,
                      double ridge) {
  if (targets.rows() != phase.rows()) throw DimensionError("targets and phase differ in length");
  if (phase.cols() != basis.phase_dim()) throw DimensionError("phase dimension differs from the basis");
  if (basis.centers.empty() || !(basis.width > 0.0))
    throw ParameterError("basis needs at least one centre and a positive width");
  const Eigen::Index S = targets.rows(), B = basis.basis_count(), P = basis.phase_dim();
  const Eigen::Index cols = B * P;
  if (S < cols) throw PreconditionError("fewer samples than weights per output");

  Mat design(S, cols);
  for (Eigen::Index s = 0; s < S; ++s) {
    const Vec x = phase.row(s).transpose();
    const Vec psi = basis.normalized(x);
    for (Eigen::Index p = 0; p < P; ++p) design.row(s).segment(p * B, B) = (psi * x[p]).transpose();
  }

  Mat sol;
  double eps = ridge;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Mat> qr(design);
    qr.setThreshold(1e-12);
    if (qr.rank() < cols)
      throw ConditioningError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                              " of " + std::to_string(cols) + "); supply a ridge term");
    sol = qr.solve(targets);
  } else {
    const Mat G = design.transpose() * design;
    if (eps < 0.0) eps = 1e-10 * G.trace() / static_cast<double>(cols);
    if (!(eps > 0.0)) eps = 1e-300;
    Eigen::LLT<Mat> llt(G + eps * Mat::Identity(cols, cols));
    if (llt.info() != Eigen::Success) throw ConditioningError("regularized normal equations failed");
    sol = llt.solve(design.transpose() * targets);
  }

  FitResult r;
  r.ridge = eps;
  r.forcing = basis;
  r.forcing.weights.resize(B, targets.cols() * P);
  for (Eigen::Index k = 0; k < targets.cols(); ++k)
    for (Eigen::Index p = 0; p < P; ++p) r.forcing.weights.col(k * P + p) = sol.col(k).segment(p * B, B);
  const double denom = static_cast<double>(targets.size());
  r.rmse = std::sqrt((design * sol - targets).squaredNorm() / denom);
  r.baseline_rmse = std::sqrt(targets.squaredNorm() / denom);
  return r;
}

Demonstration parse_demonstration_csv(std::string_view text) {
  const io::CsvTable table = io::parse_csv(text);
  if (table.column("t") < 0) throw ValidationError("demonstration CSV needs a 't' column");
  Demonstration d;
  d.t = table.column_values(table.column("t"));
  std::vector<std::string> suffixes;
  if (table.column("y") >= 0) {
    suffixes.push_back("");
  } else {
    for (int j = 0; table.column("y_" + std::to_string(j)) >= 0; ++j)
      suffixes.push_back("_" + std::to_string(j));
  }
  if (suffixes.empty()) throw ValidationError("demonstration CSV needs 'y' or 'y_0' columns");
  const auto S = static_cast<Eigen::Index>(d.t.size());
  const auto m = static_cast<Eigen::Index>(suffixes.size());
  d.y.resize(S, m);
  d.y_dot.resize(S, m);
  bool have_acc = true;
  for (const auto& s : suffixes) have_acc = have_acc && table.column("yddot" + s) >= 0;
  if (have_acc) d.y_ddot = Mat(S, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::string& s = suffixes[static_cast<std::size_t>(j)];
    const int cy = table.column("y" + s), cv = table.column("ydot" + s);
    if (cv < 0) throw ValidationError("demonstration CSV is missing column 'ydot" + s + "'");
    const auto yv = table.column_values(cy), vv = table.column_values(cv);
    for (Eigen::Index i = 0; i < S; ++i) {
      d.y(i, j) = yv[static_cast<std::size_t>(i)];
      d.y_dot(i, j) = vv[static_cast<std::size_t>(i)];
    }
    if (have_acc) {
      const auto av = table.column_values(table.column("yddot" + s));
      for (Eigen::Index i = 0; i < S; ++i) (*d.y_ddot)(i, j) = av[static_cast<std::size_t>(i)];
    }
  }
  return d;
}

Demonstration load_demonstration_csv(const std::filesystem::path& path) {
  return parse_demonstration_csv(io::read_text(path));
}

}  // namespace sidmp::learning
