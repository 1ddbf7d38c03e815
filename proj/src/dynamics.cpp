#include "sidmp/dynamics.hpp"

#include <cmath>
#include <string>

namespace sidmp::dynamics {

namespace {

constexpr double kMinBasisMass = 1e-300;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ParameterError(std::string(what) + " must be positive and finite");
}

void require_dim(const Vec& x, int n, const char* what) {
  if (x.size() != n)
    throw DimensionError(std::string(what) + " expects a " + std::to_string(n) +
                         "-vector, got " + std::to_string(x.size()));
}

}  // namespace

// ---------------------------------------------------------------------------

void HopfParams::validate() const {
  require_positive(tau, "hopf tau");
  require_positive(rho, "hopf rho");
  require_positive(radius, "hopf radius");
  if (!std::isfinite(omega)) throw ParameterError("hopf omega must be finite");
}

Vec eval_hopf(const HopfParams& p, const Vec& x) {
  require_dim(x, 2, "hopf oscillator");
  const double radial = p.rho * (p.radius * p.radius - x.squaredNorm());
  Vec out(2);
  out[0] = (p.omega * x[1] + radial * x[0]) / p.tau;
  out[1] = (-p.omega * x[0] + radial * x[1]) / p.tau;
  return out;
}

Mat hopf_jacobian(const HopfParams& p, const Vec& x) {
  require_dim(x, 2, "hopf oscillator");
  const double radial = p.rho * (p.radius * p.radius - x.squaredNorm());
  Mat a(2, 2);
  a(0, 0) = radial - 2.0 * p.rho * x[0] * x[0];
  a(0, 1) = p.omega - 2.0 * p.rho * x[0] * x[1];
  a(1, 0) = -p.omega - 2.0 * p.rho * x[0] * x[1];
  a(1, 1) = radial - 2.0 * p.rho * x[1] * x[1];
  return a / p.tau;
}

void VanDerPolParams::validate() const {
  require_positive(omega, "van der pol omega");
  if (!std::isfinite(mu)) throw ParameterError("van der pol mu must be finite");
}

Vec eval_vanderpol(const VanDerPolParams& p, const Vec& x) {
  require_dim(x, 2, "van der pol oscillator");
  const double damping = p.classical ? 1.0 - x[0] * x[0] : 1.0 - x[0];
  Vec out(2);
  out[0] = x[1];
  out[1] = -p.omega * p.omega * x[0] + p.mu * damping * x[1];
  return out;
}

Mat vanderpol_jacobian(const VanDerPolParams& p, const Vec& x) {
  require_dim(x, 2, "van der pol oscillator");
  const double damping = p.classical ? 1.0 - x[0] * x[0] : 1.0 - x[0];
  const double slope = p.classical ? -2.0 * x[0] : -1.0;
  Mat a(2, 2);
  a << 0.0, 1.0, -p.omega * p.omega + p.mu * slope * x[1], p.mu * damping;
  return a;
}

// ---------------------------------------------------------------------------

CanonicalSystem CanonicalSystem::exponential(double alpha_x, double tau) {
  CanonicalSystem c;
  c.kind = CanonicalKind::exponential_decay;
  c.alpha_x = alpha_x;
  c.tau = tau;
  c.validate();
  return c;
}

CanonicalSystem CanonicalSystem::make_hopf(const HopfParams& p) {
  CanonicalSystem c;
  c.kind = CanonicalKind::hopf;
  c.hopf = p;
  c.validate();
  return c;
}

CanonicalSystem CanonicalSystem::make_vanderpol(const VanDerPolParams& p) {
  CanonicalSystem c;
  c.kind = CanonicalKind::vanderpol;
  c.vanderpol = p;
  c.validate();
  return c;
}

CanonicalSystem CanonicalSystem::make_custom(VectorField f) {
  CanonicalSystem c;
  c.kind = CanonicalKind::custom;
  c.custom = std::move(f);
  c.validate();
  return c;
}

int CanonicalSystem::dim() const {
  switch (kind) {
    case CanonicalKind::exponential_decay: return 1;
    case CanonicalKind::hopf:
    case CanonicalKind::vanderpol: return 2;
    case CanonicalKind::custom: return custom.dim();
  }
  return 0;
}

void CanonicalSystem::validate() const {
  switch (kind) {
    case CanonicalKind::exponential_decay:
      require_positive(tau, "canonical tau");
      require_positive(alpha_x, "canonical alpha_x");
      break;
    case CanonicalKind::hopf: hopf.validate(); break;
    case CanonicalKind::vanderpol: vanderpol.validate(); break;
    case CanonicalKind::custom:
      if (custom.dim() <= 0) throw ParameterError("custom canonical system has no field");
      break;
  }
}

HopfParams CanonicalSystem::hopf_for(const Vec& r) const {
  if (!radius_ref_index) return hopf;
  const int idx = *radius_ref_index;
  if (idx < 0 || idx >= r.size())
    throw DimensionError("canonical radius reference index out of range");
  HopfParams p = hopf;
  p.radius = r[idx];
  if (!(p.radius > 0.0)) throw DomainError("reference-driven hopf radius must stay positive");
  return p;
}

Vec CanonicalSystem::eval(const Vec& x, const Vec& r) const {
  switch (kind) {
    case CanonicalKind::exponential_decay:
      require_dim(x, 1, "exponential canonical system");
      return -alpha_x * x / tau;
    case CanonicalKind::hopf: return eval_hopf(hopf_for(r), x);
    case CanonicalKind::vanderpol: return eval_vanderpol(vanderpol, x);
    case CanonicalKind::custom: return custom(x);
  }
  return {};
}

Mat CanonicalSystem::jacobian_x(const Vec& x, const Vec& r) const {
  switch (kind) {
    case CanonicalKind::exponential_decay: return Mat::Constant(1, 1, -alpha_x / tau);
    case CanonicalKind::hopf: return hopf_jacobian(hopf_for(r), x);
    case CanonicalKind::vanderpol: return vanderpol_jacobian(vanderpol, x);
    case CanonicalKind::custom: return custom.jacobian(x);
  }
  return {};
}

VectorField CanonicalSystem::field(const Vec& r) const {
  validate();
  const CanonicalSystem self = *this;
  return VectorField(
      dim(), [self, r](double, const Vec& x) { return self.eval(x, r); },
      [self, r](double, const Vec& x) { return self.jacobian_x(x, r); });
}

// ---------------------------------------------------------------------------

ForcingFunction ForcingFunction::gaussian(std::vector<double> centers, double width, Mat weights) {
  ForcingFunction f;
  f.kind = BasisKind::gaussian;
  f.centers = std::move(centers);
  f.width = width;
  f.weights = std::move(weights);
  f.validate();
  return f;
}

ForcingFunction ForcingFunction::von_mises(std::vector<double> centers, double width, Mat weights) {
  ForcingFunction f;
  f.kind = BasisKind::von_mises;
  f.centers = std::move(centers);
  f.width = width;
  f.weights = std::move(weights);
  f.validate();
  return f;
}

std::vector<double> ForcingFunction::uniform_angles(int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = 2.0 * std::numbers::pi * i / count;
  return out;
}

int ForcingFunction::output_dim() const {
  return static_cast<int>(weights.cols()) / phase_dim();
}

void ForcingFunction::validate() const {
  require_positive(width, "forcing width sigma");
  if (centers.empty()) throw ParameterError("forcing needs at least one basis function");
  if (weights.rows() != basis_count())
    throw DimensionError("forcing weights need one row per basis function");
  if (weights.cols() == 0 || weights.cols() % phase_dim() != 0)
    throw DimensionError("forcing weight columns must be a positive multiple of the phase dimension");
}

Vec ForcingFunction::activations(const Vec& phase) const {
  require_dim(phase, phase_dim(), "forcing phase");
  const double inv = 1.0 / (2.0 * width * width);
  Vec phi(basis_count());
  if (kind == BasisKind::gaussian) {
    for (int i = 0; i < basis_count(); ++i) {
      const double d = phase[0] - centers[i];
      phi[i] = std::exp(-d * d * inv);
    }
  } else {
    const double theta = std::atan2(phase[1], phase[0]);
    for (int i = 0; i < basis_count(); ++i)
      phi[i] = std::exp((std::cos(theta - centers[i]) - 1.0) * inv);
  }
  return phi;
}

Vec ForcingFunction::normalized(const Vec& phase) const {
  Vec phi = activations(phase);
  const double mass = phi.sum();
  if (!(mass > kMinBasisMass))
    throw DegenerateBasisError("basis activations vanish at the requested phase");
  return phi / mass;
}

Vec eval_forcing(const ForcingFunction& forcing, const Vec& phase) {
  const Vec psi = forcing.normalized(phase);
  const int outputs = forcing.output_dim();
  Vec out(outputs);
  if (forcing.kind == BasisKind::gaussian) {
    for (int k = 0; k < outputs; ++k) out[k] = psi.dot(forcing.weights.col(k)) * phase[0];
  } else {
    for (int k = 0; k < outputs; ++k)
      out[k] = psi.dot(forcing.weights.col(2 * k)) * phase[0] +
               psi.dot(forcing.weights.col(2 * k + 1)) * phase[1];
  }
  return out;
}

// ---------------------------------------------------------------------------

ReferenceSystem ReferenceSystem::constant(Vec gains, Vec command) {
  ReferenceSystem r;
  r.gains = std::move(gains);
  r.command = [command = std::move(command)](double) { return command; };
  r.validate();
  return r;
}

ReferenceSystem ReferenceSystem::piecewise(Vec gains, Vec initial,
                                           std::vector<std::pair<double, Vec>> steps) {
  ReferenceSystem r;
  r.gains = std::move(gains);
  r.command = [initial = std::move(initial), steps = std::move(steps)](double t) {
    const Vec* current = &initial;
    for (const auto& [when, value] : steps)
      if (t >= when) current = &value;
    return *current;
  };
  r.validate();
  return r;
}

void ReferenceSystem::validate() const {
  if (gains.size() == 0) throw DimensionError("reference system needs at least one component");
  for (Eigen::Index i = 0; i < gains.size(); ++i) require_positive(gains[i], "reference gain");
  if (!command) throw ParameterError("reference system needs a command signal");
  if (command(0.0).size() != gains.size())
    throw DimensionError("reference command and state dimensions differ");
}

Vec ReferenceSystem::eval(double t, const Vec& r) const {
  require_dim(r, dim(), "reference system");
  return gains.cwiseProduct(command(t) - r);
}

// ---------------------------------------------------------------------------

namespace {

double harmonic_shape(const HarmonicGoal& g, double theta) {
  double s = 0.0;
  for (std::size_t h = 0; h < g.cos_coeffs.size(); ++h)
    s += g.cos_coeffs[h] * std::cos(static_cast<double>(h + 1) * theta);
  for (std::size_t h = 0; h < g.sin_coeffs.size(); ++h)
    s += g.sin_coeffs[h] * std::sin(static_cast<double>(h + 1) * theta);
  return s;
}

double harmonic_slope(const HarmonicGoal& g, double theta) {
  double s = 0.0;
  for (std::size_t h = 0; h < g.cos_coeffs.size(); ++h) {
    const double m = static_cast<double>(h + 1);
    s -= m * g.cos_coeffs[h] * std::sin(m * theta);
  }
  for (std::size_t h = 0; h < g.sin_coeffs.size(); ++h) {
    const double m = static_cast<double>(h + 1);
    s += m * g.sin_coeffs[h] * std::cos(m * theta);
  }
  return s;
}

}  // namespace

double HarmonicGoal::value(double theta, const Vec& r) const {
  double a = amp;
  if (amp_ref_index >= 0) a += amp_gain * r[amp_ref_index];
  return offset + a * harmonic_shape(*this, theta);
}

double HarmonicGoal::rate(double theta, double theta_dot, const Vec& r, const Vec& r_dot) const {
  double a = amp;
  double a_dot = 0.0;
  if (amp_ref_index >= 0) {
    a += amp_gain * r[amp_ref_index];
    a_dot = amp_gain * r_dot[amp_ref_index];
  }
  return a_dot * harmonic_shape(*this, theta) + a * harmonic_slope(*this, theta) * theta_dot;
}

void TransformationSystem::validate() const {
  if (dim() == 0) throw DimensionError("transformation system needs at least one output");
  if (damping.size() != stiffness.size())
    throw DimensionError("stiffness and damping sizes differ");
  for (int i = 0; i < dim(); ++i) {
    require_positive(stiffness[i], "transformation stiffness k");
    require_positive(damping[i], "transformation damping b");
  }
  require_positive(tau, "transformation tau");
  if (static_cast<int>(goals.size()) != dim())
    throw DimensionError("transformation system needs one goal per output");
  if (forcing) {
    forcing->validate();
    if (forcing->output_dim() != dim())
      throw DimensionError("forcing output dimension differs from transformation outputs");
  }
}

Vec TransformationSystem::eval(const Vec& state, const Vec& x, const Vec& x_dot, const Vec& r,
                               const Vec& r_dot) const {
  const int n = dim();
  require_dim(state, 2 * n, "transformation state");
  const auto y = state.head(n);
  const auto yd = state.tail(n);
  Vec f = Vec::Zero(n);
  if (forcing) f = eval_forcing(*forcing, x);

  double theta = 0.0;
  double theta_dot = 0.0;
  bool have_angle = false;

  Vec out(2 * n);
  out.head(n) = yd;
  for (int m = 0; m < n; ++m) {
    const Goal& goal = goals[m];
    double g = 0.0;
    double g_rate = 0.0;
    switch (goal.kind) {
      case Goal::Kind::constant: g = goal.value; break;
      case Goal::Kind::reference:
        if (goal.ref_index < 0 || goal.ref_index >= r.size())
          throw DimensionError("goal reference index out of range");
        g = r[goal.ref_index];
        break;
      case Goal::Kind::harmonic:
        if (!have_angle) {
          if (x.size() != 2) throw DimensionError("phase-based goals need a 2-D canonical state");
          theta = std::atan2(x[1], x[0]);
          const double s = x.squaredNorm();
          theta_dot = s > 0.0 ? (x[0] * x_dot[1] - x[1] * x_dot[0]) / s : 0.0;
          have_angle = true;
        }
        g = goal.harmonic.value(theta, r);
        g_rate = goal.harmonic.rate(theta, theta_dot, r, r_dot);
        break;
    }
    out[n + m] = (stiffness[m] * (g - y[m]) + damping[m] * (g_rate - yd[m]) + f[m]) / tau;
  }
  return out;
}

// ---------------------------------------------------------------------------

DiscreteDmpRate eval_discrete_dmp(const DmpNode& node, double t) {
  if (node.canonical.kind != CanonicalKind::exponential_decay)
    throw ParameterError("discrete primitive needs an exponential-decay canonical system");
  node.canonical.validate();
  node.transform.validate();
  Vec r_dot = Vec::Zero(node.r.size());
  if (node.reference) r_dot = node.reference->eval(t, node.r);
  const Vec x_dot = node.canonical.eval(node.x, node.r);
  Vec state(node.transform.state_dim());
  state << node.y, node.y_dot;
  const Vec rates = node.transform.eval(state, node.x, x_dot, node.r, r_dot);
  const int n = node.transform.dim();
  return DiscreteDmpRate{rates.head(n), rates.tail(n), x_dot[0]};
}

Vec Hierarchy::pack(const Vec& r, const Vec& x, const std::vector<Vec>& y_states) const {
  if (r.size() != layout.r_dim || x.size() != layout.x_dim ||
      y_states.size() != layout.y_dims.size())
    throw DimensionError("hierarchy pack: block sizes do not match the layout");
  Vec s(layout.total);
  s.segment(layout.r_offset, layout.r_dim) = r;
  s.segment(layout.x_offset, layout.x_dim) = x;
  for (std::size_t i = 0; i < y_states.size(); ++i) {
    if (y_states[i].size() != layout.y_dims[i])
      throw DimensionError("hierarchy pack: transformation block size mismatch");
    s.segment(layout.y_offsets[i], layout.y_dims[i]) = y_states[i];
  }
  return s;
}

Hierarchy compose_hierarchy(const ReferenceSystem& ref, const CanonicalSystem& canon,
                            const std::vector<TransformationSystem>& transforms) {
  ref.validate();
  canon.validate();
  HierarchyLayout layout;
  layout.r_dim = ref.dim();
  layout.x_offset = layout.r_dim;
  layout.x_dim = canon.dim();
  int offset = layout.x_offset + layout.x_dim;
  if (canon.radius_ref_index && *canon.radius_ref_index >= layout.r_dim)
    throw DimensionError("canonical radius reference index exceeds reference dimension");
  for (const auto& tr : transforms) {
    tr.validate();
    if (tr.forcing && tr.forcing->phase_dim() != layout.x_dim)
      throw DimensionError("forcing phase dimension differs from canonical dimension");
    for (const auto& g : tr.goals) {
      if (g.kind == Goal::Kind::reference && g.ref_index >= layout.r_dim)
        throw DimensionError("goal reference index exceeds reference dimension");
      if (g.kind == Goal::Kind::harmonic && layout.x_dim != 2)
        throw DimensionError("phase-based goals need a 2-D canonical state");
      if (g.kind == Goal::Kind::harmonic && g.harmonic.amp_ref_index >= layout.r_dim)
        throw DimensionError("goal amplitude reference index exceeds reference dimension");
    }
    layout.y_offsets.push_back(offset);
    layout.y_dims.push_back(tr.state_dim());
    offset += tr.state_dim();
  }
  layout.total = offset;

  auto f = [ref, canon, transforms, layout](double t, const Vec& s) {
    const Vec r = s.segment(layout.r_offset, layout.r_dim);
    const Vec x = s.segment(layout.x_offset, layout.x_dim);
    const Vec r_dot = ref.eval(t, r);
    const Vec x_dot = canon.eval(x, r);
    Vec out(layout.total);
    out.segment(layout.r_offset, layout.r_dim) = r_dot;
    out.segment(layout.x_offset, layout.x_dim) = x_dot;
    for (std::size_t i = 0; i < transforms.size(); ++i) {
      const Vec y = s.segment(layout.y_offsets[i], layout.y_dims[i]);
      out.segment(layout.y_offsets[i], layout.y_dims[i]) =
          transforms[i].eval(y, x, x_dot, r, r_dot);
    }
    return out;
  };
  return Hierarchy{VectorField(layout.total, std::move(f)), layout};
}

// ---------------------------------------------------------------------------

Diffeomorphism Diffeomorphism::identity(int n) {
  return affine(1.0, Mat::Identity(n, n), Vec::Zero(n));
}

Diffeomorphism Diffeomorphism::affine(double scale, const Mat& rotation, const Vec& translation) {
  require_positive(scale, "diffeomorphism scale");
  const Eigen::Index n = rotation.rows();
  if (rotation.cols() != n || translation.size() != n)
    throw DimensionError("affine map: rotation must be square and match the translation");
  if (!(rotation.transpose() * rotation).isApprox(Mat::Identity(n, n), 1e-10) ||
      rotation.determinant() < 0.0)
    throw ParameterError("affine map: rotation must be a proper orthogonal matrix");
  Diffeomorphism d;
  d.dim = static_cast<int>(n);
  const Mat linear = scale * rotation;
  const Mat linear_inv = rotation.transpose() / scale;
  d.forward = [linear, translation](const Vec& y) -> Vec { return linear * y + translation; };
  d.inverse = [linear_inv, translation](const Vec& yp) -> Vec {
    return linear_inv * (yp - translation);
  };
  d.jacobian = [linear](const Vec&) -> Mat { return linear; };
  d.linear = linear;
  return d;
}

VectorField apply_diffeomorphism(const VectorField& field, const Diffeomorphism& T,
                                 std::function<double(double)> tau_fn) {
  if (T.dim != field.dim()) throw DimensionError("diffeomorphism and field dimensions differ");
  if (!tau_fn) tau_fn = [](double) { return 1.0; };

  auto pull_back = [T](const Vec& yp) {
    Vec y = T.inverse(yp);
    if (!y.allFinite() || (T.forward(y) - yp).norm() > 1e-8 * (1.0 + yp.norm()))
      throw DomainError("diffeomorphism inverse failed at the requested point");
    return y;
  };
  auto positive_tau = [tau_fn](double t) {
    const double tau = tau_fn(t);
    if (!(tau > 0.0)) throw DomainError("time scaling must stay positive");
    return tau;
  };

  VectorField::Eval f = [field, T, pull_back, positive_tau](double t, const Vec& yp) {
    const Vec y = pull_back(yp);
    return Vec(T.jacobian(y) * field(t, y) / positive_tau(t));
  };
  if (!T.linear) return VectorField(field.dim(), std::move(f));

  const Mat J = *T.linear;
  const Mat J_inv = J.inverse();
  VectorField::Jacobian jac = [field, J, J_inv, pull_back, positive_tau](double t, const Vec& yp) {
    return Mat(J * field.jacobian(t, pull_back(yp)) * J_inv / positive_tau(t));
  };
  return VectorField(field.dim(), std::move(f), std::move(jac));
}

}  // namespace sidmp::dynamics
