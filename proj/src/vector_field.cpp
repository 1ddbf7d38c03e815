#include <cmath>

#include "sidmp/types.hpp"

namespace sidmp {

VectorField::VectorField(int dim, Eval f, Jacobian jac)
    : dim_(dim), f_(std::move(f)), jac_(std::move(jac)) {
  if (dim <= 0) throw DimensionError("vector field dimension must be positive");
  if (!f_) throw ParameterError("vector field needs an evaluation function");
}

Vec VectorField::operator()(double t, const Vec& x) const {
  if (x.size() != dim_)
    throw DimensionError("state has dimension " + std::to_string(x.size()) + ", field expects " +
                         std::to_string(dim_));
  return f_(t, x);
}

Mat VectorField::jacobian(double t, const Vec& x) const {
  if (jac_) return jac_(t, x);
  return finite_difference_jacobian([&](const Vec& z) { return (*this)(t, z); }, x);
}

Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
  const Eigen::Index n = x.size();
  Mat jac;
  Vec probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-6 * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + step;
    const Vec fp = f(probe);
    probe[j] = x[j] - step;
    const Vec fm = f(probe);
    probe[j] = x[j];
    if (j == 0) jac.resize(fp.size(), n);
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

Eigen::Matrix2d rotation2(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

}  // namespace sidmp
