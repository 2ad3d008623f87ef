#pragma once

// Gradients and Hessian-vector products of scalar callables by forward-mode
// dual numbers. A callable must accept std::span<const S> for S = double,
// Dual<double> and Dual<Dual<double>> (a generic lambda does).

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lss/dual.hpp"
#include "lss/errors.hpp"

namespace lss {

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual<double>>;

/// ∇f(z) by one forward pass per coordinate.
template <typename F>
Eigen::VectorXd grad_scalar(const F& f, const Eigen::VectorXd& z) {
  const auto d = static_cast<std::size_t>(z.size());
  std::vector<Dual1> zd(d);
  for (std::size_t i = 0; i < d; ++i) zd[i] = Dual1{z[i], 0.0};

  Eigen::VectorXd g(z.size());
  for (std::size_t j = 0; j < d; ++j) {
    zd[j].d = 1.0;
    const Dual1 r = f(std::span<const Dual1>(zd));
    zd[j].d = 0.0;
    if (!std::isfinite(r.d)) {
      throw NumericalError("non-finite tangent at coordinate " + std::to_string(j), z);
    }
    g[static_cast<Eigen::Index>(j)] = r.d;
  }
  return g;
}

/// ∇²f(z)·w without forming the Hessian: the inner tangent carries w, the
/// outer tangent walks the coordinate axes.
template <typename F>
Eigen::VectorXd hessian_vector(const F& f, const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
  const auto d = static_cast<std::size_t>(z.size());
  std::vector<Dual2> zd(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    zd[i] = Dual2{Dual1{z[k], w[k]}, Dual1{0.0, 0.0}};
  }

  Eigen::VectorXd hw(z.size());
  for (std::size_t j = 0; j < d; ++j) {
    zd[j].d.v = 1.0;
    const Dual2 r = f(std::span<const Dual2>(zd));
    zd[j].d.v = 0.0;
    if (!std::isfinite(r.d.d)) {
      throw NumericalError("non-finite second-order tangent at coordinate " + std::to_string(j), z);
    }
    hw[static_cast<Eigen::Index>(j)] = r.d.d;
  }
  return hw;
}

/// Dense Hessian, column by column.
template <typename F>
Eigen::MatrixXd hessian(const F& f, const Eigen::VectorXd& z) {
  const Eigen::Index d = z.size();
  Eigen::MatrixXd h(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    h.col(j) = hessian_vector(f, z, Eigen::VectorXd::Unit(d, j));
  }
  return h;
}

}  // namespace lss
