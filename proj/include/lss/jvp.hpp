#pragma once

// Matrix-free products with the game Jacobian. Jᵀu is the gradient of
// ω(z)ᵀu; Jv is recovered from two such products using the zero-sum block
// structure of J, so no dense J is ever formed on these paths.

#include <Eigen/Dense>

#include "lss/autodiff.hpp"
#include "lss/errors.hpp"
#include "lss/game.hpp"

namespace lss {

/// The two sign matrices diag(I,-I) and diag(-I,I) on a (dx, dy) split.
class SignedBlockSelector {
 public:
  SignedBlockSelector(int dx, int dy) : dx_(dx), dy_(dy) {}

  /// diag(I, -I) u
  Eigen::VectorXd plus_minus(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r = u;
    r.tail(dy_) = -r.tail(dy_);
    return r;
  }

  /// diag(-I, I) u
  Eigen::VectorXd minus_plus(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r = u;
    r.head(dx_) = -r.head(dx_);
    return r;
  }

  /// (v₁, 0)
  Eigen::VectorXd x_part(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(v.size());
    r.head(dx_) = v.head(dx_);
    return r;
  }

  /// (0, v₂)
  Eigen::VectorXd y_part(const Eigen::VectorXd& v) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(v.size());
    r.tail(dy_) = v.tail(dy_);
    return r;
  }

 private:
  int dx_;
  int dy_;
};

namespace detail {
inline void check_len(const Game& game, const Eigen::VectorXd& u, const char* what) {
  if (u.size() != game.dim()) {
    throw InvalidInput(std::string(what) + " has length " + std::to_string(u.size()) + ", expected " +
                       std::to_string(game.dim()));
  }
}
}  // namespace detail

/// Jᵀ(z)u through nested duals, for any game kind.
inline Eigen::VectorXd jt_vec_autodiff(const Game& game, const StrategyPoint& z, const Eigen::VectorXd& u) {
  game.check(z);
  detail::check_len(game, u, "u");
  // ω(z)ᵀu = ∇f(z)·(s∘u), so its gradient is ∇²f (s∘u).
  return hessian_vector(game.cost_fn(), z.coords(), game.signs().cwiseProduct(u));
}

/// Jᵀ(z)u. Quadratic games use the closed form M(s∘u).
inline Eigen::VectorXd jt_vec(const Game& game, const StrategyPoint& z, const Eigen::VectorXd& u) {
  if (game.kind() != GameKind::Quadratic) return jt_vec_autodiff(game, z, u);
  game.check(z);
  detail::check_len(game, u, "u");
  return game.matrix() * game.signs().cwiseProduct(u);
}

/// J(z)v = diag(I,-I) Jᵀ (v₁,0) + diag(-I,I) Jᵀ (0,v₂).
inline Eigen::VectorXd j_vec_via_two_jtv(const Game& game, const StrategyPoint& z, const Eigen::VectorXd& v) {
  detail::check_len(game, v, "v");
  const SignedBlockSelector sel(game.dx(), game.dy());
  return sel.plus_minus(jt_vec(game, z, sel.x_part(v))) + sel.minus_plus(jt_vec(game, z, sel.y_part(v)));
}

}  // namespace lss
