#pragma once

// Two-player zero-sum games over ℝ^d. Player one picks x (first dx
// coordinates) to minimize f, player two picks y (last dy coordinates) to
// maximize it. Everything else (ω, J, S, A) is derived from f.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "lss/autodiff.hpp"
#include "lss/dual.hpp"
#include "lss/errors.hpp"

namespace lss {

/// z = (x, y) with the partition recorded.
class StrategyPoint {
 public:
  StrategyPoint(Eigen::VectorXd coords, int dx, int dy) : coords_(std::move(coords)), dx_(dx), dy_(dy) {
    if (dx < 1 || dy < 1) throw InvalidInput("strategy split needs dx >= 1 and dy >= 1");
    if (coords_.size() != dx + dy) {
      throw InvalidInput("strategy point has " + std::to_string(coords_.size()) + " coordinates, expected " +
                         std::to_string(dx + dy));
    }
  }

  const Eigen::VectorXd& coords() const { return coords_; }
  int dx() const { return dx_; }
  int dy() const { return dy_; }
  int dim() const { return dx_ + dy_; }

  auto x() const { return coords_.head(dx_); }
  auto y() const { return coords_.tail(dy_); }

  /// Same split, new coordinates.
  StrategyPoint with(Eigen::VectorXd coords) const { return {std::move(coords), dx_, dy_}; }

 private:
  Eigen::VectorXd coords_;
  int dx_;
  int dy_;
};

/// f(z) = ½ zᵀ M z.
struct QuadraticCost {
  Eigen::MatrixXd m;

  template <typename S>
  S operator()(std::span<const S> z) const {
    const auto d = static_cast<Eigen::Index>(z.size());
    S acc{0.0};
    for (Eigen::Index i = 0; i < d; ++i) {
      S row{0.0};
      for (Eigen::Index j = 0; j < d; ++j) row += m(i, j) * z[static_cast<std::size_t>(j)];
      acc += z[static_cast<std::size_t>(i)] * row;
    }
    return 0.5 * acc;
  }
};

/// The bounded quartic from the 2-D experiment. The minimizing player's cost
/// is the negated bump -e^{-0.01(x²+y²)}((0.3x²+y)² + (0.5y²+x)²); with this
/// orientation the gradient dynamics have four LASE, three of them Nash.
struct Toy2DCost {
  template <typename S>
  S operator()(std::span<const S> z) const {
    using std::exp;
    const S& x = z[0];
    const S& y = z[1];
    return -exp(-0.01 * (x * x + y * y)) * (sq(0.3 * x * x + y) + sq(0.5 * y * y + x));
  }
};

/// Programmatic hook: a callable evaluated on doubles and on first- and
/// second-order duals. Smoothness is the caller's responsibility.
struct UserCost {
  std::string name;
  std::function<double(std::span<const double>)> f0;
  std::function<Dual1(std::span<const Dual1>)> f1;
  std::function<Dual2(std::span<const Dual2>)> f2;

  double operator()(std::span<const double> z) const { return f0(z); }
  Dual1 operator()(std::span<const Dual1> z) const { return f1(z); }
  Dual2 operator()(std::span<const Dual2> z) const { return f2(z); }
};

enum class GameKind { Quadratic, Toy2D, UserScalar };

inline const char* to_string(GameKind k) {
  switch (k) {
    case GameKind::Quadratic:
      return "quadratic";
    case GameKind::Toy2D:
      return "toy2d";
    case GameKind::UserScalar:
      return "user_scalar";
  }
  return "?";
}

class Game {
 public:
  static Game quadratic(Eigen::MatrixXd m, int dx, int dy) {
    if (dx < 1 || dy < 1) throw InvalidInput("quadratic game needs dx >= 1 and dy >= 1");
    if (m.rows() != dx + dy || m.cols() != dx + dy) {
      throw InvalidInput("quadratic matrix must be " + std::to_string(dx + dy) + "x" + std::to_string(dx + dy));
    }
    if (!m.allFinite()) throw InvalidInput("quadratic matrix has non-finite entries");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidInput("quadratic matrix is not symmetric within 1e-12");
    }
    return Game(QuadraticCost{std::move(m)}, dx, dy);
  }

  static Game toy2d() { return Game(Toy2DCost{}, 1, 1); }

  /// `f` must be callable as f(std::span<const S>) -> S for the three scalar
  /// types; a generic lambda taking `auto z` satisfies this.
  template <typename F>
  static Game user_scalar(std::string name, int dx, int dy, F f) {
    if (dx < 1 || dy < 1) throw InvalidInput("user game needs dx >= 1 and dy >= 1");
    auto shared = std::make_shared<F>(std::move(f));
    UserCost c{std::move(name),
               [shared](std::span<const double> z) { return (*shared)(z); },
               [shared](std::span<const Dual1> z) { return (*shared)(z); },
               [shared](std::span<const Dual2> z) { return (*shared)(z); }};
    return Game(std::move(c), dx, dy);
  }

  GameKind kind() const {
    if (std::holds_alternative<QuadraticCost>(cost_)) return GameKind::Quadratic;
    if (std::holds_alternative<Toy2DCost>(cost_)) return GameKind::Toy2D;
    return GameKind::UserScalar;
  }

  int dx() const { return dx_; }
  int dy() const { return dy_; }
  int dim() const { return dx_ + dy_; }

  /// Only valid for quadratic games.
  const Eigen::MatrixXd& matrix() const {
    if (const auto* q = std::get_if<QuadraticCost>(&cost_)) return q->m;
    throw InvalidInput("game is not quadratic");
  }

  std::string name() const {
    if (const auto* u = std::get_if<UserCost>(&cost_)) return u->name;
    return to_string(kind());
  }

  template <typename S>
  S cost(std::span<const S> z) const {
    return std::visit([&](const auto& c) -> S { return c(z); }, cost_);
  }

  /// Callable view of the cost suitable for the autodiff helpers.
  auto cost_fn() const {
    return [this](auto z) { return this->cost(z); };
  }

  /// +1 on the x-block, -1 on the y-block: ω = signs ∘ ∇f.
  Eigen::VectorXd signs() const {
    Eigen::VectorXd s(dim());
    s.head(dx_).setOnes();
    s.tail(dy_).setConstant(-1.0);
    return s;
  }

  void check(const StrategyPoint& z) const {
    if (z.dx() != dx_ || z.dy() != dy_) {
      throw InvalidInput("strategy split (" + std::to_string(z.dx()) + "," + std::to_string(z.dy()) +
                         ") does not match game (" + std::to_string(dx_) + "," + std::to_string(dy_) + ")");
    }
  }

  StrategyPoint point(Eigen::VectorXd coords) const { return {std::move(coords), dx_, dy_}; }

 private:
  using CostVariant = std::variant<QuadraticCost, Toy2DCost, UserCost>;

  Game(CostVariant c, int dx, int dy) : cost_(std::move(c)), dx_(dx), dy_(dy) {}

  CostVariant cost_;
  int dx_;
  int dy_;
};

using VectorField = Eigen::VectorXd;

/// J = S + A with S = diag(D²xx f, -D²yy f) and A holding the interaction blocks.
struct GameJacobian {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd symmetric_part;
  Eigen::MatrixXd antisymmetric_part;
};

inline double eval_cost(const Game& game, const StrategyPoint& z) {
  game.check(z);
  const Eigen::VectorXd& c = z.coords();
  return game.cost(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
}

/// ω(z) = (D_x f, -D_y f).
inline VectorField eval_omega(const Game& game, const StrategyPoint& z) {
  game.check(z);
  VectorField w;
  if (game.kind() == GameKind::Quadratic) {
    w = game.signs().cwiseProduct(game.matrix() * z.coords());
  } else {
    w = game.signs().cwiseProduct(grad_scalar(game.cost_fn(), z.coords()));
  }
  if (!w.allFinite()) throw NumericalError("non-finite game vector field", z.coords());
  return w;
}

/// Splits J by blocks. S + A reproduces J bit-for-bit since each entry is
/// copied into exactly one of the two parts.
inline GameJacobian split_jacobian(Eigen::MatrixXd j, int dx, int dy) {
  GameJacobian out;
  out.symmetric_part = Eigen::MatrixXd::Zero(dx + dy, dx + dy);
  out.antisymmetric_part = Eigen::MatrixXd::Zero(dx + dy, dx + dy);
  out.symmetric_part.topLeftCorner(dx, dx) = j.topLeftCorner(dx, dx);
  out.symmetric_part.bottomRightCorner(dy, dy) = j.bottomRightCorner(dy, dy);
  out.antisymmetric_part.topRightCorner(dx, dy) = j.topRightCorner(dx, dy);
  out.antisymmetric_part.bottomLeftCorner(dy, dx) = j.bottomLeftCorner(dy, dx);
  out.matrix = std::move(j);
  return out;
}

inline GameJacobian eval_jacobian(const Game& game, const StrategyPoint& z) {
  game.check(z);
  Eigen::MatrixXd j;
  if (game.kind() == GameKind::Quadratic) {
    j = game.signs().asDiagonal() * game.matrix();
  } else {
    j = game.signs().asDiagonal() * hessian(game.cost_fn(), z.coords());
  }
  if (!j.allFinite()) throw NumericalError("non-finite game Jacobian", z.coords());

  GameJacobian out = split_jacobian(std::move(j), game.dx(), game.dy());
  // The block split equals the symmetric/antisymmetric split only when
  // D²xy f = (D²yx f)ᵀ; a cost callable that disagrees with itself across
  // scalar types trips this.
  const Eigen::MatrixXd sym = 0.5 * (out.matrix + out.matrix.transpose());
  const double scale = std::max(1.0, out.matrix.cwiseAbs().maxCoeff());
  if ((out.symmetric_part - sym).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw NumericalError("block split of J is not its symmetric part; cost callable is inconsistent", z.coords());
  }
  return out;
}

/// Stable 64-bit FNV-1a fingerprint of the game definition, as hex.
inline std::string game_hash(const Game& game) {
  std::string canon = std::string(to_string(game.kind())) + ":" + game.name() + ":" + std::to_string(game.dx()) +
                      "," + std::to_string(game.dy());
  if (game.kind() == GameKind::Quadratic) {
    const Eigen::MatrixXd& m = game.matrix();
    char buf[40];
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof buf, ";%.17g", m(i, j));
        canon += buf;
      }
  }
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace lss
