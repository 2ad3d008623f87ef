#pragma once

// Step rules for zero-sum games: simultaneous gradient descent and its
// two-timescale variant, consensus optimization, symplectic gradient
// adjustment, and local symplectic surgery (plain and time-varying), plus
// the dense limiting field h(z) they are compared against.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lss/errors.hpp"
#include "lss/game.hpp"
#include "lss/jvp.hpp"

namespace lss {

/// λ(z) = ξ₁(1 - e^{-‖ω(z)‖²}); vanishes exactly at critical points.
struct LambdaFunction {
  double xi1 = 1e-4;

  double operator()(const Eigen::VectorXd& omega) const { return xi1 * -std::expm1(-omega.squaredNorm()); }
};

/// g(u) = e^{-ξ₂‖u‖²} applied to the adjustment vector u.
struct DampingFunction {
  double xi2 = 1e-4;

  double operator()(const Eigen::VectorXd& u) const { return std::exp(-xi2 * u.squaredNorm()); }
};

/// λ₁(z) = ξ(1 - e^{-‖ω(z)‖²})². The square makes ∇λ₁ vanish wherever ω does.
struct TvLambdaFunction {
  double xi = 1e-2;

  double operator()(const Eigen::VectorXd& omega) const {
    const double base = -std::expm1(-omega.squaredNorm());
    return xi * base * base;
  }
};

/// Probe direction and amplitude of the time-varying term λ₁(z)cos(t)u₀.
struct TvlssParams {
  TvLambdaFunction lambda1;
  Eigen::VectorXd u0;  // empty → (1,…,1)/√d

  Eigen::VectorXd direction(int d) const {
    if (u0.size() == 0) return Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
    if (u0.size() != d) throw InvalidInput("TVLSS probe direction u0 has the wrong length");
    return u0;
  }
};

/// Additive martingale-difference noise for one step; empty means none.
struct StepNoise {
  Eigen::VectorXd mz;
  Eigen::VectorXd mv;
};

struct TwoTimescaleState {
  StrategyPoint z;
  Eigen::VectorXd v;
  std::optional<Eigen::VectorXd> theta;  // TVLSS only
  long n = 0;

  TwoTimescaleState(StrategyPoint z0, Eigen::VectorXd v0, long n0 = 0,
                    std::optional<Eigen::VectorXd> theta0 = std::nullopt)
      : z(std::move(z0)), v(std::move(v0)), theta(std::move(theta0)), n(n0) {
    if (v.size() != z.dim()) throw InvalidInput("fast iterate v must have the same length as z");
    if (n < 0) throw InvalidInput("iteration counter must be nonnegative");
    if (theta && theta->size() != 2) throw InvalidInput("TVLSS phase state must be 2-dimensional");
  }

  /// v = 0 and, for TVLSS, θ₀ = (1, 0).
  static TwoTimescaleState at_rest(StrategyPoint z0, bool with_theta = false, long n0 = 0) {
    const int d = z0.dim();
    std::optional<Eigen::VectorXd> th;
    if (with_theta) th = Eigen::Vector2d(1.0, 0.0);
    return {std::move(z0), Eigen::VectorXd::Zero(d), n0, std::move(th)};
  }
};

namespace detail {

inline void add_noise(Eigen::VectorXd& drift, const Eigen::VectorXd& m) {
  if (m.size() == 0) return;
  if (m.size() != drift.size()) throw InvalidInput("noise vector has the wrong length");
  drift += m;
}

inline StrategyPoint finite_or_throw(const StrategyPoint& from, Eigen::VectorXd next, long n) {
  if (!next.allFinite()) throw DivergenceError("iterate became non-finite", from.coords(), n);
  return from.with(std::move(next));
}

}  // namespace detail

/// Dense fast-timescale target v*(z) = (JᵀJ + λI)⁻¹ Jᵀω, via the SVD of J.
struct AdjustmentSolve {
  Eigen::VectorXd omega;
  Eigen::VectorXd v_star;
  Eigen::VectorXd u;  // Jᵀ v*
  double lambda = 0.0;
};

inline AdjustmentSolve solve_adjustment(const Game& game, const StrategyPoint& z, const LambdaFunction& lam) {
  AdjustmentSolve out;
  out.omega = eval_omega(game, z);
  out.lambda = lam(out.omega);
  const Eigen::MatrixXd j = eval_jacobian(game, z).matrix;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  const double smin = s.size() ? s[s.size() - 1] : 0.0;
  if (smin * smin + out.lambda <= 1e-14 * std::max(1.0, smax * smax)) {
    throw SingularityError("JᵀJ + λI is singular", z.coords(), smin);
  }
  const Eigen::VectorXd ut_omega = svd.matrixU().transpose() * out.omega;
  const Eigen::ArrayXd s2 = s.array().square();
  out.v_star = svd.matrixV() * (s.array() / (s2 + out.lambda) * ut_omega.array()).matrix();
  out.u = j.transpose() * out.v_star;
  return out;
}

inline Eigen::VectorXd v_star(const Game& game, const StrategyPoint& z, const LambdaFunction& lam) {
  return solve_adjustment(game, z, lam).v_star;
}

/// h(z) = ½(ω + g(u)u), u = Jᵀ(JᵀJ + λI)⁻¹Jᵀω. Its Jacobian at a
/// nondegenerate critical point is S(z).
inline Eigen::VectorXd limiting_h(const Game& game, const StrategyPoint& z, const LambdaFunction& lam,
                                  const DampingFunction& damping) {
  const AdjustmentSolve a = solve_adjustment(game, z, lam);
  return 0.5 * (a.omega + damping(a.u) * a.u);
}

/// ω + λ Jᵀω
inline Eigen::VectorXd consensus_field(const Game& game, const StrategyPoint& z, double lambda_co) {
  const Eigen::VectorXd w = eval_omega(game, z);
  return w + lambda_co * jt_vec(game, z, w);
}

/// ω + (λ/2)(J - Jᵀ)ᵀω = ω + (λ/2)(Jᵀω - Jω)
inline Eigen::VectorXd sga_field(const Game& game, const StrategyPoint& z, double lambda_sga) {
  const Eigen::VectorXd w = eval_omega(game, z);
  return w + 0.5 * lambda_sga * (jt_vec(game, z, w) - j_vec_via_two_jtv(game, z, w));
}

inline StrategyPoint simgd_step(const Game& game, const StrategyPoint& z, double gamma, const StepNoise& noise = {},
                                long n = 0) {
  if (!(gamma > 0.0)) throw InvalidInput("step size must be positive");
  Eigen::VectorXd drift = eval_omega(game, z);
  detail::add_noise(drift, noise.mz);
  return detail::finite_or_throw(z, z.coords() - gamma * drift, n);
}

/// Two-timescale simGD. With x_fast (the default) the minimizer moves with
/// the fast step b and the maximizer with the slow step a; otherwise swapped.
inline StrategyPoint two_timescale_simgd_step(const Game& game, const StrategyPoint& z, double a, double b,
                                              bool x_fast = true, const StepNoise& noise = {}, long n = 0) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("step sizes must be positive");
  Eigen::VectorXd drift = eval_omega(game, z);
  detail::add_noise(drift, noise.mz);
  Eigen::VectorXd next = z.coords();
  next.head(game.dx()) -= (x_fast ? b : a) * drift.head(game.dx());
  next.tail(game.dy()) -= (x_fast ? a : b) * drift.tail(game.dy());
  return detail::finite_or_throw(z, std::move(next), n);
}

inline StrategyPoint consensus_step(const Game& game, const StrategyPoint& z, double gamma, double lambda_co,
                                    const StepNoise& noise = {}, long n = 0) {
  if (!(gamma > 0.0)) throw InvalidInput("step size must be positive");
  if (lambda_co < 0.0) throw InvalidInput("consensus weight must be nonnegative");
  Eigen::VectorXd drift = consensus_field(game, z, lambda_co);
  detail::add_noise(drift, noise.mz);
  return detail::finite_or_throw(z, z.coords() - gamma * drift, n);
}

inline StrategyPoint sga_step(const Game& game, const StrategyPoint& z, double gamma, double lambda_sga,
                              const StepNoise& noise = {}, long n = 0) {
  if (!(gamma > 0.0)) throw InvalidInput("step size must be positive");
  if (lambda_sga < 0.0) throw InvalidInput("SGA weight must be nonnegative");
  Eigen::VectorXd drift = sga_field(game, z, lambda_sga);
  detail::add_noise(drift, noise.mz);
  return detail::finite_or_throw(z, z.coords() - gamma * drift, n);
}

namespace detail {

/// Shared by LSS and TVLSS: returns (z drift without the time-varying term,
/// v drift), both matrix-free.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> lss_drifts(const Game& game, const TwoTimescaleState& s,
                                                               const LambdaFunction& lam,
                                                               const DampingFunction& damping) {
  const Eigen::VectorXd w = eval_omega(game, s.z);
  const Eigen::VectorXd jt_v = jt_vec(game, s.z, s.v);
  const Eigen::VectorXd j_v = j_vec_via_two_jtv(game, s.z, s.v);
  // ∇_v ½(‖Jv - ω‖² + λ‖v‖²) = Jᵀ(Jv - ω) + λv
  Eigen::VectorXd v_drift = jt_vec(game, s.z, j_v - w) + lam(w) * s.v;
  Eigen::VectorXd z_drift = w + damping(jt_v) * jt_v;
  return {std::move(z_drift), std::move(v_drift)};
}

}  // namespace detail

/// One iteration of local symplectic surgery:
///   z' = z - a(ω + g(Jᵀv)Jᵀv + Mz),  v' = v - b(JᵀJv - Jᵀω + λv + Mv).
inline TwoTimescaleState lss_step(const Game& game, const TwoTimescaleState& s, double a, double b,
                                  const LambdaFunction& lam, const DampingFunction& damping,
                                  const StepNoise& noise = {}) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("step sizes must be positive");
  auto [z_drift, v_drift] = detail::lss_drifts(game, s, lam, damping);
  detail::add_noise(z_drift, noise.mz);
  detail::add_noise(v_drift, noise.mv);
  Eigen::VectorXd v_next = s.v - b * v_drift;
  if (!v_next.allFinite()) throw DivergenceError("fast iterate became non-finite", s.z.coords(), s.n);
  return {detail::finite_or_throw(s.z, s.z.coords() - a * z_drift, s.n), std::move(v_next), s.n + 1, s.theta};
}

/// Time-varying LSS. θ follows the Euler-discretized rotation θ̇ = [[0,-1],[1,0]]θ
/// with the slow step; θ₁ plays the role of cos(t) in λ₁(z)cos(t)u₀.
inline TwoTimescaleState tvlss_step(const Game& game, const TwoTimescaleState& s, double a, double b,
                                    const LambdaFunction& lam, const TvlssParams& tv, const DampingFunction& damping,
                                    const StepNoise& noise = {}) {
  if (!s.theta) throw InvalidInput("TVLSS state needs a phase vector theta");
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("step sizes must be positive");
  const Eigen::Vector2d th = *s.theta;
  auto [z_drift, v_drift] = detail::lss_drifts(game, s, lam, damping);
  const double l1 = tv.lambda1(eval_omega(game, s.z));
  if (l1 != 0.0) z_drift += l1 * th[0] * tv.direction(game.dim());
  detail::add_noise(z_drift, noise.mz);
  detail::add_noise(v_drift, noise.mv);

  const Eigen::Vector2d th_next(th[0] - a * th[1], th[1] + a * th[0]);
  Eigen::VectorXd v_next = s.v - b * v_drift;
  if (!v_next.allFinite()) throw DivergenceError("fast iterate became non-finite", s.z.coords(), s.n);
  return {detail::finite_or_throw(s.z, s.z.coords() - a * z_drift, s.n), std::move(v_next), s.n + 1,
          Eigen::VectorXd(th_next)};
}

}  // namespace lss
