#pragma once

// Trajectory drivers: iterate a step rule (optionally with additive noise)
// or integrate one of the continuous-time flows with classical RK4.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "lss/dynamics.hpp"
#include "lss/errors.hpp"
#include "lss/game.hpp"
#include "lss/schedule.hpp"
#include "lss/trajectory.hpp"

namespace lss {

/// Iterates whose norm exceeds this are treated as divergent.
inline constexpr double kDivergenceRadius = 1e6;

enum class Rule { SimGD, TwoTimescaleSimGD, Consensus, SGA, LSS, TVLSS, SimGDOde, LSSOde };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::SimGD:
      return "simgd";
    case Rule::TwoTimescaleSimGD:
      return "2ts-simgd";
    case Rule::Consensus:
      return "co";
    case Rule::SGA:
      return "sga";
    case Rule::LSS:
      return "lss";
    case Rule::TVLSS:
      return "tvlss";
    case Rule::SimGDOde:
      return "simgd-ode";
    case Rule::LSSOde:
      return "lss-ode";
  }
  return "?";
}

inline Rule parse_rule(std::string_view name) {
  for (Rule r : {Rule::SimGD, Rule::TwoTimescaleSimGD, Rule::Consensus, Rule::SGA, Rule::LSS, Rule::TVLSS,
                 Rule::SimGDOde, Rule::LSSOde}) {
    if (name == to_string(r)) return r;
  }
  throw InvalidInput("unknown rule '" + std::string(name) +
                     "' (expected simgd, 2ts-simgd, co, sga, lss, tvlss, simgd-ode, lss-ode)");
}

inline bool has_fast_iterate(Rule r) { return r == Rule::LSS || r == Rule::TVLSS; }
inline bool is_two_timescale(Rule r) { return has_fast_iterate(r) || r == Rule::TwoTimescaleSimGD; }
inline bool is_ode(Rule r) { return r == Rule::SimGDOde || r == Rule::LSSOde; }

struct RunConfig {
  Rule rule = Rule::LSS;
  StepSchedule a = StepSchedule::constant(0.004, Timescale::Slow);  // slow step, or γ for one-timescale rules
  StepSchedule b = StepSchedule::constant(0.005, Timescale::Fast);
  LambdaFunction lambda{1e-4};
  DampingFunction damping{1e-4};
  double lambda_co = 1.0;
  double lambda_sga = 1.0;
  bool x_fast = true;
  TvlssParams tv;
  double dt = 0.01;  // ODE rules only
  long stride = 1;
  bool diagnostics = true;
  std::uint64_t seed = 0;

  std::string schedule_description() const {
    if (is_ode(rule)) return "rk4(dt=" + format_real(dt) + ")";
    if (is_two_timescale(rule)) return SchedulePair(a, b).describe();
    return a.describe();
  }
};

/// Supplies (M^z_{n+1}, M^v_{n+1}) given the current iterate and index.
using NoiseSource = std::function<StepNoise(const StrategyPoint& z, long n)>;

enum class OdeFieldKind { Omega, H };

struct OdeField {
  OdeFieldKind kind = OdeFieldKind::Omega;
  LambdaFunction lambda;
  DampingFunction damping;

  Eigen::VectorXd operator()(const Game& game, const StrategyPoint& z) const {
    return kind == OdeFieldKind::Omega ? eval_omega(game, z) : limiting_h(game, z, lambda, damping);
  }
};

namespace detail {

inline TrajectoryRow make_row(const Game& game, long n, const StrategyPoint& z, const Eigen::VectorXd* v,
                              const LambdaFunction& lam, bool diagnostics) {
  TrajectoryRow row;
  row.n = n;
  row.z = z.coords();
  if (v) row.v = *v;
  if (diagnostics) {
    row.omega_norm = eval_omega(game, z).norm();
    if (v) {
      try {
        row.v_gap = (*v - v_star(game, z, lam)).norm();
      } catch (const SingularityError&) {
        row.v_gap = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return row;
}

inline Trajectory blank_trajectory(const Game& game, const RunConfig& cfg) {
  Trajectory t;
  t.rule = to_string(cfg.rule);
  t.schedule = cfg.schedule_description();
  t.seed = cfg.seed;
  t.game_hash = game_hash(game);
  t.dx = game.dx();
  t.dy = game.dy();
  t.has_v = has_fast_iterate(cfg.rule);
  t.has_diagnostics = cfg.diagnostics;
  return t;
}

}  // namespace detail

/// Classical fourth-order Runge–Kutta on ż = -F(z). Stops with the
/// trajectory marked diverged once ‖z‖ exceeds the guard radius.
inline Trajectory integrate_ode(const Game& game, const StrategyPoint& z0, const OdeField& field, double dt,
                                long n_steps, long stride = 1, bool diagnostics = true) {
  if (!(dt > 0.0)) throw InvalidInput("ODE step dt must be positive");
  if (n_steps < 0) throw InvalidInput("step count must be nonnegative");
  if (stride < 1) throw InvalidInput("stride must be >= 1");
  game.check(z0);

  Trajectory t;
  t.rule = field.kind == OdeFieldKind::Omega ? "simgd-ode" : "lss-ode";
  t.schedule = "rk4(dt=" + format_real(dt) + ")";
  t.game_hash = game_hash(game);
  t.dx = game.dx();
  t.dy = game.dy();
  t.has_diagnostics = diagnostics;
  t.rows.push_back(detail::make_row(game, 0, z0, nullptr, field.lambda, diagnostics));

  StrategyPoint z = z0;
  for (long k = 0; k < n_steps; ++k) {
    const Eigen::VectorXd& y = z.coords();
    const Eigen::VectorXd k1 = -field(game, z);
    const Eigen::VectorXd k2 = -field(game, z.with(y + 0.5 * dt * k1));
    const Eigen::VectorXd k3 = -field(game, z.with(y + 0.5 * dt * k2));
    const Eigen::VectorXd k4 = -field(game, z.with(y + dt * k3));
    Eigen::VectorXd next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite() || next.norm() > kDivergenceRadius) {
      t.diverged = true;
      t.diverged_at = k + 1;
      t.divergence_reason = "iterate left the divergence guard radius";
      if (t.rows.back().n != k) t.rows.push_back(detail::make_row(game, k, z, nullptr, field.lambda, diagnostics));
      return t;
    }
    z = z.with(std::move(next));
    if ((k + 1) % stride == 0 || k + 1 == n_steps) {
      t.rows.push_back(detail::make_row(game, k + 1, z, nullptr, field.lambda, diagnostics));
    }
  }
  return t;
}

/// One iteration of a discrete rule at the state's counter n, with step
/// sizes a(n), b(n) and the noise drawn for (z_n, n).
inline TwoTimescaleState step_once(const Game& game, const RunConfig& cfg, const TwoTimescaleState& s,
                                   const NoiseSource& noise = {}) {
  const long n = s.n;
  const double a = cfg.a(n);
  const double b = cfg.b(n);
  const StepNoise m = noise ? noise(s.z, n) : StepNoise{};
  switch (cfg.rule) {
    case Rule::SimGD:
      return {simgd_step(game, s.z, a, m, n), s.v, n + 1, s.theta};
    case Rule::TwoTimescaleSimGD:
      return {two_timescale_simgd_step(game, s.z, a, b, cfg.x_fast, m, n), s.v, n + 1, s.theta};
    case Rule::Consensus:
      return {consensus_step(game, s.z, a, cfg.lambda_co, m, n), s.v, n + 1, s.theta};
    case Rule::SGA:
      return {sga_step(game, s.z, a, cfg.lambda_sga, m, n), s.v, n + 1, s.theta};
    case Rule::LSS:
      return lss_step(game, s, a, b, cfg.lambda, cfg.damping, m);
    case Rule::TVLSS:
      return tvlss_step(game, s, a, b, cfg.lambda, cfg.tv, cfg.damping, m);
    default:
      throw InvalidInput(std::string("rule '") + to_string(cfg.rule) + "' is not a discrete step rule");
  }
}

/// Advances `init` by one rule for `n_steps` iterations. Step sizes are
/// evaluated at the state's own counter, so a run may start at n₀ > 0.
inline Trajectory run_rule(const Game& game, const RunConfig& cfg, const TwoTimescaleState& init, long n_steps,
                           const NoiseSource& noise = {}) {
  if (n_steps < 0) throw InvalidInput("step count must be nonnegative");
  if (cfg.stride < 1) throw InvalidInput("stride must be >= 1");
  game.check(init.z);

  if (is_ode(cfg.rule)) {
    const OdeField field{cfg.rule == Rule::SimGDOde ? OdeFieldKind::Omega : OdeFieldKind::H, cfg.lambda,
                         cfg.damping};
    Trajectory t = integrate_ode(game, init.z, field, cfg.dt, n_steps, cfg.stride, cfg.diagnostics);
    t.seed = cfg.seed;
    return t;
  }

  Trajectory t = detail::blank_trajectory(game, cfg);
  const bool fast = has_fast_iterate(cfg.rule);
  TwoTimescaleState s = init;
  if (cfg.rule == Rule::TVLSS && !s.theta) s.theta = Eigen::VectorXd(Eigen::Vector2d(1.0, 0.0));

  auto record = [&](const TwoTimescaleState& st) {
    t.rows.push_back(detail::make_row(game, st.n, st.z, fast ? &st.v : nullptr, cfg.lambda, cfg.diagnostics));
  };
  record(s);

  for (long k = 0; k < n_steps; ++k) {
    const long n = s.n;
    std::string reason;
    try {
      TwoTimescaleState next = step_once(game, cfg, s, noise);
      if (next.z.coords().norm() > kDivergenceRadius ||
          (fast && next.v.norm() > kDivergenceRadius * kDivergenceRadius)) {
        reason = "iterate left the divergence guard radius";
      } else {
        s = std::move(next);
      }
    } catch (const DivergenceError& e) {
      reason = e.what();
    }
    if (!reason.empty()) {
      // s is the last state inside the guard.
      t.diverged = true;
      t.diverged_at = n + 1;
      t.divergence_reason = std::move(reason);
      if (t.rows.back().n != n) record(s);
      return t;
    }
    if ((k + 1) % cfg.stride == 0 || k + 1 == n_steps) record(s);
  }
  return t;
}

}  // namespace lss
