#pragma once

// Additive noise for the two-timescale recursions and a Monte Carlo
// estimate of lock-in probability. Every random number is a pure function of
// (seed, trial, n, stream), so serial and parallel runs agree bit-for-bit.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lss/dynamics.hpp"
#include "lss/errors.hpp"
#include "lss/game.hpp"
#include "lss/parallel.hpp"
#include "lss/runner.hpp"

namespace lss {

/// Philox4x32-10 (Salmon et al.): a keyed bijection on 128-bit counters.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Independent random streams within one (trial, n) cell.
enum class NoiseStream : std::uint32_t { Z = 1, V = 2, InitZ = 3, InitV = 4 };

/// Uniform doubles and normals addressed by (seed, trial, n, stream, index).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trial, std::uint64_t n, NoiseStream stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        n_(n),
        trial_(static_cast<std::uint32_t>(trial)),
        stream_(static_cast<std::uint32_t>(stream)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    if (pos_ >= 2) refill();
    const std::uint64_t a = block_[2 * pos_], b = block_[2 * pos_ + 1];
    ++pos_;
    const std::uint64_t bits = ((a << 32) | b) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  /// Uniform on (-1, 1), symmetric about zero.
  double symmetric_uniform() { return 2.0 * (uniform() + 0x1.0p-54) - 1.0; }

  double normal() {
    if (spare_) {
      const double s = *spare_;
      spare_.reset();
      return s;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  void refill() {
    // Block index lives in the low 24 bits next to the stream id.
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(n_), static_cast<std::uint32_t>(n_ >> 32), trial_,
                                  (stream_ << 24) | (block_index_ & 0xFFFFFFu)};
    block_ = Philox4x32::generate(ctr, key_);
    ++block_index_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t n_;
  std::uint32_t trial_;
  std::uint32_t stream_;
  std::uint32_t block_index_ = 0;
  Philox4x32::Counter block_{};
  int pos_ = 2;
  std::optional<double> spare_;
};

enum class NoiseKind { None, BoundedUniform, TruncGaussian };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None:
      return "none";
    case NoiseKind::BoundedUniform:
      return "uniform";
    case NoiseKind::TruncGaussian:
      return "gaussian";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::None;
  if (s == "uniform") return NoiseKind::BoundedUniform;
  if (s == "gaussian") return NoiseKind::TruncGaussian;
  throw InvalidInput("unknown noise kind '" + s + "' (expected none, uniform, gaussian)");
}

/// Symmetric noise with ‖M^z‖ ≤ c_z(1+‖z‖) and ‖M^v‖ ≤ c_v(1+‖z‖) on every draw.
struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double c_z = 0.0;
  double c_v = 0.0;
  double sigma = 0.5;  // TruncGaussian scale as a fraction of the bound
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel bounded_uniform(double cz, double cv, std::uint64_t seed) {
    return validated({NoiseKind::BoundedUniform, cz, cv, 0.5, seed});
  }
  static NoiseModel trunc_gaussian(double cz, double cv, double sigma, std::uint64_t seed) {
    return validated({NoiseKind::TruncGaussian, cz, cv, sigma, seed});
  }

  static NoiseModel validated(NoiseModel m) {
    if (!(m.c_z >= 0.0) || !(m.c_v >= 0.0) || !std::isfinite(m.c_z) || !std::isfinite(m.c_v)) {
      throw InvalidInput("noise bounds c_z and c_v must be finite and nonnegative");
    }
    if (m.kind == NoiseKind::TruncGaussian && !(m.sigma > 0.0 && std::isfinite(m.sigma))) {
      throw InvalidInput("noise sigma must be positive");
    }
    return m;
  }
};

namespace detail {

/// Keeps rounding from pushing a draw past its bound.
inline constexpr double kBoundShrink = 1.0 - 4.0 * std::numeric_limits<double>::epsilon();

inline Eigen::VectorXd draw_vector(const NoiseModel& m, double bound, int dim, CounterRng rng) {
  Eigen::VectorXd out(dim);
  if (bound == 0.0) return Eigen::VectorXd::Zero(dim);
  const double r = bound * kBoundShrink;
  if (m.kind == NoiseKind::BoundedUniform) {
    // Cube of half-width r/√d: every corner is inside the r-ball.
    const double half = r / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < dim; ++i) out[i] = half * rng.symmetric_uniform();
    return out;
  }
  // Isotropic Gaussian with per-axis scale σ·r/√d, rejected outside the r-ball;
  // after 64 rejections the last draw is radially clipped (still symmetric).
  const double scale = m.sigma * r / std::sqrt(static_cast<double>(dim));
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (int i = 0; i < dim; ++i) out[i] = scale * rng.normal();
    if (out.norm() <= r) return out;
  }
  return out * (r / out.norm()) * kBoundShrink;
}

}  // namespace detail

/// (M^z_{n+1}, M^v_{n+1}) for iteration n of `trial`. Deterministic in
/// (model.seed, trial, n); the two vectors use independent streams.
inline StepNoise draw_noise(const NoiseModel& m, const Eigen::VectorXd& z, int dim, std::uint64_t trial, long n) {
  if (m.kind == NoiseKind::None) return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
  if (!z.allFinite()) throw InvalidInput("noise requested at a non-finite iterate");
  const double scale = 1.0 + z.norm();
  const auto un = static_cast<std::uint64_t>(n);
  return {detail::draw_vector(m, m.c_z * scale, dim, CounterRng(m.seed, trial, un, NoiseStream::Z)),
          detail::draw_vector(m, m.c_v * scale, dim, CounterRng(m.seed, trial, un, NoiseStream::V))};
}

/// Noise source for run_rule; None yields no noise at all, so the run is
/// bit-identical to the deterministic one.
inline NoiseSource make_noise_source(const NoiseModel& m, std::uint64_t trial = 0) {
  if (m.kind == NoiseKind::None) return {};
  return [m, trial](const StrategyPoint& z, long n) { return draw_noise(m, z.coords(), z.dim(), trial, n); };
}

inline Trajectory run_noisy(const Game& game, const RunConfig& cfg, const TwoTimescaleState& init, long n_steps,
                            const NoiseModel& noise, std::uint64_t trial = 0) {
  if (noise.kind != NoiseKind::None && is_ode(cfg.rule)) throw InvalidInput("noisy runs need a discrete step rule");
  Trajectory t = run_rule(game, cfg, init, n_steps, make_noise_source(noise, trial));
  if (noise.kind != NoiseKind::None) t.seed = noise.seed;
  return t;
}

/// Wilson score interval for k successes in n trials.
inline std::pair<double, double> wilson_interval(long k, long n, double zq = 1.959963984540054) {
  if (n <= 0) return {0.0, 1.0};
  const double p = static_cast<double>(k) / n;
  const double z2 = zq * zq;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = zq * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

struct LockInConfig {
  Eigen::VectorXd z_star;
  double r0 = 0.2;
  double epsilon = 0.05;
  long n0 = 1000;
  long n1 = 21000;
  long horizon = 31000;
  int trials = 200;
  double v_radius = 1e-3;  // initial ‖v - v*(z)‖ bound
};

struct TrialOutcome {
  int trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double max_dev_after_n1 = 0.0;  // +inf if the run diverged
};

struct LockInEstimate {
  long n0 = 0, n1 = 0, horizon = 0;
  double r0 = 0.0, epsilon = 0.0;
  int trials = 0;
  int successes = 0;
  double p_hat = 0.0;
  std::pair<double, double> wilson{0.0, 1.0};
  double wall_seconds = 0.0;
  std::vector<TrialOutcome> outcomes;
};

namespace detail {

inline Eigen::VectorXd uniform_in_ball(CounterRng& rng, int d, double radius) {
  Eigen::VectorXd dir(d);
  do {
    for (int i = 0; i < d; ++i) dir[i] = rng.normal();
  } while (dir.norm() == 0.0);
  const double r = radius * std::pow(rng.uniform(), 1.0 / d);
  return dir.normalized() * r;
}

inline TrialOutcome run_lockin_trial(const Game& game, const RunConfig& cfg, const LockInConfig& lc,
                                     const NoiseModel& noise, int trial) {
  const int d = game.dim();
  const auto utrial = static_cast<std::uint64_t>(trial);
  const auto un0 = static_cast<std::uint64_t>(lc.n0);
  CounterRng init_z(noise.seed, utrial, un0, NoiseStream::InitZ);
  CounterRng init_v(noise.seed, utrial, un0, NoiseStream::InitV);

  const StrategyPoint z0 = game.point(lc.z_star + uniform_in_ball(init_z, d, lc.r0));
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(d);
  if (has_fast_iterate(cfg.rule)) v0 = v_star(game, z0, cfg.lambda) + uniform_in_ball(init_v, d, lc.v_radius);
  std::optional<Eigen::VectorXd> th;
  if (cfg.rule == Rule::TVLSS) th = Eigen::VectorXd(Eigen::Vector2d(1.0, 0.0));
  TwoTimescaleState s(z0, v0, lc.n0, th);

  TrialOutcome out;
  out.trial = trial;
  out.seed = noise.seed;
  const NoiseSource src = make_noise_source(noise, utrial);
  try {
    while (s.n < lc.horizon) {
      s = step_once(game, cfg, s, src);
      if (s.z.coords().norm() > kDivergenceRadius) throw DivergenceError("guard", s.z.coords(), s.n);
      if (s.n >= lc.n1) out.max_dev_after_n1 = std::max(out.max_dev_after_n1, (s.z.coords() - lc.z_star).norm());
    }
  } catch (const DivergenceError&) {
    out.max_dev_after_n1 = std::numeric_limits<double>::infinity();
  }
  out.success = out.max_dev_after_n1 <= lc.epsilon;
  return out;
}

}  // namespace detail

/// Fraction of trials started uniformly in the r0-ball at n0 that stay
/// within epsilon of z* for every n in [n1, horizon].
inline LockInEstimate estimate_lockin(const Game& game, const RunConfig& cfg, const LockInConfig& lc,
                                      const NoiseModel& noise) {
  if (!(lc.epsilon > 0.0) || !(lc.epsilon < lc.r0)) throw InvalidInput("lock-in needs 0 < epsilon < r0");
  if (lc.n0 < 0 || !(lc.n1 > lc.n0)) throw InvalidInput("lock-in needs 0 <= n0 < n1");
  if (lc.horizon < lc.n1) throw InvalidInput("lock-in horizon must be >= n1");
  if (lc.trials < 1) throw InvalidInput("lock-in needs at least one trial");
  if (lc.z_star.size() != game.dim()) throw InvalidInput("z_star has the wrong dimension");
  if (!(lc.v_radius >= 0.0)) throw InvalidInput("v_radius must be nonnegative");
  if (is_ode(cfg.rule)) throw InvalidInput("lock-in needs a discrete step rule");

  const auto t0 = std::chrono::steady_clock::now();
  LockInEstimate est;
  est.n0 = lc.n0;
  est.n1 = lc.n1;
  est.horizon = lc.horizon;
  est.r0 = lc.r0;
  est.epsilon = lc.epsilon;
  est.trials = lc.trials;
  est.outcomes.resize(static_cast<std::size_t>(lc.trials));
  parallel_for(est.outcomes.size(), [&](std::size_t i) {
    est.outcomes[i] = detail::run_lockin_trial(game, cfg, lc, noise, static_cast<int>(i));
  });
  est.successes = static_cast<int>(std::count_if(est.outcomes.begin(), est.outcomes.end(),
                                                 [](const TrialOutcome& o) { return o.success; }));
  est.p_hat = static_cast<double>(est.successes) / lc.trials;
  est.wilson = wilson_interval(est.successes, lc.trials);
  est.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return est;
}

inline void write_trials_csv(std::ostream& out, const LockInEstimate& est) {
  out << "trial,seed,success,max_dev_after_n1\n";
  for (const auto& o : est.outcomes) {
    out << o.trial << ',' << o.seed << ',' << (o.success ? 1 : 0) << ',' << format_real(o.max_dev_after_n1) << '\n';
  }
}

}  // namespace lss
