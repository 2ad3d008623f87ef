#pragma once

// Critical points of ω and their local classification.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lss/dynamics.hpp"
#include "lss/errors.hpp"
#include "lss/game.hpp"
#include "lss/parallel.hpp"

namespace lss {

/// Hyperbolicity band on |Re λ|.
inline constexpr double kSpectralTol = 1e-8;
/// Points closer than this are the same critical point.
inline constexpr double kDedupDistance = 1e-6;
/// Central-difference step for the Jacobian of h.
inline constexpr double kHJacobianStep = 1e-5;

struct CriticalPoint {
  StrategyPoint z;
  double omega_residual = 0.0;
  int newton_iters = 0;
  StrategyPoint seed_point;
};

struct SearchBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  bool contains(const Eigen::VectorXd& z) const {
    return (z.array() >= lo.array()).all() && (z.array() <= hi.array()).all();
  }
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iters = 100;
};

struct CriticalPointSearch {
  std::vector<CriticalPoint> points;
  int seeds = 0;
  int singular_seeds = 0;  // a Newton step hit a singular J
  int unconverged_seeds = 0;
  int outside_box = 0;  // converged, but outside the search box
};

namespace detail {

inline void validate_box(const SearchBox& box, int d) {
  if (box.lo.size() != d || box.hi.size() != d) throw InvalidInput("search box dimension does not match the game");
  if (!box.lo.allFinite() || !box.hi.allFinite()) throw InvalidInput("search box bounds must be finite");
  if ((box.lo.array() > box.hi.array()).any()) throw InvalidInput("search box is empty (lo > hi)");
}

enum class NewtonOutcome { Converged, Singular, Unconverged };

struct NewtonResult {
  NewtonOutcome outcome = NewtonOutcome::Unconverged;
  Eigen::VectorXd z;
  double residual = 0.0;
  int iters = 0;
};

/// Plain Newton on ω. Converged means ‖ω‖ ≤ tol after a step that was
/// itself small, so plateaus where ω merely underflows are not accepted.
inline NewtonResult newton(const Game& game, Eigen::VectorXd z, const NewtonOptions& opt) {
  NewtonResult r;
  for (int k = 0; k < opt.max_iters; ++k) {
    const StrategyPoint p = game.point(z);
    const Eigen::VectorXd w = eval_omega(game, p);
    const Eigen::MatrixXd j = eval_jacobian(game, p).matrix;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible()) {
      r.outcome = NewtonOutcome::Singular;
      r.z = z;
      r.iters = k;
      return r;
    }
    const Eigen::VectorXd step = lu.solve(w);
    z -= step;
    if (!z.allFinite()) {
      r.outcome = NewtonOutcome::Unconverged;
      r.iters = k + 1;
      return r;
    }
    const double res = eval_omega(game, game.point(z)).norm();
    if (res <= opt.tol && step.norm() <= 1e-6 * (1.0 + z.norm())) {
      r.outcome = NewtonOutcome::Converged;
      r.z = z;
      r.residual = res;
      r.iters = k + 1;
      return r;
    }
  }
  r.z = z;
  r.iters = opt.max_iters;
  return r;
}

inline bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

}  // namespace detail

/// Newton from caller-supplied seeds; converged points inside `box` are
/// deduplicated and returned in lexicographic order.
inline CriticalPointSearch find_critical_points(const Game& game, const SearchBox& box,
                                                const std::vector<Eigen::VectorXd>& seeds,
                                                const NewtonOptions& opt = {}) {
  detail::validate_box(box, game.dim());
  if (!(opt.tol > 0.0) || opt.max_iters < 1) throw InvalidInput("Newton tolerance and iteration cap must be positive");

  std::vector<detail::NewtonResult> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    if (seeds[i].size() != game.dim()) throw InvalidInput("Newton seed has the wrong dimension");
    results[i] = detail::newton(game, seeds[i], opt);
  });

  CriticalPointSearch out;
  out.seeds = static_cast<int>(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& r = results[i];
    if (r.outcome == detail::NewtonOutcome::Singular) {
      ++out.singular_seeds;
      continue;
    }
    if (r.outcome == detail::NewtonOutcome::Unconverged) {
      ++out.unconverged_seeds;
      continue;
    }
    if (!box.contains(r.z)) {
      ++out.outside_box;
      continue;
    }
    const bool duplicate = std::any_of(out.points.begin(), out.points.end(), [&](const CriticalPoint& c) {
      return (c.z.coords() - r.z).norm() < kDedupDistance;
    });
    if (!duplicate) out.points.push_back({game.point(r.z), r.residual, r.iters, game.point(seeds[i])});
  }
  std::sort(out.points.begin(), out.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return detail::lex_less(a.z.coords(), b.z.coords()); });
  return out;
}

/// Uniform grid_n^d seeds over the box (cell-centred endpoints included).
inline std::vector<Eigen::VectorXd> grid_seeds(const SearchBox& box, int grid_n) {
  const auto d = box.lo.size();
  if (grid_n < 2) throw InvalidInput("grid must have at least 2 points per axis");
  if (d > 4) throw InvalidInput("grid seeding is limited to d <= 4; supply seeds explicitly");
  long total = 1;
  for (Eigen::Index i = 0; i < d; ++i) total *= grid_n;
  std::vector<Eigen::VectorXd> seeds;
  seeds.reserve(static_cast<std::size_t>(total));
  for (long flat = 0; flat < total; ++flat) {
    Eigen::VectorXd s(d);
    long rem = flat;
    for (Eigen::Index i = 0; i < d; ++i) {
      const long k = rem % grid_n;
      rem /= grid_n;
      s[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(k) / (grid_n - 1);
    }
    seeds.push_back(std::move(s));
  }
  return seeds;
}

inline CriticalPointSearch find_critical_points(const Game& game, const SearchBox& box, int grid_n,
                                                const NewtonOptions& opt = {}) {
  detail::validate_box(box, game.dim());
  return find_critical_points(game, box, grid_seeds(box, grid_n), opt);
}

enum class Classification { DNE, NonNashLASE, Unstable, NonHyperbolic };

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::DNE:
      return "DNE";
    case Classification::NonNashLASE:
      return "NonNashLASE";
    case Classification::Unstable:
      return "Unstable";
    case Classification::NonHyperbolic:
      return "NonHyperbolic";
  }
  return "?";
}

struct SpectrumReport {
  Eigen::VectorXd z;
  double residual = 0.0;
  std::vector<std::complex<double>> jacobian_eigs;
  std::vector<double> s_eigs_x;  // eigenvalues of D²xx f
  std::vector<double> s_eigs_y;  // eigenvalues of D²yy f
  Classification classification = Classification::NonHyperbolic;
  std::vector<std::complex<double>> h_eigs;  // empty if h could not be evaluated nearby
  bool hyperbolic = false;
};

/// Central-difference Jacobian of limiting_h.
inline Eigen::MatrixXd h_jacobian_fd(const Game& game, const StrategyPoint& z, const LambdaFunction& lam,
                                     const DampingFunction& damping, double step = kHJacobianStep) {
  const int d = game.dim();
  Eigen::MatrixXd jh(d, d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd zp = z.coords(), zm = z.coords();
    zp[k] += step;
    zm[k] -= step;
    jh.col(k) = (limiting_h(game, z.with(zp), lam, damping) - limiting_h(game, z.with(zm), lam, damping)) / (2 * step);
  }
  return jh;
}

namespace detail {

inline std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m, const StrategyPoint& z) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed", z.coords());
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(out.begin(), out.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return out;
}

inline std::vector<double> sym_eigenvalues(const Eigen::MatrixXd& m, const StrategyPoint& z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed", z.coords());
  return {es.eigenvalues().data(), es.eigenvalues().data() + m.rows()};
}

}  // namespace detail

inline SpectrumReport classify(const Game& game, const CriticalPoint& cp, const LambdaFunction& lam = {},
                               const DampingFunction& damping = {}) {
  const StrategyPoint& z = cp.z;
  game.check(z);
  if (!(cp.omega_residual <= 1e-8)) throw InvalidInput("classify needs a critical point with residual <= 1e-8");
  const GameJacobian jac = eval_jacobian(game, z);
  const int dx = game.dx(), dy = game.dy();

  SpectrumReport r;
  r.z = z.coords();
  r.residual = cp.omega_residual;
  r.jacobian_eigs = detail::eigenvalues(jac.matrix, z);
  r.s_eigs_x = detail::sym_eigenvalues(jac.symmetric_part.topLeftCorner(dx, dx), z);
  // S stores -D²yy f in its lower block.
  r.s_eigs_y = detail::sym_eigenvalues(-jac.symmetric_part.bottomRightCorner(dy, dy), z);

  r.hyperbolic = std::none_of(r.jacobian_eigs.begin(), r.jacobian_eigs.end(),
                              [](auto e) { return std::abs(e.real()) <= kSpectralTol; });
  const bool dne = r.s_eigs_x.front() > kSpectralTol && r.s_eigs_y.back() < -kSpectralTol;
  const bool stable = std::all_of(r.jacobian_eigs.begin(), r.jacobian_eigs.end(),
                                  [](auto e) { return e.real() > kSpectralTol; });
  if (dne) {
    r.classification = Classification::DNE;
  } else if (!r.hyperbolic) {
    r.classification = Classification::NonHyperbolic;
  } else if (stable) {
    r.classification = Classification::NonNashLASE;
  } else {
    r.classification = Classification::Unstable;
  }

  try {
    r.h_eigs = detail::eigenvalues(h_jacobian_fd(game, z, lam, damping), z);
  } catch (const SingularityError&) {
    r.h_eigs.clear();
  }
  return r;
}

inline SpectrumReport classify_point(const Game& game, const Eigen::VectorXd& z, const LambdaFunction& lam = {},
                                     const DampingFunction& damping = {}) {
  const StrategyPoint p = game.point(z);
  return classify(game, {p, eval_omega(game, p).norm(), 0, p}, lam, damping);
}

struct EigenvectorViolation {
  Eigen::VectorXd z;
  double relative_gap = 0.0;  // ‖u + ω‖ / ‖ω‖
};

/// Samples where u = Jᵀ(JᵀJ+λI)⁻¹Jᵀω equals -ω, i.e. where h has a zero
/// that is not a critical point. Samples with ω = 0 are skipped.
inline std::vector<EigenvectorViolation> check_eigenvector_assumption(const Game& game,
                                                                      const std::vector<Eigen::VectorXd>& samples,
                                                                      const LambdaFunction& lam = {}) {
  std::vector<EigenvectorViolation> out;
  for (const auto& s : samples) {
    if (!s.allFinite()) throw InvalidInput("eigenvector check sample is not finite");
    const AdjustmentSolve a = solve_adjustment(game, game.point(s), lam);
    const double wn = a.omega.norm();
    if (wn == 0.0) continue;
    const double gap = (a.u + a.omega).norm();
    if (gap <= 1e-8 * wn) out.push_back({s, gap / wn});
  }
  return out;
}

}  // namespace lss
