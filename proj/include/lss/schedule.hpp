#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "lss/errors.hpp"

namespace lss {

enum class ScheduleKind { Constant, Power };
enum class Timescale { Slow, Fast };

/// γ_n = c / (1+n)^α; Constant is the α = 0 case.
class StepSchedule {
 public:
  static StepSchedule constant(double gamma, Timescale role = Timescale::Slow) {
    return StepSchedule(ScheduleKind::Constant, gamma, 0.0, role);
  }

  static StepSchedule power(double c, double alpha, Timescale role = Timescale::Slow) {
    if (alpha == 0.0) return constant(c, role);
    return StepSchedule(ScheduleKind::Power, c, alpha, role);
  }

  double operator()(long n) const {
    if (kind_ == ScheduleKind::Constant) return c_;
    return c_ / std::pow(1.0 + static_cast<double>(n), alpha_);
  }

  ScheduleKind kind() const { return kind_; }
  double c() const { return c_; }
  double alpha() const { return alpha_; }
  Timescale role() const { return role_; }

  // The per-sequence step-size conditions.
  bool sum_diverges() const { return alpha_ <= 1.0; }
  bool square_summable() const { return alpha_ > 0.5; }
  bool vanishes() const { return alpha_ > 0.0; }

  std::string describe() const {
    char buf[96];
    if (kind_ == ScheduleKind::Constant) {
      std::snprintf(buf, sizeof buf, "constant(%.17g)", c_);
    } else {
      std::snprintf(buf, sizeof buf, "power(c=%.17g,alpha=%.17g)", c_, alpha_);
    }
    return buf;
  }

 private:
  StepSchedule(ScheduleKind kind, double c, double alpha, Timescale role)
      : kind_(kind), c_(c), alpha_(alpha), role_(role) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("step size constant must be positive and finite");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInput("step size exponent must be >= 0");
  }

  ScheduleKind kind_;
  double c_;
  double alpha_;
  Timescale role_;
};

/// Slow sequence a_n and fast sequence b_n of a two-timescale rule.
struct SchedulePair {
  StepSchedule slow;
  StepSchedule fast;

  SchedulePair(StepSchedule a, StepSchedule b) : slow(std::move(a)), fast(std::move(b)) {}

  /// a_n / b_n → 0. For power laws this is exactly α_a > α_b.
  bool ratio_vanishes() const { return slow.alpha() > fast.alpha(); }

  /// True when both sequences and the pair satisfy every step-size condition.
  bool satisfies_assumptions() const {
    return slow.sum_diverges() && fast.sum_diverges() && slow.square_summable() && fast.square_summable() &&
           ratio_vanishes();
  }

  std::string describe() const { return "a=" + slow.describe() + ";b=" + fast.describe(); }
};

}  // namespace lss
