#pragma once

// Forward-mode dual numbers. Dual<Dual<double>> nests cleanly and gives
// mixed second derivatives: seed the inner tangent with direction w and
// the outer tangent with e_j, then f.d.d = e_jᵀ ∇²f w.

#include <cmath>
#include <type_traits>

namespace lss {

template <typename T>
struct Dual {
  T v{};  // primal
  T d{};  // tangent

  constexpr Dual() = default;
  constexpr Dual(double primal) : v(primal), d(0.0) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T primal, T tangent) : v(primal), d(tangent) {}

  constexpr Dual& operator+=(const Dual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    *this = *this / o;
    return *this;
  }

  friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend constexpr Dual operator+(const Dual& a) { return a; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    T q = a.v / b.v;
    return {q, (a.d - q * b.d) / b.v};
  }

  // Mixed arithmetic with plain doubles; avoids lifting to a full Dual.
  friend constexpr Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
  friend constexpr Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
  friend constexpr Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
  friend constexpr Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
  friend constexpr Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
  friend constexpr Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
  friend constexpr Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
  friend constexpr Dual operator/(double a, const Dual& b) {
    T q = a / b.v;
    return {q, -q * b.d / b.v};
  }
};

template <typename T>
struct is_dual : std::false_type {};
template <typename T>
struct is_dual<Dual<T>> : std::true_type {};

/// Primal value at the bottom of a (possibly nested) dual.
inline double primal(double x) { return x; }
template <typename T>
double primal(const Dual<T>& x) {
  return primal(x.v);
}

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  T e = exp(a.v);
  return {e, e * a.d};
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.v), a.d / a.v};
}

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.v), cos(a.v) * a.d};
}

template <typename T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.v), -sin(a.v) * a.d};
}

template <typename T>
Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  T t = tanh(a.v);
  return {t, (1.0 - t * t) * a.d};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}

template <typename T>
Dual<T> pow(const Dual<T>& a, double p) {
  using std::pow;
  return {pow(a.v, p), p * pow(a.v, p - 1.0) * a.d};
}

template <typename T>
Dual<T> pow(const Dual<T>& a, int p) {
  Dual<T> r{1.0};
  Dual<T> base = p < 0 ? 1.0 / a : a;
  for (int k = p < 0 ? -p : p; k > 0; --k) r *= base;
  return r;
}

/// x², written once so cost functors read naturally for every scalar type.
template <typename S>
S sq(const S& x) {
  return x * x;
}

}  // namespace lss
