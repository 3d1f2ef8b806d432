#pragma once

// Forward-mode automatic differentiation. Dual<T> nests, so
// Dual<Dual<Dual<double>>> carries all mixed partials up to third order
// along three seed directions.

#include <cmath>
#include <type_traits>

namespace fincap {

template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(const T& value, const T& deriv) : v(value), d(deriv) {}

  template <class U>
    requires(std::is_convertible_v<U, T> && !std::is_same_v<std::remove_cvref_t<U>, Dual>)
  constexpr Dual(const U& c) : v(c), d(0.0) {}  // NOLINT: implicit lift of constants

  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
  }

  Dual& operator+=(const Dual& b) { return *this = *this + b; }
  Dual& operator-=(const Dual& b) { return *this = *this - b; }
  Dual& operator*=(const Dual& b) { return *this = *this * b; }
  Dual& operator/=(const Dual& b) { return *this = *this / b; }

  friend Dual sqrt(const Dual& a) {
    using std::sqrt;
    T s = sqrt(a.v);
    return {s, a.d / (2.0 * s)};
  }
  friend Dual exp(const Dual& a) {
    using std::exp;
    T e = exp(a.v);
    return {e, e * a.d};
  }
  friend Dual log(const Dual& a) {
    using std::log;
    return {log(a.v), a.d / a.v};
  }
  friend Dual sin(const Dual& a) {
    using std::cos;
    using std::sin;
    return {sin(a.v), cos(a.v) * a.d};
  }
  friend Dual cos(const Dual& a) {
    using std::cos;
    using std::sin;
    return {cos(a.v), -(sin(a.v) * a.d)};
  }
  friend Dual atan2(const Dual& y, const Dual& x) {
    using std::atan2;
    T r2 = x.v * x.v + y.v * y.v;
    return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
  }
};

inline constexpr double value_of(double x) { return x; }

template <class T>
constexpr double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

template <class T>
T int_pow(const T& base, int exponent) {
  if (exponent < 0) return T(1.0) / int_pow(base, -exponent);
  T result(1.0);
  T b = base;
  for (int e = exponent; e > 0; e >>= 1) {
    if (e & 1) result = result * b;
    if (e > 1) b = b * b;
  }
  return result;
}

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;
using Dual3 = Dual<Dual2>;

// Independent variable carrying unit perturbations along the selected seeds.
// `outer` is the outermost infinitesimal, `inner` the innermost.
inline Dual1 seed1(double value, bool dir) { return {value, dir ? 1.0 : 0.0}; }

inline Dual2 seed2(double value, bool outer, bool inner) {
  return {Dual1{value, inner ? 1.0 : 0.0}, Dual1{outer ? 1.0 : 0.0, 0.0}};
}

inline Dual3 seed3(double value, bool outer, bool mid, bool inner) {
  return {Dual2{Dual1{value, inner ? 1.0 : 0.0}, Dual1{mid ? 1.0 : 0.0, 0.0}},
          Dual2{Dual1{outer ? 1.0 : 0.0, 0.0}, Dual1{0.0, 0.0}}};
}

}  // namespace fincap
