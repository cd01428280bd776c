#pragma once

#include <array>
#include <cmath>
#include <type_traits>

namespace glide {

/// Forward-mode scalar carrying a value and N directional derivatives.
/// The component type T may itself be a Dual, which yields exact higher
/// derivatives through arbitrary compositions of the operations below.
template <typename T, int N>
struct Dual {
  T v{};
  std::array<T, N> d{};

  Dual() : v(0.0) {
    for (auto& g : d) g = T(0.0);
  }
  Dual(double c) : v(c) {  // NOLINT: constants lift implicitly
    for (auto& g : d) g = T(0.0);
  }
  explicit Dual(const T& value)
    requires(!std::is_same_v<T, double>)
      : v(value) {
    for (auto& g : d) g = T(0.0);
  }

  static Dual seeded(const T& value, int dir) {
    Dual r(value);
    r.d[static_cast<std::size_t>(dir)] = T(1.0);
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v = v + o.v;
    for (int i = 0; i < N; ++i) d[i] = d[i] + o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v = v - o.v;
    for (int i = 0; i < N; ++i) d[i] = d[i] - o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v + b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v - b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    T inv = T(1.0) / b.v;
    r.v = a.v * inv;
    T inv2 = inv * inv;
    for (int i = 0; i < N; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) * inv2;
    return r;
  }

  friend Dual operator+(const Dual& a, double b) { return a + Dual(b); }
  friend Dual operator+(double a, const Dual& b) { return Dual(a) + b; }
  friend Dual operator-(const Dual& a, double b) { return a - Dual(b); }
  friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
  friend Dual operator*(const Dual& a, double b) {
    Dual r;
    r.v = a.v * b;
    for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b;
    return r;
  }
  friend Dual operator*(double a, const Dual& b) { return b * a; }
  friend Dual operator/(const Dual& a, double b) { return a * (1.0 / b); }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

inline double value_of(double x) { return x; }
template <typename T, int N>
double value_of(const Dual<T, N>& x) {
  return value_of(x.v);
}

template <typename T, int N>
Dual<T, N> sqrt(const Dual<T, N>& x) {
  using std::sqrt;
  Dual<T, N> r;
  r.v = sqrt(x.v);
  T s = T(0.5) / r.v;
  for (int i = 0; i < N; ++i) r.d[i] = s * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  Dual<T, N> r;
  r.v = sin(x.v);
  T c = cos(x.v);
  for (int i = 0; i < N; ++i) r.d[i] = c * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  Dual<T, N> r;
  r.v = cos(x.v);
  T s = -sin(x.v);
  for (int i = 0; i < N; ++i) r.d[i] = s * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> exp(const Dual<T, N>& x) {
  using std::exp;
  Dual<T, N> r;
  r.v = exp(x.v);
  for (int i = 0; i < N; ++i) r.d[i] = r.v * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> log(const Dual<T, N>& x) {
  using std::log;
  Dual<T, N> r;
  r.v = log(x.v);
  T inv = T(1.0) / x.v;
  for (int i = 0; i < N; ++i) r.d[i] = inv * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> log1p(const Dual<T, N>& x) {
  using std::log1p;
  Dual<T, N> r;
  r.v = log1p(x.v);
  T inv = T(1.0) / (T(1.0) + x.v);
  for (int i = 0; i < N; ++i) r.d[i] = inv * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> log10(const Dual<T, N>& x) {
  constexpr double kInvLn10 = 0.43429448190325176;
  return log(x) * kInvLn10;
}

template <typename T, int N>
Dual<T, N> tanh(const Dual<T, N>& x) {
  using std::tanh;
  Dual<T, N> r;
  r.v = tanh(x.v);
  T s = T(1.0) - r.v * r.v;
  for (int i = 0; i < N; ++i) r.d[i] = s * x.d[i];
  return r;
}

template <typename T, int N>
Dual<T, N> atan2(const Dual<T, N>& y, const Dual<T, N>& x) {
  using std::atan2;
  Dual<T, N> r;
  r.v = atan2(y.v, x.v);
  T inv = T(1.0) / (x.v * x.v + y.v * y.v);
  for (int i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) * inv;
  return r;
}

template <typename T, int N>
Dual<T, N> pow(const Dual<T, N>& x, double p) {
  using std::pow;
  Dual<T, N> r;
  r.v = pow(x.v, p);
  T s = pow(x.v, p - 1.0) * p;
  for (int i = 0; i < N; ++i) r.d[i] = s * x.d[i];
  return r;
}

/// Numerically stable log(1 + exp(x)); derivative is the logistic function.
template <typename T>
T softplus(const T& x) {
  using std::exp;
  using std::log1p;
  if (value_of(x) > 0.0) {
    return x + log1p(exp(-x));
  }
  return log1p(exp(x));
}

template <typename T>
T logistic(const T& x) {
  using std::exp;
  if (value_of(x) >= 0.0) {
    T e = exp(-x);
    return T(1.0) / (T(1.0) + e);
  }
  T e = exp(x);
  return e / (T(1.0) + e);
}

/// Maps x smoothly into (lo, hi): identity away from the bounds, saturating
/// at them. `sharp` sets how many range-relative units the transition spans.
template <typename T>
T smooth_clamp(const T& x, double lo, double hi, double sharp = 40.0) {
  const double beta = sharp / (hi - lo);
  T low = lo + softplus((x - lo) * beta) * (1.0 / beta);
  return hi - softplus((hi - low) * beta) * (1.0 / beta);
}

/// Squared hinge distance of x outside [lo, hi]; zero and C1 inside.
template <typename T>
T box_hinge_sq(const T& x, double lo, double hi) {
  double xv = value_of(x);
  if (xv < lo) {
    T dlo = lo - x;
    return dlo * dlo;
  }
  if (xv > hi) {
    T dhi = x - hi;
    return dhi * dhi;
  }
  return T(0.0);
}

using Dual9 = Dual<double, 9>;
using Dual2 = Dual<double, 2>;

}  // namespace glide
