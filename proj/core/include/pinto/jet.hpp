#pragma once
// Scalar truncated Taylor value: f, f' and f'' along one direction.
//
// Used to differentiate closed-form solutions exactly (for residual
// cross-checks and reference derivatives). Products and compositions follow
// the usual second-order jet rules; no mixed partials are represented, so a
// function of several variables is probed one direction at a time.

#include <cmath>

namespace pinto {

struct Jet2 {
  double v = 0.0;   // value
  double d1 = 0.0;  // first directional derivative
  double d2 = 0.0;  // second directional derivative

  constexpr Jet2() = default;
  constexpr Jet2(double value) : v(value) {}
  constexpr Jet2(double value, double first, double second = 0.0)
      : v(value), d1(first), d2(second) {}

  // Seed an independent variable moving with unit rate along the direction.
  static constexpr Jet2 variable(double value) { return {value, 1.0, 0.0}; }
};

constexpr Jet2 operator+(const Jet2& a, const Jet2& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
constexpr Jet2 operator-(const Jet2& a, const Jet2& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
constexpr Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }
constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double iv = 1.0 / b.v;
  const double q = a.v * iv;
  const double q1 = (a.d1 - q * b.d1) * iv;
  const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) * iv;
  return {q, q1, q2};
}
constexpr Jet2 operator+(const Jet2& a, double c) { return {a.v + c, a.d1, a.d2}; }
constexpr Jet2 operator+(double c, const Jet2& a) { return a + c; }
constexpr Jet2 operator-(const Jet2& a, double c) { return {a.v - c, a.d1, a.d2}; }
constexpr Jet2 operator-(double c, const Jet2& a) { return {c - a.v, -a.d1, -a.d2}; }
constexpr Jet2 operator*(const Jet2& a, double c) { return {a.v * c, a.d1 * c, a.d2 * c}; }
constexpr Jet2 operator*(double c, const Jet2& a) { return a * c; }
inline Jet2 operator/(const Jet2& a, double c) { return a * (1.0 / c); }
inline Jet2 operator/(double c, const Jet2& a) { return Jet2(c) / a; }

// Composition with g given g(v), g'(v), g''(v):
// (g∘f)' = g'(f) f',  (g∘f)'' = g''(f) f'^2 + g'(f) f''.
inline Jet2 compose(const Jet2& f, double g0, double g1, double g2) {
  return {g0, g1 * f.d1, g2 * f.d1 * f.d1 + g1 * f.d2};
}

inline Jet2 sin(const Jet2& x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return compose(x, s, c, -s);
}
inline Jet2 cos(const Jet2& x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return compose(x, c, -s, -c);
}
inline Jet2 exp(const Jet2& x) {
  const double e = std::exp(x.v);
  return compose(x, e, e, e);
}
inline Jet2 log(const Jet2& x) {
  const double iv = 1.0 / x.v;
  return compose(x, std::log(x.v), iv, -iv * iv);
}
inline Jet2 sqrt(const Jet2& x) {
  const double r = std::sqrt(x.v);
  return compose(x, r, 0.5 / r, -0.25 / (r * x.v));
}
inline Jet2 tanh(const Jet2& x) {
  const double t = std::tanh(x.v);
  const double sech2 = 1.0 - t * t;
  return compose(x, t, sech2, -2.0 * t * sech2);
}
inline Jet2 sinh(const Jet2& x) {
  const double s = std::sinh(x.v), c = std::cosh(x.v);
  return compose(x, s, c, s);
}
inline Jet2 cosh(const Jet2& x) {
  const double s = std::sinh(x.v), c = std::cosh(x.v);
  return compose(x, c, s, c);
}
inline Jet2 pow(const Jet2& x, double p) {
  const double g0 = std::pow(x.v, p);
  const double g1 = p * std::pow(x.v, p - 1.0);
  const double g2 = p * (p - 1.0) * std::pow(x.v, p - 2.0);
  return compose(x, g0, g1, g2);
}

}  // namespace pinto
