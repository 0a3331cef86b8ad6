#pragma once

// Truncated second-order Taylor numbers and the squareplus activation.
//
// A HyperDual carries x + a*e1 + b*e2 + ab*e1*e2 with e1^2 = e2^2 = 0.
// Running a reverse (adjoint) pass in HyperDual arithmetic with the
// inputs seeded along directions a and b yields, in the .a and .ab parts
// of every adjoint, the first and mixed second directional derivatives of
// the ordinary gradient. That is the forward-over-reverse scheme used for
// mass matrices and for parameter gradients of Euler-Lagrange terms.

#include <cmath>

namespace lgnn {

struct HyperDual {
  double v = 0.0;
  double a = 0.0;
  double b = 0.0;
  double ab = 0.0;

  constexpr HyperDual() = default;
  constexpr HyperDual(double value) : v(value) {}  // NOLINT: implicit lift of constants
  constexpr HyperDual(double value, double da, double db, double dab)
      : v(value), a(da), b(db), ab(dab) {}

  constexpr double component(int c) const {
    switch (c) {
      case 0: return v;
      case 1: return a;
      case 2: return b;
      default: return ab;
    }
  }

  HyperDual& operator+=(const HyperDual& o) {
    v += o.v; a += o.a; b += o.b; ab += o.ab;
    return *this;
  }
  HyperDual& operator-=(const HyperDual& o) {
    v -= o.v; a -= o.a; b -= o.b; ab -= o.ab;
    return *this;
  }
  HyperDual& operator*=(const HyperDual& o) {
    *this = HyperDual{v * o.v, v * o.a + a * o.v, v * o.b + b * o.v,
                      v * o.ab + a * o.b + b * o.a + ab * o.v};
    return *this;
  }
  HyperDual& operator*=(double s) {
    v *= s; a *= s; b *= s; ab *= s;
    return *this;
  }
};

inline HyperDual operator+(HyperDual x, const HyperDual& y) { return x += y; }
inline HyperDual operator-(HyperDual x, const HyperDual& y) { return x -= y; }
inline HyperDual operator-(const HyperDual& x) { return {-x.v, -x.a, -x.b, -x.ab}; }
inline HyperDual operator*(HyperDual x, const HyperDual& y) { return x *= y; }
inline HyperDual operator*(double s, HyperDual x) { return x *= s; }
inline HyperDual operator*(HyperDual x, double s) { return x *= s; }
inline HyperDual operator+(HyperDual x, double s) { x.v += s; return x; }
inline HyperDual operator+(double s, HyperDual x) { x.v += s; return x; }
inline HyperDual operator-(HyperDual x, double s) { x.v -= s; return x; }
inline HyperDual operator-(double s, const HyperDual& x) { return HyperDual{s} - x; }

/// Lift a scalar function with known derivatives f, f', f'' to HyperDual.
inline HyperDual apply(const HyperDual& x, double f0, double f1, double f2) {
  return {f0, f1 * x.a, f1 * x.b, f1 * x.ab + f2 * x.a * x.b};
}

inline HyperDual reciprocal(const HyperDual& x) {
  const double r = 1.0 / x.v;
  return apply(x, r, -r * r, 2.0 * r * r * r);
}

inline HyperDual operator/(const HyperDual& x, const HyperDual& y) { return x * reciprocal(y); }
inline HyperDual operator/(HyperDual x, double s) { return x *= (1.0 / s); }

inline HyperDual sqrt(const HyperDual& x) {
  const double s = std::sqrt(x.v);
  return apply(x, s, 0.5 / s, -0.25 / (s * x.v));
}

/// Component c of the product x*y without forming the other three.
inline double product_component(const HyperDual& x, const HyperDual& y, int c) {
  switch (c) {
    case 0: return x.v * y.v;
    case 1: return x.v * y.a + x.a * y.v;
    case 2: return x.v * y.b + x.b * y.v;
    default: return x.v * y.ab + x.a * y.b + x.b * y.a + x.ab * y.v;
  }
}

inline double product_component(double x, double y, int) { return x * y; }
inline double value_of(double x) { return x; }
inline double value_of(const HyperDual& x) { return x.v; }
inline double component_of(double x, int c) { return c == 0 ? x : 0.0; }
inline double component_of(const HyperDual& x, int c) { return x.component(c); }
inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const HyperDual& x) {
  return std::isfinite(x.v) && std::isfinite(x.a) && std::isfinite(x.b) && std::isfinite(x.ab);
}

// squareplus(x) = (x + sqrt(x^2 + 4)) / 2 and its first three derivatives.

inline double squareplus(double x) { return 0.5 * (x + std::sqrt(x * x + 4.0)); }
inline double squareplus_d1(double x) { return 0.5 * (1.0 + x / std::sqrt(x * x + 4.0)); }
inline double squareplus_d2(double x) {
  const double r = x * x + 4.0;
  return 2.0 / (r * std::sqrt(r));
}
inline double squareplus_d3(double x) {
  const double r = x * x + 4.0;
  return -6.0 * x / (r * r * std::sqrt(r));
}

inline HyperDual squareplus(const HyperDual& x) {
  return apply(x, squareplus(x.v), squareplus_d1(x.v), squareplus_d2(x.v));
}
inline HyperDual squareplus_d1(const HyperDual& x) {
  return apply(x, squareplus_d1(x.v), squareplus_d2(x.v), squareplus_d3(x.v));
}

}  // namespace lgnn
