#pragma once

// Closed-form 1+1D propagators:
//   iDelta(t,x) = -(i/2) sgn(t) theta(t^2-x^2) J0(m sqrt(t^2-x^2))
//   G_ret(t,x)  = (1/2) theta(t-|x|) J0(m sqrt(t^2-x^2)),  G_adv(t,x) = G_ret(-t,x)
// so that iDelta = -i (G_ret - G_adv) pointwise. The smeared-quadrature cross
// check lives in pauli_jordan_quadrature: a Gaussian-regulated momentum
// integral extrapolated to zero regulator width.

#include <functional>

#include "modlab/core.hpp"

namespace modlab {

inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

inline void require_1p1(const Vec& x) {
  if (x.size() != 2)
    throw UnsupportedDimension("closed-form propagators exist only in 1+1D here");
}

inline double green_retarded(const Vec& x, double m) {
  require_1p1(x);
  const double t = x[0], s = x[1];
  if (t <= std::abs(s)) return 0.0;
  return 0.5 * bessel_j0(m * std::sqrt(t * t - s * s));
}

inline double green_advanced(const Vec& x, double m) {
  require_1p1(x);
  return green_retarded({-x[0], x[1]}, m);
}

inline Complex pauli_jordan(const Vec& x, double m) {
  require_1p1(x);
  const double t = x[0], s = x[1];
  const double q = t * t - s * s;
  if (q <= 0.0 || t == 0.0) return {0.0, 0.0};
  const double sgn = t > 0.0 ? 1.0 : -1.0;
  return Complex{0.0, -0.5 * sgn * bessel_j0(m * std::sqrt(q))};
}

namespace detail {

// Adaptive Simpson on [a,b].
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fb, double fm, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, fm, flm, eps * 0.5, depth - 1) +
         simpson(f, m, b, fm, fb, frm, eps * 0.5, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
  const double m = 0.5 * (a + b);
  return simpson(f, a, b, f(a), f(b), f(m), eps, 48);
}

}  // namespace detail

// Independent oracle: iDelta(t,x) = -(i/pi) int_0^inf sin(w_q t) cos(q x)/w_q dq,
// regulated by e^{-eps q^2} and Richardson-extrapolated eps -> 0.
inline Complex pauli_jordan_quadrature(const Vec& x, double m, double eps0 = 2e-3) {
  require_1p1(x);
  const double t = x[0], s = x[1];
  auto regulated = [&](double eps) {
    auto f = [&](double q) {
      const double w = std::sqrt(q * q + m * m);
      return std::sin(w * t) * std::cos(q * s) / w * std::exp(-eps * q * q);
    };
    const double qmax = std::sqrt(60.0 / eps);
    return -detail::integrate(f, 0.0, qmax, 1e-11) / std::numbers::pi;
  };
  const double v2 = regulated(2.0 * eps0);
  const double v1 = regulated(eps0);
  // error is linear in eps to leading order
  return Complex{0.0, v1 + (v1 - v2)};
}

}  // namespace modlab
