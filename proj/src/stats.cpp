#include "geomort/stats.hpp"

#include <cmath>
#include <limits>

#include "geomort/error.hpp"

namespace geomort {

double lgamma_fn(double x) {
  // Lanczos approximation, g=7, n=9.
  static const double c[9] = {0.99999999999980993,  676.5203681218851,
                              -1259.1392167224028,  771.32342877765313,
                              -176.61502916214059,  12.507343278686905,
                              -0.13857109526572012, 9.9843695780195716e-6,
                              1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection formula.
    return std::log(3.14159265358979323846 / std::sin(3.14159265358979323846 * x)) -
           lgamma_fn(1.0 - x);
  }
  x -= 1.0;
  double a = c[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
  return 0.5 * std::log(2.0 * 3.14159265358979323846) + (x + 0.5) * std::log(t) - t +
         std::log(a);
}

namespace {

// Lentz's algorithm for the incomplete beta continued fraction.
double beta_cont_frac(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      lgamma_fn(a + b) - lgamma_fn(a) - lgamma_fn(b) + a * std::log(x) + b * std::log1p(-x);
  // Continued fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise.
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(ln_front) * beta_cont_frac(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * beta_cont_frac(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("student_t_cdf: df must be > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DomainError("student_t_two_sided_p: df must be > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p must be in (0,1)");
  if (!(df > 0.0)) throw DomainError("student_t_quantile: df must be > 0");
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, df) > p) lo *= 2.0;
  while (student_t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, df) < p) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-14 * std::max(1.0, std::fabs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

double f_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0 && d2 > 0.0)) throw DomainError("f_sf: dof must be > 0");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

}  // namespace geomort
