#pragma once

namespace geomort {

// Regularized incomplete beta I_x(a, b) by Lentz continued fraction,
// absolute error well under 1e-12 over the ranges used here.
double incomplete_beta(double a, double b, double x);

double lgamma_fn(double x);

// Student-t distribution with df degrees of freedom.
double student_t_cdf(double t, double df);
// Two-sided p-value P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);
// Quantile (inverse CDF), bisection on the CDF.
double student_t_quantile(double p, double df);

// Upper tail of the F distribution, P(F >= f) with d1/d2 dof.
double f_sf(double f, double d1, double d2);

}  // namespace geomort
