#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geomort/cohort.hpp"

namespace geomort {

// Weighted regression design: response is the crude rate per 1,000, weights
// are county populations.
struct DesignMatrix {
  std::vector<std::string> names;  // column names, "Constant" first
  Eigen::MatrixXd X;               // n x p
  Eigen::VectorXd y;               // n
  Eigen::VectorXd w;               // n, all > 0

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

// Covariate design matching the paper's linear model: constant, the five
// proportion covariates, mean age, any college, 7 region indicators with
// New England as the reference level, and income.
DesignMatrix build_design(const std::vector<CountyRecord>& records);

struct CoefStat {
  std::string name;
  double estimate = 0.0;
  double std_err = 0.0;
  double t = 0.0;
  double p = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct RegressionFit {
  std::vector<CoefStat> coef;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double f_stat = 0.0;
  double f_p = 0.0;
  double log_lik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  bool standardized = false;
  int n = 0;
  int p = 0;

  double coefficient(const std::string& name) const;
  Eigen::VectorXd beta() const;
};

// Weighted least squares via QR on the sqrt(w)-scaled design. Inference uses
// sigma^2 = weighted RSS / (n - p); the Gaussian likelihood treats weights as
// precision multipliers, and AIC/BIC count the p coefficients.
RegressionFit fit_wls(const DesignMatrix& d);

// z-scores every non-constant column with weighted mean/sd before fitting.
RegressionFit standardize_then_fit(const DesignMatrix& d);

struct UnivariableRow {
  std::string covariate;
  double adj_r2 = 0.0;
  double p = 0.0;
};

// One weighted simple regression of pred on each non-constant covariate,
// sorted by descending adjusted R^2.
std::vector<UnivariableRow> univariable_fits(const Eigen::VectorXd& pred,
                                             const DesignMatrix& d);

struct TTestMatrix {
  int k = 0;
  // p(i,j) for i < j; NaN marks pairs skipped for having under 2 members.
  Eigen::MatrixXd p;
  std::vector<std::string> skipped;  // diagnostics, "i-j" pair ids

  double at(int i, int j) const { return i < j ? p(i, j) : p(j, i); }
};

// Welch-style weighted two-sample tests over every cluster pair. Weighted
// means, reliability-corrected weighted variances, effective sample sizes,
// Satterthwaite df.
TTestMatrix weighted_pairwise_ttests(const std::vector<double>& values,
                                     const std::vector<int>& cluster_labels,
                                     const std::vector<double>& weights, int k);

// Fit report CSV layout shared by the standardized/unstandardized tables:
// name,coef,std err,t,P,0.025,0.975
void write_fit_csv(std::ostream& out, const RegressionFit& fit);
void write_fit_stats(std::ostream& out, const RegressionFit& fit);

}  // namespace geomort
