#include "geomort/wls.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "geomort/error.hpp"
#include "geomort/stats.hpp"

namespace geomort {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

std::string fmt(double v, const char* f = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct WeightedMoments {
  double mean = 0.0;
  double var = 0.0;    // reliability-corrected sample variance
  double n_eff = 0.0;  // (sum w)^2 / sum w^2
};

WeightedMoments weighted_moments(const std::vector<double>& x, const std::vector<double>& w) {
  double v1 = 0.0, v2 = 0.0, s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v1 += w[i];
    v2 += w[i] * w[i];
    s += w[i] * x[i];
  }
  WeightedMoments m;
  m.mean = s / v1;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += w[i] * (x[i] - m.mean) * (x[i] - m.mean);
  m.var = ss / (v1 - v2 / v1);
  m.n_eff = v1 * v1 / v2;
  return m;
}

}  // namespace

DesignMatrix build_design(const std::vector<CountyRecord>& records) {
  if (records.empty()) throw DomainError("empty record set");
  DesignMatrix d;
  d.names = {"Constant",        "Proportion White", "Proportion Black",
             "Proportion Asian", "Hispanic",        "Proportion Male",
             "Mean Age",        "Any College",      "Mideast",
             "Great Lakes",     "Plains",           "Southeast",
             "Southwest",       "Rocky Mountains",  "Far West",
             "Income"};
  const int n = static_cast<int>(records.size());
  const int p = static_cast<int>(d.names.size());
  d.X.resize(n, p);
  d.y.resize(n);
  d.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const CountyRecord& r = records[i];
    if (std::isnan(r.any_college) || std::isnan(r.income))
      throw DomainError("county " + r.fips + " has missing covariates; impute first");
    d.X(i, 0) = 1.0;
    d.X(i, 1) = r.prop_white;
    d.X(i, 2) = r.prop_black;
    d.X(i, 3) = r.prop_asian;
    d.X(i, 4) = r.prop_hispanic;
    d.X(i, 5) = r.prop_male;
    d.X(i, 6) = r.mean_age;
    d.X(i, 7) = r.any_college;
    // Region indicators, New England (region 1) is the reference level.
    for (int reg = 2; reg <= 8; ++reg) d.X(i, 6 + reg) = r.region == reg ? 1.0 : 0.0;
    d.X(i, 15) = r.income;
    d.y(i) = crude_rate(r);
    d.w(i) = static_cast<double>(r.population);
  }
  return d;
}

double RegressionFit::coefficient(const std::string& name) const {
  for (const auto& c : coef)
    if (c.name == name) return c.estimate;
  throw DomainError("no coefficient named '" + name + "'");
}

Eigen::VectorXd RegressionFit::beta() const {
  Eigen::VectorXd b(coef.size());
  for (std::size_t i = 0; i < coef.size(); ++i) b(static_cast<int>(i)) = coef[i].estimate;
  return b;
}

RegressionFit fit_wls(const DesignMatrix& d) {
  const int n = d.n(), p = d.p();
  if (n <= p) throw DomainError("need more rows than columns for WLS");
  if (static_cast<int>(d.names.size()) != p)
    throw DomainError("design names/columns mismatch");
  if (d.y.size() != n || d.w.size() != n) throw DomainError("design shape mismatch");
  for (int i = 0; i < n; ++i)
    if (!(d.w(i) > 0.0)) throw DomainError("weights must be positive");

  const Eigen::VectorXd sw = d.w.array().sqrt();
  Eigen::MatrixXd Xs = sw.asDiagonal() * d.X;
  const Eigen::VectorXd ys = sw.asDiagonal() * d.y;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::vector<std::string> dependent;
    const auto& perm = qr.colsPermutation().indices();
    for (int j = static_cast<int>(qr.rank()); j < p; ++j)
      dependent.push_back(d.names[perm(j)]);
    std::string msg = "singular design; dependent columns:";
    for (const auto& c : dependent) msg += " " + c;
    throw SingularDesignError(dependent, msg);
  }

  const Eigen::VectorXd beta = qr.solve(ys);
  const Eigen::VectorXd resid = d.y - d.X * beta;
  const double rss = (d.w.array() * resid.array().square()).sum();
  const int dof = n - p;
  const double sigma2 = rss / dof;

  // (X'WX)^{-1} from the R factor: A P = Q R implies (A'A)^{-1} = P R^{-1} R^{-T} P'.
  Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = Rinv * Rinv.transpose();
  const Eigen::MatrixXd cov = qr.colsPermutation() * inner *
                              qr.colsPermutation().transpose();

  const double wsum = d.w.sum();
  const double ybar = (d.w.array() * d.y.array()).sum() / wsum;
  const double tss = (d.w.array() * (d.y.array() - ybar).square()).sum();

  RegressionFit fit;
  fit.n = n;
  fit.p = p;
  const double tcrit = student_t_quantile(0.975, dof);
  for (int j = 0; j < p; ++j) {
    CoefStat c;
    c.name = d.names[j];
    c.estimate = beta(j);
    c.std_err = std::sqrt(std::max(0.0, sigma2 * cov(j, j)));
    if (c.std_err > 0.0) {
      c.t = c.estimate / c.std_err;
      c.p = student_t_two_sided_p(c.t, dof);
    } else {
      c.t = c.estimate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity() *
                                          (c.estimate > 0 ? 1.0 : -1.0);
      c.p = c.estimate == 0.0 ? 1.0 : 0.0;
    }
    c.ci_low = c.estimate - tcrit * c.std_err;
    c.ci_high = c.estimate + tcrit * c.std_err;
    fit.coef.push_back(std::move(c));
  }

  fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * (n - 1) / static_cast<double>(dof);
  if (p > 1) {
    if (rss > 0.0) {
      fit.f_stat = ((tss - rss) / (p - 1)) / (rss / dof);
      fit.f_p = f_sf(fit.f_stat, p - 1, dof);
    } else {
      fit.f_stat = std::numeric_limits<double>::infinity();
      fit.f_p = 0.0;
    }
  } else {
    fit.f_stat = std::numeric_limits<double>::quiet_NaN();
    fit.f_p = std::numeric_limits<double>::quiet_NaN();
  }
  if (rss > 0.0) {
    fit.log_lik = -0.5 * n * (kLn2Pi + std::log(rss / n) + 1.0) +
                  0.5 * d.w.array().log().sum();
    fit.aic = 2.0 * p - 2.0 * fit.log_lik;
    fit.bic = p * std::log(static_cast<double>(n)) - 2.0 * fit.log_lik;
  } else {
    fit.log_lik = std::numeric_limits<double>::infinity();
    fit.aic = -std::numeric_limits<double>::infinity();
    fit.bic = -std::numeric_limits<double>::infinity();
  }
  return fit;
}

RegressionFit standardize_then_fit(const DesignMatrix& d) {
  DesignMatrix z = d;
  const double wsum = d.w.sum();
  for (int j = 0; j < d.p(); ++j) {
    if (d.names[j] == "Constant") continue;
    const double mu = (d.w.array() * d.X.col(j).array()).sum() / wsum;
    const double sd =
        std::sqrt((d.w.array() * (d.X.col(j).array() - mu).square()).sum() / wsum);
    if (!(sd > 0.0))
      throw DomainError("zero-variance column '" + d.names[j] + "' cannot be standardized");
    z.X.col(j) = (d.X.col(j).array() - mu) / sd;
  }
  RegressionFit fit = fit_wls(z);
  fit.standardized = true;
  return fit;
}

std::vector<UnivariableRow> univariable_fits(const Eigen::VectorXd& pred,
                                             const DesignMatrix& d) {
  if (pred.size() != d.n()) throw DomainError("prediction length mismatch");
  std::vector<UnivariableRow> rows;
  for (int j = 0; j < d.p(); ++j) {
    if (d.names[j] == "Constant") continue;
    DesignMatrix simple;
    simple.names = {"Constant", d.names[j]};
    simple.X.resize(d.n(), 2);
    simple.X.col(0).setOnes();
    simple.X.col(1) = d.X.col(j);
    simple.y = pred;
    simple.w = d.w;
    const RegressionFit fit = fit_wls(simple);
    rows.push_back({d.names[j], fit.adj_r2, fit.coef[1].p});
  }
  std::sort(rows.begin(), rows.end(), [](const UnivariableRow& a, const UnivariableRow& b) {
    if (a.adj_r2 != b.adj_r2) return a.adj_r2 > b.adj_r2;
    return a.covariate < b.covariate;
  });
  return rows;
}

TTestMatrix weighted_pairwise_ttests(const std::vector<double>& values,
                                     const std::vector<int>& cluster_labels,
                                     const std::vector<double>& weights, int k) {
  if (k < 2) throw DomainError("need at least 2 clusters");
  if (values.size() != cluster_labels.size() || values.size() != weights.size())
    throw DomainError("values/labels/weights length mismatch");

  std::vector<std::vector<double>> xs(k), ws(k);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int l = cluster_labels[i];
    if (l < 0 || l >= k) throw DomainError("cluster label out of range");
    if (!(weights[i] > 0.0)) throw DomainError("weights must be positive");
    xs[l].push_back(values[i]);
    ws[l].push_back(weights[i]);
  }

  TTestMatrix out;
  out.k = k;
  out.p = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (xs[i].size() < 2 || xs[j].size() < 2) {
        out.skipped.push_back(std::to_string(i) + "-" + std::to_string(j));
        continue;
      }
      const WeightedMoments a = weighted_moments(xs[i], ws[i]);
      const WeightedMoments b = weighted_moments(xs[j], ws[j]);
      double p;
      if (a.mean == b.mean) {
        p = 1.0;
      } else {
        const double sa = a.var / a.n_eff;
        const double sb = b.var / b.n_eff;
        const double se2 = sa + sb;
        if (se2 <= 0.0) {
          p = 0.0;
        } else {
          const double t = (a.mean - b.mean) / std::sqrt(se2);
          const double df =
              se2 * se2 / (sa * sa / (a.n_eff - 1.0) + sb * sb / (b.n_eff - 1.0));
          p = student_t_two_sided_p(t, df);
        }
      }
      out.p(i, j) = p;
      out.p(j, i) = p;
    }
  }
  return out;
}

void write_fit_csv(std::ostream& out, const RegressionFit& fit) {
  out << "name,coef,std err,t,P,0.025,0.975\n";
  for (const auto& c : fit.coef) {
    out << c.name << ',' << fmt(c.estimate) << ',' << fmt(c.std_err) << ','
        << fmt(c.t) << ',' << fmt(c.p, "%.4g") << ',' << fmt(c.ci_low) << ','
        << fmt(c.ci_high) << '\n';
  }
}

void write_fit_stats(std::ostream& out, const RegressionFit& fit) {
  out << "R-squared:," << fmt(fit.r2) << '\n';
  out << "Adj. R-squared:," << fmt(fit.adj_r2) << '\n';
  out << "F-statistic:," << fmt(fit.f_stat) << '\n';
  out << "Prob (F-statistic):," << fmt(fit.f_p, "%.4g") << '\n';
  out << "Log-Likelihood:," << fmt(fit.log_lik) << '\n';
  out << "AIC:," << fmt(fit.aic) << '\n';
  out << "BIC:," << fmt(fit.bic) << '\n';
}

}  // namespace geomort
