#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace montok {

// Regularized incomplete beta I_x(a, b) via Lentz continued fraction;
// absolute error below 1e-12. Throws DomainError outside a,b > 0, x in [0,1].
double reg_inc_beta(double a, double b, double x);

// Student-t CDF and two-sided p; F CDF and two-sided p (doubled smaller tail).
double t_cdf(double t, double df);
double t_two_sided_p(double t, double df);
double f_cdf(double f, double df1, double df2);
double f_two_sided_p(double f, double df1, double df2);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double p_slope = 1.0;
  std::size_t n = 0;
};

// Simple least-squares line with slope significance. Throws TooFewPoints
// (n < 3), LengthMismatch, ConstantPredictor.
RegressionResult ols_simple(const std::vector<double>& x,
                            const std::vector<double>& y);

struct TTestResult {
  double t_stat = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
  double mean_diff = 0.0;
};

// Paired t-test on equal-length samples. Throws LengthMismatch, TooFewPoints
// (n < 2), ZeroVariance (all differences equal).
TTestResult paired_t_test(const std::vector<double>& a,
                          const std::vector<double>& b);

struct FTestResult {
  double f_stat = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p_two_sided = 1.0;
};

// Fisher-Snedecor variance-ratio test, F = var(a)/var(b). Throws
// TooFewPoints (either n < 2), ZeroVariance.
FTestResult variance_ratio_test(const std::vector<double>& a,
                                const std::vector<double>& b);

struct MWUResult {
  double u_stat = 0.0;  // U of the first sample
  double p_two_sided = 1.0;
  std::optional<double> p_adjusted;
};

// Mann-Whitney U with midrank ties: exact two-sided p when the smaller sample
// has at most 8 values, there are no ties and n1*n2 <= 4096; otherwise normal
// approximation with tie and continuity corrections. Throws EmptyGroup.
MWUResult mann_whitney_u(const std::vector<double>& a,
                         const std::vector<double>& b);

// Multiplies each p by the family size. Uncapped by default so adjusted
// values can exceed 1; pass cap=true to clip at 1.
std::vector<double> bonferroni(const std::vector<double>& p_values,
                               bool cap = false);

}  // namespace montok
