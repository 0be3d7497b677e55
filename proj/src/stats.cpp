#include "montok/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "montok/errors.hpp"

namespace montok {

namespace {

// Lentz's continued fraction for the incomplete beta, from the classic
// numerical recipes formulation.
double betacf(double a, double b, double x) {
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h;
}

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased (n-1 denominator) sample variance.
double sample_variance(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double normal_two_sided_from_z(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("reg_inc_beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(log_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("t_cdf needs df > 0");
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw DomainError("t p-value needs df > 0");
  if (std::isinf(t)) return 0.0;
  return reg_inc_beta(0.5 * df, 0.5, df / (df + t * t));
}

double f_cdf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw DomainError("f_cdf needs df > 0");
  if (f <= 0.0) return 0.0;
  return reg_inc_beta(0.5 * df1, 0.5 * df2, df1 * f / (df1 * f + df2));
}

double f_two_sided_p(double f, double df1, double df2) {
  const double cdf = f_cdf(f, df1, df2);
  return 2.0 * std::min(cdf, 1.0 - cdf);
}

RegressionResult ols_simple(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw LengthMismatch("ols_simple needs matching sample sizes");
  }
  const std::size_t n = x.size();
  if (n < 3) throw TooFewPoints("ols_simple needs n >= 3");
  const double mx = sample_mean(x);
  const double my = sample_mean(y);
  double sxx = 0.0, sxy = 0.0, styy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    styy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ConstantPredictor("predictor is constant");
  RegressionResult res;
  res.n = n;
  res.slope = sxy / sxx;
  res.intercept = my - res.slope * mx;
  double ssres = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (res.intercept + res.slope * x[i]);
    ssres += e * e;
  }
  res.r2 = styy > 0.0 ? 1.0 - ssres / styy : 1.0;
  const double dn = static_cast<double>(n);
  res.adj_r2 = 1.0 - (1.0 - res.r2) * (dn - 1.0) / (dn - 2.0);
  const double se2 = ssres / (dn - 2.0) / sxx;
  if (se2 <= 0.0) {
    res.p_slope = res.slope == 0.0 ? 1.0 : 0.0;
  } else {
    res.p_slope = t_two_sided_p(res.slope / std::sqrt(se2), dn - 2.0);
  }
  return res;
}

TTestResult paired_t_test(const std::vector<double>& a,
                          const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("paired t-test needs matching sample sizes");
  }
  const std::size_t n = a.size();
  if (n < 2) throw TooFewPoints("paired t-test needs n >= 2");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = sample_mean(d);
  const double var = sample_variance(d);
  if (var <= 0.0) throw ZeroVariance("differences have zero variance");
  TTestResult res;
  res.mean_diff = mean;
  res.df = static_cast<double>(n - 1);
  res.t_stat = mean / std::sqrt(var / static_cast<double>(n));
  res.p_two_sided = t_two_sided_p(res.t_stat, res.df);
  return res;
}

FTestResult variance_ratio_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw TooFewPoints("variance ratio test needs n >= 2 in each group");
  }
  const double va = sample_variance(a);
  const double vb = sample_variance(b);
  if (va <= 0.0 || vb <= 0.0) throw ZeroVariance("a group has zero variance");
  FTestResult res;
  res.f_stat = va / vb;
  res.df1 = static_cast<double>(a.size() - 1);
  res.df2 = static_cast<double>(b.size() - 1);
  res.p_two_sided = f_two_sided_p(res.f_stat, res.df1, res.df2);
  return res;
}

MWUResult mann_whitney_u(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw EmptyGroup("both samples must be non-empty");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  struct Obs {
    double value;
    bool first;
  };
  std::vector<Obs> all;
  all.reserve(n1 + n2);
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(),
            [](const Obs& l, const Obs& r) { return l.value < r.value; });

  double rank_a = 0.0;
  bool ties = false;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].value == all[i].value) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    if (j - i > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].first) rank_a += midrank;
    }
    i = j;
  }
  const double u =
      rank_a - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);
  MWUResult res;
  res.u_stat = u;

  const double prod = static_cast<double>(n1) * static_cast<double>(n2);
  if (!ties && std::min(n1, n2) <= 8 && prod <= 4096.0) {
    // Exact null distribution of U by the standard recurrence; the smaller
    // sample drives the outer dimension.
    const std::size_t m = std::min(n1, n2);
    const std::size_t nn = std::max(n1, n2);
    const std::size_t umax = static_cast<std::size_t>(prod);
    std::vector<std::vector<long double>> cnt(
        m + 1, std::vector<long double>(umax + 1, 0.0L));
    for (std::size_t mi = 0; mi <= m; ++mi) cnt[mi][0] = 1.0L;  // n = 0 base
    for (std::size_t n = 1; n <= nn; ++n) {
      for (std::size_t mi = 1; mi <= m; ++mi) {
        for (std::size_t uu = umax; uu + 1 >= n + 1; --uu) {
          cnt[mi][uu] += cnt[mi - 1][uu - n];
        }
      }
    }
    long double total = 0.0L;
    for (std::size_t uu = 0; uu <= umax; ++uu) total += cnt[m][uu];
    const double u_small = std::min(u, prod - u);
    const auto cut = static_cast<std::size_t>(std::llround(u_small));
    long double acc = 0.0L;
    for (std::size_t uu = 0; uu <= cut && uu <= umax; ++uu) acc += cnt[m][uu];
    res.p_two_sided =
        std::min(1.0, 2.0 * static_cast<double>(acc / total));
    return res;
  }

  const double nt = static_cast<double>(n1 + n2);
  const double mean_u = prod / 2.0;
  double sigma2 = prod * (nt + 1.0) / 12.0;
  if (ties && nt > 1.0) {
    sigma2 -= prod * tie_term / (12.0 * nt * (nt - 1.0));
  }
  if (sigma2 <= 0.0) {
    res.p_two_sided = 1.0;
    return res;
  }
  const double shifted = std::max(std::fabs(u - mean_u) - 0.5, 0.0);
  res.p_two_sided = normal_two_sided_from_z(shifted / std::sqrt(sigma2));
  return res;
}

std::vector<double> bonferroni(const std::vector<double>& p_values, bool cap) {
  const double m = static_cast<double>(p_values.size());
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-values must lie in [0, 1]");
    const double adj = p * m;
    out.push_back(cap ? std::min(1.0, adj) : adj);
  }
  return out;
}

}  // namespace montok
