#include "montok/curvefit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "montok/errors.hpp"

namespace montok {

const char* clamp_name(Clamp c) {
  switch (c) {
    case Clamp::floor_8192: return "floor_8192";
    case Clamp::ceil_262144: return "ceil_262144";
    default: return "none";
  }
}

namespace {

constexpr double kHuge = std::numeric_limits<double>::max();

double model_ctc(double a, double b, double c, double v) {
  return a * std::pow(v, -b) + c;
}

double sse_of(const std::vector<double>& v, const std::vector<double>& y,
              double a, double b, double c) {
  double sse = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = model_ctc(a, b, c, v[i]) - y[i];
    sse += r * r;
  }
  return sse;
}

// Closed-form regression of log(y - c) on log v; returns the original-space
// SSE (kHuge when the implied curve is not decreasing).
double solve_at_c(const std::vector<double>& v, const std::vector<double>& y,
                  double c, double& a_out, double& b_out) {
  const std::size_t n = v.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = y[i] - c;
    if (diff <= 0.0) return kHuge;
    const double lx = std::log(v[i]);
    const double ly = std::log(diff);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (denom == 0.0) return kHuge;
  const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / static_cast<double>(n);
  const double b = -slope;
  const double a = std::exp(intercept);
  if (!(b > 0.0) || !(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    return kHuge;
  }
  a_out = a;
  b_out = b;
  return sse_of(v, y, a, b, c);
}

// Solves M x = rhs for a 3x3 system in place; returns false when singular.
bool solve3(double m[3][3], double rhs[3], double x[3]) {
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[perm[r]][col]) > std::fabs(m[perm[pivot]][col])) pivot = r;
    }
    std::swap(perm[col], perm[pivot]);
    const double diag = m[perm[col]][col];
    if (std::fabs(diag) < 1e-300) return false;
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[perm[r]][col] / diag;
      for (int k = col; k < 3; ++k) m[perm[r]][k] -= f * m[perm[col]][k];
      rhs[perm[r]] -= f * rhs[perm[col]];
    }
  }
  for (int col = 2; col >= 0; --col) {
    double acc = rhs[perm[col]];
    for (int k = col + 1; k < 3; ++k) acc -= m[perm[col]][k] * x[k];
    x[col] = acc / m[perm[col]][col];
  }
  return true;
}

// Damped Gauss-Newton (Levenberg) polish of (a, b, c) under the constraints
// a > 0, b > 0, 0 <= c < min(y).
void refine(const std::vector<double>& v, const std::vector<double>& y,
            double y_min, double& a, double& b, double& c) {
  double sse = sse_of(v, y, a, b, c);
  double lambda = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double jtr[3] = {0, 0, 0};
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double p = std::pow(v[i], -b);
      const double r = a * p + c - y[i];
      const double j0 = p;
      const double j1 = -a * std::log(v[i]) * p;
      const double j2 = 1.0;
      const double jac[3] = {j0, j1, j2};
      for (int s = 0; s < 3; ++s) {
        for (int t = 0; t < 3; ++t) jtj[s][t] += jac[s] * jac[t];
        jtr[s] += jac[s] * r;
      }
    }
    bool moved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      double m[3][3];
      double rhs[3];
      for (int s = 0; s < 3; ++s) {
        for (int t = 0; t < 3; ++t) m[s][t] = jtj[s][t];
        m[s][s] += lambda * (jtj[s][s] > 0.0 ? jtj[s][s] : 1.0);
        rhs[s] = -jtr[s];
      }
      double step[3];
      if (!solve3(m, rhs, step)) {
        lambda *= 4.0;
        continue;
      }
      const double na = a + step[0];
      const double nb = b + step[1];
      const double nc = c + step[2];
      if (!(na > 0.0) || !(nb > 0.0) || nc < 0.0 || !(nc < y_min)) {
        lambda *= 4.0;
        continue;
      }
      const double nsse = sse_of(v, y, na, nb, nc);
      if (nsse < sse) {
        const double gain = sse - nsse;
        a = na;
        b = nb;
        c = nc;
        sse = nsse;
        lambda = std::max(lambda * 0.5, 1e-12);
        moved = true;
        if (gain < 1e-12 * (sse + 1e-12)) return;
        break;
      }
      lambda *= 4.0;
    }
    if (!moved) return;
  }
}

}  // namespace

PowerLawFit fit_power_law(std::vector<std::pair<std::int32_t, double>> points,
                          std::string language_tag) {
  std::sort(points.begin(), points.end());
  // Average duplicate vocab sizes.
  std::vector<std::pair<std::int32_t, double>> merged;
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < points.size() && points[j].first == points[i].first) {
      sum += points[j].second;
      ++j;
    }
    merged.emplace_back(points[i].first, sum / static_cast<double>(j - i));
    i = j;
  }
  if (merged.size() < 4) {
    throw TooFewPoints("power-law fit needs >= 4 distinct vocab sizes, got " +
                       std::to_string(merged.size()));
  }
  for (const auto& [vv, ctc] : merged) {
    if (!(ctc > 0.0)) throw DomainError("CTC values must be positive");
  }

  PowerLawFit fit;
  fit.language_tag = std::move(language_tag);
  fit.points = merged;

  // Running-minimum hull: drop any point sitting above an earlier one.
  std::vector<double> v, y;
  for (const auto& [vv, ctc] : merged) {
    if (!y.empty() && ctc > y.back()) {
      fit.non_decreasing_warned = true;
      continue;
    }
    v.push_back(static_cast<double>(vv));
    y.push_back(ctc);
  }
  if (v.size() < 4) {
    throw TooFewPoints("monotone hull keeps only " + std::to_string(v.size()) +
                       " points");
  }
  const double y_min = y.back();

  // Outer search on the asymptote c.
  const int grid = 200;
  double best_c = 0.0, best_a = 0.0, best_b = 0.0, best_sse = kHuge;
  auto eval = [&](double c) {
    double a = 0.0, b = 0.0;
    const double sse = solve_at_c(v, y, c, a, b);
    if (sse < best_sse) {
      best_sse = sse;
      best_a = a;
      best_b = b;
      best_c = c;
    }
    return sse;
  };
  for (int g = 0; g < grid; ++g) {
    eval(y_min * static_cast<double>(g) / static_cast<double>(grid));
  }
  if (best_sse < kHuge) {
    // Golden-section around the best grid cell.
    const double cell = y_min / static_cast<double>(grid);
    double lo = std::max(0.0, best_c - cell);
    double hi = std::min(y_min * (1.0 - 1e-12), best_c + cell);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-9 * (1.0 + y_min); ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = eval(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = eval(x2);
      }
    }
  }
  if (best_sse >= kHuge) {
    throw DomainError("power-law fit failed: no decreasing curve explains the data");
  }

  double a = best_a, b = best_b, c = best_c;
  refine(v, y, y_min, a, b, c);
  fit.a = a;
  fit.b = b;
  fit.c = c;

  const double sse = sse_of(v, y, a, b, c);
  const double n = static_cast<double>(v.size());
  fit.rmse_fit = std::sqrt(sse / n);
  double mean = 0.0;
  for (double yi : y) mean += yi;
  mean /= n;
  double sstot = 0.0;
  for (double yi : y) sstot += (yi - mean) * (yi - mean);
  fit.r2 = sstot > 0.0 ? 1.0 - sse / sstot : (sse < 1e-9 ? 1.0 : 0.0);
  return fit;
}

double predict_ctc(const PowerLawFit& fit, double vocab) {
  if (vocab < 257.0) throw DomainError("predict_ctc requires vocab >= 257");
  return model_ctc(fit.a, fit.b, fit.c, vocab);
}

OptimalVocabEntry invert_for_target(const PowerLawFit& fit, double target_ctc,
                                    const std::map<std::int32_t, double>& observed) {
  auto it_floor = observed.find(kVocabFloor);
  auto it_ceil = observed.find(kVocabCeil);
  if (it_floor == observed.end() || it_ceil == observed.end()) {
    throw MissingEndpoints("observed CTCs must include the grid endpoints " +
                           std::to_string(kVocabFloor) + " and " +
                           std::to_string(kVocabCeil));
  }
  OptimalVocabEntry entry;
  entry.language_tag = fit.language_tag;
  entry.target_ctc = target_ctc;
  const double at_ceil = predict_ctc(fit, kVocabCeil);
  const double at_floor = predict_ctc(fit, kVocabFloor);
  if (target_ctc <= at_ceil) {
    entry.clamped = Clamp::ceil_262144;
    entry.planned_vocab = kVocabCeil;
    entry.predicted_ctc = it_ceil->second;
    return entry;
  }
  if (target_ctc >= at_floor) {
    entry.clamped = Clamp::floor_8192;
    entry.planned_vocab = kVocabFloor;
    entry.predicted_ctc = it_floor->second;
    return entry;
  }
  const double exact = std::pow((target_ctc - fit.c) / fit.a, -1.0 / fit.b);
  auto planned = static_cast<std::int32_t>(
      std::llround(exact / static_cast<double>(kVocabStep)) * kVocabStep);
  planned = std::clamp(planned, kVocabFloor, kVocabCeil);
  entry.planned_vocab = planned;
  entry.predicted_ctc = predict_ctc(fit, planned);
  return entry;
}

std::vector<OptimalVocabEntry> plan_optimal_vocab(
    const std::vector<PowerLawFit>& fits, const std::vector<double>& targets,
    const std::map<std::string, std::map<std::int32_t, double>>& observed) {
  std::vector<OptimalVocabEntry> plan;
  plan.reserve(fits.size() * targets.size());
  for (const PowerLawFit& fit : fits) {
    auto it = observed.find(fit.language_tag);
    if (it == observed.end()) {
      throw MissingEndpoints("no observed CTCs for language: " + fit.language_tag);
    }
    for (double target : targets) {
      plan.push_back(invert_for_target(fit, target, it->second));
    }
  }
  return plan;
}

PlanValidation validate_plan(
    const std::vector<OptimalVocabEntry>& plan,
    const std::map<std::pair<std::string, double>, double>& measured) {
  std::map<double, std::pair<double, std::uint64_t>> by_target;  // sse, n
  double sse = 0.0;
  for (const OptimalVocabEntry& entry : plan) {
    auto it = measured.find({entry.language_tag, entry.target_ctc});
    if (it == measured.end()) {
      throw MissingMeasurement("no measured CTC for " + entry.language_tag +
                               " at target " + std::to_string(entry.target_ctc));
    }
    const double err = it->second - entry.predicted_ctc;
    sse += err * err;
    auto& cell = by_target[entry.target_ctc];
    cell.first += err * err;
    cell.second += 1;
  }
  PlanValidation out;
  for (const auto& [target, cell] : by_target) {
    out.per_target.emplace_back(
        target, std::sqrt(cell.first / static_cast<double>(cell.second)));
  }
  out.overall = plan.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(plan.size()));
  return out;
}

}  // namespace montok
