#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace montok {

// Standard vocabulary grid bounds; planned sizes land on multiples of 128.
inline constexpr std::int32_t kVocabFloor = 8192;
inline constexpr std::int32_t kVocabCeil = 262144;
inline constexpr std::int32_t kVocabStep = 128;

// CTC(v) = a * v^(-b) + c with a > 0, b > 0, c >= 0.
struct PowerLawFit {
  std::string language_tag;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::vector<std::pair<std::int32_t, double>> points;  // as given, sorted by v
  double rmse_fit = 0.0;  // over the fitted (monotone-hull) points
  double r2 = 0.0;
  // True when the input was not weakly decreasing; the fit then used the
  // running-minimum subset of the points.
  bool non_decreasing_warned = false;
};

enum class Clamp { none, floor_8192, ceil_262144 };

const char* clamp_name(Clamp c);

struct OptimalVocabEntry {
  std::string language_tag;
  double target_ctc = 0.0;
  std::int32_t planned_vocab = 0;
  double predicted_ctc = 0.0;
  Clamp clamped = Clamp::none;
};

struct PlanValidation {
  std::vector<std::pair<double, double>> per_target;  // (target_ctc, rmse)
  double overall = 0.0;
};

// Least-squares fit: grid plus golden-section search on c with closed-form
// log-space regression for (a, b), then damped Gauss-Newton refinement.
// Throws TooFewPoints (< 4 distinct vocab sizes, also after hull filtering)
// and DomainError (non-positive CTC).
PowerLawFit fit_power_law(std::vector<std::pair<std::int32_t, double>> points,
                          std::string language_tag = "");

// a * v^(-b) + c. Throws DomainError for vocab < 257.
double predict_ctc(const PowerLawFit& fit, double vocab);

// Inverts the fitted curve for a target CTC with endpoint clamping: targets
// at or below the curve value at 262144 clamp to the ceiling, targets at or
// above the value at 8192 clamp to the floor; otherwise the exact inverse is
// rounded to the nearest multiple of 128. Clamped entries report the observed
// endpoint CTC. Throws MissingEndpoints when observed lacks 8192 or 262144.
OptimalVocabEntry invert_for_target(const PowerLawFit& fit, double target_ctc,
                                    const std::map<std::int32_t, double>& observed);

std::vector<OptimalVocabEntry> plan_optimal_vocab(
    const std::vector<PowerLawFit>& fits, const std::vector<double>& targets,
    const std::map<std::string, std::map<std::int32_t, double>>& observed);

// RMSE between predicted and measured CTCs, per target and overall.
// Throws MissingMeasurement.
PlanValidation validate_plan(
    const std::vector<OptimalVocabEntry>& plan,
    const std::map<std::pair<std::string, double>, double>& measured);

}  // namespace montok
