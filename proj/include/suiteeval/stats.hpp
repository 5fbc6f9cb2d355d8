#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace suiteeval {

enum class AggregateRule { kArithmeticMean, kGeometricMean };

std::string_view to_string(AggregateRule rule);
AggregateRule parse_aggregate_rule(std::string_view s);
// "arithmetic mean" / "geometric mean", for human-facing labels.
std::string_view label(AggregateRule rule);

enum class Correction { kNone, kBonferroni, kHolm };

std::string_view to_string(Correction c);
Correction parse_correction(std::string_view s);

// Mean over judged queries.
double dataset_score(std::span<const double> per_query);

// Arithmetic mean, or geometric mean computed as exp(mean(log v)). A zero
// anywhere makes the geometric mean exactly zero; there is no smoothing.
double suite_aggregate(std::span<const double> values, AggregateRule rule);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

// Two-sided paired Student t-test on system - baseline, pairing by qid over
// the qids present in both maps. Zero variance: t = 0, p = 1 when the mean
// difference is 0, otherwise t = +/-inf and p = 0. Throws InsufficientPairs
// when fewer than two qids are shared.
TTestResult paired_t_test(const std::map<std::string, double>& baseline,
                          const std::map<std::string, double>& system);

// Holm step-down adjusted p-values, returned in input order, clipped to 1.
// `alpha` only matters to callers deciding rejection; adjusted values are
// independent of it.
std::vector<double> holm_correction(std::span<const double> p_values, double alpha = 0.05);
std::vector<double> bonferroni_correction(std::span<const double> p_values);
std::vector<double> apply_correction(std::span<const double> p_values, Correction c);

}  // namespace suiteeval
