#include "suiteeval/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "suiteeval/error.hpp"

namespace suiteeval {

std::string_view to_string(AggregateRule rule) {
  return rule == AggregateRule::kGeometricMean ? "geometric_mean" : "arithmetic_mean";
}

std::string_view label(AggregateRule rule) {
  return rule == AggregateRule::kGeometricMean ? "geometric mean" : "arithmetic mean";
}

AggregateRule parse_aggregate_rule(std::string_view s) {
  if (s == "arithmetic_mean") return AggregateRule::kArithmeticMean;
  if (s == "geometric_mean") return AggregateRule::kGeometricMean;
  throw Error(ErrorCode::kParseError, "unknown aggregation \"" + std::string(s) +
                                          "\" (expected arithmetic_mean or geometric_mean)");
}

std::string_view to_string(Correction c) {
  switch (c) {
    case Correction::kNone: return "none";
    case Correction::kBonferroni: return "bonferroni";
    case Correction::kHolm: return "holm";
  }
  return "?";
}

Correction parse_correction(std::string_view s) {
  if (s == "none") return Correction::kNone;
  if (s == "bonferroni") return Correction::kBonferroni;
  if (s == "holm") return Correction::kHolm;
  throw Error(ErrorCode::kInvalidArgument, "unknown correction \"" + std::string(s) + "\"");
}

double dataset_score(std::span<const double> per_query) {
  if (per_query.empty()) throw Error(ErrorCode::kEmptyQuerySet, "no per-query values");
  double sum = 0.0;
  for (double v : per_query) sum += v;
  return sum / static_cast<double>(per_query.size());
}

double suite_aggregate(std::span<const double> values, AggregateRule rule) {
  if (values.empty()) throw Error(ErrorCode::kEmptyQuerySet, "no dataset values to aggregate");
  if (rule == AggregateRule::kArithmeticMean) return dataset_score(values);
  double log_sum = 0.0;
  for (double v : values) {
    if (v < 0.0 || std::isnan(v))
      throw Error(ErrorCode::kNegativeValueForGeomean, "geometric mean of negative value");
    if (v == 0.0) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

TTestResult paired_t_test(const std::map<std::string, double>& baseline,
                          const std::map<std::string, double>& system) {
  std::vector<double> diffs;
  for (const auto& [qid, b] : baseline) {
    auto it = system.find(qid);
    if (it != system.end()) diffs.push_back(it->second - b);
  }
  TTestResult r;
  r.n = diffs.size();
  if (r.n < 2)
    throw Error(ErrorCode::kInsufficientPairs, std::to_string(r.n) + " paired queries");

  const double n = static_cast<double>(r.n);
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  if (sd == 0.0) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  boost::math::students_t dist(n - 1.0);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
  return r;
}

std::vector<double> holm_correction(std::span<const double> p_values, double /*alpha*/) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    double v = std::min(1.0, static_cast<double>(m - rank) * p_values[order[rank]]);
    running = std::max(running, v);
    adjusted[order[rank]] = running;
  }
  return adjusted;
}

std::vector<double> bonferroni_correction(std::span<const double> p_values) {
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(std::min(1.0, p * static_cast<double>(p_values.size())));
  return out;
}

std::vector<double> apply_correction(std::span<const double> p_values, Correction c) {
  switch (c) {
    case Correction::kNone: return {p_values.begin(), p_values.end()};
    case Correction::kBonferroni: return bonferroni_correction(p_values);
    case Correction::kHolm: return holm_correction(p_values);
  }
  return {};
}

}  // namespace suiteeval
