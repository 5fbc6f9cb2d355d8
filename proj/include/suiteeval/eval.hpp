#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "suiteeval/data.hpp"
#include "suiteeval/run.hpp"

namespace suiteeval {

enum class MeasureFamily { kNdcg, kNdcgExp, kAp, kRr, kP, kR, kSuccess, kJudged };

// A ranked-retrieval measure, written `<family>[@k][(rel=r)]`, e.g.
// "nDCG@10", "AP", "RR@10(rel=2)". Families: nDCG, nDCG_exp, AP, RR, P, R,
// Success, Judged. P and Judged divide by k and therefore require a cutoff.
struct MeasureSpec {
  MeasureFamily family = MeasureFamily::kNdcg;
  std::optional<int> cutoff;
  int rel_threshold = 1;

  std::string render() const;
  bool operator==(const MeasureSpec&) const = default;
  auto operator<=>(const MeasureSpec& o) const { return render() <=> o.render(); }
};

MeasureSpec parse_measure(std::string_view s);
std::vector<MeasureSpec> parse_measures(std::span<const std::string> strings);

// Scores a duplicate-free ranking against one query's judgements.
// Unjudged documents count as non-relevant (grade 0) except for Judged.
// Queries with no relevant documents score 0 on every family except Judged,
// which only counts judgements.
//
// nDCG uses linear gain (the grade, for grades >= rel) and discount
// 1/log2(rank + 1); nDCG_exp uses gain 2^grade - 1.
double compute_measure(const MeasureSpec& m, std::span<const std::string> ranking,
                       const std::map<std::string, int>& qrels_q);

struct PerQueryScores {
  std::vector<MeasureSpec> measures;
  // Parallel to `measures`: qid -> value, one entry per judged query.
  std::vector<std::map<std::string, double>> values;
  // Run queries with no judgements; excluded from the scores.
  std::size_t unjudged_run_queries = 0;

  double mean(std::size_t measure_index) const;
};

// Every judged query gets a value for every measure; judged queries missing
// from the run are scored as an empty ranking.
PerQueryScores evaluate_run(const Run& run, const Qrels& qrels, std::span<const MeasureSpec> measures);

std::string_view family_name(MeasureFamily f);

}  // namespace suiteeval
