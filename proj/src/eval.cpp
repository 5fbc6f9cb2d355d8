#include "suiteeval/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <regex>

#include "suiteeval/error.hpp"

namespace suiteeval {

namespace {

struct FamilyName {
  std::string_view name;
  MeasureFamily family;
};

constexpr FamilyName kFamilies[] = {
    {"nDCG", MeasureFamily::kNdcg},   {"nDCG_exp", MeasureFamily::kNdcgExp},
    {"AP", MeasureFamily::kAp},       {"RR", MeasureFamily::kRr},
    {"P", MeasureFamily::kP},         {"R", MeasureFamily::kR},
    {"Success", MeasureFamily::kSuccess}, {"Judged", MeasureFamily::kJudged},
};

bool requires_cutoff(MeasureFamily f) { return f == MeasureFamily::kP || f == MeasureFamily::kJudged; }

double gain(MeasureFamily f, int grade, int rel) {
  if (grade < rel || grade <= 0) return 0.0;
  return f == MeasureFamily::kNdcgExp ? std::exp2(grade) - 1.0 : static_cast<double>(grade);
}

}  // namespace

std::string_view family_name(MeasureFamily f) {
  for (const auto& e : kFamilies)
    if (e.family == f) return e.name;
  return "?";
}

std::string MeasureSpec::render() const {
  std::string out(family_name(family));
  if (cutoff) out += "@" + std::to_string(*cutoff);
  if (rel_threshold != 1) out += "(rel=" + std::to_string(rel_threshold) + ")";
  return out;
}

MeasureSpec parse_measure(std::string_view s) {
  static const std::regex grammar(R"(^([A-Za-z_]+)(?:@([0-9]+))?(?:\(rel=(-?[0-9]+)\))?$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(s.begin(), s.end(), m, grammar))
    throw Error(ErrorCode::kUnparseableMeasure, std::string(s));
  MeasureSpec spec;
  auto name = m[1].str();
  auto fam = std::find_if(std::begin(kFamilies), std::end(kFamilies),
                          [&](const FamilyName& e) { return e.name == name; });
  if (fam == std::end(kFamilies))
    throw Error(ErrorCode::kUnparseableMeasure, "unknown measure family in " + std::string(s));
  spec.family = fam->family;
  auto to_int = [&](const std::string& digits) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw Error(ErrorCode::kUnparseableMeasure, "number out of range in " + std::string(s));
    return v;
  };
  if (m[2].matched) {
    spec.cutoff = to_int(m[2].str());
    if (*spec.cutoff < 1) throw Error(ErrorCode::kUnparseableMeasure, "cutoff must be >= 1 in " + std::string(s));
  }
  if (m[3].matched) spec.rel_threshold = to_int(m[3].str());
  if (requires_cutoff(spec.family) && !spec.cutoff)
    throw Error(ErrorCode::kUnparseableMeasure, std::string(name) + " requires a cutoff (@k)");
  return spec;
}

std::vector<MeasureSpec> parse_measures(std::span<const std::string> strings) {
  std::vector<MeasureSpec> out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back(parse_measure(s));
  return out;
}

double compute_measure(const MeasureSpec& m, std::span<const std::string> ranking,
                       const std::map<std::string, int>& qrels_q) {
  const std::size_t depth =
      m.cutoff ? std::min<std::size_t>(static_cast<std::size_t>(*m.cutoff), ranking.size()) : ranking.size();
  auto grade_of = [&](const std::string& docno) -> std::optional<int> {
    auto it = qrels_q.find(docno);
    if (it == qrels_q.end()) return std::nullopt;
    return it->second;
  };
  auto relevant = [&](const std::string& docno) {
    auto g = grade_of(docno);
    return g && *g >= m.rel_threshold;
  };
  std::size_t total_relevant = 0;
  for (const auto& [_, g] : qrels_q)
    if (g >= m.rel_threshold) ++total_relevant;

  switch (m.family) {
    case MeasureFamily::kNdcg:
    case MeasureFamily::kNdcgExp: {
      double dcg = 0.0;
      for (std::size_t i = 0; i < depth; ++i) {
        auto g = grade_of(ranking[i]);
        if (g) dcg += gain(m.family, *g, m.rel_threshold) / std::log2(static_cast<double>(i) + 2.0);
      }
      std::vector<double> gains;
      for (const auto& [_, g] : qrels_q) gains.push_back(gain(m.family, g, m.rel_threshold));
      std::sort(gains.begin(), gains.end(), std::greater<>());
      std::size_t ideal_depth = m.cutoff ? std::min<std::size_t>(static_cast<std::size_t>(*m.cutoff), gains.size())
                                         : gains.size();
      double idcg = 0.0;
      for (std::size_t i = 0; i < ideal_depth; ++i) idcg += gains[i] / std::log2(static_cast<double>(i) + 2.0);
      return idcg > 0.0 ? dcg / idcg : 0.0;
    }
    case MeasureFamily::kAp: {
      if (total_relevant == 0) return 0.0;
      double sum = 0.0;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < depth; ++i) {
        if (relevant(ranking[i])) {
          ++hits;
          sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
      }
      return sum / static_cast<double>(total_relevant);
    }
    case MeasureFamily::kRr: {
      for (std::size_t i = 0; i < depth; ++i)
        if (relevant(ranking[i])) return 1.0 / static_cast<double>(i + 1);
      return 0.0;
    }
    case MeasureFamily::kP:
    case MeasureFamily::kR:
    case MeasureFamily::kSuccess: {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < depth; ++i)
        if (relevant(ranking[i])) ++hits;
      if (m.family == MeasureFamily::kP) return static_cast<double>(hits) / static_cast<double>(*m.cutoff);
      if (m.family == MeasureFamily::kSuccess) return hits > 0 ? 1.0 : 0.0;
      return total_relevant == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total_relevant);
    }
    case MeasureFamily::kJudged: {
      std::size_t judged = 0;
      for (std::size_t i = 0; i < depth; ++i)
        if (grade_of(ranking[i])) ++judged;
      return static_cast<double>(judged) / static_cast<double>(*m.cutoff);
    }
  }
  return 0.0;
}

double PerQueryScores::mean(std::size_t measure_index) const {
  const auto& v = values.at(measure_index);
  if (v.empty()) throw Error(ErrorCode::kEmptyQuerySet, "no judged queries");
  double sum = 0.0;
  for (const auto& [_, x] : v) sum += x;
  return sum / static_cast<double>(v.size());
}

PerQueryScores evaluate_run(const Run& run, const Qrels& qrels, std::span<const MeasureSpec> measures) {
  PerQueryScores out;
  out.measures.assign(measures.begin(), measures.end());
  out.values.resize(measures.size());
  for (const auto& [qid, _] : run.by_query)
    if (!qrels.judgements.count(qid)) ++out.unjudged_run_queries;

  std::vector<std::string> ranking;
  for (const auto& [qid, judged] : qrels.judgements) {
    if (judged.empty()) continue;
    ranking.clear();
    if (auto it = run.by_query.find(qid); it != run.by_query.end()) {
      for (const auto& d : it->second) ranking.push_back(d.docno);
    }
    for (std::size_t i = 0; i < measures.size(); ++i)
      out.values[i].emplace(qid, compute_measure(measures[i], ranking, judged));
  }
  return out;
}

}  // namespace suiteeval
