#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace suiteeval {

struct ScoredDoc {
  std::string docno;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

// Result order used everywhere: score descending, then docno descending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.docno > b.docno;
}

// Ranked results of one system on one test collection. Each per-query list
// is in rank order (rank 1 first).
struct Run {
  std::map<std::string, std::vector<ScoredDoc>> by_query;

  bool operator==(const Run&) const = default;
};

// Six-column TREC run format: `qid Q0 docno rank score tag`, ranks 1-based,
// score with 6 significant digits.
std::string format_run(const Run& run, std::string_view tag);

// Parses a TREC run. Each query's documents are ordered by the rank column,
// falling back to (score desc, docno desc) for equal ranks.
Run parse_run(std::string_view contents);
Run read_run_file(const std::filesystem::path& path);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace suiteeval
