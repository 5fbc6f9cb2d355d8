#include "suiteeval/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <sstream>

#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"

namespace suiteeval {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_run(const Run& run, std::string_view tag) {
  std::string out;
  for (const auto& [qid, docs] : run.by_query) {
    std::size_t rank = 1;
    for (const auto& d : docs) {
      out += fmt::format("{} Q0 {} {} {:.6g} {}\n", qid, d.docno, rank++, d.score, tag);
    }
  }
  return out;
}

Run parse_run(std::string_view contents) {
  struct Row {
    std::string docno;
    long rank;
    double score;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string qid, q0, docno, rank_s, score_s, tag;
    if (!(fields >> qid)) continue;
    if (!(fields >> q0 >> docno >> rank_s >> score_s >> tag))
      throw Error(ErrorCode::kMalformedRecord, "run line " + std::to_string(lineno) + ": expected 6 columns");
    Row r{docno, 0, 0.0};
    auto [p1, e1] = std::from_chars(rank_s.data(), rank_s.data() + rank_s.size(), r.rank);
    auto [p2, e2] = std::from_chars(score_s.data(), score_s.data() + score_s.size(), r.score);
    if (e1 != std::errc() || e2 != std::errc() || p1 != rank_s.data() + rank_s.size() ||
        p2 != score_s.data() + score_s.size())
      throw Error(ErrorCode::kMalformedRecord, "run line " + std::to_string(lineno) + ": bad rank or score");
    rows[qid].push_back(std::move(r));
  }
  Run run;
  for (auto& [qid, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) {
      if (a.rank != b.rank) return a.rank < b.rank;
      if (a.score != b.score) return a.score > b.score;
      return a.docno > b.docno;
    });
    auto& out = run.by_query[qid];
    for (auto& r : list) out.push_back({std::move(r.docno), r.score});
  }
  return run;
}

Run read_run_file(const std::filesystem::path& path) { return parse_run(fsutil::read_file(path)); }

}  // namespace suiteeval
