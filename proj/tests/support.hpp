#pragma once

#include <fmt/format.h>
#include <stdlib.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "suiteeval/fs_util.hpp"

namespace testing_support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "suiteeval-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline void write(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  suiteeval::fsutil::write_file(path, contents);
}

inline fs::path fixture(const std::string& rel) { return fs::path(SUITEEVAL_FIXTURE_DIR) / rel; }

inline std::vector<std::string> rerank_command(const std::string& mode, const std::string& arg = "") {
  std::vector<std::string> cmd{SUITEEVAL_RERANK_FIXTURE, mode};
  if (!arg.empty()) cmd.push_back(arg);
  return cmd;
}

struct SyntheticOptions {
  std::size_t corpora = 3;
  std::size_t docs_per_corpus = 200;
  std::size_t collections_per_corpus = 2;
  std::size_t words_per_doc = 40;
  std::size_t queries_per_collection = 12;
  std::size_t vocabulary = 800;
  std::vector<std::string> measures{"nDCG@10", "AP"};
  std::string aggregation = "arithmetic_mean";
  std::uint64_t seed = 7;
};

// Writes corpora, topics, qrels and a registry declaring suite "synthetic"
// under `root`; returns the registry path. Collection j of corpus i is
// "syn/c<i>/t<j>", and its qids are prefixed "c<i>t<j>-".
inline fs::path make_synthetic_suite(const fs::path& root, const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::vector<std::string> vocab;
  for (std::size_t i = 0; i < o.vocabulary; ++i) vocab.push_back(fmt::format("w{:04d}x", i));
  // Skewed term distribution so idf varies.
  std::vector<double> weights;
  for (std::size_t i = 0; i < o.vocabulary; ++i) weights.push_back(1.0 / static_cast<double>(i + 1));
  std::discrete_distribution<std::size_t> pick_word(weights.begin(), weights.end());

  nlohmann::json datasets = nlohmann::json::array();
  for (std::size_t c = 0; c < o.corpora; ++c) {
    std::vector<std::vector<std::string>> docs(o.docs_per_corpus);
    std::string corpus;
    for (std::size_t d = 0; d < o.docs_per_corpus; ++d) {
      std::string text;
      for (std::size_t w = 0; w < o.words_per_doc; ++w) {
        docs[d].push_back(vocab[pick_word(rng)]);
        text += (w ? " " : "") + docs[d].back();
      }
      nlohmann::json rec{{"docno", fmt::format("c{}d{:05d}", c, d)}, {"text", text}};
      if (d % 3 == 0) rec["title"] = docs[d][0];
      corpus += rec.dump() + "\n";
    }
    const auto corpus_path = root / fmt::format("corpus{}.jsonl", c);
    write(corpus_path, corpus);

    for (std::size_t t = 0; t < o.collections_per_corpus; ++t) {
      std::string topics, qrels;
      std::uniform_int_distribution<std::size_t> pick_doc(0, o.docs_per_corpus - 1);
      for (std::size_t q = 0; q < o.queries_per_collection; ++q) {
        const auto qid = fmt::format("c{}t{}-{}", c, t, q);
        const auto target = pick_doc(rng);
        const auto& words = docs[target];
        std::uniform_int_distribution<std::size_t> pick_pos(0, words.size() - 1);
        topics += fmt::format("{}\t{} {} {}\n", qid, words[pick_pos(rng)], words[pick_pos(rng)],
                              vocab[pick_word(rng)]);
        qrels += fmt::format("{} 0 c{}d{:05d} 2\n", qid, c, target);
        std::set<std::size_t> judged{target};
        for (int extra = 0; extra < 4; ++extra) {
          const auto d = pick_doc(rng);
          if (judged.insert(d).second) qrels += fmt::format("{} 0 c{}d{:05d} {}\n", qid, c, d, extra % 2);
        }
      }
      const auto topics_path = root / fmt::format("c{}t{}.topics.tsv", c, t);
      const auto qrels_path = root / fmt::format("c{}t{}.qrels", c, t);
      write(topics_path, topics);
      write(qrels_path, qrels);
      datasets.push_back({{"dataset_id", fmt::format("syn/c{}/t{}", c, t)},
                          {"corpus_id", fmt::format("corpus{}", c)},
                          {"corpus", corpus_path.filename().string()},
                          {"topics", topics_path.filename().string()},
                          {"qrels", qrels_path.filename().string()}});
    }
  }
  nlohmann::json reg{{"suites",
                      {{{"name", "synthetic"},
                        {"aggregation", o.aggregation},
                        {"official_measures", o.measures},
                        {"datasets", datasets}}}}};
  const auto reg_path = root / "registry.json";
  write(reg_path, reg.dump(2));
  return reg_path;
}

}  // namespace testing_support
