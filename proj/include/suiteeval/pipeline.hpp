#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "suiteeval/data.hpp"
#include "suiteeval/index.hpp"
#include "suiteeval/registry.hpp"
#include "suiteeval/run.hpp"

namespace suiteeval {

inline constexpr std::size_t kDefaultRetrievalDepth = 1000;
inline constexpr std::size_t kDefaultRerankDepth = 100;

struct Bm25Stage {
  Bm25Params params;
  std::size_t k = kDefaultRetrievalDepth;

  bool operator==(const Bm25Stage&) const = default;
};

// An external reranker: an executable speaking the line protocol below.
struct RerankStage {
  std::vector<std::string> command;
  bool needs_text = false;
  std::size_t depth = kDefaultRerankDepth;

  bool operator==(const RerankStage&) const = default;
};

// One system: BM25 first stage followed by zero or more rerankers.
struct PipelineSpec {
  std::string system_tag;
  Bm25Stage first_stage;
  std::vector<RerankStage> rerankers;

  bool operator==(const PipelineSpec&) const = default;
};

// Pipelines file (JSON):
//   {"systems":[{"tag":str,"stages":[
//       {"type":"bm25","k1":num|{"grid":[num,...]},"b":num|{"grid":[...]},"k":int},
//       {"type":"exec","command":[str,...],"needs_text":bool,"depth":int}, ...]}]}
// A grid expands to one system per (k1, b) combination, k1 varying slowest,
// with "-k1_<v>" / "-b_<v>" appended to the tag for each gridded parameter.
// A relative command path containing '/' resolves against the file's
// directory.
std::vector<PipelineSpec> parse_pipelines(const std::filesystem::path& path);
std::vector<PipelineSpec> parse_pipelines_text(std::string_view json_text,
                                               const std::filesystem::path& base_dir,
                                               std::string_view source_name = "<pipelines>");

struct Candidate {
  std::string docno;
  double score = 0.0;
  std::optional<std::string> text;
};

// Per query, candidates in rank order (rank = position + 1).
struct Candidates {
  std::map<std::string, std::vector<Candidate>> by_query;
};

// Per-corpus-group execution context: the workspace every stage writes
// under, a corpus iterator, and a text loader backed by the doc store.
class DatasetContext {
 public:
  struct Options {
    TokenizerConfig tokenizer;
    bool force_rebuild = false;
  };

  DatasetContext(CorpusGroup group, std::filesystem::path workspace, Options options,
                 Instruments* instruments = nullptr);

  const CorpusGroup& corpus_group() const { return group_; }
  const std::filesystem::path& path() const { return workspace_; }

  // Fresh streaming pass over the group's corpus.
  DocSource corpus_iter() const;
  // Opens or builds the group's index once; later calls return the same handle.
  const IndexHandle& index();
  const DocStore& text_loader();

 private:
  CorpusGroup group_;
  std::filesystem::path workspace_;
  Options options_;
  Instruments* instruments_;
  std::optional<IndexHandle> handle_;
};

class ExecutablePipeline {
 public:
  ExecutablePipeline(PipelineSpec spec, std::shared_ptr<const InvertedIndex> index,
                     std::shared_ptr<const DocStore> store);

  const PipelineSpec& spec() const { return spec_; }
  const InvertedIndex& index() const { return *index_; }

  // First-stage retrieval for every topic, then each reranker in turn.
  // Throws RerankerFailure; the caller decides how to isolate it.
  Run execute(std::span<const Topic> topics) const;

 private:
  PipelineSpec spec_;
  std::shared_ptr<const InvertedIndex> index_;
  std::shared_ptr<const DocStore> store_;
};

// Binds every spec to the context's single index. Throws EmptyPipelineSet.
std::vector<ExecutablePipeline> instantiate_pipelines(std::span<const PipelineSpec> specs,
                                                      DatasetContext& context,
                                                      Instruments* instruments = nullptr);

inline Run execute_pipeline(const ExecutablePipeline& pipeline, std::span<const Topic> topics) {
  return pipeline.execute(topics);
}

// Fills candidate text from the doc store when `needs_text`; otherwise the
// candidates are left untouched and the store is not consulted.
void attach_text(Candidates& candidates, const DocStore& store, bool needs_text);

// Reranker wire protocol (UTF-8, one line per candidate):
//   in:  qid \t docno \t rank \t score \t query [\t text]\n
//        with a blank line after each query's block; the text column is
//        present iff needs_text; tabs, CR and LF inside query/text become
//        single spaces.
//   out: qid \t docno \t score\n
// The output must rescore exactly the input (qid, docno) pairs. Results are
// re-sorted by (score desc, docno desc).
std::string encode_rerank_input(const Candidates& candidates,
                                const std::map<std::string, std::string>& queries, bool needs_text);
Candidates decode_rerank_output(std::string_view output, const Candidates& input);

Candidates exec_rerank(const std::vector<std::string>& command, const Candidates& candidates,
                       const std::map<std::string, std::string>& queries, bool needs_text);

// Applies one rerank stage at its depth: the top `depth` candidates are
// rescored and re-sorted, the remainder keeps first-stage order below them.
Candidates rerank_at_depth(const RerankStage& stage, const Candidates& candidates,
                           const std::map<std::string, std::string>& queries, const DocStore& store);

Run to_run(const Candidates& candidates);
Candidates from_run(const Run& run);

}  // namespace suiteeval
