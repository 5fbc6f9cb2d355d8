#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "suiteeval/data.hpp"
#include "suiteeval/run.hpp"
#include "suiteeval/tokenizer.hpp"

namespace suiteeval {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  // Throws InvalidArgument unless k1 >= 0 and b in [0, 1].
  void validate() const;
  bool operator==(const Bm25Params&) const = default;
};

struct Posting {
  std::uint32_t doc;  // ordinal
  std::uint32_t tf;

  bool operator==(const Posting&) const = default;
};

// Counters used to assert lifecycle properties (one build per corpus, zero
// corpus reads on reuse). Shared across the components of one run.
struct Instruments {
  std::atomic<std::size_t> index_builds{0};
  std::atomic<std::size_t> index_opens{0};
  std::atomic<std::size_t> corpus_reads{0};
  std::atomic<std::size_t> pipeline_instantiations{0};
};

// Pull-style document stream: fills the argument and returns true, or
// returns false at the end.
using DocSource = std::function<bool(Doc&)>;

// In-memory inverted index with document-at-a-time BM25 scoring. Immutable
// once built or opened; search() is safe to call concurrently.
//
// On-disk layout under <workspace>/index/ (all integers little-endian):
//   docnos.bin    u32 N, then N x (u32 len, bytes)
//   doclens.bin   N x u32 token counts
//   postings.bin  u32 T, then T terms in byte order:
//                 (u32 len, term, u32 df, df x (varint ordinal gap, varint tf))
//   stats.json    counts, average length, tokenizer and fingerprint
//   COMPLETE      written last; its absence marks an unfinished build
class InvertedIndex {
 public:
  std::uint32_t doc_count() const { return static_cast<std::uint32_t>(docnos_.size()); }
  std::uint64_t total_tokens() const { return total_tokens_; }
  double avg_doclen() const;
  std::size_t term_count() const { return postings_.size(); }

  std::span<const Posting> postings(std::string_view term) const;
  std::uint32_t doclen(std::uint32_t ordinal) const { return doclens_[ordinal]; }
  const std::string& docno(std::uint32_t ordinal) const { return docnos_[ordinal]; }
  const TokenizerConfig& tokenizer() const { return tokenizer_; }
  // All terms in byte order.
  std::vector<std::string> terms() const;

  // Top-k by BM25, ordered by (score desc, docno desc). Only documents that
  // contain at least one query term are returned. A query term repeated n
  // times contributes n times.
  std::vector<ScoredDoc> search(std::string_view query, std::size_t k,
                                const Bm25Params& params) const;

  bool operator==(const InvertedIndex& other) const;

 private:
  friend class IndexBuilder;
  friend InvertedIndex read_index(const std::filesystem::path& index_dir);

  std::vector<std::string> docnos_;
  std::vector<std::uint32_t> doclens_;
  std::uint64_t total_tokens_ = 0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  TokenizerConfig tokenizer_;
};

struct IndexHandle {
  std::filesystem::path workspace;
  std::shared_ptr<const InvertedIndex> index;
  std::shared_ptr<const DocStore> docstore;
  bool built = false;  // false when an existing index was reused
};

std::filesystem::path index_dir(const std::filesystem::path& workspace);
std::filesystem::path docstore_dir(const std::filesystem::path& workspace);

// Single pass over `corpus`: writes index and doc store under `workspace`,
// then the COMPLETE marker. Holds <workspace>/.lock while writing.
IndexHandle build_index(const DocSource& corpus, const std::filesystem::path& workspace,
                        const TokenizerConfig& config, Instruments* instruments = nullptr);

// Opens a complete index without touching the corpus.
IndexHandle open_index(const std::filesystem::path& workspace, Instruments* instruments = nullptr);

// Reuses a complete index with a matching tokenizer fingerprint, otherwise
// builds one. An existing index built under another configuration, or an
// unfinished one, is an error unless force_rebuild is set.
IndexHandle open_or_build(const std::filesystem::path& workspace,
                          const std::function<DocSource()>& open_corpus,
                          const TokenizerConfig& config, bool force_rebuild,
                          Instruments* instruments = nullptr);

// Removes the workspace (unless persistent) and returns the bytes freed.
std::uint64_t release_workspace(const std::filesystem::path& workspace, bool persistent);

}  // namespace suiteeval
