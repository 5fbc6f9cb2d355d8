#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace suiteeval {

struct Doc {
  std::string docno;
  std::string text;
  std::optional<std::string> title;

  // The text that gets tokenised: title + " " + text when a title exists.
  std::string indexable_text() const;

  bool operator==(const Doc&) const = default;
};

struct Topic {
  std::string qid;
  std::string query;
};

struct Qrels {
  // qid -> docno -> grade
  std::map<std::string, std::map<std::string, int>> judgements;
  // Number of (qid, docno) lines that overrode an earlier line.
  std::size_t duplicate_overrides = 0;

  std::size_t pair_count() const;
  const std::map<std::string, int>* for_query(const std::string& qid) const;
};

class LineSource;

// Streaming reader over a JSON-lines corpus, optionally gzip-compressed
// (detected from the magic bytes, not the extension). Memory use does not
// grow with document text; with duplicate checking on, a set of docnos is
// kept.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path,
                        bool check_duplicates = true);
  ~CorpusReader();
  CorpusReader(CorpusReader&&) noexcept;
  CorpusReader& operator=(CorpusReader&&) noexcept;

  // Returns false at end of stream.
  bool next(Doc& doc);

  std::size_t line_number() const { return line_; }
  bool compressed() const;

 private:
  std::unique_ptr<LineSource> source_;
  std::filesystem::path path_;
  std::size_t line_ = 0;
  bool check_duplicates_;
  std::unordered_set<std::string> seen_;
};

// Parse one corpus JSON line. `line_number` is used for error context only.
Doc parse_corpus_record(std::string_view line, std::size_t line_number);

std::vector<Topic> load_topics(const std::filesystem::path& path);
Qrels load_qrels(const std::filesystem::path& path);

bool is_gzip_file(const std::filesystem::path& path);

struct StoredText {
  std::string text;
  std::optional<std::string> title;
};

// Append-only record log plus an offset table, written during indexing.
//
// Layout under <dir>:
//   records.log   per doc: u32 docno_len, docno, u8 has_title,
//                 u32 title_len, title, u32 text_len, text  (little-endian)
//   offsets.bin   u64 count, then count x u64 record offsets
class DocStoreWriter {
 public:
  explicit DocStoreWriter(const std::filesystem::path& dir);
  ~DocStoreWriter();

  void append(const Doc& doc);
  // Flushes and writes the offset table. Must be called once.
  void finish();

 private:
  std::filesystem::path dir_;
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> log_;
  std::vector<std::uint64_t> offsets_;
  std::uint64_t position_ = 0;
  bool finished_ = false;
};

// Read-only random access view over a finished doc store. Safe for
// concurrent lookups.
class DocStore {
 public:
  explicit DocStore(const std::filesystem::path& dir);
  ~DocStore();
  DocStore(const DocStore&) = delete;
  DocStore& operator=(const DocStore&) = delete;

  StoredText lookup(std::string_view docno) const;
  bool contains(std::string_view docno) const;
  std::size_t size() const { return sorted_.size(); }

  std::uint64_t lookup_count() const { return lookups_.load(); }

 private:
  StoredText read_record(std::uint64_t offset, std::string* docno_out) const;
  std::optional<std::uint64_t> find(std::string_view docno) const;

  int fd_ = -1;
  // (docno, record offset) sorted by docno for O(log n) lookup.
  std::vector<std::pair<std::string, std::uint64_t>> sorted_;
  mutable std::atomic<std::uint64_t> lookups_{0};
};

}  // namespace suiteeval
