#include "suiteeval/index.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "suiteeval/binary_io.hpp"
#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace suiteeval {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kMarker = "COMPLETE";

class WorkspaceLock {
 public:
  explicit WorkspaceLock(const fs::path& workspace) {
    fs::create_directories(workspace);
    auto path = workspace / ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::kIoError, "cannot create lock " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIoError, "cannot lock " + path.string());
    }
  }
  ~WorkspaceLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  int fd_ = -1;
};

json tokenizer_to_json(const TokenizerConfig& c) {
  return json{{"lowercase", c.lowercase},
              {"stem", c.stem == Stemmer::kPorter ? "porter" : "none"},
              {"stopwords", std::vector<std::string>(c.stopwords.begin(), c.stopwords.end())}};
}

TokenizerConfig tokenizer_from_json(const json& j) {
  TokenizerConfig c;
  c.lowercase = j.at("lowercase").get<bool>();
  c.stem = j.at("stem").get<std::string>() == "porter" ? Stemmer::kPorter : Stemmer::kNone;
  for (const auto& w : j.at("stopwords")) c.stopwords.insert(w.get<std::string>());
  return c;
}

json read_stats(const fs::path& dir) {
  try {
    return json::parse(fsutil::read_file(dir / "stats.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptIndex, "bad stats.json in " + dir.string() + ": " + e.what());
  }
}

}  // namespace

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1))
    throw Error(ErrorCode::kInvalidArgument, "BM25 k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "BM25 b must lie in [0, 1]");
}

double InvertedIndex::avg_doclen() const {
  if (docnos_.empty()) return 0.0;
  return static_cast<double>(total_tokens_) / static_cast<double>(docnos_.size());
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  if (it == postings_.end()) return {};
  return it->second;
}

std::vector<std::string> InvertedIndex::terms() const {
  std::vector<std::string> out;
  out.reserve(postings_.size());
  for (const auto& [t, _] : postings_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

bool InvertedIndex::operator==(const InvertedIndex& other) const {
  return docnos_ == other.docnos_ && doclens_ == other.doclens_ &&
         total_tokens_ == other.total_tokens_ && postings_ == other.postings_ &&
         tokenizer_ == other.tokenizer_;
}

std::vector<ScoredDoc> InvertedIndex::search(std::string_view query, std::size_t k,
                                             const Bm25Params& params) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  params.validate();

  // Distinct query terms in first-appearance order with their counts.
  std::vector<std::pair<std::string, std::uint32_t>> qterms;
  for (auto& t : tokenize(query, tokenizer_)) {
    auto it = std::find_if(qterms.begin(), qterms.end(), [&](const auto& p) { return p.first == t; });
    if (it == qterms.end()) {
      qterms.emplace_back(std::move(t), 1);
    } else {
      ++it->second;
    }
  }

  const double n_docs = static_cast<double>(doc_count());
  const double avgdl = avg_doclen();
  std::vector<double> acc(doc_count(), 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<bool> seen(doc_count(), false);

  for (const auto& [term, qtf] : qterms) {
    auto plist = postings(term);
    if (plist.empty()) continue;
    const double df = static_cast<double>(plist.size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& p : plist) {
      const double tf = p.tf;
      const double len_ratio = avgdl > 0.0 ? doclens_[p.doc] / avgdl : 1.0;
      const double norm = params.k1 * (1.0 - params.b + params.b * len_ratio);
      acc[p.doc] += qtf * (idf * tf * (params.k1 + 1.0) / (tf + norm));
      if (!seen[p.doc]) {
        seen[p.doc] = true;
        touched.push_back(p.doc);
      }
    }
  }

  std::vector<ScoredDoc> results;
  results.reserve(touched.size());
  for (auto doc : touched) results.push_back({docnos_[doc], acc[doc]});
  auto cut = std::min(k, results.size());
  std::partial_sort(results.begin(), results.begin() + static_cast<std::ptrdiff_t>(cut), results.end(),
                    ranks_before);
  results.resize(cut);
  return results;
}

// Accumulates postings in ordinal order as documents stream past.
class IndexBuilder {
 public:
  explicit IndexBuilder(const TokenizerConfig& config) { index_.tokenizer_ = config; }

  void add(const Doc& doc) {
    auto ordinal = static_cast<std::uint32_t>(index_.docnos_.size());
    if (!docnos_.insert(doc.docno).second)
      throw Error(ErrorCode::kDuplicateDocno, doc.docno);
    std::unordered_map<std::string, std::uint32_t> tf;
    auto tokens = tokenize(doc.indexable_text(), index_.tokenizer_);
    for (auto& t : tokens) ++tf[std::move(t)];
    for (auto& [term, count] : tf) index_.postings_[term].push_back({ordinal, count});
    index_.docnos_.push_back(doc.docno);
    index_.doclens_.push_back(static_cast<std::uint32_t>(tokens.size()));
    index_.total_tokens_ += tokens.size();
  }

  InvertedIndex finish() && { return std::move(index_); }

 private:
  InvertedIndex index_;
  std::unordered_set<std::string> docnos_;
};

namespace {

void write_index(const InvertedIndex& index, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::string buf;
    binio::put_u32(buf, index.doc_count());
    for (std::uint32_t i = 0; i < index.doc_count(); ++i) binio::put_bytes(buf, index.docno(i));
    fsutil::write_file(dir / "docnos.bin", buf);
  }
  {
    std::string buf;
    for (std::uint32_t i = 0; i < index.doc_count(); ++i) binio::put_u32(buf, index.doclen(i));
    fsutil::write_file(dir / "doclens.bin", buf);
  }
  {
    std::string buf;
    auto terms = index.terms();
    binio::put_u32(buf, static_cast<std::uint32_t>(terms.size()));
    for (const auto& t : terms) {
      auto plist = index.postings(t);
      binio::put_bytes(buf, t);
      binio::put_u32(buf, static_cast<std::uint32_t>(plist.size()));
      std::uint32_t prev = 0;
      for (const auto& p : plist) {
        binio::put_varint(buf, p.doc - prev);
        binio::put_varint(buf, p.tf);
        prev = p.doc;
      }
    }
    fsutil::write_file(dir / "postings.bin", buf);
  }
  json stats{{"format_version", kFormatVersion},
             {"doc_count", index.doc_count()},
             {"total_tokens", index.total_tokens()},
             {"avg_doclen", index.avg_doclen()},
             {"term_count", index.term_count()},
             {"tokenizer", tokenizer_to_json(index.tokenizer())},
             {"fingerprint", index.tokenizer().fingerprint()}};
  fsutil::write_file(dir / "stats.json", stats.dump(2) + "\n");
}

}  // namespace

InvertedIndex read_index(const fs::path& dir) {
  InvertedIndex index;
  json stats = read_stats(dir);
  try {
    if (stats.at("format_version").get<int>() != kFormatVersion)
      throw Error(ErrorCode::kCorruptIndex, "unsupported index format in " + dir.string());
    index.tokenizer_ = tokenizer_from_json(stats.at("tokenizer"));
    index.total_tokens_ = stats.at("total_tokens").get<std::uint64_t>();

    std::string docnos = fsutil::read_file(dir / "docnos.bin");
    binio::Reader dr(docnos);
    std::uint32_t n = dr.u32();
    index.docnos_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) index.docnos_.emplace_back(dr.bytes());

    std::string lens = fsutil::read_file(dir / "doclens.bin");
    binio::Reader lr(lens);
    index.doclens_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) index.doclens_.push_back(lr.u32());

    std::string post = fsutil::read_file(dir / "postings.bin");
    binio::Reader pr(post);
    std::uint32_t t = pr.u32();
    index.postings_.reserve(t);
    for (std::uint32_t i = 0; i < t; ++i) {
      std::string term(pr.bytes());
      std::uint32_t df = pr.u32();
      std::vector<Posting> plist;
      plist.reserve(df);
      std::uint64_t doc = 0;
      for (std::uint32_t j = 0; j < df; ++j) {
        doc += pr.varint();
        auto tf = pr.varint();
        if (doc >= n) throw Error(ErrorCode::kCorruptIndex, "posting ordinal out of range");
        plist.push_back({static_cast<std::uint32_t>(doc), static_cast<std::uint32_t>(tf)});
      }
      index.postings_.emplace(std::move(term), std::move(plist));
    }
    if (!dr.done() || !lr.done() || !pr.done())
      throw Error(ErrorCode::kCorruptIndex, "trailing bytes in " + dir.string());
    if (stats.at("doc_count").get<std::uint32_t>() != n)
      throw Error(ErrorCode::kCorruptIndex, "doc_count mismatch in " + dir.string());
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::kCorruptIndex, "truncated index files in " + dir.string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptIndex, std::string("bad stats.json: ") + e.what());
  }
  return index;
}

fs::path index_dir(const fs::path& workspace) { return workspace / "index"; }
fs::path docstore_dir(const fs::path& workspace) { return workspace / "docstore"; }

IndexHandle build_index(const DocSource& corpus, const fs::path& workspace,
                        const TokenizerConfig& config, Instruments* instruments) {
  WorkspaceLock lock(workspace);
  const auto idir = index_dir(workspace);
  const auto sdir = docstore_dir(workspace);
  fs::remove_all(idir);
  fs::remove_all(sdir);

  IndexBuilder builder(config);
  {
    DocStoreWriter store(sdir);
    Doc doc;
    try {
      while (corpus(doc)) {
        builder.add(doc);
        store.append(doc);
      }
    } catch (...) {
      fs::remove_all(sdir);
      throw;
    }
    store.finish();
  }
  InvertedIndex index = std::move(builder).finish();
  if (index.doc_count() == 0) {
    fs::remove_all(sdir);
    throw Error(ErrorCode::kEmptyCorpus, "no documents for workspace " + workspace.string());
  }
  write_index(index, idir);
  fsutil::write_file(idir / kMarker, index.tokenizer().fingerprint() + "\n");
  if (instruments != nullptr) instruments->index_builds.fetch_add(1);

  IndexHandle handle;
  handle.workspace = workspace;
  handle.index = std::make_shared<const InvertedIndex>(std::move(index));
  handle.docstore = std::make_shared<const DocStore>(sdir);
  handle.built = true;
  return handle;
}

IndexHandle open_index(const fs::path& workspace, Instruments* instruments) {
  const auto idir = index_dir(workspace);
  if (!fs::exists(idir / kMarker))
    throw Error(ErrorCode::kCorruptIndex, "no completion marker in " + idir.string());
  IndexHandle handle;
  handle.workspace = workspace;
  handle.index = std::make_shared<const InvertedIndex>(read_index(idir));
  handle.docstore = std::make_shared<const DocStore>(docstore_dir(workspace));
  if (handle.docstore->size() != handle.index->doc_count())
    throw Error(ErrorCode::kCorruptIndex, "doc store and index disagree in " + workspace.string());
  if (instruments != nullptr) instruments->index_opens.fetch_add(1);
  return handle;
}

IndexHandle open_or_build(const fs::path& workspace, const std::function<DocSource()>& open_corpus,
                          const TokenizerConfig& config, bool force_rebuild, Instruments* instruments) {
  const auto idir = index_dir(workspace);
  auto build = [&] {
    if (instruments != nullptr) instruments->corpus_reads.fetch_add(1);
    return build_index(open_corpus(), workspace, config, instruments);
  };
  if (force_rebuild || !fs::exists(idir)) return build();
  if (!fs::exists(idir / kMarker))
    throw Error(ErrorCode::kCorruptIndex,
                "index in " + idir.string() + " has no completion marker (interrupted build?)");
  json stats = read_stats(idir);
  auto stored = stats.value("fingerprint", std::string());
  if (stored != config.fingerprint())
    throw Error(ErrorCode::kFingerprintMismatch,
                "index in " + idir.string() + " was built with tokenizer " + stored + ", requested " +
                    config.fingerprint() + " (use --force-rebuild)");
  return open_index(workspace, instruments);
}

std::uint64_t release_workspace(const fs::path& workspace, bool persistent) {
  if (persistent) return 0;
  std::uint64_t bytes = fsutil::tree_bytes(workspace);
  std::error_code ec;
  fs::remove_all(workspace, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot remove " + workspace.string() + ": " + ec.message());
  return bytes;
}

}  // namespace suiteeval
