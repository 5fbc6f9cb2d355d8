#include "suiteeval/data.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <nlohmann/json.hpp>

#include "suiteeval/binary_io.hpp"
#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace suiteeval {

namespace {

bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string malformed(const fs::path& path, std::size_t line, std::string_view what) {
  return path.string() + ":" + std::to_string(line) + ": " + std::string(what);
}

}  // namespace

std::string Doc::indexable_text() const {
  if (!title) return text;
  return *title + " " + text;
}

std::size_t Qrels::pair_count() const {
  std::size_t n = 0;
  for (const auto& [qid, docs] : judgements) n += docs.size();
  return n;
}

const std::map<std::string, int>* Qrels::for_query(const std::string& qid) const {
  auto it = judgements.find(qid);
  return it == judgements.end() ? nullptr : &it->second;
}

bool is_gzip_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  return in.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
}

// Line-oriented reader over a plain or gzip file. zlib reads uncompressed
// input transparently, so one implementation serves both.
class LineSource {
 public:
  explicit LineSource(const fs::path& path) : compressed_(is_gzip_file(path)) {
    file_ = gzopen(path.c_str(), "rb");
    if (file_ == nullptr) throw Error(ErrorCode::kMissingFile, path.string());
    gzbuffer(file_, 1 << 17);
  }
  ~LineSource() {
    if (file_ != nullptr) gzclose(file_);
  }
  LineSource(const LineSource&) = delete;
  LineSource& operator=(const LineSource&) = delete;

  bool getline(std::string& line) {
    line.clear();
    for (;;) {
      if (pos_ == len_) {
        if (eof_) return !line.empty();
        int n = gzread(file_, buf_, sizeof(buf_));
        if (n < 0) {
          int err = 0;
          throw Error(ErrorCode::kIoError, gzerror(file_, &err));
        }
        if (n == 0) {
          eof_ = true;
          return !line.empty();
        }
        len_ = static_cast<std::size_t>(n);
        pos_ = 0;
      }
      const char* start = buf_ + pos_;
      const char* nl = static_cast<const char*>(std::memchr(start, '\n', len_ - pos_));
      if (nl != nullptr) {
        line.append(start, nl);
        pos_ += static_cast<std::size_t>(nl - start) + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      line.append(start, len_ - pos_);
      pos_ = len_;
    }
  }

  bool compressed() const { return compressed_; }

 private:
  gzFile file_ = nullptr;
  char buf_[1 << 16];
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  bool eof_ = false;
  bool compressed_;
};

Doc parse_corpus_record(std::string_view line, std::size_t line_number) {
  auto fail = [&](std::string_view what) {
    return Error(ErrorCode::kMalformedRecord,
                 "line " + std::to_string(line_number) + ": " + std::string(what));
  };
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw fail("record is not a JSON object");
  Doc doc;
  auto docno = obj.find("docno");
  if (docno == obj.end() || !docno->is_string()) throw fail("missing string field \"docno\"");
  doc.docno = docno->get<std::string>();
  if (doc.docno.empty() || has_whitespace(doc.docno))
    throw fail("docno must be non-empty and contain no whitespace");
  auto text = obj.find("text");
  if (text == obj.end() || !text->is_string()) throw fail("missing string field \"text\"");
  doc.text = text->get<std::string>();
  auto title = obj.find("title");
  if (title != obj.end() && !title->is_null()) {
    if (!title->is_string()) throw fail("field \"title\" must be a string");
    doc.title = title->get<std::string>();
  }
  return doc;
}

CorpusReader::CorpusReader(const fs::path& path, bool check_duplicates)
    : path_(path), check_duplicates_(check_duplicates) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kMissingFile, path.string());
  source_ = std::make_unique<LineSource>(path);
}

CorpusReader::~CorpusReader() = default;
CorpusReader::CorpusReader(CorpusReader&&) noexcept = default;
CorpusReader& CorpusReader::operator=(CorpusReader&&) noexcept = default;

bool CorpusReader::compressed() const { return source_->compressed(); }

bool CorpusReader::next(Doc& doc) {
  std::string line;
  while (source_->getline(line)) {
    ++line_;
    if (trim(line).empty()) continue;
    try {
      doc = parse_corpus_record(line, line_);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedRecord, malformed(path_, line_, e.what()));
    }
    if (check_duplicates_ && !seen_.insert(doc.docno).second)
      throw Error(ErrorCode::kDuplicateDocno,
                  malformed(path_, line_, "duplicate docno " + doc.docno));
    return true;
  }
  return false;
}

std::vector<Topic> load_topics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::vector<Topic> topics;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw Error(ErrorCode::kMalformedRecord,
                  malformed(path, lineno, "expected exactly two tab-separated columns"));
    std::string_view qid(line.data(), tab);
    if (qid.empty() || has_whitespace(qid))
      throw Error(ErrorCode::kMalformedRecord,
                  malformed(path, lineno, "qid must be non-empty and contain no whitespace"));
    std::string_view query = trim(std::string_view(line).substr(tab + 1));
    if (query.empty())
      throw Error(ErrorCode::kEmptyQuery, malformed(path, lineno, "empty query"));
    if (!seen.emplace(qid).second)
      throw Error(ErrorCode::kDuplicateQid,
                  malformed(path, lineno, "duplicate qid " + std::string(qid)));
    topics.push_back({std::string(qid), std::string(query)});
  }
  return topics;
}

Qrels load_qrels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      rest = trim(rest);
      if (rest.empty()) break;
      auto end = std::find_if(rest.begin(), rest.end(),
                              [](unsigned char c) { return std::isspace(c) != 0; });
      auto len = static_cast<std::size_t>(end - rest.begin());
      fields.push_back(rest.substr(0, len));
      rest.remove_prefix(len);
    }
    if (fields.empty()) continue;
    if (fields.size() != 4)
      throw Error(ErrorCode::kMalformedRecord,
                  malformed(path, lineno, "expected 4 columns: qid iter docno grade"));
    int grade = 0;
    auto g = fields[3];
    auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), grade);
    if (ec != std::errc() || ptr != g.data() + g.size())
      throw Error(ErrorCode::kMalformedRecord,
                  malformed(path, lineno, "grade is not an integer: " + std::string(g)));
    auto& docs = qrels.judgements[std::string(fields[0])];
    auto [it, inserted] = docs.insert_or_assign(std::string(fields[2]), grade);
    if (!inserted) ++qrels.duplicate_overrides;
  }
  if (qrels.judgements.empty())
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": no judgements");
  return qrels;
}

// --- DocStore -------------------------------------------------------------

DocStoreWriter::DocStoreWriter(const fs::path& dir) : dir_(dir), log_(nullptr, &std::fclose) {
  fs::create_directories(dir_);
  log_.reset(std::fopen((dir_ / "records.log").c_str(), "wb"));
  if (!log_) throw Error(ErrorCode::kIoError, "cannot create " + (dir_ / "records.log").string());
}

DocStoreWriter::~DocStoreWriter() = default;

void DocStoreWriter::append(const Doc& doc) {
  std::string rec;
  rec.reserve(doc.docno.size() + doc.text.size() + 16);
  binio::put_bytes(rec, doc.docno);
  rec.push_back(doc.title ? 1 : 0);
  binio::put_bytes(rec, doc.title ? std::string_view(*doc.title) : std::string_view());
  binio::put_bytes(rec, doc.text);
  if (std::fwrite(rec.data(), 1, rec.size(), log_.get()) != rec.size())
    throw Error(ErrorCode::kIoError, "write failed: " + (dir_ / "records.log").string());
  offsets_.push_back(position_);
  position_ += rec.size();
}

void DocStoreWriter::finish() {
  if (finished_) return;
  finished_ = true;
  if (std::fflush(log_.get()) != 0)
    throw Error(ErrorCode::kIoError, "flush failed: " + (dir_ / "records.log").string());
  log_.reset();
  std::string table;
  table.reserve(8 * (offsets_.size() + 1));
  binio::put_u64(table, offsets_.size());
  for (auto off : offsets_) binio::put_u64(table, off);
  fsutil::write_file(dir_ / "offsets.bin", table);
}

DocStore::DocStore(const fs::path& dir) {
  const auto log_path = dir / "records.log";
  std::string table = fsutil::read_file(dir / "offsets.bin");
  fd_ = ::open(log_path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd_ < 0) throw Error(ErrorCode::kMissingFile, log_path.string());
  try {
    binio::Reader r(table);
    auto count = r.u64();
    sorted_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      auto off = r.u64();
      std::string docno;
      read_record(off, &docno);
      sorted_.emplace_back(std::move(docno), off);
    }
  } catch (const std::out_of_range&) {
    ::close(fd_);
    throw Error(ErrorCode::kCorruptIndex, "truncated doc store in " + dir.string());
  }
  std::sort(sorted_.begin(), sorted_.end());
}

DocStore::~DocStore() {
  if (fd_ >= 0) ::close(fd_);
}

StoredText DocStore::read_record(std::uint64_t offset, std::string* docno_out) const {
  auto pread_exact = [&](void* buf, std::size_t n, std::uint64_t at) {
    auto* p = static_cast<char*>(buf);
    while (n > 0) {
      auto got = ::pread(fd_, p, n, static_cast<off_t>(at));
      if (got <= 0) throw Error(ErrorCode::kCorruptIndex, "doc store read past end");
      p += got;
      n -= static_cast<std::size_t>(got);
      at += static_cast<std::uint64_t>(got);
    }
  };
  auto read_u32 = [&](std::uint64_t& at) {
    unsigned char b[4];
    pread_exact(b, 4, at);
    at += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  auto read_str = [&](std::uint64_t& at) {
    std::string s(read_u32(at), '\0');
    if (!s.empty()) pread_exact(s.data(), s.size(), at);
    at += s.size();
    return s;
  };
  std::uint64_t at = offset;
  std::string docno = read_str(at);
  unsigned char has_title = 0;
  pread_exact(&has_title, 1, at);
  at += 1;
  std::string title = read_str(at);
  StoredText out;
  if (docno_out != nullptr) {
    *docno_out = std::move(docno);
    return out;
  }
  out.text = read_str(at);
  if (has_title != 0) out.title = std::move(title);
  return out;
}

std::optional<std::uint64_t> DocStore::find(std::string_view docno) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), docno,
                             [](const auto& entry, std::string_view key) { return entry.first < key; });
  if (it == sorted_.end() || it->first != docno) return std::nullopt;
  return it->second;
}

bool DocStore::contains(std::string_view docno) const { return find(docno).has_value(); }

StoredText DocStore::lookup(std::string_view docno) const {
  lookups_.fetch_add(1, std::memory_order_relaxed);
  auto off = find(docno);
  if (!off) throw Error(ErrorCode::kUnknownDocno, std::string(docno));
  return read_record(*off, nullptr);
}

}  // namespace suiteeval
