#include "suiteeval/registry.hpp"

#include <fmt/format.h>

#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_map>

#include "suiteeval/data.hpp"
#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace suiteeval {

const SuiteDef& Registry::register_suite(std::string name, std::vector<DatasetDescriptor> datasets,
                                         const SuiteMetadata& metadata) {
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "suite name is empty");
  if (find_suite(name) != nullptr) throw Error(ErrorCode::kDuplicateSuiteName, name);
  if (datasets.empty()) throw Error(ErrorCode::kEmptyDatasetList, name);
  if (metadata.official_measures.empty())
    throw Error(ErrorCode::kUnparseableMeasure, "suite " + name + " declares no official measures");

  SuiteDef def;
  def.name = std::move(name);
  def.official_measures = parse_measures(metadata.official_measures);
  def.aggregation = metadata.aggregation.value_or(AggregateRule::kArithmeticMean);
  def.filter_hook = metadata.filter_hook;

  std::set<std::string> ids;
  for (auto& d : datasets) {
    if (d.dataset_id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty dataset_id in " + def.name);
    if (d.dataset_id == kAggregateDatasetId)
      throw Error(ErrorCode::kInvalidArgument, "dataset_id \"ALL\" is reserved for aggregate rows");
    if (d.corpus_id.empty())
      throw Error(ErrorCode::kInvalidArgument, "empty corpus_id for " + d.dataset_id);
    if (!ids.insert(d.dataset_id).second)
      throw Error(ErrorCode::kInvalidArgument, "dataset " + d.dataset_id + " listed twice in " + def.name);
    for (const auto& other : suites_) {
      for (const auto& od : other.datasets) {
        if (od.dataset_id == d.dataset_id && !(od == d))
          throw Error(ErrorCode::kInvalidArgument,
                      "dataset " + d.dataset_id + " conflicts with its definition in suite " + other.name);
      }
    }
  }
  def.datasets = std::move(datasets);
  suites_.push_back(std::move(def));
  return suites_.back();
}

const SuiteDef* Registry::find_suite(std::string_view name) const {
  for (const auto& s : suites_)
    if (s.name == name) return &s;
  return nullptr;
}

const SuiteDef& Registry::suite(std::string_view name) const {
  if (const auto* s = find_suite(name)) return *s;
  throw Error(ErrorCode::kUnknownSuite, std::string(name));
}

const DatasetDescriptor& Registry::resolve_dataset(std::string_view dataset_id) const {
  for (const auto& s : suites_)
    for (const auto& d : s.datasets)
      if (d.dataset_id == dataset_id) return d;
  throw Error(ErrorCode::kUnknownDatasetId, "\"" + std::string(dataset_id) + "\"");
}

namespace {

class JsonPath {
 public:
  explicit JsonPath(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw Error(ErrorCode::kParseError, fmt::format("{}: {}: {}", source_, where, what));
  }

  const json& field(const json& obj, const std::string& where, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(where, fmt::format("missing field \"{}\"", key));
    return *it;
  }

  std::string string_field(const json& obj, const std::string& where, const char* key) const {
    const auto& v = field(obj, where, key);
    if (!v.is_string()) fail(where + "." + key, "expected a string");
    return v.get<std::string>();
  }

  void reject_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, _] : obj.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(where, "unknown field \"" + k + "\"");
    }
  }

 private:
  std::string source_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

std::vector<SuiteDef> load_registry_text(Registry& registry, std::string_view json_text,
                                         const fs::path& base_dir, std::string_view source_name) {
  JsonPath ctx(source_name);
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) return {};
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: {}", source_name, e.what()));
  }
  if (!doc.is_object()) ctx.fail("$", "expected an object");
  ctx.reject_unknown(doc, "$", {"suites"});
  const auto& suites = ctx.field(doc, "$", "suites");
  if (!suites.is_array()) ctx.fail("$.suites", "expected an array");

  std::vector<SuiteDef> loaded;
  for (std::size_t i = 0; i < suites.size(); ++i) {
    const auto where = fmt::format("suites[{}]", i);
    const auto& s = suites[i];
    if (!s.is_object()) ctx.fail(where, "expected an object");
    ctx.reject_unknown(s, where, {"name", "aggregation", "official_measures", "datasets", "filter_hook"});

    SuiteMetadata meta;
    auto name = ctx.string_field(s, where, "name");
    if (s.contains("aggregation")) {
      const auto& agg = s["aggregation"];
      if (!agg.is_string()) ctx.fail(where + ".aggregation", "expected a string");
      try {
        meta.aggregation = parse_aggregate_rule(agg.get<std::string>());
      } catch (const Error& e) {
        ctx.fail(where + ".aggregation", e.what());
      }
    }
    if (s.contains("filter_hook")) meta.filter_hook = ctx.string_field(s, where, "filter_hook");
    const auto& measures = ctx.field(s, where, "official_measures");
    if (!measures.is_array()) ctx.fail(where + ".official_measures", "expected an array");
    for (std::size_t m = 0; m < measures.size(); ++m) {
      if (!measures[m].is_string()) ctx.fail(fmt::format("{}.official_measures[{}]", where, m), "expected a string");
      meta.official_measures.push_back(measures[m].get<std::string>());
    }

    const auto& datasets = ctx.field(s, where, "datasets");
    if (!datasets.is_array()) ctx.fail(where + ".datasets", "expected an array");
    std::vector<DatasetDescriptor> descs;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto dwhere = fmt::format("{}.datasets[{}]", where, d);
      const auto& ds = datasets[d];
      if (!ds.is_object()) ctx.fail(dwhere, "expected an object");
      ctx.reject_unknown(ds, dwhere, {"dataset_id", "corpus_id", "corpus", "topics", "qrels"});
      DatasetDescriptor desc;
      desc.dataset_id = ctx.string_field(ds, dwhere, "dataset_id");
      desc.corpus_id = ctx.string_field(ds, dwhere, "corpus_id");
      desc.corpus_path = resolve(base_dir, ctx.string_field(ds, dwhere, "corpus"));
      desc.topics_path = resolve(base_dir, ctx.string_field(ds, dwhere, "topics"));
      desc.qrels_path = resolve(base_dir, ctx.string_field(ds, dwhere, "qrels"));
      descs.push_back(std::move(desc));
    }
    try {
      loaded.push_back(registry.register_suite(std::move(name), std::move(descs), meta));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDuplicateSuiteName) throw;
      throw Error(e.code() == ErrorCode::kUnparseableMeasure ? ErrorCode::kUnparseableMeasure : ErrorCode::kParseError,
                  fmt::format("{}: {}: {}", source_name, where, e.what()));
    }
  }
  return loaded;
}

std::vector<SuiteDef> load_registry(Registry& registry, const fs::path& path) {
  std::string text;
  try {
    text = fsutil::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kMissingFile, "registry " + path.string());
  }
  return load_registry_text(registry, text, path.parent_path(), path.string());
}

std::vector<CorpusGroup> group_by_corpus(const SuiteDef& suite) {
  std::vector<CorpusGroup> groups;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& d : suite.datasets) {
    auto [it, fresh] = slot.emplace(d.corpus_id, groups.size());
    if (fresh) groups.push_back({d.corpus_id, d.corpus_path, {}});
    groups[it->second].collections.push_back(d);
  }
  return groups;
}

int ValidationReport::exit_code() const {
  if (!errors.empty()) return 1;
  if (!warnings.empty()) return 2;
  return 0;
}

namespace {

void check_corpus_consistency(const SuiteDef& suite, ValidationReport& report) {
  std::map<std::string, fs::path> first_path;
  for (const auto& d : suite.datasets) {
    auto [it, fresh] = first_path.emplace(d.corpus_id, d.corpus_path);
    if (fresh || it->second == d.corpus_path) continue;
    if (!fs::exists(it->second) || !fs::exists(d.corpus_path)) continue;
    if (!fsutil::files_identical(it->second, d.corpus_path))
      report.errors.push_back(fmt::format("corpus_id {}: {} and {} differ", d.corpus_id, it->second.string(),
                                          d.corpus_path.string()));
  }
}

bool check_exists(const fs::path& p, const std::string& what, const DatasetDescriptor& d,
                  ValidationReport& report) {
  if (fs::is_regular_file(p)) return true;
  report.errors.push_back(fmt::format("{}: {} file not found: {}", d.dataset_id, what, p.string()));
  return false;
}

}  // namespace

ValidationReport precheck_suite(const SuiteDef& suite) {
  ValidationReport report;
  for (const auto& d : suite.datasets) {
    check_exists(d.corpus_path, "corpus", d, report);
    if (check_exists(d.topics_path, "topics", d, report)) {
      try {
        load_topics(d.topics_path);
      } catch (const Error& e) {
        report.errors.push_back(d.dataset_id + ": " + e.what());
      }
    }
    if (check_exists(d.qrels_path, "qrels", d, report)) {
      try {
        load_qrels(d.qrels_path);
      } catch (const Error& e) {
        report.errors.push_back(d.dataset_id + ": " + e.what());
      }
    }
  }
  check_corpus_consistency(suite, report);
  return report;
}

ValidationReport validate_suite(const SuiteDef& suite) {
  ValidationReport report;
  check_corpus_consistency(suite, report);

  // Each distinct corpus file is parsed once.
  std::map<fs::path, std::optional<std::set<std::string>>> corpus_docnos;
  for (const auto& d : suite.datasets) {
    if (corpus_docnos.count(d.corpus_path)) continue;
    auto& slot = corpus_docnos[d.corpus_path];
    if (!check_exists(d.corpus_path, "corpus", d, report)) continue;
    try {
      CorpusReader reader(d.corpus_path);
      std::set<std::string> docnos;
      Doc doc;
      while (reader.next(doc)) docnos.insert(doc.docno);
      if (docnos.empty()) {
        report.errors.push_back(d.dataset_id + ": corpus is empty: " + d.corpus_path.string());
      }
      slot = std::move(docnos);
    } catch (const Error& e) {
      report.errors.push_back(d.dataset_id + ": " + e.what());
    }
  }

  for (const auto& d : suite.datasets) {
    std::optional<std::vector<Topic>> topics;
    if (check_exists(d.topics_path, "topics", d, report)) {
      try {
        topics = load_topics(d.topics_path);
      } catch (const Error& e) {
        report.errors.push_back(d.dataset_id + ": " + e.what());
      }
    }
    if (!check_exists(d.qrels_path, "qrels", d, report)) continue;
    Qrels qrels;
    try {
      qrels = load_qrels(d.qrels_path);
    } catch (const Error& e) {
      report.errors.push_back(d.dataset_id + ": " + e.what());
      continue;
    }
    if (qrels.duplicate_overrides > 0)
      report.warnings.push_back(fmt::format("{}: {} duplicate qrels lines overrode earlier grades", d.dataset_id,
                                            qrels.duplicate_overrides));
    if (topics) {
      std::set<std::string> qids;
      for (const auto& t : *topics) qids.insert(t.qid);
      std::size_t missing = 0;
      for (const auto& [qid, _] : qrels.judgements)
        if (!qids.count(qid)) ++missing;
      if (missing > 0)
        report.warnings.push_back(
            fmt::format("{}: {} judged queries have no topic and will score 0", d.dataset_id, missing));
    }
    const auto& docnos = corpus_docnos[d.corpus_path];
    if (docnos) {
      std::size_t missing = 0;
      for (const auto& [qid, docs] : qrels.judgements)
        for (const auto& [docno, _] : docs)
          if (!docnos->count(docno)) ++missing;
      if (missing > 0)
        report.warnings.push_back(
            fmt::format("{}: {} qrels entries reference docnos absent from the corpus", d.dataset_id, missing));
    }
  }
  return report;
}

}  // namespace suiteeval
