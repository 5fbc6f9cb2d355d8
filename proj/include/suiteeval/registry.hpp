#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "suiteeval/eval.hpp"
#include "suiteeval/stats.hpp"

namespace suiteeval {

// Reserved dataset id for suite-level aggregate rows.
inline constexpr std::string_view kAggregateDatasetId = "ALL";

struct DatasetDescriptor {
  std::string dataset_id;
  std::string corpus_id;
  std::filesystem::path corpus_path;
  std::filesystem::path topics_path;
  std::filesystem::path qrels_path;

  bool operator==(const DatasetDescriptor&) const = default;
};

struct SuiteDef {
  std::string name;
  std::vector<DatasetDescriptor> datasets;
  std::vector<MeasureSpec> official_measures;
  AggregateRule aggregation = AggregateRule::kArithmeticMean;
  // Reserved: carried through to reports, no filter is applied.
  std::optional<std::string> filter_hook;

  bool operator==(const SuiteDef&) const = default;
};

struct SuiteMetadata {
  std::vector<std::string> official_measures;
  std::optional<AggregateRule> aggregation;  // arithmetic mean when unset
  std::optional<std::string> filter_hook;
};

// All collections of a suite that share one corpus: the unit of indexing.
struct CorpusGroup {
  std::string corpus_id;
  std::filesystem::path corpus_path;
  std::vector<DatasetDescriptor> collections;
};

// In-process suite registry. Populated once (programmatically or from a
// registry file) before execution and read-only afterwards. Registration
// never touches the filesystem.
class Registry {
 public:
  const SuiteDef& register_suite(std::string name, std::vector<DatasetDescriptor> datasets,
                                 const SuiteMetadata& metadata);

  const SuiteDef& suite(std::string_view name) const;
  const SuiteDef* find_suite(std::string_view name) const;
  const DatasetDescriptor& resolve_dataset(std::string_view dataset_id) const;

  std::size_t size() const { return suites_.size(); }
  // Registration order.
  const std::deque<SuiteDef>& suites() const { return suites_; }

 private:
  std::deque<SuiteDef> suites_;
};

// Registry file (JSON):
//   {"suites":[{"name":str,
//               "aggregation":"arithmetic_mean"|"geometric_mean",   (optional)
//               "official_measures":[str,...],
//               "filter_hook":str,                                   (optional)
//               "datasets":[{"dataset_id":str,"corpus_id":str,
//                            "corpus":path,"topics":path,"qrels":path},...]}]}
// Relative paths resolve against the registry file's directory. Files are
// not opened at load time.
std::vector<SuiteDef> load_registry(Registry& registry, const std::filesystem::path& path);
std::vector<SuiteDef> load_registry_text(Registry& registry, std::string_view json_text,
                                         const std::filesystem::path& base_dir,
                                         std::string_view source_name = "<registry>");

// Groups collections by corpus_id, in order of first appearance.
std::vector<CorpusGroup> group_by_corpus(const SuiteDef& suite);

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  // 0 clean, 2 warnings only, 1 any error.
  int exit_code() const;
};

// Full check: every file exists and parses, shared corpus_ids point at
// byte-identical corpora, and qrels docnos exist in the corpus.
ValidationReport validate_suite(const SuiteDef& suite);

// Cheap pre-run check: files exist, topics and qrels parse, shared corpus_ids
// point at byte-identical corpora. Corpora are not parsed.
ValidationReport precheck_suite(const SuiteDef& suite);

}  // namespace suiteeval
