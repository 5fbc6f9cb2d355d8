#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "suiteeval/index.hpp"
#include "suiteeval/pipeline.hpp"
#include "suiteeval/registry.hpp"
#include "suiteeval/stats.hpp"

namespace suiteeval {

struct RunOptions {
  std::string suite_name;
  // Index into the systems list; that system is the significance baseline.
  std::optional<std::size_t> baseline;
  std::optional<std::filesystem::path> save_dir;
  // Persistent index root. Without it, workspaces live in a per-run temp
  // directory and each is deleted as soon as its corpus group finishes.
  std::optional<std::filesystem::path> index_dir;
  // Parent for the per-run temp directory; defaults to the system temp dir.
  std::optional<std::filesystem::path> temp_root;
  std::size_t threads = 1;
  Correction correction = Correction::kHolm;
  bool force_rebuild = false;
  TokenizerConfig tokenizer;
  // One line per corpus group; null for silence.
  std::function<void(const std::string&)> log;
};

struct DiskEvent {
  enum class Kind { kWritten, kFreed } kind;
  std::uint64_t bytes;
};

// Byte accounting for workspaces and run files over one suite run.
struct DiskLedger {
  struct Group {
    std::string corpus_id;
    std::size_t collections = 0;
    std::uint64_t bytes_written = 0;
    std::uint64_t bytes_freed = 0;
  };

  std::vector<Group> groups;
  std::uint64_t run_file_bytes = 0;
  std::uint64_t current = 0;
  std::uint64_t peak = 0;

  std::uint64_t max_group_bytes() const;
  std::uint64_t total_group_bytes() const;
  // Footprint if every test collection had built and kept its own index.
  std::uint64_t naive_bytes() const;
};

// Counter update; peak never decreases and current never goes below zero.
void track_disk(DiskLedger& ledger, DiskEvent event);

struct ResultRow {
  std::string dataset;
  std::string system;
  std::string measure;
  double value = 0.0;
  std::optional<double> t;
  std::optional<double> p;
  std::optional<double> p_adj;
  std::optional<std::size_t> n;

  bool operator==(const ResultRow&) const = default;
};

struct PerQueryValue {
  std::string dataset;
  std::string system;
  std::string measure;
  std::string qid;
  double value = 0.0;
};

struct CellError {
  std::string dataset;
  std::string system;
  std::string code;
  std::string message;
};

struct DatasetInfo {
  std::string dataset_id;
  std::string corpus_id;
  std::size_t topics = 0;
  std::size_t judged_queries = 0;
  std::size_t topics_without_judgements = 0;
  std::size_t qrels_duplicate_overrides = 0;
};

// Long-form results: one row per (dataset, system, measure), plus rows
// with dataset "ALL" holding the suite aggregate for every (system, measure)
// whose datasets all succeeded.
struct ResultsFrame {
  std::string suite;
  AggregateRule aggregation = AggregateRule::kArithmeticMean;
  std::optional<std::string> filter_hook;
  std::vector<std::string> measures;  // canonical renderings
  std::vector<PipelineSpec> systems;
  std::vector<DatasetInfo> datasets;
  std::optional<std::size_t> baseline;
  Correction correction = Correction::kHolm;
  TokenizerConfig tokenizer;

  std::vector<ResultRow> rows;  // sorted by (dataset, system, measure)
  std::vector<PerQueryValue> per_query;
  std::vector<CellError> errors;
  DiskLedger disk;
  std::size_t index_builds = 0;
  std::size_t index_opens = 0;

  // 0 when every cell succeeded, 2 otherwise.
  int exit_code() const { return errors.empty() ? 0 : 2; }
};

// Executes every system on every collection of the suite, one corpus group
// at a time. Throws on suite-fatal problems (unknown suite, validation
// failure, bad baseline, no systems); per-cell failures land in
// ResultsFrame::errors.
ResultsFrame run_suite(const RunOptions& options, const Registry& registry,
                       std::span<const PipelineSpec> systems, Instruments* instruments = nullptr);

ResultsFrame run_suite(const RunOptions& options, const std::filesystem::path& pipelines_path,
                       const std::filesystem::path& registry_path, Instruments* instruments = nullptr);

// "a/b" -> "a__b".
std::string sanitise_id(std::string_view id);

std::filesystem::path save_run_file(const Run& run, const std::filesystem::path& dir,
                                    std::string_view system_tag, std::string_view dataset_id);

// Metric, retrieval and statistics choices behind the numbers, as
// (name, description) pairs; printed at the top of every report.
std::vector<std::pair<std::string, std::string>> variant_decisions(const ResultsFrame& frame);

// Writes results.csv, per_query.tsv, errors.tsv and run_info.json to `dir`.
std::vector<std::filesystem::path> emit_results(const ResultsFrame& frame, const std::filesystem::path& dir);

std::string format_results_csv(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results_csv(std::string_view contents);

}  // namespace suiteeval
