#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "suiteeval/orchestrator.hpp"

namespace suiteeval {

enum class ReportFormat { kText, kMarkdown, kCsv };

ReportFormat parse_report_format(std::string_view s);

// Everything needed to lay out summary tables, either straight from a
// ResultsFrame or reloaded from a save directory.
struct ReportData {
  std::string suite;
  AggregateRule aggregation = AggregateRule::kArithmeticMean;
  std::vector<std::string> measures;
  std::vector<std::string> systems;
  std::vector<std::string> datasets;
  std::optional<std::string> baseline;
  std::vector<ResultRow> rows;
  std::vector<CellError> errors;
  std::vector<std::string> header;  // variant decisions, one per line
};

ReportData report_data(const ResultsFrame& frame);

// Reads results.csv, errors.tsv and run_info.json from `dir`. Only
// results.csv is mandatory; missing metadata is inferred from the rows.
ReportData load_report(const std::filesystem::path& dir);

// One table per measure: systems as rows, datasets plus the aggregate as
// columns. Values with p_adj < 0.05 against the baseline carry a dagger;
// failed cells show an em dash and are counted in a footnote. Markdown
// prints values at full precision, text at four decimals.
std::string render_report(const ReportData& data, ReportFormat format);

}  // namespace suiteeval
