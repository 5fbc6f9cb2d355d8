#include "suiteeval/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace suiteeval {

namespace {

constexpr std::string_view kDagger = "†";
constexpr std::string_view kDash = "—";

// Display width in code points; good enough for the glyphs used here.
std::size_t width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

std::string pad(std::string_view s, std::size_t w, bool right) {
  std::string fill(w > width(s) ? w - width(s) : 0, ' ');
  return right ? fill + std::string(s) : std::string(s) + fill;
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (s == "text") return ReportFormat::kText;
  if (s == "markdown") return ReportFormat::kMarkdown;
  if (s == "csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kInvalidArgument, "unknown report format '" + std::string(s) + "'");
}

ReportData report_data(const ResultsFrame& frame) {
  ReportData d;
  d.suite = frame.suite;
  d.aggregation = frame.aggregation;
  d.measures = frame.measures;
  for (const auto& s : frame.systems) d.systems.push_back(s.system_tag);
  for (const auto& ds : frame.datasets) d.datasets.push_back(ds.dataset_id);
  if (frame.baseline) d.baseline = frame.systems[*frame.baseline].system_tag;
  d.rows = frame.rows;
  d.errors = frame.errors;
  for (const auto& [name, value] : variant_decisions(frame)) d.header.push_back(name + ": " + value);
  return d;
}

ReportData load_report(const fs::path& dir) {
  ReportData d;
  d.rows = parse_results_csv(fsutil::read_file(dir / "results.csv"));

  const auto info_path = dir / "run_info.json";
  if (fs::exists(info_path)) {
    json info;
    try {
      info = json::parse(fsutil::read_file(info_path));
      d.suite = info.value("suite", "");
      d.aggregation = parse_aggregate_rule(info.value("aggregation", "arithmetic_mean"));
      for (const auto& m : info.at("measures")) d.measures.push_back(m.get<std::string>());
      for (const auto& s : info.at("systems")) d.systems.push_back(s.at("tag").get<std::string>());
      for (const auto& ds : info.at("datasets")) d.datasets.push_back(ds.at("dataset_id").get<std::string>());
      if (info.contains("baseline") && info["baseline"].is_string()) d.baseline = info["baseline"].get<std::string>();
      if (info.contains("variants"))
        for (const auto& [k, v] : info["variants"].items()) d.header.push_back(k + ": " + v.get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, info_path.string() + ": " + e.what());
    }
  }

  const auto errors_path = dir / "errors.tsv";
  if (fs::exists(errors_path)) {
    std::istringstream in(fsutil::read_file(errors_path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      CellError e;
      std::istringstream fields(line);
      std::getline(fields, e.dataset, '\t');
      std::getline(fields, e.system, '\t');
      std::getline(fields, e.code, '\t');
      std::getline(fields, e.message);
      d.errors.push_back(std::move(e));
    }
  }

  // Without run_info.json, take layout from the rows in first-seen order.
  if (!fs::exists(info_path)) {
    for (const auto& r : d.rows) {
      push_unique(d.measures, r.measure);
      push_unique(d.systems, r.system);
      if (r.dataset != kAggregateDatasetId) push_unique(d.datasets, r.dataset);
    }
  }
  return d;
}

std::string render_report(const ReportData& data, ReportFormat format) {
  if (format == ReportFormat::kCsv) return format_results_csv(data.rows);

  std::map<std::tuple<std::string, std::string, std::string>, const ResultRow*> by_key;
  for (const auto& r : data.rows) by_key[{r.dataset, r.system, r.measure}] = &r;
  std::set<std::pair<std::string, std::string>> failed;
  for (const auto& e : data.errors) failed.insert({e.dataset, e.system});

  const bool md = format == ReportFormat::kMarkdown;
  const std::string agg_label(label(data.aggregation));
  std::string out;

  if (md) {
    out += fmt::format("# {}\n\n", data.suite.empty() ? "results" : data.suite);
    for (const auto& h : data.header) out += "- " + h + "\n";
    if (!data.header.empty()) out += "\n";
  } else {
    out += fmt::format("suite: {}\n", data.suite.empty() ? "-" : data.suite);
    for (const auto& h : data.header) out += "  " + h + "\n";
    out += "\n";
  }

  for (const auto& measure : data.measures) {
    std::vector<std::string> columns{"system"};
    for (const auto& ds : data.datasets) columns.push_back(ds);
    columns.push_back(agg_label);

    std::size_t failed_cells = 0;
    bool any_dagger = false;
    std::vector<std::vector<std::string>> table;
    for (const auto& sys : data.systems) {
      std::vector<std::string> line{data.baseline && *data.baseline == sys ? sys + " (baseline)" : sys};
      for (const auto& ds : data.datasets) {
        auto it = by_key.find({ds, sys, measure});
        if (it == by_key.end()) {
          if (failed.count({ds, sys})) ++failed_cells;
          line.emplace_back(kDash);
          continue;
        }
        const auto& row = *it->second;
        std::string cell = md ? format_double(row.value) : fmt::format("{:.4f}", row.value);
        if (row.p_adj && *row.p_adj < 0.05) {
          cell += kDagger;
          any_dagger = true;
        }
        line.push_back(std::move(cell));
      }
      auto agg = by_key.find({std::string(kAggregateDatasetId), sys, measure});
      if (agg == by_key.end()) {
        line.emplace_back(kDash);
      } else {
        line.push_back(md ? format_double(agg->second->value) : fmt::format("{:.4f}", agg->second->value));
      }
      table.push_back(std::move(line));
    }

    if (md) {
      out += fmt::format("## {}\n\n", measure);
      out += "|";
      for (const auto& c : columns) out += " " + c + " |";
      out += "\n|";
      for (std::size_t i = 0; i < columns.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
      out += "\n";
      for (const auto& line : table) {
        out += "|";
        for (const auto& c : line) out += " " + c + " |";
        out += "\n";
      }
      out += "\n";
    } else {
      std::vector<std::size_t> w(columns.size());
      for (std::size_t i = 0; i < columns.size(); ++i) {
        w[i] = width(columns[i]);
        for (const auto& line : table) w[i] = std::max(w[i], width(line[i]));
      }
      out += measure + "\n";
      for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "  " : "") + pad(columns[i], w[i], i > 0);
      out += "\n";
      for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "  " : "") + std::string(w[i], '-');
      out += "\n";
      for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) out += (i ? "  " : "") + pad(line[i], w[i], i > 0);
        out += "\n";
      }
    }
    if (any_dagger && data.baseline)
      out += fmt::format("{} p_adj < 0.05 against {}\n", kDagger, *data.baseline);
    if (failed_cells > 0)
      out += fmt::format("{} {} failed cell{}; see errors.tsv\n", kDash, failed_cells, failed_cells == 1 ? "" : "s");
    out += "\n";
  }
  return out;
}

}  // namespace suiteeval
