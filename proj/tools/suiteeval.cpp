// suiteeval: run registered retrieval benchmark suites and report on them.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <set>

#include "suiteeval/error.hpp"
#include "suiteeval/orchestrator.hpp"
#include "suiteeval/registry.hpp"
#include "suiteeval/report.hpp"

namespace fs = std::filesystem;
using namespace suiteeval;

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitFatal = 1;

struct Flags {
  std::string suite;
  std::string registry;
  std::string pipelines;
  std::optional<std::size_t> baseline;
  std::string save_dir;
  std::string index_dir;
  std::size_t threads = 1;
  std::string correction = "holm";
  bool force_rebuild = false;
  std::string format = "text";
};

int cmd_run(const Flags& f) {
  RunOptions options;
  options.suite_name = f.suite;
  options.baseline = f.baseline;
  if (!f.save_dir.empty()) options.save_dir = f.save_dir;
  if (!f.index_dir.empty()) options.index_dir = f.index_dir;
  options.threads = f.threads;
  options.correction = parse_correction(f.correction);
  options.force_rebuild = f.force_rebuild;
  options.log = [](const std::string& line) { std::cerr << line << '\n'; };

  auto frame = run_suite(options, f.pipelines, f.registry);
  if (options.save_dir) emit_results(frame, *options.save_dir);
  std::cout << render_report(report_data(frame), parse_report_format(f.format));
  for (const auto& e : frame.errors)
    std::cerr << fmt::format("error: {} / {}: {}: {}\n", e.dataset, e.system, e.code, e.message);
  return frame.exit_code();
}

int cmd_list_suites(const Flags& f) {
  Registry registry;
  load_registry(registry, f.registry);
  for (const auto& s : registry.suites()) {
    std::set<std::string> corpora;
    for (const auto& d : s.datasets) corpora.insert(d.corpus_id);
    std::string measures;
    for (const auto& m : s.official_measures) measures += (measures.empty() ? "" : ",") + m.render();
    std::cout << fmt::format("{}\t{} datasets\t{} corpora\t{}\t{}\n", s.name, s.datasets.size(), corpora.size(),
                             measures, label(s.aggregation));
  }
  return 0;
}

int cmd_validate(const Flags& f) {
  Registry registry;
  load_registry(registry, f.registry);
  auto report = validate_suite(registry.suite(f.suite));
  for (const auto& w : report.warnings) std::cout << "warning: " << w << '\n';
  for (const auto& e : report.errors) std::cout << "error: " << e << '\n';
  std::cout << fmt::format("{}: {} error(s), {} warning(s)\n", f.suite, report.errors.size(),
                           report.warnings.size());
  return report.exit_code();
}

int cmd_report(const Flags& f) {
  auto data = load_report(f.save_dir);
  std::cout << render_report(data, parse_report_format(f.format));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run and report retrieval benchmark suites"};
  app.require_subcommand(1);
  Flags f;

  const std::vector<std::string> corrections{"none", "bonferroni", "holm"};
  const std::vector<std::string> formats{"text", "markdown", "csv"};

  auto* run = app.add_subcommand("run", "Execute every system on every collection of a suite");
  run->add_option("--suite", f.suite, "Registered suite name")->required();
  run->add_option("--registry", f.registry, "Registry JSON file")->required();
  run->add_option("--pipelines", f.pipelines, "Pipelines JSON file")->required();
  run->add_option("--baseline", f.baseline, "Index of the baseline system");
  run->add_option("--save-dir", f.save_dir, "Directory for results and run files");
  run->add_option("--index-dir", f.index_dir, "Persistent index root; reused across runs");
  run->add_option("--threads", f.threads, "Worker threads per corpus group")->check(CLI::PositiveNumber);
  run->add_option("--correction", f.correction, "Multiple-comparison correction")
      ->check(CLI::IsMember(corrections));
  run->add_flag("--force-rebuild", f.force_rebuild, "Rebuild indexes even if present");
  run->add_option("--format", f.format, "Summary format")->check(CLI::IsMember(formats));

  auto* list = app.add_subcommand("list-suites", "List registered suites");
  list->add_option("--registry", f.registry, "Registry JSON file")->required();

  auto* validate = app.add_subcommand("validate", "Check a suite's files");
  validate->add_option("--suite", f.suite, "Registered suite name")->required();
  validate->add_option("--registry", f.registry, "Registry JSON file")->required();

  auto* report = app.add_subcommand("report", "Render tables from a save directory");
  report->add_option("--save-dir", f.save_dir, "Directory written by run")->required();
  report->add_option("--format", f.format, "Output format")->check(CLI::IsMember(formats));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(f);
    if (list->parsed()) return cmd_list_suites(f);
    if (validate->parsed()) return cmd_validate(f);
    if (report->parsed()) return cmd_report(f);
  } catch (const std::exception& e) {
    std::cerr << "suiteeval: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitUsage;
}
