#include "suiteeval/orchestrator.hpp"

#include <fmt/format.h>
#include <stdlib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace suiteeval {

// --- disk accounting -------------------------------------------------------

void track_disk(DiskLedger& ledger, DiskEvent event) {
  if (event.kind == DiskEvent::Kind::kWritten) {
    ledger.current += event.bytes;
  } else {
    ledger.current -= std::min(ledger.current, event.bytes);
  }
  ledger.peak = std::max(ledger.peak, ledger.current);
}

std::uint64_t DiskLedger::max_group_bytes() const {
  std::uint64_t m = 0;
  for (const auto& g : groups) m = std::max(m, g.bytes_written);
  return m;
}

std::uint64_t DiskLedger::total_group_bytes() const {
  std::uint64_t s = 0;
  for (const auto& g : groups) s += g.bytes_written;
  return s;
}

std::uint64_t DiskLedger::naive_bytes() const {
  std::uint64_t s = 0;
  for (const auto& g : groups) s += g.bytes_written * g.collections;
  return s + run_file_bytes;
}

// --- run files -------------------------------------------------------------

std::string sanitise_id(std::string_view id) {
  std::string out;
  for (char c : id) {
    if (c == '/') {
      out += "__";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

fs::path save_run_file(const Run& run, const fs::path& dir, std::string_view system_tag,
                       std::string_view dataset_id) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  auto path = dir / fmt::format("{}__{}.run", sanitise_id(dataset_id), system_tag);
  fsutil::write_file(path, format_run(run, system_tag));
  return path;
}

// --- CSV -------------------------------------------------------------------

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<double> parse_opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::string format_results_csv(std::span<const ResultRow> rows) {
  std::string out = "dataset,system,measure,value,t,p,p_adj,n\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(r.dataset), csv_field(r.system),
                       csv_field(r.measure), format_double(r.value), opt_double(r.t), opt_double(r.p),
                       opt_double(r.p_adj), r.n ? std::to_string(*r.n) : std::string());
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view contents) {
  auto table = parse_csv(contents);
  if (table.empty() || table.front() != std::vector<std::string>{"dataset", "system", "measure", "value", "t", "p",
                                                                  "p_adj", "n"})
    throw Error(ErrorCode::kParseError, "results CSV: unexpected header");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 8) throw Error(ErrorCode::kParseError, fmt::format("results CSV line {}: expected 8 fields", i + 1));
    try {
      ResultRow r;
      r.dataset = f[0];
      r.system = f[1];
      r.measure = f[2];
      r.value = std::stod(f[3]);
      r.t = parse_opt_double(f[4]);
      r.p = parse_opt_double(f[5]);
      r.p_adj = parse_opt_double(f[6]);
      if (!f[7].empty()) r.n = static_cast<std::size_t>(std::stoull(f[7]));
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParseError, fmt::format("results CSV line {}: bad number", i + 1));
    }
  }
  return rows;
}

// --- suite execution -------------------------------------------------------

namespace {

// Per-run temp directory, removed on scope exit whatever happens.
class TempRoot {
 public:
  explicit TempRoot(const fs::path& parent) {
    fs::create_directories(parent);
    std::string tmpl = (parent / "suiteeval-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr)
      throw Error(ErrorCode::kIoError, "cannot create temp workspace under " + parent.string());
    path_ = tmpl;
  }
  ~TempRoot() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempRoot(const TempRoot&) = delete;
  TempRoot& operator=(const TempRoot&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct CellOutcome {
  std::optional<Run> run;
  std::optional<PerQueryScores> scores;
  std::optional<CellError> error;
};

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// written to its own slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::string error_code_name(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
  return "Exception";
}

void log_line(const RunOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

}  // namespace

ResultsFrame run_suite(const RunOptions& options, const Registry& registry, std::span<const PipelineSpec> systems,
                       Instruments* instruments) {
  const SuiteDef& suite = registry.suite(options.suite_name);
  if (systems.empty()) throw Error(ErrorCode::kEmptyPipelineSet, "no systems defined");
  if (options.baseline && *options.baseline >= systems.size())
    throw Error(ErrorCode::kInvalidArgument, fmt::format("baseline {} out of range: {} systems defined",
                                                         *options.baseline, systems.size()));
  if (options.threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
  {
    auto check = precheck_suite(suite);
    if (!check.errors.empty()) {
      std::string msg = "suite " + suite.name + " failed validation:";
      for (const auto& e : check.errors) msg += "\n  " + e;
      throw Error(ErrorCode::kInvalidArgument, msg);
    }
  }

  Instruments local_instruments;
  Instruments* inst = instruments != nullptr ? instruments : &local_instruments;
  const std::size_t builds_before = inst->index_builds.load();
  const std::size_t opens_before = inst->index_opens.load();

  ResultsFrame frame;
  frame.suite = suite.name;
  frame.aggregation = suite.aggregation;
  frame.filter_hook = suite.filter_hook;
  for (const auto& m : suite.official_measures) frame.measures.push_back(m.render());
  frame.systems.assign(systems.begin(), systems.end());
  frame.baseline = options.baseline;
  frame.correction = options.correction;
  frame.tokenizer = options.tokenizer;

  const bool persistent = options.index_dir.has_value();
  std::optional<TempRoot> temp;
  fs::path root;
  if (persistent) {
    root = *options.index_dir;
    fs::create_directories(root);
  } else {
    temp.emplace(options.temp_root.value_or(fs::temp_directory_path()));
    root = temp->path();
  }

  const auto groups = group_by_corpus(suite);
  {
    std::set<std::string> names;
    for (const auto& g : groups)
      if (!names.insert(sanitise_id(g.corpus_id)).second)
        throw Error(ErrorCode::kInvalidArgument, "corpus ids collide after sanitising: " + g.corpus_id);
  }

  // (dataset, system index) -> per-query scores, for significance testing.
  std::map<std::pair<std::string, std::size_t>, PerQueryScores> cell_scores;

  for (const auto& group : groups) {
    const fs::path workspace = root / sanitise_id(group.corpus_id);
    DiskLedger::Group usage;
    usage.corpus_id = group.corpus_id;
    usage.collections = group.collections.size();

    std::optional<DatasetContext> context;
    context.emplace(group, workspace, DatasetContext::Options{options.tokenizer, options.force_rebuild}, inst);
    std::vector<ExecutablePipeline> pipelines;
    std::optional<std::string> group_failure_code, group_failure;
    try {
      pipelines = instantiate_pipelines(systems, *context, inst);
    } catch (const std::exception& e) {
      group_failure_code = error_code_name(e);
      group_failure = e.what();
    }
    usage.bytes_written = fsutil::tree_bytes(workspace);
    track_disk(frame.disk, {DiskEvent::Kind::kWritten, usage.bytes_written});
    log_line(options, fmt::format("[{}] corpus {}: {} collection(s), index {} ({} bytes)", suite.name,
                                  group.corpus_id, group.collections.size(),
                                  group_failure ? "failed" : (context->index().built ? "built" : "reused"),
                                  usage.bytes_written));

    struct CollectionInput {
      std::vector<Topic> topics;
      Qrels qrels;
    };
    std::vector<CollectionInput> inputs;
    for (const auto& coll : group.collections) {
      CollectionInput in{load_topics(coll.topics_path), load_qrels(coll.qrels_path)};
      DatasetInfo info;
      info.dataset_id = coll.dataset_id;
      info.corpus_id = coll.corpus_id;
      info.topics = in.topics.size();
      info.judged_queries = in.qrels.judgements.size();
      info.qrels_duplicate_overrides = in.qrels.duplicate_overrides;
      for (const auto& t : in.topics)
        if (!in.qrels.judgements.count(t.qid)) ++info.topics_without_judgements;
      frame.datasets.push_back(info);
      inputs.push_back(std::move(in));
    }

    const std::size_t n_cells = group.collections.size() * systems.size();
    std::vector<CellOutcome> outcomes(n_cells);
    if (group_failure) {
      for (std::size_t i = 0; i < n_cells; ++i) {
        const auto& coll = group.collections[i / systems.size()];
        outcomes[i].error = CellError{coll.dataset_id, systems[i % systems.size()].system_tag, *group_failure_code,
                                      *group_failure};
      }
    } else {
      parallel_for(n_cells, options.threads, [&](std::size_t i) {
        const std::size_t c = i / systems.size();
        const std::size_t s = i % systems.size();
        auto& out = outcomes[i];
        try {
          Run run = pipelines[s].execute(inputs[c].topics);
          out.scores = evaluate_run(run, inputs[c].qrels, suite.official_measures);
          out.run = std::move(run);
        } catch (const std::exception& e) {
          out.error = CellError{group.collections[c].dataset_id, systems[s].system_tag, error_code_name(e), e.what()};
        }
      });
    }

    // Serialised collection in (collection, system) order.
    for (std::size_t i = 0; i < n_cells; ++i) {
      const std::size_t c = i / systems.size();
      const std::size_t s = i % systems.size();
      const auto& dataset_id = group.collections[c].dataset_id;
      auto& out = outcomes[i];
      if (out.error) {
        frame.errors.push_back(*out.error);
        continue;
      }
      if (options.save_dir) {
        try {
          auto path = save_run_file(*out.run, *options.save_dir, systems[s].system_tag, dataset_id);
          auto bytes = fs::file_size(path);
          frame.disk.run_file_bytes += bytes;
          track_disk(frame.disk, {DiskEvent::Kind::kWritten, bytes});
        } catch (const std::exception& e) {
          frame.errors.push_back({dataset_id, systems[s].system_tag, error_code_name(e), e.what()});
          continue;
        }
      }
      const auto& scores = *out.scores;
      for (std::size_t m = 0; m < scores.measures.size(); ++m) {
        const auto measure = scores.measures[m].render();
        std::vector<double> values;
        for (const auto& [qid, v] : scores.values[m]) {
          frame.per_query.push_back({dataset_id, systems[s].system_tag, measure, qid, v});
          values.push_back(v);
        }
        ResultRow row{dataset_id, systems[s].system_tag, measure, 0.0, {}, {}, {}, {}};
        row.value = values.empty() ? 0.0 : dataset_score(values);
        frame.rows.push_back(std::move(row));
      }
      cell_scores.emplace(std::make_pair(dataset_id, s), std::move(*out.scores));
    }

    // Workspace may have grown while pipelines ran.
    const auto final_bytes = fsutil::tree_bytes(workspace);
    if (final_bytes > usage.bytes_written) {
      track_disk(frame.disk, {DiskEvent::Kind::kWritten, final_bytes - usage.bytes_written});
      usage.bytes_written = final_bytes;
    }
    pipelines.clear();
    context.reset();
    try {
      usage.bytes_freed = release_workspace(workspace, persistent);
      track_disk(frame.disk, {DiskEvent::Kind::kFreed, usage.bytes_freed});
    } catch (const std::exception& e) {
      frame.errors.push_back({"corpus:" + group.corpus_id, "-", error_code_name(e), e.what()});
    }
    frame.disk.groups.push_back(usage);
  }

  // Significance against the baseline, corrected within (dataset, measure).
  if (options.baseline) {
    const std::size_t base = *options.baseline;
    for (const auto& coll : suite.datasets) {
      auto base_it = cell_scores.find({coll.dataset_id, base});
      if (base_it == cell_scores.end()) continue;
      for (std::size_t m = 0; m < suite.official_measures.size(); ++m) {
        const auto measure = suite.official_measures[m].render();
        std::vector<ResultRow*> tested;
        std::vector<double> pvals;
        for (std::size_t s = 0; s < systems.size(); ++s) {
          if (s == base) continue;
          auto sys_it = cell_scores.find({coll.dataset_id, s});
          if (sys_it == cell_scores.end()) continue;
          auto row = std::find_if(frame.rows.begin(), frame.rows.end(), [&](const ResultRow& r) {
            return r.dataset == coll.dataset_id && r.system == systems[s].system_tag && r.measure == measure;
          });
          try {
            auto res = paired_t_test(base_it->second.values[m], sys_it->second.values[m]);
            row->t = res.t;
            row->p = res.p;
            row->n = res.n;
            tested.push_back(&*row);
            pvals.push_back(res.p);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kInsufficientPairs) throw;
            std::size_t n = 0;
            for (const auto& [qid, _] : base_it->second.values[m]) n += sys_it->second.values[m].count(qid);
            row->n = n;
          }
        }
        auto adjusted = apply_correction(pvals, options.correction);
        for (std::size_t i = 0; i < tested.size(); ++i) tested[i]->p_adj = adjusted[i];
      }
    }
  }

  // Suite aggregates, only where every dataset succeeded.
  for (std::size_t s = 0; s < systems.size(); ++s) {
    for (const auto& measure : frame.measures) {
      std::vector<double> values;
      for (const auto& coll : suite.datasets) {
        auto row = std::find_if(frame.rows.begin(), frame.rows.end(), [&](const ResultRow& r) {
          return r.dataset == coll.dataset_id && r.system == systems[s].system_tag && r.measure == measure;
        });
        if (row == frame.rows.end()) break;
        values.push_back(row->value);
      }
      if (values.size() != suite.datasets.size()) continue;
      frame.rows.push_back({std::string(kAggregateDatasetId), systems[s].system_tag, measure,
                            suite_aggregate(values, suite.aggregation), {}, {}, {}, {}});
    }
  }

  auto key = [](const auto& r) { return std::tie(r.dataset, r.system, r.measure); };
  std::sort(frame.rows.begin(), frame.rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
  std::sort(frame.per_query.begin(), frame.per_query.end(), [](const PerQueryValue& a, const PerQueryValue& b) {
    return std::tie(a.dataset, a.system, a.measure, a.qid) < std::tie(b.dataset, b.system, b.measure, b.qid);
  });
  frame.index_builds = inst->index_builds.load() - builds_before;
  frame.index_opens = inst->index_opens.load() - opens_before;
  return frame;
}

ResultsFrame run_suite(const RunOptions& options, const fs::path& pipelines_path, const fs::path& registry_path,
                       Instruments* instruments) {
  Registry registry;
  load_registry(registry, registry_path);
  auto systems = parse_pipelines(pipelines_path);
  return run_suite(options, registry, systems, instruments);
}

// --- emission --------------------------------------------------------------

namespace {

json system_json(const PipelineSpec& s) {
  json stages = json::array();
  stages.push_back({{"type", "bm25"},
                    {"k1", s.first_stage.params.k1},
                    {"b", s.first_stage.params.b},
                    {"k", s.first_stage.k}});
  for (const auto& r : s.rerankers)
    stages.push_back({{"type", "exec"}, {"command", r.command}, {"needs_text", r.needs_text}, {"depth", r.depth}});
  return {{"tag", s.system_tag}, {"stages", stages}};
}

}  // namespace

std::vector<std::pair<std::string, std::string>> variant_decisions(const ResultsFrame& frame) {
  std::vector<std::pair<std::string, std::string>> out{
      {"retrieval", "Okapi BM25, idf = ln(1 + (N - df + 0.5) / (df + 0.5)), ties by docno descending"},
      {"tokenizer", frame.tokenizer.describe()},
      {"indexed_text", "title + \" \" + text when a title is present"},
      {"ndcg_gain", "nDCG: linear gain (grade), 1/log2(rank + 1) discount; nDCG_exp: 2^grade - 1"},
      {"unjudged_documents", "non-relevant"},
      {"queries_without_relevant", "score 0"},
      {"queries_without_judgements", "excluded"},
      {"significance_test", "two-sided paired Student t-test on per-query scores"},
      {"correction", std::string(to_string(frame.correction)) + " within (dataset, measure)"},
      {"aggregate", std::string(label(frame.aggregation)) + " over datasets"},
  };
  for (const auto& s : frame.systems) {
    std::string desc = fmt::format("bm25 k1={} b={} k={}", format_double(s.first_stage.params.k1),
                                   format_double(s.first_stage.params.b), s.first_stage.k);
    for (const auto& r : s.rerankers) desc += fmt::format(" >> exec {} depth={}", r.command.front(), r.depth);
    out.emplace_back("system " + s.system_tag, desc);
  }
  return out;
}

std::vector<fs::path> emit_results(const ResultsFrame& frame, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;

  auto results = dir / "results.csv";
  fsutil::write_file(results, format_results_csv(frame.rows));
  written.push_back(results);

  std::string pq = "dataset\tsystem\tmeasure\tqid\tvalue\n";
  for (const auto& v : frame.per_query)
    pq += fmt::format("{}\t{}\t{}\t{}\t{}\n", v.dataset, v.system, v.measure, v.qid, format_double(v.value));
  auto per_query = dir / "per_query.tsv";
  fsutil::write_file(per_query, pq);
  written.push_back(per_query);

  std::string errs = "dataset\tsystem\terror\tmessage\n";
  for (const auto& e : frame.errors) {
    std::string msg = e.message;
    std::replace_if(msg.begin(), msg.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    errs += fmt::format("{}\t{}\t{}\t{}\n", e.dataset, e.system, e.code, msg);
  }
  auto errors = dir / "errors.tsv";
  fsutil::write_file(errors, errs);
  written.push_back(errors);

  json systems = json::array();
  for (const auto& s : frame.systems) systems.push_back(system_json(s));
  json datasets = json::array();
  for (const auto& d : frame.datasets)
    datasets.push_back({{"dataset_id", d.dataset_id},
                        {"corpus_id", d.corpus_id},
                        {"topics", d.topics},
                        {"judged_queries", d.judged_queries},
                        {"topics_without_judgements", d.topics_without_judgements},
                        {"qrels_duplicate_overrides", d.qrels_duplicate_overrides}});
  json groups = json::array();
  for (const auto& g : frame.disk.groups)
    groups.push_back({{"corpus_id", g.corpus_id},
                      {"collections", g.collections},
                      {"bytes_written", g.bytes_written},
                      {"bytes_freed", g.bytes_freed}});
  json variants = json::object();
  for (const auto& [name, value] : variant_decisions(frame)) variants[name] = value;
  json info{
      {"suite", frame.suite},
      {"aggregation", to_string(frame.aggregation)},
      {"measures", frame.measures},
      {"systems", systems},
      {"baseline", frame.baseline ? json(frame.systems[*frame.baseline].system_tag) : json(nullptr)},
      {"datasets", datasets},
      {"filter_hook", frame.filter_hook ? json(*frame.filter_hook + " (reserved, not applied)") : json(nullptr)},
      {"variants", variants},
      {"disk",
       {{"groups", groups},
        {"run_file_bytes", frame.disk.run_file_bytes},
        {"peak_bytes", frame.disk.peak},
        {"final_bytes", frame.disk.current},
        {"max_group_bytes", frame.disk.max_group_bytes()},
        {"naive_bytes", frame.disk.naive_bytes()}}},
      {"failed_cells", frame.errors.size()},
  };
  auto info_path = dir / "run_info.json";
  fsutil::write_file(info_path, info.dump(2) + "\n");
  written.push_back(info_path);
  return written;
}

}  // namespace suiteeval
