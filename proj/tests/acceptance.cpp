// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "suiteeval/error.hpp"
#include "suiteeval/eval.hpp"
#include "suiteeval/index.hpp"
#include "suiteeval/orchestrator.hpp"
#include "suiteeval/pipeline.hpp"
#include "suiteeval/stats.hpp"

using namespace suiteeval;
namespace fs = std::filesystem;
using testing_support::TempDir;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 5) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& detail) const {
    if (failures_ == 0) return {true, detail};
    return {false, fmt::format("{} failure(s): {}", failures_, notes_)};
  }

 private:
  int failures_ = 0;
  std::string notes_;
};

testing_support::SyntheticOptions lifecycle_fixture() {
  testing_support::SyntheticOptions o;
  o.corpora = 3;
  o.docs_per_corpus = 5000;
  o.collections_per_corpus = 2;
  o.words_per_doc = 150;  // about 1 KB of text per document
  o.vocabulary = 5000;
  o.queries_per_collection = 25;
  o.measures = {"nDCG@10", "AP"};
  return o;
}

std::vector<PipelineSpec> bm25_grid(std::size_t n) {
  std::vector<PipelineSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    PipelineSpec s;
    s.system_tag = fmt::format("bm25-{}", i);
    s.first_stage.params.k1 = 0.5 + 0.25 * static_cast<double>(i % 4);
    s.first_stage.params.b = 0.3 + 0.2 * static_cast<double>(i / 4 % 3);
    out.push_back(s);
  }
  return out;
}

RunOptions base_options(const Registry&, const fs::path& scratch) {
  RunOptions o;
  o.suite_name = "synthetic";
  o.temp_root = scratch;
  return o;
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = fsutil::read_file(e.path());
  return out;
}

// 1. Peak disk bound and reduction against one index per collection.
Outcome lifecycle(const Registry& reg, const fs::path& root) {
  Check c;
  auto opts = base_options(reg, root / "scratch1");
  opts.save_dir = root / "out1";
  auto systems = bm25_grid(1);
  auto t0 = std::chrono::steady_clock::now();
  auto frame = run_suite(opts, reg, systems);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& d = frame.disk;
  const double bound = 1.05 * static_cast<double>(d.max_group_bytes()) + static_cast<double>(d.run_file_bytes);
  const double reduction = static_cast<double>(d.naive_bytes()) / static_cast<double>(d.peak);
  std::uint64_t per_collection_sum = 0;
  for (const auto& g : d.groups) per_collection_sum += g.bytes_written * g.collections;
  c.expect(frame.exit_code() == 0, "run reported errors");
  c.expect(d.groups.size() == 3, "expected 3 corpus groups");
  c.expect(static_cast<double>(d.peak) <= bound, fmt::format("peak {} > bound {:.0f}", d.peak, bound));
  c.expect(reduction >= 2.5, fmt::format("reduction {:.2f}x", reduction));
  c.expect(d.naive_bytes() == per_collection_sum + d.run_file_bytes, "naive total is not the per-collection sum");
  c.expect(secs < 60.0, fmt::format("runtime {:.1f}s", secs));
  c.expect(fs::is_empty(root / "scratch1"), "workspaces left behind");
  return c.outcome(fmt::format("peak {:.2f} MB <= {:.2f} MB; naive {:.2f} MB; reduction {:.2f}x; {:.1f}s",
                               d.peak / 1e6, bound / 1e6, d.naive_bytes() / 1e6, reduction, secs));
}

// 2. One index build per corpus whatever the number of pipelines.
Outcome build_count(const Registry& reg, const fs::path& root) {
  Check c;
  std::string counts;
  for (std::size_t n : {1u, 2u, 8u}) {
    Instruments inst;
    auto systems = bm25_grid(n);
    auto frame = run_suite(base_options(reg, root / fmt::format("scratch-bc{}", n)), reg, systems, &inst);
    c.expect(inst.index_builds.load() == 3, fmt::format("{} pipelines -> {} builds", n, inst.index_builds.load()));
    c.expect(inst.corpus_reads.load() == 3, fmt::format("{} pipelines -> {} corpus reads", n, inst.corpus_reads.load()));
    c.expect(frame.exit_code() == 0, "run reported errors");
    counts += fmt::format("{}{}->{}", counts.empty() ? "" : ", ", n, inst.index_builds.load());
  }
  return c.outcome("pipelines->builds: " + counts);
}

// 3. Measures against a brute-force oracle and an external evaluator.
Outcome metric_oracle() {
  Check c;
  std::mt19937 rng(31337);
  const std::vector<std::string> families{"nDCG", "nDCG_exp", "AP", "RR", "P", "R", "Success", "Judged"};
  double worst = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const int pool = 3 + static_cast<int>(rng() % 60);
    std::vector<std::string> docs;
    for (int i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));
    std::shuffle(docs.begin(), docs.end(), rng);
    std::vector<std::string> ranking(docs.begin(), docs.begin() + static_cast<long>(rng() % (pool + 1)));
    std::map<std::string, int> qrels;
    for (const auto& d : docs)
      if (rng() % 3) qrels[d] = static_cast<int>(rng() % 5) - 1;
    for (const auto& fam : families) {
      oracle::Measure om{fam, std::nullopt, 1 + static_cast<int>(rng() % 2)};
      if (fam == "P" || fam == "Judged" || rng() % 2) om.k = 1 + static_cast<int>(rng() % 30);
      auto name = fam + (om.k ? "@" + std::to_string(*om.k) : "") + (om.rel != 1 ? fmt::format("(rel={})", om.rel) : "");
      double diff = std::fabs(compute_measure(parse_measure(name), ranking, qrels) - oracle::measure(om, ranking, qrels));
      worst = std::max(worst, diff);
      c.expect(diff <= 1e-9, fmt::format("{} instance {} off by {:g}", name, inst, diff));
    }
  }

  auto qrels = load_qrels(testing_support::fixture("reference/qrels.txt"));
  auto run = read_run_file(testing_support::fixture("reference/run.txt"));
  std::vector<MeasureSpec> ms{parse_measure("nDCG@10"), parse_measure("AP"), parse_measure("RR@10")};
  auto scores = evaluate_run(run, qrels, ms);
  std::ifstream in(testing_support::fixture("reference/trec_eval_expected.tsv"));
  std::string line;
  std::getline(in, line);
  int queries = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string qid;
    double want[3];
    f >> qid >> want[0] >> want[1] >> want[2];
    for (int m = 0; m < 3; ++m) {
      const auto got = fmt::format("{:.4f}", scores.values[static_cast<std::size_t>(m)].at(qid));
      c.expect(got == fmt::format("{:.4f}", want[m]), fmt::format("{} {} = {} vs {:.4f}", qid, ms[m].render(), got, want[m]));
    }
    ++queries;
  }
  c.expect(queries == 20, fmt::format("{} reference queries", queries));
  return c.outcome(fmt::format("500 instances x 8 families, max |diff| {:.1e}; {} reference queries agree to 4 dp",
                               worst, queries));
}

DocSource docs_source(std::vector<Doc> docs) {
  auto state = std::make_shared<std::pair<std::vector<Doc>, std::size_t>>(std::move(docs), 0);
  return [state](Doc& out) {
    if (state->second >= state->first.size()) return false;
    out = state->first[state->second++];
    return true;
  };
}

// 4. Closed-form BM25 and exhaustive top-k agreement.
Outcome bm25_correctness(const fs::path& root) {
  Check c;
  auto h = build_index(docs_source({{"d1", "a b a", {}}, {"d2", "b c", {}}}), root / "bm25-two", {});
  auto hits = h.index->search("c", 10, {});
  const double closed = std::log(1.0 + (2 - 1 + 0.5) / (1 + 0.5)) * 1 * (1.2 + 1) /
                        (1 + 1.2 * (1 - 0.75 + 0.75 * 2 / 2.5));
  c.expect(hits.size() == 1 && hits[0].docno == "d2", "query c should hit d2 only");
  c.expect(!hits.empty() && std::fabs(hits[0].score - closed) <= 1e-9, "closed-form score mismatch");

  std::mt19937 rng(4711);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<std::string, std::string>> raw;
    std::vector<Doc> docs;
    const int n_docs = 1 + static_cast<int>(rng() % 40);
    const int vocab = 2 + static_cast<int>(rng() % 20);
    for (int d = 0; d < n_docs; ++d) {
      std::string text;
      for (int w = 0, len = 1 + static_cast<int>(rng() % 15); w < len; ++w)
        text += fmt::format("{}t{}", w ? " " : "", rng() % vocab);
      raw.emplace_back(fmt::format("doc{:03d}", d), text);
      docs.push_back({raw.back().first, text, {}});
    }
    std::string query;
    for (int w = 0, len = 1 + static_cast<int>(rng() % 5); w < len; ++w) query += fmt::format("t{} ", rng() % (vocab + 3));
    const Bm25Params p{0.2 + (rng() % 200) / 100.0, (rng() % 101) / 100.0};
    const std::size_t k = 1 + rng() % 15;
    auto idx = build_index(docs_source(docs), root / fmt::format("bm25-{}", trial), {});
    auto got = idx.index->search(query, k, p);
    auto want = oracle::bm25_exhaustive(raw, query, k, p.k1, p.b);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].docno == want[i].first && std::fabs(got[i].score - want[i].second) <= 1e-9;
    c.expect(same, fmt::format("trial {} top-{} differs", trial, k));
    ++compared;
  }
  return c.outcome(fmt::format("closed form {:.12f}; {} random micro-corpora agree", closed, compared));
}

// 5. Byte-identical artefacts for 1 and 4 threads.
Outcome determinism(const Registry& reg, const fs::path& root) {
  Check c;
  auto systems = bm25_grid(3);
  PipelineSpec echo = systems[0];
  echo.system_tag = "bm25-echo";
  echo.rerankers.push_back({testing_support::rerank_command("identity"), true, 20});
  systems.push_back(echo);
  std::map<std::string, std::string> outputs[2];
  const std::size_t threads[2] = {1, 4};
  for (int i = 0; i < 2; ++i) {
    auto opts = base_options(reg, root / fmt::format("scratch-det{}", i));
    opts.threads = threads[i];
    opts.baseline = 0;
    opts.save_dir = root / fmt::format("det{}", i);
    auto frame = run_suite(opts, reg, systems);
    emit_results(frame, *opts.save_dir);
    c.expect(frame.exit_code() == 0, "run reported errors");
    outputs[i] = dir_contents(*opts.save_dir);
  }
  std::size_t run_files = 0;
  for (const auto& [name, _] : outputs[0]) run_files += name.ends_with(".run") ? 1 : 0;
  c.expect(outputs[0].size() == outputs[1].size(), "different file sets");
  for (const auto& [name, bytes] : outputs[0]) {
    auto other = outputs[1].find(name);
    c.expect(other != outputs[1].end() && other->second == bytes, name + " differs");
  }
  c.expect(run_files == 24, fmt::format("{} run files", run_files));
  return c.outcome(fmt::format("results.csv and {} run files identical at threads 1 and 4", run_files));
}

// 6. A persistent index_dir is reused without rebuilding.
Outcome reuse(const Registry& reg, const fs::path& root) {
  Check c;
  auto systems = bm25_grid(2);
  auto opts = base_options(reg, root / "scratch-reuse");
  opts.index_dir = root / "persistent";
  opts.baseline = 0;
  Instruments first_inst, second_inst;
  auto first = run_suite(opts, reg, systems, &first_inst);
  auto second = run_suite(opts, reg, systems, &second_inst);
  c.expect(first_inst.index_builds.load() == 3, "first run should build 3 indexes");
  c.expect(second_inst.index_builds.load() == 0, fmt::format("second run built {}", second_inst.index_builds.load()));
  c.expect(second_inst.corpus_reads.load() == 0, "second run read a corpus");
  c.expect(first.rows == second.rows, "result rows differ");
  c.expect(format_results_csv(first.rows) == format_results_csv(second.rows), "results CSV differs");
  bool pq_same = first.per_query.size() == second.per_query.size();
  for (std::size_t i = 0; pq_same && i < first.per_query.size(); ++i)
    pq_same = first.per_query[i].qid == second.per_query[i].qid && first.per_query[i].value == second.per_query[i].value;
  c.expect(pq_same, "per-query scores differ");
  return c.outcome(fmt::format("builds {} then {}; {} rows identical", first_inst.index_builds.load(),
                               second_inst.index_builds.load(), second.rows.size()));
}

// 8. Row counts and where significance columns appear.
Outcome frame_shape(const fs::path& root) {
  Check c;
  testing_support::SyntheticOptions o;
  o.corpora = 3;
  o.collections_per_corpus = 1;
  o.docs_per_corpus = 300;
  o.measures = {"nDCG@10", "RR@10"};
  Registry reg;
  load_registry(reg, testing_support::make_synthetic_suite(root / "shape-data", o));
  auto opts = base_options(reg, root / "scratch-shape");
  opts.baseline = 0;
  auto systems = bm25_grid(4);
  auto frame = run_suite(opts, reg, systems);
  std::size_t plain = 0, aggregate = 0;
  for (const auto& r : frame.rows) {
    const bool is_agg = r.dataset == kAggregateDatasetId;
    (is_agg ? aggregate : plain)++;
    const bool expect_sig = !is_agg && r.system != systems[0].system_tag;
    const bool has_sig = r.t && r.p && r.p_adj && r.n;
    const bool has_any = r.t || r.p || r.p_adj || r.n;
    c.expect(expect_sig ? has_sig : !has_any, fmt::format("{} {} {} significance columns", r.dataset, r.system, r.measure));
  }
  c.expect(plain == 24, fmt::format("{} non-aggregate rows", plain));
  c.expect(aggregate == 8, fmt::format("{} aggregate rows", aggregate));
  return c.outcome(fmt::format("{} rows + {} aggregate rows; significance only on non-baseline rows", plain, aggregate));
}

// 9. One crashing cell leaves every other cell as in a clean run.
Outcome failure_isolation(const Registry& reg, const fs::path& root) {
  Check c;
  const std::string victim_dataset = "syn/c1/t0";
  auto make_systems = [](const std::string& mode) {
    auto systems = bm25_grid(2);
    PipelineSpec rr = systems[1];
    rr.system_tag = "rerank";
    rr.rerankers.push_back({testing_support::rerank_command(mode, "c1t0-0"), false, 10});
    systems.push_back(rr);
    return systems;
  };
  ResultsFrame frames[2];
  std::map<std::string, std::string> outputs[2];
  const char* modes[2] = {"identity", "crash-on"};
  for (int i = 0; i < 2; ++i) {
    auto opts = base_options(reg, root / fmt::format("scratch-iso{}", i));
    opts.baseline = 0;
    opts.save_dir = root / fmt::format("iso{}", i);
    auto systems = make_systems(modes[i]);
    frames[i] = run_suite(opts, reg, systems);
    emit_results(frames[i], *opts.save_dir);
    outputs[i] = dir_contents(*opts.save_dir);
  }
  const auto& clean = frames[0];
  const auto& broken = frames[1];
  c.expect(clean.exit_code() == 0, "clean run failed");
  c.expect(broken.exit_code() == 2, fmt::format("exit code {}", broken.exit_code()));
  c.expect(broken.errors.size() == 1 && broken.errors[0].dataset == victim_dataset &&
               broken.errors[0].system == "rerank" && broken.errors[0].code == "RerankerFailure",
           "expected exactly one RerankerFailure for the victim cell");
  const auto& sidecar = outputs[1]["errors.tsv"];
  c.expect(std::count(sidecar.begin(), sidecar.end(), '\n') == 2 && sidecar.find("RerankerFailure") != std::string::npos,
           "errors sidecar should hold one entry");

  // Run files: all but the victim's, byte for byte.
  std::size_t files = 0;
  for (const auto& [name, bytes] : outputs[0]) {
    if (!name.ends_with(".run")) continue;
    if (name == sanitise_id(victim_dataset) + "__rerank.run") {
      c.expect(!outputs[1].count(name), "victim run file written");
      continue;
    }
    c.expect(outputs[1].count(name) && outputs[1][name] == bytes, name + " differs");
    ++files;
  }
  // Per-query scores: the clean file minus the victim's lines.
  std::istringstream clean_pq(outputs[0]["per_query.tsv"]);
  std::string expected_pq;
  for (std::string l; std::getline(clean_pq, l);)
    if (!l.starts_with(victim_dataset + "\trerank\t")) expected_pq += l + "\n";
  c.expect(outputs[1]["per_query.tsv"] == expected_pq, "per-query scores differ");
  // Result rows of every other cell. Adjusted p-values in the victim's
  // (dataset, measure) families are excluded: the family loses a member.
  std::size_t rows = 0, p_adj_compared = 0;
  for (const auto& r : clean.rows) {
    if (r.dataset == kAggregateDatasetId && r.system == "rerank") continue;
    if (r.dataset == victim_dataset && r.system == "rerank") continue;
    auto it = std::find_if(broken.rows.begin(), broken.rows.end(), [&](const ResultRow& x) {
      return x.dataset == r.dataset && x.system == r.system && x.measure == r.measure;
    });
    c.expect(it != broken.rows.end(), "row missing: " + r.dataset + " " + r.system);
    if (it == broken.rows.end()) continue;
    c.expect(it->value == r.value && it->t == r.t && it->p == r.p && it->n == r.n,
             "row differs: " + r.dataset + " " + r.system + " " + r.measure);
    if (r.dataset != victim_dataset) {
      c.expect(it->p_adj == r.p_adj, "p_adj differs: " + r.dataset + " " + r.system);
      ++p_adj_compared;
    }
    ++rows;
  }
  return c.outcome(fmt::format("exit 2, 1 sidecar entry; {} run files and {} rows match the clean run "
                               "({} with p_adj)", files, rows, p_adj_compared));
}

// 10. Reranker protocol with identity, negating and injecting fixtures.
Outcome protocol(const Registry& reg, const fs::path& root) {
  Check c;
  const auto& suite = reg.suite("synthetic");
  auto group = group_by_corpus(suite).front();
  DatasetContext ctx(group, root / "protocol-ws", {});
  auto topics = load_topics(group.collections.front().topics_path);
  const std::size_t depth = 10;

  PipelineSpec plain{"bm25", {}, {}};
  PipelineSpec echo{"echo", {}, {{testing_support::rerank_command("identity"), false, depth}}};
  PipelineSpec neg{"neg", {}, {{testing_support::rerank_command("negate"), false, depth}}};
  PipelineSpec inject{"inject", {}, {{testing_support::rerank_command("inject"), false, depth}}};
  std::vector specs{plain, echo, neg, inject};
  auto pipes = instantiate_pipelines(specs, ctx);
  auto base = pipes[0].execute(topics);
  c.expect(pipes[1].execute(topics) == base, "identity reranker changed the run");

  auto negated = pipes[2].execute(topics);
  std::size_t strict = 0;
  for (const auto& [qid, list] : base.by_query) {
    const auto& got = negated.by_query.at(qid);
    const std::size_t h = std::min(depth, list.size());
    std::vector<ScoredDoc> head(list.begin(), list.begin() + static_cast<long>(h));
    bool ties = false;
    for (std::size_t i = 1; i < h; ++i) ties |= head[i].score == head[i - 1].score;
    // Negated scores sorted by the tie rule; a plain reversal when no ties.
    std::vector<ScoredDoc> want;
    for (const auto& d : head) want.push_back({d.docno, -d.score});
    std::sort(want.begin(), want.end(), ranks_before);
    if (!ties) {
      std::reverse(head.begin(), head.end());
      for (std::size_t i = 0; i < h; ++i) c.expect(want[i].docno == head[i].docno, "oracle is not a reversal");
      ++strict;
    }
    c.expect(got.size() == list.size(), qid + ": length changed");
    for (std::size_t i = 0; i < h && i < got.size(); ++i)
      c.expect(got[i].docno == want[i].docno && got[i].score == want[i].score, qid + ": head not reversed");
    for (std::size_t i = h; i < list.size() && i < got.size(); ++i)
      c.expect(got[i].docno == list[i].docno, qid + ": tail reordered");
  }
  c.expect(strict > 0, "no tie-free heads to check");

  try {
    pipes[3].execute(topics);
    c.expect(false, "injecting reranker accepted");
  } catch (const Error& e) {
    c.expect(e.code() == ErrorCode::kRerankerFailure, std::string("wrong error: ") + e.what());
  }
  return c.outcome(fmt::format("identity unchanged; negate reverses top-{} ({} queries, {} tie-free), tail kept; "
                               "injected docno -> RerankerFailure",
                               depth, base.by_query.size(), strict));
}

// 7. Paired t-test against reference values, Holm and AM-GM properties.
Outcome statistics() {
  Check c;
  std::ifstream in(testing_support::fixture("reference/ttest_cases.tsv"));
  std::string line;
  std::getline(in, line);
  int cases = 0;
  double worst_t = 0, worst_p = 0;
  auto to_map = [](const std::string& csv) {
    std::map<std::string, double> m;
    std::istringstream s(csv);
    int i = 0;
    for (std::string tok; std::getline(s, tok, ',');) m[fmt::format("q{:03d}", i++)] = std::stod(tok);
    return m;
  };
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string n, t, p, a, b;
    std::getline(f, n, '\t');
    std::getline(f, t, '\t');
    std::getline(f, p, '\t');
    std::getline(f, a, '\t');
    std::getline(f, b, '\t');
    auto r = paired_t_test(to_map(a), to_map(b));
    worst_t = std::max(worst_t, std::fabs(r.t - std::stod(t)));
    worst_p = std::max(worst_p, std::fabs(r.p - std::stod(p)));
    c.expect(std::to_string(r.n) == n, "pair count");
    ++cases;
  }
  c.expect(cases == 50, fmt::format("{} t-test cases", cases));
  c.expect(worst_t <= 1e-9, fmt::format("max |dt| {:g}", worst_t));
  c.expect(worst_p <= 1e-6, fmt::format("max |dp| {:g}", worst_p));

  std::mt19937 rng(99991);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(1 + rng() % 20);
    for (auto& x : p) x = u(rng);
    auto adj = holm_correction(p);
    std::vector<std::size_t> order(p.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
    for (std::size_t k = 0; k < p.size(); ++k) {
      c.expect(adj[k] >= p[k] && adj[k] <= 1.0, "p_adj outside [p, 1]");
      if (k > 0) c.expect(adj[order[k]] >= adj[order[k - 1]], "Holm not monotone");
    }
  }
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng() % 15);
    for (auto& x : v) x = u(rng);
    c.expect(suite_aggregate(v, AggregateRule::kGeometricMean) <=
                 suite_aggregate(v, AggregateRule::kArithmeticMean) * (1 + 1e-12),
             "AM-GM violated");
  }
  return c.outcome(fmt::format("{} cases, max |dt| {:.1e}, max |dp| {:.1e}; Holm and AM-GM hold on 1000 each", cases,
                               worst_t, worst_p));
}

}  // namespace

int main() {
  TempDir tmp;
  Registry big;
  load_registry(big, testing_support::make_synthetic_suite(tmp / "lifecycle-data", lifecycle_fixture()));

  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
  };
  std::vector<Criterion> criteria{
      {1, "lifecycle bound", [&] { return lifecycle(big, tmp.path()); }},
      {2, "build count", [&] { return build_count(big, tmp.path()); }},
      {3, "metric oracle", [] { return metric_oracle(); }},
      {4, "bm25 correctness", [&] { return bm25_correctness(tmp / "bm25"); }},
      {5, "determinism", [&] { return determinism(big, tmp.path()); }},
      {6, "index reuse", [&] { return reuse(big, tmp.path()); }},
      {7, "statistics", [] { return statistics(); }},
      {8, "results shape", [&] { return frame_shape(tmp.path()); }},
      {9, "failure isolation", [&] { return failure_isolation(big, tmp.path()); }},
      {10, "reranker protocol", [&] { return protocol(big, tmp.path()); }},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << fmt::format("[{}] {:>2} {}: {}", o.pass ? "PASS" : "FAIL", cr.id, cr.name, o.detail) << std::endl;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - static_cast<std::size_t>(failed), criteria.size())
            << std::endl;
  return failed;
}
