#include "suiteeval/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <regex>
#include <set>

#include "suiteeval/error.hpp"
#include "suiteeval/fs_util.hpp"
#include "suiteeval/subprocess.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace suiteeval {

// --- pipelines file --------------------------------------------------------

namespace {

[[noreturn]] void parse_fail(std::string_view source, const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kParseError, fmt::format("{}: {}: {}", source, where, what));
}

void reject_unknown(std::string_view source, const json& obj, const std::string& where,
                    std::initializer_list<std::string_view> keys) {
  for (const auto& [k, _] : obj.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      parse_fail(source, where, "unknown field \"" + k + "\"");
}

std::vector<double> number_or_grid(std::string_view source, const json& v, const std::string& where, bool& is_grid) {
  if (v.is_number()) {
    is_grid = false;
    return {v.get<double>()};
  }
  if (v.is_object()) {
    reject_unknown(source, v, where, {"grid"});
    auto it = v.find("grid");
    if (it == v.end() || !it->is_array() || it->empty()) parse_fail(source, where, "grid must be a non-empty array");
    std::vector<double> out;
    for (const auto& x : *it) {
      if (!x.is_number()) parse_fail(source, where, "grid values must be numbers");
      out.push_back(x.get<double>());
    }
    is_grid = true;
    return out;
  }
  parse_fail(source, where, "expected a number or {\"grid\": [...]}");
}

std::size_t positive_int(std::string_view source, const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 1) parse_fail(source, where, "expected an integer >= 1");
  return static_cast<std::size_t>(v.get<long long>());
}

}  // namespace

std::vector<PipelineSpec> parse_pipelines_text(std::string_view json_text, const fs::path& base_dir,
                                               std::string_view source) {
  static const std::regex tag_pattern("^[A-Za-z0-9._-]+$");
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: {}", source, e.what()));
  }
  if (!doc.is_object()) parse_fail(source, "$", "expected an object");
  reject_unknown(source, doc, "$", {"systems"});
  auto systems = doc.find("systems");
  if (systems == doc.end() || !systems->is_array()) parse_fail(source, "$.systems", "expected an array");

  std::vector<PipelineSpec> specs;
  std::set<std::string> tags;
  for (std::size_t i = 0; i < systems->size(); ++i) {
    const auto where = fmt::format("systems[{}]", i);
    const auto& sys = (*systems)[i];
    if (!sys.is_object()) parse_fail(source, where, "expected an object");
    reject_unknown(source, sys, where, {"tag", "stages"});
    auto tag_it = sys.find("tag");
    if (tag_it == sys.end() || !tag_it->is_string()) parse_fail(source, where + ".tag", "expected a string");
    const auto tag = tag_it->get<std::string>();
    auto stages = sys.find("stages");
    if (stages == sys.end() || !stages->is_array() || stages->empty())
      parse_fail(source, where + ".stages", "expected a non-empty array");

    std::vector<double> k1s{1.2}, bs{0.75};
    bool k1_grid = false, b_grid = false;
    Bm25Stage first;
    std::vector<RerankStage> rerankers;
    for (std::size_t s = 0; s < stages->size(); ++s) {
      const auto swhere = fmt::format("{}.stages[{}]", where, s);
      const auto& st = (*stages)[s];
      if (!st.is_object()) parse_fail(source, swhere, "expected an object");
      auto type_it = st.find("type");
      if (type_it == st.end() || !type_it->is_string()) parse_fail(source, swhere + ".type", "expected a string");
      const auto type = type_it->get<std::string>();
      if (type == "bm25") {
        if (s != 0)
          throw Error(ErrorCode::kNoFirstStage,
                      fmt::format("{}: {}: bm25 is a first stage and may only appear first", source, swhere));
        reject_unknown(source, st, swhere, {"type", "k1", "b", "k"});
        if (st.contains("k1")) k1s = number_or_grid(source, st["k1"], swhere + ".k1", k1_grid);
        if (st.contains("b")) bs = number_or_grid(source, st["b"], swhere + ".b", b_grid);
        if (st.contains("k")) first.k = positive_int(source, st["k"], swhere + ".k");
      } else if (type == "exec") {
        if (s == 0)
          throw Error(ErrorCode::kNoFirstStage,
                      fmt::format("{}: {}: the first stage must be bm25", source, swhere));
        reject_unknown(source, st, swhere, {"type", "command", "needs_text", "depth"});
        RerankStage rr;
        auto cmd = st.find("command");
        if (cmd == st.end() || !cmd->is_array() || cmd->empty())
          parse_fail(source, swhere + ".command", "expected a non-empty array of strings");
        for (const auto& a : *cmd) {
          if (!a.is_string()) parse_fail(source, swhere + ".command", "expected strings");
          rr.command.push_back(a.get<std::string>());
        }
        fs::path exe(rr.command.front());
        if (exe.is_relative() && rr.command.front().find('/') != std::string::npos)
          rr.command.front() = (base_dir / exe).lexically_normal().string();
        if (st.contains("needs_text")) {
          if (!st["needs_text"].is_boolean()) parse_fail(source, swhere + ".needs_text", "expected a boolean");
          rr.needs_text = st["needs_text"].get<bool>();
        }
        if (st.contains("depth")) rr.depth = positive_int(source, st["depth"], swhere + ".depth");
        rerankers.push_back(std::move(rr));
      } else {
        parse_fail(source, swhere + ".type", "unknown stage type \"" + type + "\"");
      }
    }

    for (double k1 : k1s) {
      for (double b : bs) {
        PipelineSpec spec;
        spec.system_tag = tag;
        if (k1_grid) spec.system_tag += "-k1_" + format_double(k1);
        if (b_grid) spec.system_tag += "-b_" + format_double(b);
        spec.first_stage = first;
        spec.first_stage.params = {k1, b};
        try {
          spec.first_stage.params.validate();
        } catch (const Error& e) {
          parse_fail(source, where, e.what());
        }
        spec.rerankers = rerankers;
        if (!std::regex_match(spec.system_tag, tag_pattern))
          parse_fail(source, where + ".tag", "tag \"" + spec.system_tag + "\" must match [A-Za-z0-9._-]+");
        if (!tags.insert(spec.system_tag).second)
          throw Error(ErrorCode::kDuplicateSystemTag, fmt::format("{}: {}", source, spec.system_tag));
        specs.push_back(std::move(spec));
      }
    }
  }
  return specs;
}

std::vector<PipelineSpec> parse_pipelines(const fs::path& path) {
  std::string text;
  try {
    text = fsutil::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kMissingFile, "pipelines " + path.string());
  }
  return parse_pipelines_text(text, path.parent_path(), path.string());
}

// --- context ---------------------------------------------------------------

DatasetContext::DatasetContext(CorpusGroup group, fs::path workspace, Options options, Instruments* instruments)
    : group_(std::move(group)), workspace_(std::move(workspace)), options_(std::move(options)),
      instruments_(instruments) {}

DocSource DatasetContext::corpus_iter() const {
  // The index builder tracks docnos itself.
  auto reader = std::make_shared<CorpusReader>(group_.corpus_path, /*check_duplicates=*/false);
  return [reader](Doc& doc) { return reader->next(doc); };
}

const IndexHandle& DatasetContext::index() {
  if (!handle_) {
    handle_ = open_or_build(
        workspace_, [this] { return corpus_iter(); }, options_.tokenizer, options_.force_rebuild, instruments_);
  }
  return *handle_;
}

const DocStore& DatasetContext::text_loader() { return *index().docstore; }

// --- execution -------------------------------------------------------------

ExecutablePipeline::ExecutablePipeline(PipelineSpec spec, std::shared_ptr<const InvertedIndex> index,
                                       std::shared_ptr<const DocStore> store)
    : spec_(std::move(spec)), index_(std::move(index)), store_(std::move(store)) {}

std::vector<ExecutablePipeline> instantiate_pipelines(std::span<const PipelineSpec> specs, DatasetContext& context,
                                                      Instruments* instruments) {
  if (specs.empty()) throw Error(ErrorCode::kEmptyPipelineSet, "no systems to instantiate");
  const auto& handle = context.index();
  if (instruments != nullptr) instruments->pipeline_instantiations.fetch_add(1);
  std::vector<ExecutablePipeline> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.emplace_back(s, handle.index, handle.docstore);
  return out;
}

Run to_run(const Candidates& candidates) {
  Run run;
  for (const auto& [qid, list] : candidates.by_query) {
    if (list.empty()) continue;
    auto& out = run.by_query[qid];
    out.reserve(list.size());
    for (const auto& c : list) out.push_back({c.docno, c.score});
  }
  return run;
}

Candidates from_run(const Run& run) {
  Candidates c;
  for (const auto& [qid, docs] : run.by_query) {
    auto& out = c.by_query[qid];
    for (const auto& d : docs) out.push_back({d.docno, d.score, std::nullopt});
  }
  return c;
}

Run ExecutablePipeline::execute(std::span<const Topic> topics) const {
  Candidates cands;
  std::map<std::string, std::string> queries;
  for (const auto& t : topics) {
    queries.emplace(t.qid, t.query);
    auto& list = cands.by_query[t.qid];
    for (auto& d : index_->search(t.query, spec_.first_stage.k, spec_.first_stage.params))
      list.push_back({std::move(d.docno), d.score, std::nullopt});
  }
  for (const auto& stage : spec_.rerankers) cands = rerank_at_depth(stage, cands, queries, *store_);
  return to_run(cands);
}

void attach_text(Candidates& candidates, const DocStore& store, bool needs_text) {
  if (!needs_text) return;
  for (auto& [qid, list] : candidates.by_query) {
    for (auto& c : list) {
      auto stored = store.lookup(c.docno);
      c.text = stored.title ? *stored.title + " " + stored.text : std::move(stored.text);
    }
  }
}

namespace {

std::string flatten(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::string encode_rerank_input(const Candidates& candidates, const std::map<std::string, std::string>& queries,
                                bool needs_text) {
  std::string out;
  for (const auto& [qid, list] : candidates.by_query) {
    if (list.empty()) continue;
    auto q = queries.find(qid);
    const std::string query = flatten(q == queries.end() ? std::string_view() : std::string_view(q->second));
    std::size_t rank = 1;
    for (const auto& c : list) {
      out += qid;
      out += '\t';
      out += c.docno;
      out += '\t';
      out += std::to_string(rank++);
      out += '\t';
      out += format_double(c.score);
      out += '\t';
      out += query;
      if (needs_text) {
        out += '\t';
        out += flatten(c.text.value_or(std::string()));
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

Candidates decode_rerank_output(std::string_view output, const Candidates& input) {
  // (qid, docno) -> already rescored?
  std::map<std::string, std::map<std::string, const Candidate*>> expected;
  for (const auto& [qid, list] : input.by_query)
    for (const auto& c : list) expected[qid][c.docno] = &c;

  Candidates out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < output.size()) {
    auto nl = output.find('\n', start);
    std::string_view line = output.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? output.size() : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::kRerankerFailure, fmt::format("output line {}: {}", lineno, what));
    };
    if (fields.size() != 3) throw fail("expected qid<TAB>docno<TAB>score");
    std::string qid(fields[0]), docno(fields[1]);
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), score);
    if (ec != std::errc() || ptr != fields[2].data() + fields[2].size() || std::isnan(score))
      throw fail("unparseable score \"" + std::string(fields[2]) + "\"");
    auto q = expected.find(qid);
    if (q == expected.end() || !q->second.count(docno))
      throw fail("(" + qid + ", " + docno + ") was not among the input candidates");
    if (!seen.emplace(qid, docno).second) throw fail("(" + qid + ", " + docno + ") scored twice");
    const Candidate* orig = q->second.at(docno);
    out.by_query[qid].push_back({docno, score, orig->text});
  }
  for (const auto& [qid, docs] : expected)
    for (const auto& [docno, _] : docs)
      if (!seen.count({qid, docno}))
        throw Error(ErrorCode::kRerankerFailure, "(" + qid + ", " + docno + ") missing from reranker output");
  for (auto& [qid, list] : out.by_query)
    std::sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.docno > b.docno;
    });
  return out;
}

Candidates exec_rerank(const std::vector<std::string>& command, const Candidates& candidates,
                       const std::map<std::string, std::string>& queries, bool needs_text) {
  auto input = encode_rerank_input(candidates, queries, needs_text);
  ProcessResult proc;
  try {
    proc = run_process(command, input);
  } catch (const Error& e) {
    throw Error(ErrorCode::kRerankerFailure, e.what());
  }
  if (proc.exit_status != 0) {
    auto err = proc.stderr_data.substr(0, 500);
    std::replace(err.begin(), err.end(), '\n', ' ');
    throw Error(ErrorCode::kRerankerFailure,
                fmt::format("{} exited with status {}{}", command.front(), proc.exit_status,
                            err.empty() ? "" : ": " + err));
  }
  auto out = decode_rerank_output(proc.stdout_data, candidates);
  for (const auto& [qid, list] : candidates.by_query)
    if (list.empty()) out.by_query[qid];
  return out;
}

Candidates rerank_at_depth(const RerankStage& stage, const Candidates& candidates,
                           const std::map<std::string, std::string>& queries, const DocStore& store) {
  Candidates head;
  for (const auto& [qid, list] : candidates.by_query) {
    auto& h = head.by_query[qid];
    auto n = std::min(stage.depth, list.size());
    for (std::size_t i = 0; i < n; ++i) h.push_back({list[i].docno, list[i].score, std::nullopt});
  }
  attach_text(head, store, stage.needs_text);
  Candidates reranked = exec_rerank(stage.command, head, queries, stage.needs_text);

  Candidates out;
  for (const auto& [qid, list] : candidates.by_query) {
    auto& merged = out.by_query[qid];
    auto& top = reranked.by_query[qid];
    for (auto& c : top) merged.push_back({std::move(c.docno), c.score, std::nullopt});
    if (list.size() <= stage.depth) continue;
    // The tail keeps its first-stage order. Shift its scores below the
    // reranked block when needed so score order agrees with rank order.
    const Candidate& first_tail = list[stage.depth];
    double shift = 0.0;
    if (!merged.empty()) {
      const Candidate& last_head = merged.back();
      bool ordered = last_head.score > first_tail.score ||
                     (last_head.score == first_tail.score && last_head.docno > first_tail.docno);
      if (!ordered) {
        shift = (first_tail.score - last_head.score) + std::max(1.0, std::fabs(last_head.score) * 0x1p-40);
      }
    }
    for (std::size_t i = stage.depth; i < list.size(); ++i)
      merged.push_back({list[i].docno, list[i].score - shift, std::nullopt});
  }
  return out;
}

}  // namespace suiteeval
