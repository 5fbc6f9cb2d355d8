#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "suiteeval/error.hpp"
#include "suiteeval/eval.hpp"

using namespace suiteeval;
using V = std::vector<std::string>;

TEST(MeasureGrammar, Parses) {
  auto m = parse_measure("nDCG@10");
  EXPECT_EQ(m.family, MeasureFamily::kNdcg);
  EXPECT_EQ(m.cutoff, 10);
  EXPECT_EQ(m.rel_threshold, 1);
  auto ap = parse_measure("AP");
  EXPECT_EQ(ap.family, MeasureFamily::kAp);
  EXPECT_FALSE(ap.cutoff);
  auto rr = parse_measure("RR@10(rel=2)");
  EXPECT_EQ(rr.family, MeasureFamily::kRr);
  EXPECT_EQ(rr.cutoff, 10);
  EXPECT_EQ(rr.rel_threshold, 2);
  EXPECT_EQ(rr.render(), "RR@10(rel=2)");
  EXPECT_EQ(parse_measure("nDCG_exp@5").family, MeasureFamily::kNdcgExp);
}

TEST(MeasureGrammar, Rejects) {
  for (const char* bad : {"", "ndcg@10", "nDCG@", "nDCG@0", "P", "Judged", "AP(rel=x)", "nDCG@10 ", "MRR@10"}) {
    try {
      parse_measure(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnparseableMeasure) << bad;
    }
  }
}

TEST(Measures, HandExamples) {
  std::map<std::string, int> q{{"a", 2}, {"b", 1}, {"c", 1}};
  EXPECT_DOUBLE_EQ(compute_measure(parse_measure("nDCG@10"), V{"a", "b", "c"}, q), 1.0);
  EXPECT_DOUBLE_EQ(compute_measure(parse_measure("RR@10"), V{"x", "y", "b"}, q), 1.0 / 3);
  EXPECT_DOUBLE_EQ(compute_measure(parse_measure("P@5"), V{"a", "x", "c", "y", "z"}, q), 0.4);

  std::map<std::string, int> g{{"d1", 0}, {"d2", 2}, {"d3", 1}};
  const double dcg = 2 / std::log2(3.0) + 1 / std::log2(4.0);
  const double idcg = 2 / std::log2(2.0) + 1 / std::log2(3.0);
  EXPECT_NEAR(compute_measure(parse_measure("nDCG@3"), V{"d1", "d2", "d3"}, g), dcg / idcg, 1e-15);
}

TEST(Measures, NoRelevantDocumentsScoreZero) {
  std::map<std::string, int> q{{"a", 0}, {"b", 0}};
  for (const char* m : {"nDCG@10", "nDCG_exp@10", "AP", "RR", "P@5", "R@5", "Success@5"})
    EXPECT_EQ(compute_measure(parse_measure(m), V{"a", "b"}, q), 0.0) << m;
  EXPECT_DOUBLE_EQ(compute_measure(parse_measure("Judged@4"), V{"a", "b", "x"}, q), 0.5);
}

TEST(Measures, AgreeWithBruteForceOracle) {
  std::mt19937 rng(2024);
  const std::vector<std::string> families{"nDCG", "nDCG_exp", "AP", "RR", "P", "R", "Success", "Judged"};
  int checked = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const int pool = 5 + static_cast<int>(rng() % 40);
    std::vector<std::string> docs;
    for (int i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));
    std::shuffle(docs.begin(), docs.end(), rng);
    V ranking(docs.begin(), docs.begin() + static_cast<long>(rng() % (pool + 1)));
    std::map<std::string, int> qrels;
    for (const auto& d : docs)
      if (rng() % 2) qrels[d] = static_cast<int>(rng() % 5) - 1;
    for (const auto& fam : families) {
      oracle::Measure om{fam, std::nullopt, 1 + static_cast<int>(rng() % 3)};
      if (fam == "P" || fam == "Judged" || rng() % 2) om.k = 1 + static_cast<int>(rng() % 20);
      std::string name = fam + (om.k ? "@" + std::to_string(*om.k) : "") +
                         (om.rel != 1 ? "(rel=" + std::to_string(om.rel) + ")" : "");
      EXPECT_NEAR(compute_measure(parse_measure(name), ranking, qrels), oracle::measure(om, ranking, qrels), 1e-9)
          << name << " instance " << inst;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 4000);
}

TEST(Measures, MatchExternalReferenceEvaluator) {
  auto qrels = load_qrels(testing_support::fixture("reference/qrels.txt"));
  auto run = read_run_file(testing_support::fixture("reference/run.txt"));
  std::vector<MeasureSpec> ms{parse_measure("nDCG@10"), parse_measure("AP"), parse_measure("RR@10")};
  auto scores = evaluate_run(run, qrels, ms);

  std::ifstream in(testing_support::fixture("reference/trec_eval_expected.tsv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string qid;
    double ndcg, ap, rr;
    f >> qid >> ndcg >> ap >> rr;
    EXPECT_NEAR(scores.values[0].at(qid), ndcg, 5e-5) << qid;
    EXPECT_NEAR(scores.values[1].at(qid), ap, 5e-5) << qid;
    EXPECT_NEAR(scores.values[2].at(qid), rr, 5e-5) << qid;
    ++rows;
  }
  EXPECT_EQ(rows, 20);
}

TEST(EvaluateRun, EmptyRunScoresEveryJudgedQueryZero) {
  Qrels q;
  q.judgements = {{"q1", {{"a", 1}}}, {"q2", {{"b", 2}}}, {"q3", {{"c", 1}}}};
  auto s = evaluate_run(suiteeval::Run{}, q, std::vector{parse_measure("nDCG@10"), parse_measure("AP")});
  for (const auto& per : s.values) {
    EXPECT_EQ(per.size(), 3u);
    for (const auto& [_, v] : per) EXPECT_EQ(v, 0.0);
  }
}

TEST(EvaluateRun, UnjudgedRunQueriesExcludedAndLineOrderIrrelevant) {
  Qrels q;
  q.judgements = {{"q1", {{"a", 1}, {"b", 0}}}};
  auto r1 = parse_run("q1 Q0 a 2 1.0 t\nq1 Q0 b 1 2.0 t\nq9 Q0 a 1 1.0 t\n");
  auto r2 = parse_run("q9 Q0 a 1 1.0 t\nq1 Q0 b 1 2.0 t\nq1 Q0 a 2 1.0 t\n");
  std::vector ms{parse_measure("RR")};
  auto s1 = evaluate_run(r1, q, ms);
  auto s2 = evaluate_run(r2, q, ms);
  EXPECT_EQ(s1.values, s2.values);
  EXPECT_EQ(s1.values[0].size(), 1u);
  EXPECT_DOUBLE_EQ(s1.values[0].at("q1"), 0.5);
  EXPECT_EQ(s1.unjudged_run_queries, 1u);
}

TEST(RunFormat, RoundTripPreservesOrder) {
  suiteeval::Run run;
  run.by_query["q1"] = {{"d3", 2.5}, {"d1", 2.5}, {"d2", 0.1234567891}};
  auto text = format_run(run, "sys");
  EXPECT_EQ(text, "q1 Q0 d3 1 2.5 sys\nq1 Q0 d1 2 2.5 sys\nq1 Q0 d2 3 0.123457 sys\n");
  auto back = parse_run(text);
  ASSERT_EQ(back.by_query.at("q1").size(), 3u);
  EXPECT_EQ(back.by_query.at("q1")[0].docno, "d3");
  EXPECT_EQ(back.by_query.at("q1")[2].docno, "d2");
}

TEST(RunFormat, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    double v = u(rng);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}
