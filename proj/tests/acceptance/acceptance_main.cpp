// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "sqlinsight/adaptation.hpp"
#include "sqlinsight/decomposer.hpp"
#include "sqlinsight/errors.hpp"
#include "sqlinsight/generation.hpp"
#include "sqlinsight/pipeline.hpp"
#include "sqlinsight/retrieval.hpp"
#include "sqlinsight/schema.hpp"
#include "sqlinsight/sql/printer.hpp"

using namespace sqlinsight;
namespace ts = testing_support;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kRoundTripBudgetS = 30.0;
constexpr std::size_t kMinCorpus = 20;
constexpr int kSampledColumns = 100;
constexpr std::size_t kMaxModelCalls = 6;
constexpr int kDeterminismRuns = 5;
constexpr int kMaxRounds = 2;
constexpr double kOverheadBudgetS = 2.0;
constexpr int kOverheadRequests = 20;
constexpr int kRandomStores = 100;

struct Check {
  std::ostringstream detail;
  bool ok = true;
  void Expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << what << "; ";
    }
  }
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

void GoldenDecompose(Check& c) {
  QuerySketch s = Decompose(ts::GoldenSql());
  c.Expect(s.ctes.size() == 3, "cte_count " + std::to_string(s.ctes.size()));
  std::vector<std::string> names;
  for (const auto& cte : s.ctes) names.push_back(cte.name);
  c.Expect(names == std::vector<std::string>{"FINANCIALS", "VIEWERSHIP", "CALCULATIONS"}, "cte names");
  c.Expect(s.final_bundle.wheres == std::vector<std::string>{"SPORT_RANK <= 5 OR WORST_SPORT_RANK <= 5"},
           "final wheres");
  c.Expect(s.final_bundle.orders == std::vector<std::string>{"SPORT_RANK"}, "final orders");
  c.detail << "ctes=" << s.ctes.size();
}

void RoundTrip(Check& c) {
  auto db = ts::SeededDb("acc_roundtrip");
  const auto& corpus = ts::RoundTripCorpus();
  c.Expect(corpus.size() >= kMinCorpus, "corpus too small");
  auto start = Clock::now();
  std::size_t matched = 0;
  for (const auto& q : corpus) {
    try {
      std::string back = Recompose(Decompose(ReformatToCte(q)));
      if (ts::ResultMultiset(db, back) == ts::ResultMultiset(db, q)) ++matched;
    } catch (const std::exception& e) {
      c.detail << "error: " << e.what() << "; ";
    }
  }
  double secs = Seconds(start);
  c.Expect(matched == corpus.size(), "mismatches");
  c.Expect(secs < kRoundTripBudgetS, "over time budget");
  c.detail << matched << "/" << corpus.size() << " match in " << secs << " s";
}

void Sampling(Check& c) {
  std::mt19937 rng(20240611);
  auto db = DatabaseHandle::InMemory("acc_sampling");
  auto conn = db.Connect();
  int exact = 0, small = 0, large = 0;
  for (int i = 0; i < kSampledColumns; ++i) {
    const int distinct = 1 + static_cast<int>(rng() % 30);
    const int rows = 1 + static_cast<int>(rng() % 200);
    std::vector<std::optional<std::int64_t>> col;
    std::set<std::int64_t> seen;
    for (int r = 0; r < rows; ++r) {
      if (rng() % 7 == 0) {
        col.push_back(std::nullopt);
        continue;
      }
      std::int64_t v = std::min(rng() % distinct, rng() % distinct);
      col.push_back(v);
      seen.insert(v);
    }
    (seen.size() <= 10 ? small : large)++;
    const std::string table = "C" + std::to_string(i);
    conn.Exec("CREATE TABLE " + table + " (V INTEGER)");
    conn.Exec("BEGIN");
    for (const auto& v : col) {
      conn.Exec("INSERT INTO " + table + " VALUES (" + (v ? std::to_string(*v) : "NULL") + ")");
    }
    conn.Exec("COMMIT");
    const SchemaRepresentation schema = Introspect(db);
    const TableRepr* t = schema.FindTable(table);
    if (t && t->columns[0].sample_rows == ts::BruteForceSample(col)) ++exact;
  }
  c.Expect(exact == kSampledColumns, "oracle mismatches");
  c.Expect(small > 0 && large > 0, "both branches not exercised");
  c.detail << exact << "/" << kSampledColumns << " exact; <=10 branch " << small << ", top-5 branch "
           << large;
}

void EndToEnd(Check& c) {
  auto db = ts::SeededDb("acc_e2e");
  auto p = ts::DemoPipeline({}, db);
  QueryResponse r = p->Query(ts::kDemoQuestion);
  c.Expect(r.status == "ok", "status " + r.status + " " + r.error);
  c.Expect(sql::NormalizeSql(r.sql) == sql::NormalizeSql(ts::GoldenSql()), "sql differs");
  c.Expect(r.preview.has_value() && r.preview->row_count > 0, "no result rows");
  c.Expect(r.model_calls <= kMaxModelCalls, "too many model calls");
  c.detail << "calls=" << r.model_calls << " rows=" << (r.preview ? r.preview->row_count : 0);
}

void Determinism(Check& c) {
  auto db = ts::SeededDb("acc_determinism");
  std::set<std::string> payloads;
  for (int i = 0; i < kDeterminismRuns; ++i) {
    auto p = ts::DemoPipeline({}, db);
    payloads.insert(p->Query(ts::kDemoQuestion).ToJson(false).dump());
  }
  c.Expect(payloads.size() == 1, "payloads differ");
  c.detail << kDeterminismRuns << " runs, " << payloads.size() << " distinct payload(s)";
}

void SelfCorrection(Check& c) {
  auto db = ts::SeededDb("acc_correction");
  const std::string broken = "SELECT SPORT_CATEGORY, SUM(REVENUEZ) FROM SPORTS_FINANCIALS GROUP BY SPORT_CATEGORY";
  const std::string good = "SELECT SPORT_CATEGORY, SUM(REVENUE) FROM SPORTS_FINANCIALS GROUP BY SPORT_CATEGORY";
  CanonicalQuery cq{"revenue by sport", "revenue by sport", "totals", {}};
  PromptBundle bundle = AssemblePrompt(cq, {}, {});
  CandidateSql first{broken, {}, ModelRole::kGenerate, 1};

  ScriptedModel fixes({{ModelRole::kCorrect, {{good, false}}}, {ModelRole::kAssess, {{"OK", false}}}});
  auto a = RunCorrectionLoop(first, cq, bundle, db, fixes, kMaxRounds);
  c.Expect(a.status == CorrectionStatus::kCorrected && a.rounds_used == 1, "fixable case");
  c.Expect(a.executions <= static_cast<std::size_t>(kMaxRounds + 1), "fixable executions");

  ScriptedModel stubborn({{ModelRole::kCorrect, {{broken, false}}}});
  auto b = RunCorrectionLoop(first, cq, bundle, db, stubborn, kMaxRounds);
  c.Expect(b.status == CorrectionStatus::kExhausted && b.rounds_used == kMaxRounds, "stubborn case");
  c.Expect(b.executions <= static_cast<std::size_t>(kMaxRounds + 1), "stubborn executions");
  c.detail << "corrected rounds=" << a.rounds_used << " execs=" << a.executions << "; exhausted rounds="
           << b.rounds_used << " execs=" << b.executions;
}

void AdaptationClosure(Check& c) {
  auto db = ts::SeededDb("acc_adaptation");
  ts::TempDir dir;
  const std::string nl = "Which sport had the largest revenue in Canada in 2022?";
  {
    auto p = ts::DemoPipeline(dir.path(), db);
    auto v0 = p->version();
    auto r = p->Query(nl);
    auto ids_before = p->store().Snapshot()->examples;
    auto v1 = p->SubmitFeedback({r.request_id, Verdict::kAccept, {}, {}, FeedbackSource::kUser});
    c.Expect(v1 == v0 + 1, "version moved by " + std::to_string(v1 - v0));
    std::string promoted;
    for (const auto& [id, ex] : p->store().Snapshot()->examples) {
      if (!ids_before.count(id)) promoted = id;
    }
    auto again = p->Query(nl);
    c.Expect(!promoted.empty() && !again.examples.empty() && again.examples[0].first == promoted,
             "promoted example not ranked first");
    c.detail << "accept v" << v0 << "->v" << v1 << ", top=" << (again.examples.empty() ? "-" : again.examples[0].first);
  }

  // Three requests whose SQL misses the sign flip, each corrected by a user.
  const std::vector<std::pair<std::string, std::string>> fixes = {
      {"SELECT SPORT_CATEGORY, (REVENUE - COST) AS CHANGE FROM SPORTS_FINANCIALS",
       "SELECT SPORT_CATEGORY, -1 * (REVENUE - COST) AS CHANGE FROM SPORTS_FINANCIALS"},
      {"SELECT COUNTRY, (SUM(VIEWER_HOURS) - AVG(VIEWER_HOURS)) AS DELTA FROM SPORTS_VIEWERSHIP GROUP BY COUNTRY",
       "SELECT COUNTRY, -1 * (SUM(VIEWER_HOURS) - AVG(VIEWER_HOURS)) AS DELTA FROM SPORTS_VIEWERSHIP GROUP BY COUNTRY"},
      {"SELECT FIN_MONTH, (MAX(COST) - MIN(COST)) AS COST_CHANGE FROM SPORTS_FINANCIALS GROUP BY FIN_MONTH",
       "SELECT FIN_MONTH, -1 * (MAX(COST) - MIN(COST)) AS COST_CHANGE FROM SPORTS_FINANCIALS GROUP BY FIN_MONTH"},
  };
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    PipelineConfig config;
    config.knowledge_dir = dir.path();
    Pipeline p(config, ts::DemoModel({{"generate", fixes[i].first}}), db);
    auto r = p.Query("Change in performance, case " + std::to_string(i + 1));
    p.SubmitFeedback({r.request_id, Verdict::kReject, fixes[i].second, std::string("apply -1 multiplier"),
                      FeedbackSource::kUser});
    std::size_t adaptations = 0;
    for (const auto& [id, instr] : p.store().Snapshot()->instructions) {
      adaptations += instr.source == InstructionSource::kAdaptation;
    }
    counts.push_back(adaptations);
  }
  c.Expect(counts == std::vector<std::size_t>{0, 0, 1}, "adaptation instruction count");
  c.detail << "; adaptation instructions after each correction: " << counts[0] << "," << counts[1] << ","
           << counts[2];
}

void Overhead(Check& c) {
  auto db = ts::SeededDb("acc_overhead");
  auto p = ts::DemoPipeline({}, db);
  double worst = 0.0;
  for (int i = 0; i < kOverheadRequests; ++i) {
    auto start = Clock::now();
    auto r = p->Query(ts::kDemoQuestion);
    worst = std::max(worst, Seconds(start));
    c.Expect(r.status == "ok", "request failed");
  }
  c.Expect(worst < kOverheadBudgetS, "over budget");
  c.detail << "worst of " << kOverheadRequests << " = " << worst * 1000 << " ms";
}

void RetrievalContract(Check& c) {
  auto db = ts::SeededDb("acc_retrieval");
  auto p = ts::DemoPipeline({}, db);
  auto ks = p->store().Snapshot();
  CanonicalQuery cq{ts::kDemoQuestion, ts::kDemoQuestion, "ranking_change", {}};
  RequestTrace trace;
  std::vector<RetrievalResult> partial;
  trace.on_stage = [&](std::string_view, const RetrievalResult& rr) { partial.push_back(rr); };
  ScriptedModel model({{ModelRole::kPrune, {{"NONE", false}}}});
  RetrievalSettings settings;
  RetrievalResult rr = Retrieve(cq, *ks, model, settings, &trace);
  c.Expect(trace.stages == std::vector<std::string>{"examples", "instructions", "schema"}, "stage order");
  c.Expect(partial.size() == 3 && partial[0].instructions.empty() && partial[1].pruned_schema.tables.empty(),
           "stages overlapped");
  if (partial.size() == 3) {
    auto expected = RetrieveInstructions(cq, partial[0].examples, *ks, settings.k_instructions, settings.lambda);
    bool same = expected.size() == rr.instructions.size();
    for (std::size_t i = 0; same && i < expected.size(); ++i) {
      same = expected[i].id == rr.instructions[i].id && expected[i].score == rr.instructions[i].score;
    }
    c.Expect(same, "instructions not conditioned on chosen examples");
  }
  bool prompt_has_tables = !model.prompts().empty();
  for (const auto& ex : rr.examples) {
    for (const auto& t : ex.example.features.tables) {
      prompt_has_tables = prompt_has_tables && model.prompts()[0].find("- " + t + "\n") != std::string::npos;
    }
  }
  c.Expect(prompt_has_tables, "schema stage not conditioned on chosen examples");

  std::mt19937 rng(4242);
  const std::vector<std::string> words = {"revenue", "cost", "sport", "rank", "viewer", "hours", "country",
                                          "month", "top", "change", "total", "average", "quarter", "best"};
  std::size_t violations = 0, checked = 0;
  for (int s = 0; s < kRandomStores; ++s) {
    KnowledgeSet store;
    const int n = 3 + static_cast<int>(rng() % 30);
    const int intents = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      std::string text;
      for (int w = 0; w < 3 + static_cast<int>(rng() % 4); ++w) text += words[rng() % words.size()] + " ";
      store = AddExample(store, ts::MakeExample("SELECT " + std::to_string(i) + " AS X", text),
                         "intent_" + std::to_string(rng() % intents)).ks;
    }
    for (const auto& [intent, ids] : store.partitions) {
      CanonicalQuery q{"q", words[rng() % words.size()] + " " + words[rng() % words.size()], intent, {}};
      std::set<std::string> allowed(ids.begin(), ids.end());
      for (const auto& e : RetrieveExamples(q, store, 1 + rng() % 6)) {
        ++checked;
        violations += allowed.count(e.id) == 0;
      }
    }
  }
  c.Expect(violations == 0, "partition leak");
  c.detail << "stages=" << trace.stages.size() << "; confinement " << checked - violations << "/" << checked
           << " over " << kRandomStores << " stores";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Check&)>>> criteria = {
      {"golden query decompose", GoldenDecompose},
      {"round-trip oracle", RoundTrip},
      {"sampling rule property", Sampling},
      {"end-to-end scripted run", EndToEnd},
      {"determinism", Determinism},
      {"self-correction", SelfCorrection},
      {"adaptation closure", AdaptationClosure},
      {"overhead budget", Overhead},
      {"retrieval contract", RetrievalContract},
  };
  int failures = 0;
  int n = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "exception: " << e.what();
    }
    failures += !c.ok;
    std::printf("%s [%d] %s: %s\n", c.ok ? "PASS" : "FAIL", ++n, name, c.detail.str().c_str());
  }
  return failures;
}
