#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <random>

#include "sqlinsight/demo_data.hpp"
#include "sqlinsight/knowledge.hpp"

namespace fs = std::filesystem;
using namespace sqlinsight;

namespace testing_support {

fs::path DataDir() { return fs::path(SQLINSIGHT_DATA_DIR); }

std::string GoldenSql() { return ReadFile(DataDir() / "demo" / "golden_query.sql"); }

DatabaseHandle SeededDb(const std::string& name) {
  auto db = DatabaseHandle::InMemory(name);
  auto conn = db.Connect();
  auto tables = conn.Query("SELECT COUNT(*) FROM sqlite_master WHERE type = 'table'");
  if (std::get<std::int64_t>(tables.rows[0][0].storage()) == 0) SeedSportsDatabase(conn);
  return db;
}

const std::vector<std::string>& RoundTripCorpus() {
  static const std::vector<std::string> corpus = {
      // plain
      "SELECT COUNTRY, SPORT_CATEGORY, REVENUE FROM SPORTS_FINANCIALS WHERE REVENUE > 5000",
      "SELECT DISTINCT COUNTRY FROM SPORTS_VIEWERSHIP",
      "SELECT COUNTRY, COUNT(*) AS N, AVG(VIEWER_HOURS) AS AVG_HOURS FROM SPORTS_VIEWERSHIP "
      "GROUP BY COUNTRY HAVING COUNT(*) > 100",
      "SELECT SPORT_CATEGORY, SUM(COST) FROM SPORTS_FINANCIALS WHERE COST IS NULL OR COST > 100 "
      "GROUP BY SPORT_CATEGORY ORDER BY SPORT_CATEGORY LIMIT 4",
      "SELECT f.COUNTRY, f.SPORT_CATEGORY, f.FIN_MONTH, f.REVENUE / v.VIEWER_HOURS AS RPV "
      "FROM SPORTS_FINANCIALS f JOIN SPORTS_VIEWERSHIP v ON f.COUNTRY = v.COUNTRY "
      "AND f.SPORT_CATEGORY = v.SPORT_CATEGORY AND f.FIN_MONTH = v.VIEW_MONTH "
      "WHERE f.COUNTRY = 'CANADA'",
      "SELECT f.SPORT_CATEGORY, COUNT(v.VIEW_MONTH) FROM SPORTS_FINANCIALS f LEFT JOIN "
      "SPORTS_VIEWERSHIP v ON f.SPORT_CATEGORY = v.SPORT_CATEGORY AND v.COUNTRY = 'UNITED KINGDOM' "
      "AND f.FIN_MONTH = v.VIEW_MONTH WHERE f.COUNTRY = 'UNITED STATES' GROUP BY f.SPORT_CATEGORY",
      // conditional aggregation
      "SELECT SPORT_CATEGORY, SUM(CASE WHEN TO_CHAR(FIN_MONTH, 'YYYY') = '2022' THEN REVENUE ELSE 0 "
      "END) AS R22, SUM(CASE WHEN TO_CHAR(FIN_MONTH, 'YYYY') = '2023' THEN REVENUE ELSE 0 END) AS R23 "
      "FROM SPORTS_FINANCIALS WHERE COUNTRY = 'UNITED STATES' GROUP BY SPORT_CATEGORY",
      // window functions
      "SELECT COUNTRY, SPORT_CATEGORY, VIEW_MONTH, SUM(VIEWER_HOURS) OVER (PARTITION BY COUNTRY, "
      "SPORT_CATEGORY ORDER BY VIEW_MONTH) AS RUNNING FROM SPORTS_VIEWERSHIP",
      "SELECT COUNTRY, SPORT_CATEGORY, REVENUE, RANK() OVER (PARTITION BY COUNTRY ORDER BY REVENUE "
      "DESC, SPORT_CATEGORY) AS RNK FROM SPORTS_FINANCIALS WHERE FIN_MONTH = '2023-06-01'",
      // derived tables (hoisted into CTEs)
      "SELECT t.COUNTRY, t.TOTAL FROM (SELECT COUNTRY, SUM(REVENUE) AS TOTAL FROM SPORTS_FINANCIALS "
      "GROUP BY COUNTRY) t WHERE t.TOTAL > 0",
      "SELECT a.SPORT_CATEGORY, a.H, b.R FROM (SELECT SPORT_CATEGORY, SUM(VIEWER_HOURS) AS H FROM "
      "SPORTS_VIEWERSHIP GROUP BY SPORT_CATEGORY) a JOIN (SELECT SPORT_CATEGORY, SUM(REVENUE) AS R "
      "FROM SPORTS_FINANCIALS GROUP BY SPORT_CATEGORY) b ON a.SPORT_CATEGORY = b.SPORT_CATEGORY",
      "SELECT x.COUNTRY FROM (SELECT y.COUNTRY FROM (SELECT COUNTRY, COUNT(*) AS N FROM "
      "SPORTS_VIEWERSHIP GROUP BY COUNTRY) y WHERE y.N > 10) x",
      // one CTE
      "WITH US AS (SELECT * FROM SPORTS_FINANCIALS WHERE COUNTRY = 'UNITED STATES') "
      "SELECT SPORT_CATEGORY, MAX(REVENUE) FROM US GROUP BY SPORT_CATEGORY",
      "WITH Q AS (SELECT COUNTRY, TO_CHAR(VIEW_MONTH, 'YYYY\"Q\"Q') AS QTR, SUM(VIEWER_HOURS) AS H "
      "FROM SPORTS_VIEWERSHIP GROUP BY COUNTRY, TO_CHAR(VIEW_MONTH, 'YYYY\"Q\"Q')) "
      "SELECT COUNTRY, QTR, H, H - LAG(H) OVER (PARTITION BY COUNTRY ORDER BY QTR) AS DELTA FROM Q",
      // two CTEs
      "WITH F AS (SELECT COUNTRY, SUM(REVENUE) AS R FROM SPORTS_FINANCIALS GROUP BY COUNTRY), "
      "V AS (SELECT COUNTRY, SUM(VIEWER_HOURS) AS H FROM SPORTS_VIEWERSHIP GROUP BY COUNTRY) "
      "SELECT F.COUNTRY, CAST(R AS FLOAT) / NULLIF(H, 0) AS RPV FROM F JOIN V ON F.COUNTRY = V.COUNTRY",
      "WITH C AS (SELECT SPORT_CATEGORY, COUNT(DISTINCT COUNTRY) AS NC FROM SPORTS_VIEWERSHIP GROUP BY "
      "SPORT_CATEGORY), W AS (SELECT SPORT_CATEGORY FROM C WHERE NC = 3) SELECT SPORT_CATEGORY FROM W "
      "ORDER BY SPORT_CATEGORY",
      "WITH C AS (SELECT COUNTRY, SPORT_CATEGORY, SUM(COST) AS TC FROM SPORTS_FINANCIALS GROUP BY "
      "COUNTRY, SPORT_CATEGORY) SELECT COUNTRY, SPORT_CATEGORY FROM C WHERE TC > (SELECT AVG(TC) FROM C)",
      // three CTEs
      "WITH F AS (SELECT COUNTRY, SPORT_CATEGORY, SUM(CASE WHEN TO_CHAR(FIN_MONTH, 'YYYY') = '2021' "
      "THEN REVENUE ELSE 0 END) AS R1, SUM(CASE WHEN TO_CHAR(FIN_MONTH, 'YYYY') = '2022' THEN REVENUE "
      "ELSE 0 END) AS R2 FROM SPORTS_FINANCIALS GROUP BY COUNTRY, SPORT_CATEGORY), V AS (SELECT "
      "COUNTRY, SPORT_CATEGORY, SUM(VIEWER_HOURS) AS H FROM SPORTS_VIEWERSHIP GROUP BY COUNTRY, "
      "SPORT_CATEGORY), J AS (SELECT F.COUNTRY, F.SPORT_CATEGORY, -1 * (R2 - R1) / NULLIF(H, 0) AS "
      "CHG, ROW_NUMBER() OVER (PARTITION BY F.COUNTRY ORDER BY -1 * (R2 - R1) / NULLIF(H, 0) DESC, "
      "F.SPORT_CATEGORY) AS RNK FROM F JOIN V ON F.COUNTRY = V.COUNTRY AND F.SPORT_CATEGORY = "
      "V.SPORT_CATEGORY) SELECT COUNTRY, SPORT_CATEGORY, CHG FROM J WHERE RNK <= 3",
      "WITH A AS (SELECT COUNTRY FROM SPORTS_VIEWERSHIP GROUP BY COUNTRY), B AS (SELECT COUNTRY, "
      "SPORT_CATEGORY FROM SPORTS_FINANCIALS WHERE COST IS NULL), C AS (SELECT A.COUNTRY, "
      "COUNT(B.SPORT_CATEGORY) AS MISSING FROM A LEFT JOIN B ON A.COUNTRY = B.COUNTRY GROUP BY "
      "A.COUNTRY) SELECT * FROM C",
      // set operations
      "SELECT COUNTRY FROM SPORTS_FINANCIALS WHERE REVENUE > 9000 UNION SELECT COUNTRY FROM "
      "SPORTS_VIEWERSHIP WHERE VIEWER_HOURS < 100",
      "SELECT SPORT_CATEGORY FROM SPORTS_VIEWERSHIP WHERE COUNTRY = 'UNITED STATES' EXCEPT SELECT "
      "SPORT_CATEGORY FROM SPORTS_VIEWERSHIP WHERE COUNTRY = 'UNITED KINGDOM'",
      // nested WITH inside a derived table
      "SELECT z.N FROM (WITH K AS (SELECT COUNTRY FROM SPORTS_FINANCIALS) SELECT COUNT(*) AS N FROM K) z",
      // IN subquery and EXISTS
      "SELECT COUNTRY, SPORT_CATEGORY FROM SPORTS_FINANCIALS WHERE SPORT_CATEGORY IN (SELECT "
      "SPORT_CATEGORY FROM SPORTS_VIEWERSHIP WHERE COUNTRY = 'UNITED KINGDOM') AND FIN_MONTH = "
      "'2021-01-01'",
      "SELECT v.COUNTRY, v.SPORT_CATEGORY FROM SPORTS_VIEWERSHIP v WHERE v.VIEW_MONTH = '2022-07-01' "
      "AND EXISTS (SELECT 1 FROM SPORTS_FINANCIALS f WHERE f.COUNTRY = v.COUNTRY AND f.COST IS NULL)",
  };
  return corpus;
}

std::vector<std::vector<std::string>> ResultMultiset(const DatabaseHandle& db, const std::string& sql) {
  auto conn = db.Connect();
  ResultTable t = conn.Query(sql);
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : t.rows) {
    std::vector<std::string> r;
    for (const auto& v : row) r.push_back(v.Literal());
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Selection by repeated max scan over a plain count map.
std::vector<std::string> BruteForceSample(const std::vector<std::optional<std::int64_t>>& col) {
  std::map<std::int64_t, std::size_t> counts;
  for (const auto& v : col) {
    if (v) ++counts[*v];
  }
  std::vector<std::string> out;
  if (counts.size() <= 10) {
    std::vector<std::pair<std::int64_t, std::size_t>> all(counts.begin(), counts.end());
    while (!all.empty()) {
      auto best = all.begin();
      for (auto it = all.begin(); it != all.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      out.push_back(std::to_string(best->first));
      all.erase(best);
    }
    return out;
  }
  for (int k = 0; k < 5; ++k) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out.push_back(std::to_string(best->first));
    counts.erase(best);
  }
  return out;
}

DecomposedExample MakeExample(const std::string& sql, const std::string& nl) {
  ScriptedModel none({});
  return Annotate(Decompose(sql), nl, none);
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("sqlinsight_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::shared_ptr<ScriptedModelProvider> DemoModel(const nlohmann::json& overrides) {
  auto doc = nlohmann::json::parse(ReadFile(DataDir() / "demo" / "model_fixture.json"));
  for (const auto& [role, value] : overrides.items()) doc[role] = value;
  return ScriptedModelProvider::FromJson(doc);
}

std::unique_ptr<Pipeline> DemoPipeline(const fs::path& dir, const DatabaseHandle& db,
                                       std::shared_ptr<const ModelProvider> model) {
  PipelineConfig config;
  config.knowledge_dir = dir;
  config.schema_file = DataDir() / "demo" / "schema.json";
  auto pipeline = std::make_unique<Pipeline>(config, model ? model : DemoModel(), db);
  pipeline->Preprocess(DataDir() / "demo" / "logs", DataDir() / "demo" / "docs");
  return pipeline;
}

}  // namespace testing_support
