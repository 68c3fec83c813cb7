#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "sqlinsight/decomposer.hpp"
#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/printer.hpp"

using namespace sqlinsight;
using testing_support::GoldenSql;
using testing_support::ResultMultiset;

TEST(Decompose, GoldenQuerySketch) {
  QuerySketch s = Decompose(GoldenSql());
  ASSERT_EQ(s.ctes.size(), 3u);
  EXPECT_EQ(s.ctes[0].name, "FINANCIALS");
  EXPECT_EQ(s.ctes[1].name, "VIEWERSHIP");
  EXPECT_EQ(s.ctes[2].name, "CALCULATIONS");
  EXPECT_EQ(s.final_bundle.wheres, std::vector<std::string>{"SPORT_RANK <= 5 OR WORST_SPORT_RANK <= 5"});
  EXPECT_EQ(s.final_bundle.orders, std::vector<std::string>{"SPORT_RANK"});
  EXPECT_EQ(s.final_bundle.joins, std::vector<std::string>{"FROM CALCULATIONS"});
  EXPECT_EQ(s.ctes[0].bundle.group_bys, (std::vector<std::string>{"COUNTRY", "SPORT_CATEGORY"}));
  EXPECT_EQ(s.ctes[1].bundle.wheres,
            (std::vector<std::string>{"TO_CHAR(VIEW_MONTH, 'YYYY\"Q\"Q') IN ('2023Q1', '2023Q2')",
                                      "COUNTRY = 'UNITED STATES'"}));
  EXPECT_EQ(s.ctes[2].bundle.joins,
            (std::vector<std::string>{"FROM FINANCIALS F", "JOIN VIEWERSHIP V ON F.COUNTRY = V.COUNTRY"}));
}

TEST(Decompose, ReferencedTablesSkipCteNames) {
  EXPECT_EQ(ReferencedTables(GoldenSql()),
            (std::vector<std::string>{"SPORTS_FINANCIALS", "SPORTS_VIEWERSHIP"}));
}

TEST(Decompose, RejectsNonSelect) {
  EXPECT_THROW(Decompose("DELETE FROM SPORTS_FINANCIALS"), UnsupportedStatement);
  EXPECT_THROW(Decompose("SELECT FROM WHERE"), ParseError);
}

TEST(ReformatToCte, HoistsDerivedTables) {
  std::string out = ReformatToCte(
      "select t.c from (select country as c from SPORTS_FINANCIALS) t where t.c = 'CANADA'");
  EXPECT_EQ(out,
            "WITH CTE_1 AS (SELECT COUNTRY AS C FROM SPORTS_FINANCIALS) SELECT T.C FROM CTE_1 T "
            "WHERE T.C = 'CANADA'");
}

TEST(ReformatToCte, FlattensNestedWith) {
  QuerySketch s = Decompose(
      "SELECT z.N FROM (WITH K AS (SELECT COUNTRY FROM SPORTS_FINANCIALS) SELECT COUNT(*) AS N FROM K) z");
  ASSERT_EQ(s.ctes.size(), 2u);
  EXPECT_EQ(s.ctes[0].name, "Z_K");
  EXPECT_EQ(s.ctes[1].name, "CTE_1");
}

TEST(ReformatToCte, Idempotent) {
  for (const auto& q : testing_support::RoundTripCorpus()) {
    std::string once = ReformatToCte(q);
    EXPECT_EQ(ReformatToCte(once), once) << q;
  }
}

TEST(RoundTrip, CorpusResultsMatch) {
  auto db = testing_support::SeededDb("decomposer_roundtrip");
  for (const auto& q : testing_support::RoundTripCorpus()) {
    std::string back = Recompose(Decompose(ReformatToCte(q)));
    EXPECT_EQ(ResultMultiset(db, back), ResultMultiset(db, q)) << q << "\n=> " << back;
  }
}

TEST(RoundTrip, RecomposeIsCanonical) {
  for (const auto& q : testing_support::RoundTripCorpus()) {
    std::string canonical = ReformatToCte(q);
    EXPECT_EQ(Recompose(Decompose(q)), canonical) << q;
    EXPECT_EQ(sql::NormalizeSql(canonical), canonical);
  }
}

namespace {

std::string RandomTwoCteQuery(std::mt19937& rng) {
  auto pick = [&](std::initializer_list<const char*> xs) {
    std::vector<const char*> v(xs);
    return std::string(v[rng() % v.size()]);
  };
  const std::string country = pick({"'UNITED STATES'", "'CANADA'", "'UNITED KINGDOM'"});
  const std::string year = pick({"'2021'", "'2022'", "'2023'"});
  const std::string agg = pick({"SUM", "AVG", "MAX", "MIN", "COUNT"});
  const std::string threshold = std::to_string(rng() % 8000);

  std::string a = "A AS (SELECT SPORT_CATEGORY, " + agg +
                  "(REVENUE) AS M1, SUM(CASE WHEN TO_CHAR(FIN_MONTH, 'YYYY') = " + year +
                  " THEN COST ELSE 0 END) AS M2 FROM SPORTS_FINANCIALS WHERE COUNTRY = " + country;
  if (rng() % 2) a += " AND REVENUE > " + threshold;
  a += " GROUP BY SPORT_CATEGORY)";

  std::string b = "B AS (SELECT SPORT_CATEGORY, " + pick({"SUM", "AVG", "MAX"}) +
                  "(VIEWER_HOURS) AS H FROM SPORTS_VIEWERSHIP WHERE TO_CHAR(VIEW_MONTH, 'YYYY') = " +
                  year + " GROUP BY SPORT_CATEGORY";
  if (rng() % 2) b += " HAVING COUNT(*) > " + std::to_string(rng() % 20);
  b += ")";

  std::string join = rng() % 2 ? " JOIN " : " LEFT JOIN ";
  std::string select = "SELECT A.SPORT_CATEGORY, M1, M2, H";
  if (rng() % 2) {
    select += ", ROW_NUMBER() OVER (ORDER BY M1 DESC, A.SPORT_CATEGORY) AS RNK";
  }
  if (rng() % 2) select += ", " + std::string(rng() % 2 ? "-1 * " : "") + "(M1 - M2) / NULLIF(H, 0) AS R";
  std::string q = "WITH " + a + ", " + b + " " + select + " FROM A" + join +
                  "B ON A.SPORT_CATEGORY = B.SPORT_CATEGORY";
  switch (rng() % 3) {
    case 0:
      q += " WHERE M1 > " + std::to_string(rng() % 5000);
      break;
    case 1:
      q += " WHERE H IS NOT NULL AND M2 >= 0";
      break;
    default:
      break;
  }
  if (rng() % 2) q += " ORDER BY A.SPORT_CATEGORY";
  if (rng() % 3 == 0) q += " LIMIT " + std::to_string(1 + rng() % 10);
  return q;
}

}  // namespace

TEST(RoundTrip, RandomTwoCteSketches) {
  auto db = testing_support::SeededDb("decomposer_random");
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string q = RandomTwoCteQuery(rng);
    QuerySketch s = Decompose(q);
    ASSERT_EQ(s.ctes.size(), 2u) << q;
    std::string back = Recompose(s);
    EXPECT_EQ(Decompose(back), Decompose(ReformatToCte(q))) << q;
    if (q.find(" LIMIT ") == std::string::npos || q.find(" ORDER BY ") != std::string::npos) {
      EXPECT_EQ(ResultMultiset(db, back), ResultMultiset(db, q)) << q;
    }
  }
}

TEST(Recompose, RejectsDamagedSketch) {
  QuerySketch s = Decompose(GoldenSql());
  s.ctes[1].bundle.wheres.push_back("COUNTRY = ");
  EXPECT_THROW(Recompose(s), IrrecomposableSketch);
}

TEST(Annotate, FallsBackToTemplates) {
  QuerySketch s = Decompose(GoldenSql());
  ScriptedModel model({{ModelRole::kAnnotate, {{"boom", true}}}});
  DecomposedExample ex = Annotate(s, std::string("q"), model);
  EXPECT_EQ(ex.input_nl, "q");
  ASSERT_EQ(ex.features.cte_desc.size(), 3u);
  EXPECT_EQ(ex.features.cte_desc[0],
            "CTE FINANCIALS: selects COUNTRY, SPORT_CATEGORY, REVENUE_2023Q1, REVENUE_2023Q2 from "
            "SPORTS_FINANCIALS");
  EXPECT_EQ(ex.features.cte_count, 3u);
  EXPECT_FALSE(ValidateExample(ex).has_value());
}

TEST(Annotate, UsesModelJson) {
  QuerySketch s = Decompose("WITH A AS (SELECT COUNTRY FROM SPORTS_FINANCIALS) SELECT * FROM A");
  ScriptedModel model(
      {{ModelRole::kAnnotate,
        {{"```json\n{\"input_nl\": \"countries\", \"cte_desc\": [\"all countries\"], "
          "\"complex_terms\": [\"X: y\"]}\n```",
          false}}}});
  DecomposedExample ex = Annotate(s, std::nullopt, model);
  EXPECT_EQ(ex.input_nl, "countries");
  EXPECT_EQ(ex.features.cte_desc, std::vector<std::string>{"all countries"});
  EXPECT_EQ(ex.complex_terms, std::vector<std::string>{"X: y"});
}

TEST(ExampleJson, RoundTripsAndUsesListLayout) {
  ScriptedModel none({});
  DecomposedExample ex = Annotate(Decompose(GoldenSql()), std::string("nl"), none);
  auto j = ToJson(ex);
  EXPECT_TRUE(j.contains("cte_3_columns"));
  EXPECT_TRUE(j["final_columns"].contains("SELECTs/CALCs"));
  EXPECT_EQ(j["features"]["CTEs"], 3);
  EXPECT_EQ(ExampleFromJson(j), ex);
}

TEST(ValidateExample, CatchesCountMismatch) {
  ScriptedModel none({});
  DecomposedExample ex = Annotate(Decompose(GoldenSql()), std::string("nl"), none);
  ex.features.cte_count = 2;
  EXPECT_TRUE(ValidateExample(ex).has_value());
}
