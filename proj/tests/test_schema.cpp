#include <gtest/gtest.h>

#include <map>
#include <random>

#include "fixtures.hpp"
#include "sqlinsight/errors.hpp"
#include "sqlinsight/schema.hpp"

using namespace sqlinsight;

using testing_support::BruteForceSample;

TEST(SampleRows, MatchesBruteForceOnRandomColumns) {
  std::mt19937 rng(99);
  auto db = DatabaseHandle::InMemory("schema_sampling");
  auto conn = db.Connect();
  int small_branch = 0;
  int large_branch = 0;
  for (int c = 0; c < 100; ++c) {
    const int distinct = 1 + static_cast<int>(rng() % 25);
    const int rows = 5 + static_cast<int>(rng() % 120);
    std::vector<std::optional<std::int64_t>> col;
    for (int r = 0; r < rows; ++r) {
      if (rng() % 9 == 0) {
        col.push_back(std::nullopt);
      } else {
        // skewed so frequencies differ
        int a = static_cast<int>(rng() % distinct);
        int b = static_cast<int>(rng() % distinct);
        col.push_back(std::min(a, b) * 7 - 20);
      }
    }
    const std::string table = "T" + std::to_string(c);
    conn.Exec("CREATE TABLE " + table + " (V INTEGER)");
    for (const auto& v : col) {
      conn.Exec("INSERT INTO " + table + " VALUES (" + (v ? std::to_string(*v) : "NULL") + ")");
    }
    std::vector<std::string> expected = BruteForceSample(col);
    std::set<std::int64_t> seen;
    for (const auto& v : col) {
      if (v) seen.insert(*v);
    }
    (seen.size() <= 10 ? small_branch : large_branch)++;

    auto schema = Introspect(db);
    const TableRepr* t = schema.FindTable(table);
    ASSERT_NE(t, nullptr);
    EXPECT_EQ(t->columns[0].sample_rows, expected) << table;
  }
  EXPECT_GT(small_branch, 10);
  EXPECT_GT(large_branch, 10);
}

TEST(SampleRows, TextLiteralsAndTies) {
  std::vector<std::pair<Value, std::size_t>> counts = {
      {Value(std::string("b")), 2}, {Value(std::string("a")), 2}, {Value(), 9}, {Value(std::string("c")), 3}};
  EXPECT_EQ(SampleRows(counts), (std::vector<std::string>{"'c'", "'a'", "'b'"}));
}

TEST(Introspect, SportsTables) {
  auto schema = Introspect(testing_support::SeededDb("schema_introspect"));
  ASSERT_EQ(schema.tables.size(), 2u);
  const TableRepr* fin = schema.FindTable("sports_financials");
  ASSERT_NE(fin, nullptr);
  EXPECT_EQ(fin->columns[0].name, "COUNTRY");
  EXPECT_EQ(fin->columns[0].col_type, "text");
  EXPECT_EQ(fin->columns[0].sample_rows,
            (std::vector<std::string>{"'UNITED STATES'", "'CANADA'", "'UNITED KINGDOM'"}));
  ASSERT_EQ(schema.foreign_keys.size(), 1u);
  EXPECT_EQ(schema.foreign_keys[0].table_a, "SPORTS_FINANCIALS");
  EXPECT_EQ(schema.foreign_keys[0].table_b, "SPORTS_VIEWERSHIP");
}

TEST(RenderSchema, ListLayout) {
  SchemaRepresentation s = LoadSchemaFile(testing_support::DataDir() / "demo" / "schema.json");
  std::string text = RenderSchema(
      s, std::set<std::string>{"SPORTS_FINANCIALS.COUNTRY", "SPORTS_FINANCIALS.SPORT_CATEGORY",
                               "SPORTS_VIEWERSHIP.COUNTRY", "SPORTS_VIEWERSHIP.VIEW_MONTH"});
  const std::string expected =
      "- Table: SPORTS_FINANCIALS\n"
      "  - Columns:\n"
      "     - COUNTRY (text)\n"
      "       - Description: The country where the financial data is applicable.\n"
      "       - Sample rows: ['UNITED STATES', 'CANADA', 'UNITED KINGDOM']\n"
      "     - SPORT_CATEGORY (text)\n"
      "       - Description: The category of sport such as basketball, football, baseball, etc.\n"
      "       - Sample rows: ['Basketball', 'Football', 'Baseball']\n"
      "- Table: SPORTS_VIEWERSHIP\n"
      "  - Columns:\n"
      "     - COUNTRY (text)\n"
      "       - Description: The country where the viewership data is recorded.\n"
      "       - Sample rows: ['UNITED STATES', 'CANADA', 'UNITED KINGDOM']\n"
      "     - VIEW_MONTH (date)\n"
      "       - Description: The month for which viewership hours are recorded.\n"
      "       - Sample rows: ['2023-01-01', '2023-02-01', '2023-03-01']\n"
      "- Foreign keys: \n"
      "  - (SPORTS_FINANCIALS, SPORTS_VIEWERSHIP): \n"
      "    - (COUNTRY, COUNTRY)\n";
  EXPECT_EQ(text, expected);
}

TEST(RenderSchema, TextParseRoundTrip) {
  SchemaRepresentation s = Introspect(testing_support::SeededDb("schema_roundtrip"));
  s.tables[0].primary_key = "COUNTRY, VIEW_MONTH";
  s.tables[0].columns[1].description = "what";
  std::string text = RenderSchema(s);
  SchemaRepresentation back = ParseSchemaText(text);
  EXPECT_EQ(RenderSchema(back), text);
  EXPECT_EQ(back.tables[0].primary_key, std::optional<std::string>("COUNTRY, VIEW_MONTH"));
}

TEST(FilterSchema, DropsForeignKeysWithMissingEndpoints) {
  SchemaRepresentation s = LoadSchemaFile(testing_support::DataDir() / "demo" / "schema.json");
  auto only = FilterSchema(s, {"SPORTS_FINANCIALS"});
  EXPECT_EQ(only.tables.size(), 1u);
  EXPECT_TRUE(only.foreign_keys.empty());
  EXPECT_THROW(FilterSchema(s, {"NOPE"}), UnknownElement);
  EXPECT_THROW(FilterSchema(s, {"SPORTS_FINANCIALS.NOPE"}), UnknownElement);
}

TEST(LoadSchemaFile, ReportsPath) {
  testing_support::TempDir dir;
  auto bad = dir.path() / "bad.json";
  WriteFileAtomic(bad, "{\"tables\": [{\"columns\": []}]}");
  try {
    LoadSchemaFile(bad);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
  }
}
