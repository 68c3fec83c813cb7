#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "sqlinsight/database.hpp"
#include "sqlinsight/demo_data.hpp"

using namespace sqlinsight;

TEST(FormatDate, Patterns) {
  EXPECT_EQ(FormatDate("2023-05-01", "YYYY\"Q\"Q"), "2023Q2");
  EXPECT_EQ(FormatDate("2023-12-31", "YYYY\"Q\"Q"), "2023Q4");
  EXPECT_EQ(FormatDate("2023-01-15", "YYYY-MM"), "2023-01");
  EXPECT_EQ(FormatDate("2023-01-15", "YY/MM/DD"), "23/01/15");
  EXPECT_EQ(FormatDate("2023-03-01", "Q"), "1");
  EXPECT_EQ(FormatDate("2023-04-01", "Q"), "2");
}

TEST(FormatDate, RegisteredAsToChar) {
  auto db = DatabaseHandle::InMemory("db_tochar");
  auto conn = db.Connect();
  auto t = conn.Query("SELECT TO_CHAR('2023-07-01', 'YYYY\"Q\"Q'), TO_CHAR(NULL, 'YYYY')");
  EXPECT_EQ(t.rows[0][0].Display(), "2023Q3");
  EXPECT_TRUE(t.rows[0][1].is_null());
}

TEST(Value, LiteralForms) {
  EXPECT_EQ(Value().Literal(), "NULL");
  EXPECT_EQ(Value(std::int64_t{42}).Literal(), "42");
  EXPECT_EQ(Value(2.0).Literal(), "2.0");
  EXPECT_EQ(Value(2.5).Literal(), "2.5");
  EXPECT_EQ(Value(std::string("it's")).Literal(), "'it''s'");
}

TEST(Value, Ordering) {
  EXPECT_LT(Value(), Value(std::int64_t{-5}));
  EXPECT_LT(Value(std::int64_t{1}), Value(1.5));
  EXPECT_LT(Value(99.0), Value(std::string("A")));
  EXPECT_LT(Value(std::string("A")), Value(std::string("B")));
}

TEST(Connection, ErrorPhases) {
  auto db = testing_support::SeededDb("db_errors");
  auto conn = db.Connect();
  try {
    conn.Query("SELECT NOPE FROM SPORTS_FINANCIALS");
    FAIL();
  } catch (const SqlError& e) {
    EXPECT_EQ(e.phase(), SqlError::Phase::kPrepare);
    EXPECT_STREQ(e.what(), "no such column: NOPE");
  }
}

TEST(Connection, TimeoutInterruptsLongQuery) {
  auto db = DatabaseHandle::InMemory("db_timeout");
  auto conn = db.Connect();
  try {
    conn.Query(
        "WITH RECURSIVE C(X) AS (SELECT 1 UNION ALL SELECT X + 1 FROM C) SELECT COUNT(*) FROM C",
        std::chrono::milliseconds(50));
    FAIL();
  } catch (const SqlError& e) {
    EXPECT_EQ(e.phase(), SqlError::Phase::kTimeout);
  }
}

TEST(Connection, RowCapKeepsCount) {
  auto db = testing_support::SeededDb("db_cap");
  auto conn = db.Connect();
  auto t = conn.Query("SELECT * FROM SPORTS_FINANCIALS", {}, 3);
  EXPECT_EQ(t.rows.size(), 3u);
  // 30 country/sport pairs over 36 months
  EXPECT_EQ(t.row_count, 30u * 36u);
}

TEST(DatabaseHandle, MissingFileFailsFast) {
  EXPECT_THROW(DatabaseHandle::OpenFile("/nonexistent/dir/x.db"), ConnectionError);
}

TEST(DemoData, SeedIsDeterministic) {
  auto a = DatabaseHandle::InMemory("db_seed_a");
  auto b = DatabaseHandle::InMemory("db_seed_b");
  auto ca = a.Connect();
  auto cb = b.Connect();
  SeedSportsDatabase(ca, 11);
  SeedSportsDatabase(cb, 11);
  const std::string q = "SELECT * FROM SPORTS_FINANCIALS ORDER BY COUNTRY, SPORT_CATEGORY, FIN_MONTH";
  EXPECT_EQ(testing_support::ResultMultiset(a, q), testing_support::ResultMultiset(b, q));
  auto nulls = ca.Query("SELECT COUNT(*) FROM SPORTS_FINANCIALS WHERE COST IS NULL");
  EXPECT_GT(std::get<std::int64_t>(nulls.rows[0][0].storage()), 0);
}
