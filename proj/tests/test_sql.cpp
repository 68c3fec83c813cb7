#include <gtest/gtest.h>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/sql/parser.hpp"
#include "sqlinsight/sql/printer.hpp"

using namespace sqlinsight;

TEST(NormalizeSql, CaseWhitespaceAndSemicolon) {
  EXPECT_EQ(sql::NormalizeSql("select  a,\n b from t where c = 'Mixed Case' ;"),
            "SELECT A, B FROM T WHERE C = 'Mixed Case'");
  EXPECT_EQ(sql::NormalizeSql("select x -- trailing comment\nfrom /* block */ t"), "SELECT X FROM T");
}

TEST(NormalizeSql, Idempotent) {
  const char* q =
      "with a as (select country, sum(revenue) r from sports_financials group by 1) "
      "select * from a where r between 1 and 2 order by r desc nulls last limit 3 offset 1";
  std::string once = sql::NormalizeSql(q);
  EXPECT_EQ(sql::NormalizeSql(once), once);
}

TEST(NormalizeSql, KeepsQuotedIdentifiersAndEscapes) {
  EXPECT_EQ(sql::NormalizeSql("SELECT \"Weird Col\" FROM t WHERE x = 'it''s'"),
            "SELECT \"Weird Col\" FROM T WHERE X = 'it''s'");
}

TEST(Parser, ErrorLocation) {
  try {
    sql::ParseSelect("SELECT a\nFROM t WHERE");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_FALSE(sql::ParsesAsSelect("UPDATE t SET a = 1"));
  EXPECT_FALSE(sql::ParsesAsSelect("SELECT 1; SELECT 2"));
  EXPECT_TRUE(sql::ParsesAsSelect("SELECT 1;"));
}

TEST(Parser, Precedence) {
  EXPECT_EQ(sql::Print(*sql::ParseExpression("a or b and not c = 1")), "A OR B AND NOT C = 1");
  EXPECT_EQ(sql::Print(*sql::ParseExpression("(a + b) * -c")), "(A + B) * -C");
  EXPECT_EQ(sql::Print(*sql::ParseExpression("x not in (1, 2) and y is not null")),
            "X NOT IN (1, 2) AND Y IS NOT NULL");
  EXPECT_EQ(sql::Print(*sql::ParseExpression("case when a then 1 else 0 end")),
            "CASE WHEN A THEN 1 ELSE 0 END");
}

TEST(NormalizeFragment, WorksWithoutParse) {
  EXPECT_EQ(sql::NormalizeFragment("sum(x)  as  y,"), sql::NormalizeFragment("SUM(X) AS Y,"));
}
