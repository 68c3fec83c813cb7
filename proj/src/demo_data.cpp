#include "sqlinsight/demo_data.hpp"

#include <sqlite3.h>

#include <array>
#include <cstdio>
#include <random>
#include <string>

namespace sqlinsight {
namespace {

constexpr std::array<const char*, 12> kSports = {
    "Basketball", "Football", "Baseball", "Hockey", "Soccer", "Tennis",
    "Golf",       "Cricket",  "Rugby",    "Boxing", "Racing", "Volleyball"};

struct CountrySpec {
  const char* name;
  std::size_t sports;  // leading entries of kSports covered
};

constexpr std::array<CountrySpec, 3> kCountries = {{
    {"UNITED STATES", 12},
    {"CANADA", 10},
    {"UNITED KINGDOM", 8},
}};

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw SqlError(SqlError::Phase::kPrepare, sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  void Text(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
  }
  void Real(int i, double v) { sqlite3_bind_double(stmt_, i, v); }
  void Null(int i) { sqlite3_bind_null(stmt_, i); }
  void Run(sqlite3* db) {
    if (sqlite3_step(stmt_) != SQLITE_DONE) {
      throw SqlError(SqlError::Phase::kStep, sqlite3_errmsg(db));
    }
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

 private:
  sqlite3_stmt* stmt_ = nullptr;
};

// Uniform integer in [lo, hi] from raw engine output; distributions are not
// portable across standard libraries, the engine is.
std::int64_t Draw(std::mt19937& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint32_t>(hi - lo + 1));
}

}  // namespace

void SeedSportsDatabase(Connection& conn, std::uint32_t seed) {
  conn.Exec(R"(
CREATE TABLE SPORTS_VIEWERSHIP (
  COUNTRY text NOT NULL,
  SPORT_CATEGORY text NOT NULL,
  VIEW_MONTH date NOT NULL,
  VIEWER_HOURS real
);
CREATE TABLE SPORTS_FINANCIALS (
  COUNTRY text NOT NULL,
  SPORT_CATEGORY text NOT NULL,
  FIN_MONTH date NOT NULL,
  REVENUE real,
  COST real,
  FOREIGN KEY (COUNTRY) REFERENCES SPORTS_VIEWERSHIP (COUNTRY)
);
)");
  std::mt19937 rng(seed);
  sqlite3* db = conn.raw();
  conn.Exec("BEGIN");
  Stmt fin(db, "INSERT INTO SPORTS_FINANCIALS VALUES (?, ?, ?, ?, ?)");
  Stmt view(db, "INSERT INTO SPORTS_VIEWERSHIP VALUES (?, ?, ?, ?)");
  for (const auto& country : kCountries) {
    for (std::size_t s = 0; s < country.sports; ++s) {
      // Popular sports earn and draw more.
      const std::int64_t scale = static_cast<std::int64_t>(kSports.size() - s);
      for (int year = 2021; year <= 2023; ++year) {
        for (int month = 1; month <= 12; ++month) {
          char date[16];
          std::snprintf(date, sizeof date, "%04d-%02d-01", year, month);
          const double revenue = static_cast<double>(Draw(rng, 2000, 9000) * scale) * 10.0;
          const std::int64_t cost_draw = Draw(rng, 1000, 8000);
          const double hours = static_cast<double>(Draw(rng, 500, 5000) * scale);

          fin.Text(1, country.name);
          fin.Text(2, kSports[s]);
          fin.Text(3, date);
          fin.Real(4, revenue);
          // A sprinkling of missing costs.
          if (cost_draw % 29 == 0) {
            fin.Null(5);
          } else {
            fin.Real(5, static_cast<double>(cost_draw * scale) * 10.0);
          }
          fin.Run(db);

          view.Text(1, country.name);
          view.Text(2, kSports[s]);
          view.Text(3, date);
          view.Real(4, hours);
          view.Run(db);
        }
      }
    }
  }
  conn.Exec("COMMIT");
}

}  // namespace sqlinsight
