#include "sqlinsight/database.hpp"

#include <sqlite3.h>

#include <charconv>
#include <cmath>
#include <cstdio>

namespace sqlinsight {
namespace {

int TypeRank(const Value::Storage& s) {
  switch (s.index()) {
    case 0:
      return 0;
    case 1:
    case 2:
      return 1;
    default:
      return 2;
  }
}

double AsDouble(const Value::Storage& s) {
  if (auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
  return std::get<double>(s);
}

std::string FormatReal(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

void ToCharFunction(sqlite3_context* ctx, int argc, sqlite3_value** argv) {
  if (argc != 2 || sqlite3_value_type(argv[0]) == SQLITE_NULL ||
      sqlite3_value_type(argv[1]) == SQLITE_NULL) {
    sqlite3_result_null(ctx);
    return;
  }
  const auto* date = reinterpret_cast<const char*>(sqlite3_value_text(argv[0]));
  const auto* fmt = reinterpret_cast<const char*>(sqlite3_value_text(argv[1]));
  std::string out = FormatDate(date ? date : "", fmt ? fmt : "");
  sqlite3_result_text(ctx, out.c_str(), static_cast<int>(out.size()), SQLITE_TRANSIENT);
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int ProgressCallback(void* arg) {
  auto* deadline = static_cast<Deadline*>(arg);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;
  }
  return 0;
}

struct StatementGuard {
  sqlite3_stmt* stmt = nullptr;
  ~StatementGuard() { sqlite3_finalize(stmt); }
};

}  // namespace

std::string Value::Literal() const {
  switch (v_.index()) {
    case 0:
      return "NULL";
    case 1:
      return std::to_string(std::get<std::int64_t>(v_));
    case 2:
      return FormatReal(std::get<double>(v_));
    default: {
      std::string out = "'";
      for (char c : std::get<std::string>(v_)) {
        out += c;
        if (c == '\'') out += '\'';
      }
      return out + "'";
    }
  }
}

std::string Value::Display() const {
  if (auto* s = std::get_if<std::string>(&v_)) return *s;
  return Literal();
}

std::strong_ordering Value::operator<=>(const Value& other) const {
  int ra = TypeRank(v_);
  int rb = TypeRank(other.v_);
  if (ra != rb) return ra <=> rb;
  if (ra == 0) return std::strong_ordering::equal;
  if (ra == 1) {
    if (v_.index() == 1 && other.v_.index() == 1) {
      return std::get<std::int64_t>(v_) <=> std::get<std::int64_t>(other.v_);
    }
    double a = AsDouble(v_);
    double b = AsDouble(other.v_);
    if (a < b) return std::strong_ordering::less;
    if (a > b) return std::strong_ordering::greater;
    // Same numeric value; order int before real for a total order.
    return v_.index() <=> other.v_.index();
  }
  return std::get<std::string>(v_) <=> std::get<std::string>(other.v_);
}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    if (db_) sqlite3_close_v2(db_);
    db_ = other.db_;
    other.db_ = nullptr;
  }
  return *this;
}

Connection::~Connection() {
  if (db_) sqlite3_close_v2(db_);
}

void Connection::Exec(std::string_view sql) {
  char* err = nullptr;
  std::string text(sql);
  if (sqlite3_exec(db_, text.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err ? err : sqlite3_errmsg(db_);
    sqlite3_free(err);
    throw SqlError(SqlError::Phase::kStep, message);
  }
}

ResultTable Connection::Query(std::string_view sql, std::chrono::milliseconds timeout,
                              std::size_t max_rows) {
  StatementGuard guard;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &guard.stmt, &tail);
  if (rc != SQLITE_OK) throw SqlError(SqlError::Phase::kPrepare, sqlite3_errmsg(db_));
  if (guard.stmt == nullptr) throw SqlError(SqlError::Phase::kPrepare, "empty statement");

  Deadline deadline;
  if (timeout.count() > 0) {
    deadline.at = std::chrono::steady_clock::now() + timeout;
    sqlite3_progress_handler(db_, 1000, &ProgressCallback, &deadline);
  }
  struct HandlerReset {
    sqlite3* db;
    ~HandlerReset() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
  } reset{db_};

  ResultTable table;
  const int ncol = sqlite3_column_count(guard.stmt);
  for (int c = 0; c < ncol; ++c) table.columns.emplace_back(sqlite3_column_name(guard.stmt, c));
  table.null_counts.assign(static_cast<std::size_t>(ncol), 0);

  while ((rc = sqlite3_step(guard.stmt)) == SQLITE_ROW) {
    std::vector<Value> row;
    const bool keep = table.rows.size() < max_rows;
    if (keep) row.reserve(static_cast<std::size_t>(ncol));
    for (int c = 0; c < ncol; ++c) {
      int type = sqlite3_column_type(guard.stmt, c);
      if (type == SQLITE_NULL) ++table.null_counts[static_cast<std::size_t>(c)];
      if (!keep) continue;
      switch (type) {
        case SQLITE_INTEGER:
          row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(guard.stmt, c)));
          break;
        case SQLITE_FLOAT:
          row.emplace_back(sqlite3_column_double(guard.stmt, c));
          break;
        case SQLITE_NULL:
          row.emplace_back();
          break;
        default: {
          const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(guard.stmt, c));
          row.emplace_back(std::string(text ? text : ""));
        }
      }
    }
    ++table.row_count;
    if (keep) table.rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    if (deadline.expired) {
      throw SqlError(SqlError::Phase::kTimeout,
                     "statement exceeded timeout of " + std::to_string(timeout.count()) + " ms");
    }
    throw SqlError(SqlError::Phase::kStep, sqlite3_errmsg(db_));
  }
  return table;
}

DatabaseHandle DatabaseHandle::OpenFile(const std::string& path) {
  DatabaseHandle h;
  h.uri_ = path;
  h.flags_ = SQLITE_OPEN_READWRITE;
  h.Connect();  // fail fast
  return h;
}

DatabaseHandle DatabaseHandle::CreateFile(const std::string& path) {
  DatabaseHandle h;
  h.uri_ = path;
  h.flags_ = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE;
  h.Connect();
  h.flags_ = SQLITE_OPEN_READWRITE;
  return h;
}

DatabaseHandle DatabaseHandle::InMemory(const std::string& name) {
  DatabaseHandle h;
  h.uri_ = "file:" + name + "?mode=memory&cache=shared";
  h.flags_ = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_URI;
  h.keep_alive_ = std::make_shared<Connection>(h.Connect());
  return h;
}

Connection DatabaseHandle::Connect() const {
  sqlite3* db = nullptr;
  int rc = sqlite3_open_v2(uri_.c_str(), &db, flags_ | SQLITE_OPEN_NOMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    std::string message = db ? sqlite3_errmsg(db) : "out of memory";
    if (db) sqlite3_close_v2(db);
    if (rc == SQLITE_PERM || rc == SQLITE_AUTH) throw PermissionError(uri_ + ": " + message);
    throw ConnectionError("cannot open database " + uri_ + ": " + message);
  }
  sqlite3_busy_timeout(db, 5000);
  RegisterSqlFunctions(db);
  return Connection(db);
}

void RegisterSqlFunctions(sqlite3* db) {
  sqlite3_create_function_v2(db, "TO_CHAR", 2, SQLITE_UTF8 | SQLITE_DETERMINISTIC, nullptr,
                             &ToCharFunction, nullptr, nullptr, nullptr);
}

std::string FormatDate(std::string_view date, std::string_view format) {
  // Expects YYYY-MM-DD prefix.
  auto field = [&](std::size_t pos, std::size_t len) -> std::string_view {
    if (date.size() < pos + len) return {};
    return date.substr(pos, len);
  };
  std::string_view year = field(0, 4);
  std::string_view month = field(5, 2);
  std::string_view day = field(8, 2);

  std::string out;
  std::size_t i = 0;
  while (i < format.size()) {
    std::string_view rest = format.substr(i);
    if (rest[0] == '"') {
      std::size_t close = format.find('"', i + 1);
      if (close == std::string_view::npos) close = format.size();
      out.append(format.substr(i + 1, close - i - 1));
      i = close + 1;
    } else if (rest.substr(0, 4) == "YYYY") {
      out.append(year);
      i += 4;
    } else if (rest.substr(0, 2) == "YY") {
      out.append(year.size() == 4 ? year.substr(2) : year);
      i += 2;
    } else if (rest.substr(0, 2) == "MM") {
      out.append(month);
      i += 2;
    } else if (rest.substr(0, 2) == "DD") {
      out.append(day);
      i += 2;
    } else if (rest[0] == 'Q') {
      int m = 0;
      std::from_chars(month.data(), month.data() + month.size(), m);
      if (m >= 1 && m <= 12) out += static_cast<char>('0' + (m - 1) / 3 + 1);
      i += 1;
    } else {
      out += rest[0];
      i += 1;
    }
  }
  return out;
}

}  // namespace sqlinsight
