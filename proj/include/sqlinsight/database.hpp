#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqlinsight/errors.hpp"

struct sqlite3;

namespace sqlinsight {

/// A SQLite cell value.
class Value {
 public:
  using Storage = std::variant<std::monostate, std::int64_t, double, std::string>;

  Value() = default;
  explicit Value(std::int64_t v) : v_(v) {}
  explicit Value(double v) : v_(v) {}
  explicit Value(std::string v) : v_(std::move(v)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  const Storage& storage() const { return v_; }

  /// SQL literal form: 'text' (quotes doubled), numbers bare, NULL.
  std::string Literal() const;
  /// Plain display form without quotes.
  std::string Display() const;

  /// SQLite collation order: NULL < numbers (compared numerically) < text.
  std::strong_ordering operator<=>(const Value& other) const;
  bool operator==(const Value& other) const { return (*this <=> other) == 0; }

 private:
  Storage v_;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;  // possibly capped, see row_count
  std::size_t row_count = 0;             // total rows produced
  std::vector<std::size_t> null_counts;  // per column, over all rows
};

/// Failure while compiling or running a statement; message is the engine's
/// text verbatim.
class SqlError : public Error {
 public:
  enum class Phase { kPrepare, kStep, kTimeout };
  SqlError(Phase phase, const std::string& message) : Error(message), phase_(phase) {}
  Phase phase() const { return phase_; }

 private:
  Phase phase_;
};

class Connection {
 public:
  explicit Connection(sqlite3* db) : db_(db) {}
  Connection(Connection&& other) noexcept : db_(other.db_) { other.db_ = nullptr; }
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  /// Runs one or more statements, discarding results.
  void Exec(std::string_view sql);

  /// Runs a single statement. Keeps at most `max_rows` rows but counts all.
  ResultTable Query(std::string_view sql,
                    std::chrono::milliseconds timeout = std::chrono::milliseconds::zero(),
                    std::size_t max_rows = std::numeric_limits<std::size_t>::max());

  sqlite3* raw() const { return db_; }

 private:
  sqlite3* db_ = nullptr;
};

/// Where to find a database. Cheap to copy; in-memory databases stay alive
/// while any handle copy exists.
class DatabaseHandle {
 public:
  /// Existing database file (opened read-write, never created).
  static DatabaseHandle OpenFile(const std::string& path);
  /// Creates the file when missing.
  static DatabaseHandle CreateFile(const std::string& path);
  /// Named shared in-memory database.
  static DatabaseHandle InMemory(const std::string& name);

  /// Throws ConnectionError when the database cannot be opened.
  Connection Connect() const;
  const std::string& uri() const { return uri_; }

 private:
  std::string uri_;
  int flags_ = 0;
  std::shared_ptr<Connection> keep_alive_;
};

/// Registers TO_CHAR(date_text, format) on a connection. Supports YYYY, YY,
/// MM, DD, Q and "quoted" literal runs.
void RegisterSqlFunctions(sqlite3* db);

/// Formats an ISO date string; exposed for tests.
std::string FormatDate(std::string_view iso_date, std::string_view format);

}  // namespace sqlinsight
