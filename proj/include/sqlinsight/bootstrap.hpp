#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sqlinsight/database.hpp"
#include "sqlinsight/knowledge.hpp"
#include "sqlinsight/model_client.hpp"

namespace sqlinsight {

struct LogEntry {
  std::string sql;
  std::optional<std::string> nl;  // from a "-- nl: ..." comment or a JSON field
  std::string origin;             // file:index, for reports
};

/// Splits a script on top-level semicolons. A "-- nl: <text>" comment inside
/// a statement's text becomes its natural-language hint.
std::vector<LogEntry> SplitSqlLog(std::string_view text, const std::string& origin);

/// Reads a .sql or .json log file, or every such file in a directory (sorted
/// by name). JSON logs are arrays of strings or {sql, nl?} objects.
std::vector<LogEntry> LoadLogs(const std::filesystem::path& path);

/// Instruction documents (*.json) under `path`, sorted; `path` may be a file.
std::vector<std::filesystem::path> ListDocs(const std::filesystem::path& path);

struct SkippedInput {
  std::string origin;
  std::string reason;
};

struct BootstrapReport {
  std::size_t examples = 0;
  std::size_t instructions = 0;
  std::size_t tables = 0;
  std::vector<SkippedInput> skipped;
};

nlohmann::ordered_json ToJson(const BootstrapReport& report);

using SchemaSource = std::variant<std::monostate, DatabaseHandle, std::filesystem::path>;

struct BootstrapResult {
  KnowledgeSet ks;
  BootstrapReport report;
};

/// Reformats, decomposes, annotates and classifies each log query, loads
/// instruction documents and the schema, on top of `base`. Bad inputs are
/// skipped and reported; nothing here is fatal.
BootstrapResult Bootstrap(const std::vector<LogEntry>& logs, const SchemaSource& schema_source,
                          const std::vector<std::filesystem::path>& docs, ModelClient& model,
                          KnowledgeSet base = {}, double tau_intent = 0.35);

}  // namespace sqlinsight
