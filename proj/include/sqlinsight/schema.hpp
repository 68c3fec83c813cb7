#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlinsight/database.hpp"

namespace sqlinsight {

struct ColumnRepr {
  std::string name;
  std::string col_type;
  std::string description;
  std::vector<std::string> sample_rows;  // rendered SQL literals

  bool operator==(const ColumnRepr&) const = default;
};

struct TableRepr {
  std::string name;
  std::vector<ColumnRepr> columns;
  std::optional<std::string> primary_key;

  bool operator==(const TableRepr&) const = default;
};

struct ForeignKey {
  std::string table_a;
  std::string table_b;
  std::vector<std::pair<std::string, std::string>> keys;

  bool operator==(const ForeignKey&) const = default;
};

struct SchemaRepresentation {
  std::vector<TableRepr> tables;
  std::vector<ForeignKey> foreign_keys;

  bool empty() const { return tables.empty(); }
  const TableRepr* FindTable(std::string_view name) const;
  bool operator==(const SchemaRepresentation&) const = default;
};

/// Picks sample values from (value, frequency) pairs: every value when there
/// are at most 10, else the 5 most frequent (ties by value ascending).
/// NULLs are skipped.
std::vector<std::string> SampleRows(std::vector<std::pair<Value, std::size_t>> counts);

/// Reads tables, columns, keys and samples from a live database.
/// Throws ConnectionError or PermissionError.
SchemaRepresentation Introspect(const DatabaseHandle& db);

/// Loads a JSON schema file, or the rendered text layout. Throws FormatError.
SchemaRepresentation LoadSchemaFile(const std::filesystem::path& path);
SchemaRepresentation ParseSchemaJson(const nlohmann::json& doc);
SchemaRepresentation ParseSchemaText(std::string_view text);

/// Checks names are unique and keys point at existing columns; throws
/// FormatError.
void ValidateSchema(const SchemaRepresentation& schema);

nlohmann::ordered_json ToJson(const SchemaRepresentation& schema);

/// Keeps only the named elements. Entries are "TABLE" (the whole table) or
/// "TABLE.COLUMN"; a table with column entries keeps just those columns.
/// Foreign-key pairs survive only when both endpoints do. Throws
/// UnknownElement for names not in the schema. Matching ignores case.
SchemaRepresentation FilterSchema(const SchemaRepresentation& schema,
                                  const std::set<std::string>& keep);

/// Renders the text layout. With `keep`, renders FilterSchema(schema, keep).
std::string RenderSchema(const SchemaRepresentation& schema,
                         const std::optional<std::set<std::string>>& keep = std::nullopt);

}  // namespace sqlinsight
