#include "sqlinsight/schema.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

using nlohmann::json;

std::string QuoteIdent(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    out += c;
    if (c == '"') out += '"';
  }
  return out + "\"";
}

bool SameName(std::string_view a, std::string_view b) {
  return sql::ToUpperAscii(a) == sql::ToUpperAscii(b);
}

const ColumnRepr* FindColumn(const TableRepr& table, std::string_view name) {
  for (const auto& c : table.columns) {
    if (SameName(c.name, name)) return &c;
  }
  return nullptr;
}

std::vector<std::string> SplitKeyList(const std::string& pk) {
  std::vector<std::string> out;
  std::stringstream ss(pk);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = Trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::string RenderSampleList(const std::vector<std::string>& samples) {
  std::string out = "[";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i) out += ", ";
    out += samples[i];
  }
  return out + "]";
}

// Parses "['A', 'B''s', 3]" back into literal strings.
std::vector<std::string> ParseSampleList(std::string_view text, std::size_t line) {
  auto fail = [&](const std::string& what) {
    throw FormatError("line " + std::to_string(line) + ": sample rows: " + what);
  };
  std::string body = Trim(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') fail("expected [...]");
  std::vector<std::string> out;
  std::size_t i = 1;
  const std::size_t end = body.size() - 1;
  while (i < end) {
    while (i < end && (body[i] == ' ' || body[i] == ',')) ++i;
    if (i >= end) break;
    std::string literal;
    if (body[i] == '\'') {
      literal += body[i++];
      bool closed = false;
      while (i < end) {
        if (body[i] == '\'') {
          if (i + 1 < end && body[i + 1] == '\'') {
            literal += "''";
            i += 2;
            continue;
          }
          literal += body[i++];
          closed = true;
          break;
        }
        literal += body[i++];
      }
      if (!closed) fail("unterminated string");
    } else {
      while (i < end && body[i] != ',') literal += body[i++];
      literal = Trim(literal);
    }
    out.push_back(std::move(literal));
  }
  return out;
}

std::string LiteralFromJson(const json& v, const std::string& where) {
  if (v.is_string()) return Value(v.get<std::string>()).Literal();
  if (v.is_number_integer()) return Value(v.get<std::int64_t>()).Literal();
  if (v.is_number()) return Value(v.get<double>()).Literal();
  throw FormatError(where + ": sample values must be strings or numbers");
}

nlohmann::ordered_json LiteralToJson(const std::string& literal) {
  if (!literal.empty() && literal.front() == '\'') {
    std::string out;
    for (std::size_t i = 1; i + 1 < literal.size(); ++i) {
      out += literal[i];
      if (literal[i] == '\'') ++i;
    }
    return out;
  }
  try {
    return nlohmann::ordered_json::parse(literal);
  } catch (const nlohmann::json::exception&) {
    return literal;
  }
}

const json& Field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

std::string StringField(const json& obj, const char* key, const std::string& where) {
  const json& v = Field(obj, key, where);
  if (!v.is_string()) throw FormatError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

const TableRepr* SchemaRepresentation::FindTable(std::string_view name) const {
  for (const auto& t : tables) {
    if (SameName(t.name, name)) return &t;
  }
  return nullptr;
}

std::vector<std::string> SampleRows(std::vector<std::pair<Value, std::size_t>> counts) {
  counts.erase(std::remove_if(counts.begin(), counts.end(),
                              [](const auto& p) { return p.first.is_null(); }),
               counts.end());
  std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (counts.size() > 10) counts.resize(5);
  std::vector<std::string> out;
  out.reserve(counts.size());
  for (const auto& [value, n] : counts) out.push_back(value.Literal());
  return out;
}

SchemaRepresentation Introspect(const DatabaseHandle& db) {
  Connection conn = db.Connect();
  auto query = [&](const std::string& sql) {
    try {
      return conn.Query(sql);
    } catch (const SqlError& e) {
      std::string message = e.what();
      if (message.find("not authorized") != std::string::npos) throw PermissionError(message);
      throw ConnectionError(message);
    }
  };

  SchemaRepresentation schema;
  auto tables = query(
      "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' "
      "ORDER BY rowid");
  for (const auto& row : tables.rows) {
    TableRepr table;
    table.name = row[0].Display();
    auto info = query("PRAGMA table_info(" + QuoteIdent(table.name) + ")");
    std::map<std::int64_t, std::string> pk_parts;
    for (const auto& col : info.rows) {
      ColumnRepr c;
      c.name = col[1].Display();
      c.col_type = sql::ToLowerAscii(col[2].Display());
      if (auto* pk = std::get_if<std::int64_t>(&col[5].storage()); pk && *pk > 0) {
        pk_parts[*pk] = c.name;
      }
      auto counts = query("SELECT " + QuoteIdent(c.name) + ", COUNT(*) FROM " +
                          QuoteIdent(table.name) + " WHERE " + QuoteIdent(c.name) +
                          " IS NOT NULL GROUP BY 1");
      std::vector<std::pair<Value, std::size_t>> freq;
      for (auto& r : counts.rows) {
        auto n = std::get<std::int64_t>(r[1].storage());
        freq.emplace_back(std::move(r[0]), static_cast<std::size_t>(n));
      }
      c.sample_rows = SampleRows(std::move(freq));
      table.columns.push_back(std::move(c));
    }
    if (!pk_parts.empty()) {
      std::string pk;
      for (const auto& [pos, name] : pk_parts) pk += (pk.empty() ? "" : ", ") + name;
      table.primary_key = pk;
    }
    schema.tables.push_back(std::move(table));
  }

  for (const auto& table : schema.tables) {
    auto fks = query("PRAGMA foreign_key_list(" + QuoteIdent(table.name) + ")");
    std::map<std::int64_t, ForeignKey> by_id;
    for (const auto& r : fks.rows) {
      auto id = std::get<std::int64_t>(r[0].storage());
      ForeignKey& fk = by_id[id];
      fk.table_a = table.name;
      fk.table_b = r[2].Display();
      std::string to = r[4].is_null() ? std::string() : r[4].Display();
      if (to.empty()) {
        const TableRepr* target = schema.FindTable(fk.table_b);
        if (target && target->primary_key) to = *target->primary_key;
      }
      fk.keys.emplace_back(r[3].Display(), to);
    }
    for (auto& [id, fk] : by_id) schema.foreign_keys.push_back(std::move(fk));
  }
  return schema;
}

void ValidateSchema(const SchemaRepresentation& schema) {
  for (std::size_t i = 0; i < schema.tables.size(); ++i) {
    const auto& t = schema.tables[i];
    const std::string where = "tables[" + std::to_string(i) + "]";
    if (t.name.empty()) throw FormatError(where + ".name: empty");
    for (std::size_t j = 0; j < i; ++j) {
      if (SameName(schema.tables[j].name, t.name)) {
        throw FormatError(where + ".name: duplicate table " + t.name);
      }
    }
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto& col = t.columns[c];
      const std::string cw = where + ".columns[" + std::to_string(c) + "]";
      if (col.name.empty()) throw FormatError(cw + ".name: empty");
      for (std::size_t d = 0; d < c; ++d) {
        if (SameName(t.columns[d].name, col.name)) {
          throw FormatError(cw + ".name: duplicate column " + col.name);
        }
      }
      if (col.sample_rows.size() > 10) throw FormatError(cw + ".samples: more than 10 values");
    }
    if (t.primary_key) {
      for (const auto& k : SplitKeyList(*t.primary_key)) {
        if (!FindColumn(t, k)) {
          throw FormatError(where + ".primary_key: no column " + k + " in " + t.name);
        }
      }
    }
  }
  for (std::size_t i = 0; i < schema.foreign_keys.size(); ++i) {
    const auto& fk = schema.foreign_keys[i];
    const std::string where = "foreign_keys[" + std::to_string(i) + "]";
    const TableRepr* a = schema.FindTable(fk.table_a);
    const TableRepr* b = schema.FindTable(fk.table_b);
    if (!a) throw FormatError(where + ".tables: unknown table " + fk.table_a);
    if (!b) throw FormatError(where + ".tables: unknown table " + fk.table_b);
    if (fk.keys.empty()) throw FormatError(where + ".keys: empty");
    for (const auto& [ka, kb] : fk.keys) {
      if (!FindColumn(*a, ka)) throw FormatError(where + ".keys: no column " + ka + " in " + a->name);
      if (!FindColumn(*b, kb)) throw FormatError(where + ".keys: no column " + kb + " in " + b->name);
    }
  }
}

SchemaRepresentation ParseSchemaJson(const json& doc) {
  SchemaRepresentation schema;
  if (!doc.is_object()) throw FormatError("schema: expected a JSON object");
  const json& tables = Field(doc, "tables", "schema");
  if (!tables.is_array()) throw FormatError("tables: expected an array");
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const std::string where = "tables[" + std::to_string(i) + "]";
    const json& t = tables[i];
    TableRepr table;
    table.name = StringField(t, "name", where);
    const json& cols = Field(t, "columns", where);
    if (!cols.is_array()) throw FormatError(where + ".columns: expected an array");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::string cw = where + ".columns[" + std::to_string(c) + "]";
      const json& col = cols[c];
      ColumnRepr repr;
      repr.name = StringField(col, "name", cw);
      repr.col_type = StringField(col, "type", cw);
      if (col.contains("description")) repr.description = StringField(col, "description", cw);
      if (col.contains("samples")) {
        const json& samples = col.at("samples");
        if (!samples.is_array()) throw FormatError(cw + ".samples: expected an array");
        for (const auto& s : samples) repr.sample_rows.push_back(LiteralFromJson(s, cw + ".samples"));
      }
      table.columns.push_back(std::move(repr));
    }
    if (t.contains("primary_key") && !t.at("primary_key").is_null()) {
      table.primary_key = StringField(t, "primary_key", where);
    }
    schema.tables.push_back(std::move(table));
  }
  if (doc.contains("foreign_keys")) {
    const json& fks = doc.at("foreign_keys");
    if (!fks.is_array()) throw FormatError("foreign_keys: expected an array");
    for (std::size_t i = 0; i < fks.size(); ++i) {
      const std::string where = "foreign_keys[" + std::to_string(i) + "]";
      const json& fk = fks[i];
      const json& pair = Field(fk, "tables", where);
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw FormatError(where + ".tables: expected [table_a, table_b]");
      }
      ForeignKey out;
      out.table_a = pair[0].get<std::string>();
      out.table_b = pair[1].get<std::string>();
      const json& keys = Field(fk, "keys", where);
      if (!keys.is_array()) throw FormatError(where + ".keys: expected an array");
      for (const auto& k : keys) {
        if (!k.is_array() || k.size() != 2 || !k[0].is_string() || !k[1].is_string()) {
          throw FormatError(where + ".keys: expected [key_a, key_b] pairs");
        }
        out.keys.emplace_back(k[0].get<std::string>(), k[1].get<std::string>());
      }
      schema.foreign_keys.push_back(std::move(out));
    }
  }
  ValidateSchema(schema);
  return schema;
}

SchemaRepresentation ParseSchemaText(std::string_view text) {
  SchemaRepresentation schema;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  enum class Section { kNone, kTable, kColumns, kForeignKeys } section = Section::kNone;
  auto fail = [&](const std::string& what) -> void {
    throw FormatError("line " + std::to_string(line_no) + ": " + what);
  };
  auto starts = [](const std::string& s, std::string_view prefix) {
    return s.compare(0, prefix.size(), prefix) == 0;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string line = raw;
    while (!line.empty() && line.back() == ' ') line.pop_back();
    std::string content = Trim(line);
    if (content.empty() || content == "..." || content == "- ...") continue;

    if (starts(line, "- Table: ")) {
      TableRepr t;
      t.name = Trim(line.substr(9));
      schema.tables.push_back(std::move(t));
      section = Section::kTable;
    } else if (line == "- Foreign keys:") {
      section = Section::kForeignKeys;
    } else if (section == Section::kForeignKeys) {
      if (starts(line, "  - (") && line.back() == ':') {
        auto inner = line.substr(5, line.size() - 5 - 2);
        auto comma = inner.find(',');
        if (comma == std::string::npos || line[line.size() - 2] != ')') fail("expected (TABLE_A, TABLE_B):");
        ForeignKey fk;
        fk.table_a = Trim(inner.substr(0, comma));
        fk.table_b = Trim(inner.substr(comma + 1));
        schema.foreign_keys.push_back(std::move(fk));
      } else if (starts(line, "    - (") && line.back() == ')') {
        if (schema.foreign_keys.empty()) fail("key pair outside a foreign-key block");
        auto inner = line.substr(7, line.size() - 8);
        auto comma = inner.find(',');
        if (comma == std::string::npos) fail("expected (KEY_A, KEY_B)");
        schema.foreign_keys.back().keys.emplace_back(Trim(inner.substr(0, comma)),
                                                     Trim(inner.substr(comma + 1)));
      } else {
        fail("unexpected line in foreign keys: " + content);
      }
    } else if (section == Section::kNone) {
      fail("expected '- Table: <name>'");
    } else if (line == "  - Columns:") {
      section = Section::kColumns;
    } else if (starts(line, "  - Primary key: ")) {
      schema.tables.back().primary_key = Trim(line.substr(17));
      section = Section::kTable;
    } else if (section == Section::kColumns && starts(line, "     - ")) {
      std::string decl = line.substr(7);
      auto open = decl.rfind(" (");
      if (open == std::string::npos || decl.back() != ')') fail("expected '<column> (<type>)'");
      ColumnRepr c;
      c.name = decl.substr(0, open);
      c.col_type = decl.substr(open + 2, decl.size() - open - 3);
      schema.tables.back().columns.push_back(std::move(c));
    } else if (section == Section::kColumns && starts(line, "       - Description: ")) {
      if (schema.tables.back().columns.empty()) fail("description before any column");
      schema.tables.back().columns.back().description = line.substr(22);
    } else if (section == Section::kColumns && starts(line, "       - Sample rows: ")) {
      if (schema.tables.back().columns.empty()) fail("sample rows before any column");
      schema.tables.back().columns.back().sample_rows = ParseSampleList(line.substr(22), line_no);
    } else {
      fail("unexpected line: " + content);
    }
  }
  ValidateSchema(schema);
  return schema;
}

SchemaRepresentation LoadSchemaFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open schema file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string head = Trim(text);
  try {
    if (!head.empty() && head.front() == '{') {
      json doc;
      try {
        doc = json::parse(text);
      } catch (const json::parse_error& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
      }
      return ParseSchemaJson(doc);
    }
    return ParseSchemaText(text);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json ToJson(const SchemaRepresentation& schema) {
  nlohmann::ordered_json tables = nlohmann::ordered_json::array();
  for (const auto& t : schema.tables) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::array();
    for (const auto& c : t.columns) {
      nlohmann::ordered_json samples = nlohmann::ordered_json::array();
      for (const auto& s : c.sample_rows) samples.push_back(LiteralToJson(s));
      cols.push_back({{"name", c.name},
                      {"type", c.col_type},
                      {"description", c.description},
                      {"samples", samples}});
    }
    nlohmann::ordered_json entry = {{"name", t.name}, {"columns", cols}};
    entry["primary_key"] = t.primary_key ? nlohmann::ordered_json(*t.primary_key) : nullptr;
    tables.push_back(std::move(entry));
  }
  nlohmann::ordered_json fks = nlohmann::ordered_json::array();
  for (const auto& fk : schema.foreign_keys) {
    nlohmann::ordered_json keys = nlohmann::ordered_json::array();
    for (const auto& [a, b] : fk.keys) keys.push_back({a, b});
    fks.push_back({{"tables", {fk.table_a, fk.table_b}}, {"keys", keys}});
  }
  return {{"tables", tables}, {"foreign_keys", fks}};
}

SchemaRepresentation FilterSchema(const SchemaRepresentation& schema,
                                  const std::set<std::string>& keep) {
  // Upper-cased table -> columns requested (empty = whole table).
  std::map<std::string, std::set<std::string>> wanted;
  for (const auto& entry : keep) {
    auto dot = entry.find('.');
    std::string table = sql::ToUpperAscii(entry.substr(0, dot));
    const TableRepr* t = schema.FindTable(table);
    if (!t) throw UnknownElement("unknown table " + entry.substr(0, dot));
    auto& cols = wanted[table];
    if (dot != std::string::npos) {
      std::string column = entry.substr(dot + 1);
      if (!FindColumn(*t, column)) throw UnknownElement("unknown column " + entry);
      cols.insert(sql::ToUpperAscii(column));
    }
  }
  SchemaRepresentation out;
  for (const auto& t : schema.tables) {
    auto it = wanted.find(sql::ToUpperAscii(t.name));
    if (it == wanted.end()) continue;
    TableRepr kept = t;
    if (!it->second.empty()) {
      kept.columns.clear();
      for (const auto& c : t.columns) {
        if (it->second.count(sql::ToUpperAscii(c.name))) kept.columns.push_back(c);
      }
      if (kept.primary_key) {
        for (const auto& k : SplitKeyList(*kept.primary_key)) {
          if (!FindColumn(kept, k)) {
            kept.primary_key.reset();
            break;
          }
        }
      }
    }
    out.tables.push_back(std::move(kept));
  }
  for (const auto& fk : schema.foreign_keys) {
    const TableRepr* a = out.FindTable(fk.table_a);
    const TableRepr* b = out.FindTable(fk.table_b);
    if (!a || !b) continue;
    ForeignKey kept{fk.table_a, fk.table_b, {}};
    for (const auto& [ka, kb] : fk.keys) {
      if (FindColumn(*a, ka) && FindColumn(*b, kb)) kept.keys.emplace_back(ka, kb);
    }
    if (!kept.keys.empty()) out.foreign_keys.push_back(std::move(kept));
  }
  return out;
}

std::string RenderSchema(const SchemaRepresentation& schema,
                         const std::optional<std::set<std::string>>& keep) {
  if (keep) return RenderSchema(FilterSchema(schema, *keep));
  std::string out;
  for (const auto& t : schema.tables) {
    out += "- Table: " + t.name + "\n";
    out += "  - Columns:\n";
    for (const auto& c : t.columns) {
      out += "     - " + c.name + " (" + c.col_type + ")\n";
      if (!c.description.empty()) out += "       - Description: " + c.description + "\n";
      if (!c.sample_rows.empty()) {
        out += "       - Sample rows: " + RenderSampleList(c.sample_rows) + "\n";
      }
    }
    if (t.primary_key) out += "  - Primary key: " + *t.primary_key + "\n";
  }
  if (!schema.foreign_keys.empty()) {
    out += "- Foreign keys: \n";
    for (const auto& fk : schema.foreign_keys) {
      out += "  - (" + fk.table_a + ", " + fk.table_b + "): \n";
      for (const auto& [a, b] : fk.keys) out += "    - (" + a + ", " + b + ")\n";
    }
  }
  return out;
}

}  // namespace sqlinsight
