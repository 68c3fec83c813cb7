#include "sqlinsight/bootstrap.hpp"

#include <algorithm>
#include <cctype>

#include "sqlinsight/decomposer.hpp"
#include "sqlinsight/errors.hpp"
#include "sqlinsight/retrieval.hpp"
#include "sqlinsight/schema.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

namespace fs = std::filesystem;

std::vector<fs::path> FilesWithExtensions(const fs::path& path,
                                          std::initializer_list<std::string_view> exts) {
  std::vector<fs::path> out;
  auto matches = [&](const fs::path& p) {
    return std::find(exts.begin(), exts.end(), p.extension().string()) != exts.end();
  };
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && matches(entry.path())) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
  } else if (fs::exists(path)) {
    out.push_back(path);
  } else {
    throw IoError("no such file or directory: " + path.string());
  }
  return out;
}

std::optional<std::string> NlHint(std::string_view comment) {
  std::string body = Trim(comment);
  if (body.size() < 3) return std::nullopt;
  std::string head;
  for (char c : body.substr(0, 3)) head += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (head != "nl:") return std::nullopt;
  std::string text = Trim(body.substr(3));
  if (text.empty()) return std::nullopt;
  return text;
}

}  // namespace

std::vector<LogEntry> SplitSqlLog(std::string_view text, const std::string& origin) {
  std::vector<LogEntry> out;
  std::string current;
  std::optional<std::string> hint;
  bool has_content = false;
  std::size_t index = 0;

  auto finish = [&]() {
    if (has_content) {
      out.push_back({Trim(current), hint, origin + ":" + std::to_string(++index)});
    }
    current.clear();
    hint.reset();
    has_content = false;
  };

  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {
      std::size_t end = text.find('\n', i);
      if (end == std::string_view::npos) end = text.size();
      if (auto h = NlHint(text.substr(i + 2, end - i - 2))) hint = h;
      current.append(text.substr(i, end - i));
      i = end;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
      std::size_t end = text.find("*/", i + 2);
      end = end == std::string_view::npos ? text.size() : end + 2;
      current.append(text.substr(i, end - i));
      i = end;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      std::size_t j = i + 1;
      while (j < text.size()) {
        if (text[j] == c) {
          if (j + 1 < text.size() && text[j + 1] == c) {
            j += 2;
            continue;
          }
          break;
        }
        ++j;
      }
      std::size_t end = std::min(j + 1, text.size());
      current.append(text.substr(i, end - i));
      has_content = true;
      i = end;
      continue;
    }
    if (c == ';') {
      finish();
      ++i;
      continue;
    }
    if (!std::isspace(static_cast<unsigned char>(c))) has_content = true;
    current += c;
    ++i;
  }
  finish();
  return out;
}

std::vector<LogEntry> LoadLogs(const fs::path& path) {
  std::vector<LogEntry> out;
  for (const auto& file : FilesWithExtensions(path, {".sql", ".json"})) {
    const std::string text = ReadFile(file);
    const std::string origin = file.filename().string();
    if (file.extension() == ".sql") {
      for (auto& e : SplitSqlLog(text, origin)) out.push_back(std::move(e));
      continue;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(origin + ": " + e.what());
    }
    if (!doc.is_array()) throw FormatError(origin + ": expected an array of log entries");
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const std::string where = origin + ":" + std::to_string(i + 1);
      const auto& item = doc[i];
      if (item.is_string()) {
        out.push_back({item.get<std::string>(), std::nullopt, where});
      } else if (item.is_object() && item.contains("sql") && item.at("sql").is_string()) {
        std::optional<std::string> nl;
        if (item.contains("nl") && item.at("nl").is_string()) nl = item.at("nl").get<std::string>();
        out.push_back({item.at("sql").get<std::string>(), nl, where});
      } else {
        throw FormatError(where + ": expected a string or {sql, nl?}");
      }
    }
  }
  return out;
}

std::vector<fs::path> ListDocs(const fs::path& path) { return FilesWithExtensions(path, {".json"}); }

nlohmann::ordered_json ToJson(const BootstrapReport& report) {
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
  for (const auto& s : report.skipped) skipped.push_back({{"origin", s.origin}, {"reason", s.reason}});
  return {{"examples", report.examples},
          {"instructions", report.instructions},
          {"tables", report.tables},
          {"skipped", skipped}};
}

BootstrapResult Bootstrap(const std::vector<LogEntry>& logs, const SchemaSource& schema_source,
                          const std::vector<fs::path>& docs, ModelClient& model, KnowledgeSet base,
                          double tau_intent) {
  BootstrapResult result{std::move(base), {}};
  KnowledgeSet& ks = result.ks;
  BootstrapReport& report = result.report;

  try {
    std::optional<SchemaRepresentation> schema;
    if (auto* db = std::get_if<DatabaseHandle>(&schema_source)) {
      schema = Introspect(*db);
    } else if (auto* file = std::get_if<fs::path>(&schema_source)) {
      schema = LoadSchemaFile(*file);
    }
    if (schema) {
      ks = SetSchema(ks, *schema);
      report.tables = schema->tables.size();
    }
  } catch (const Error& e) {
    report.skipped.push_back({"schema", e.what()});
  }

  for (const auto& doc : docs) {
    std::vector<Instruction> items;
    try {
      items = LoadInstructionFile(doc, "doc_" + doc.stem().string());
    } catch (const Error& e) {
      report.skipped.push_back({doc.filename().string(), e.what()});
      continue;
    }
    for (auto& instr : items) {
      try {
        ks = AddInstruction(ks, instr);
        ++report.instructions;
      } catch (const Error& e) {
        report.skipped.push_back({doc.filename().string() + ":" + instr.id, e.what()});
      }
    }
  }

  for (const auto& entry : logs) {
    try {
      QuerySketch sketch = Decompose(entry.sql);
      DecomposedExample ex = Annotate(sketch, entry.nl, model);
      std::string intent = ClassifyIntent(ex.input_nl, ks, model, tau_intent);
      ks = AddExample(ks, ex, intent).ks;
      ++report.examples;
    } catch (const Error& e) {
      report.skipped.push_back({entry.origin, e.what()});
    }
  }
  return result;
}

}  // namespace sqlinsight
