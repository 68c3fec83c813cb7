#include "sqlinsight/adaptation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/sql/printer.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kRejectionsFile = "rejections.jsonl";
constexpr const char* kErrorsFile = "errors.jsonl";

std::string_view SourceLabel(FeedbackSource s) { return s == FeedbackSource::kUser ? "user" : "system"; }

ojson OptString(const std::optional<std::string>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<std::string> OptFrom(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<std::string>();
}

std::vector<sql::Token> SqlTokens(const std::string& text) {
  std::string normalized;
  try {
    normalized = sql::NormalizeSql(text);
  } catch (const Error&) {
    normalized = sql::NormalizeFragment(text);
  }
  auto tokens = sql::Tokenize(normalized);
  if (!tokens.empty() && tokens.back().kind == sql::TokenKind::kEnd) tokens.pop_back();
  return tokens;
}

std::string Abstract(const sql::Token& t) {
  switch (t.kind) {
    case sql::TokenKind::kWord:
      return sql::IsReservedWord(t.Upper()) ? t.Upper() : "ID";
    case sql::TokenKind::kQuotedIdent:
      return "ID";
    case sql::TokenKind::kString:
      return "STR";
    default:
      return t.text;
  }
}

std::string Join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::string GroupPrompt(const std::string& pattern, const std::vector<const RejectionPair*>& group) {
  std::string prompt =
      "Analysts corrected generated SQL in the same way several times. Write one\n"
      "guideline for future SQL generation in the style \"<Title>: <rule>.\". On a\n"
      "second line, optionally give an SQL example starting with \"e.g. \".\n\n"
      "### Edit pattern\n\n" +
      pattern + "\n\n### Corrections\n\n";
  for (std::size_t i = 0; i < group.size() && i < 3; ++i) {
    prompt += "Before: " + group[i]->original_sql + "\nAfter:  " + group[i]->corrected_sql + "\n\n";
  }
  return prompt;
}

void Promote(const std::string& sql_text, const RequestRecord& ctx, const KnowledgeSet& base,
             ModelClient& model, KnowledgeSet& out) {
  QuerySketch sketch = Decompose(sql_text);
  DecomposedExample ex = Annotate(sketch, ctx.nl, model);
  out = AddExample(base, ex, ctx.canonical.intent.empty() ? "general" : ctx.canonical.intent).ks;
}

}  // namespace

ojson ToJson(const RequestRecord& r) {
  ojson j;
  j["request_id"] = r.request_id;
  j["created_at"] = r.created_at;
  j["nl"] = r.nl;
  j["canonical"] = {{"original", r.canonical.original},
                    {"reformulated", r.canonical.reformulated},
                    {"intent", r.canonical.intent},
                    {"key_terms", r.canonical.key_terms}};
  j["example_ids"] = r.example_ids;
  j["instruction_ids"] = r.instruction_ids;
  j["final_sql"] = r.final_sql;
  j["status"] = r.status;
  j["first_failed_sql"] = OptString(r.first_failed_sql);
  j["knowledge_version"] = r.knowledge_version;
  j["verdicts"] = r.verdicts;
  return j;
}

RequestRecord RequestFromJson(const nlohmann::json& doc) {
  try {
    RequestRecord r;
    r.request_id = doc.at("request_id").get<std::string>();
    r.created_at = doc.at("created_at").get<std::string>();
    r.nl = doc.at("nl").get<std::string>();
    const auto& c = doc.at("canonical");
    r.canonical.original = c.at("original").get<std::string>();
    r.canonical.reformulated = c.at("reformulated").get<std::string>();
    r.canonical.intent = c.at("intent").get<std::string>();
    r.canonical.key_terms = c.at("key_terms").get<std::vector<std::string>>();
    r.example_ids = doc.at("example_ids").get<std::vector<std::string>>();
    r.instruction_ids = doc.at("instruction_ids").get<std::vector<std::string>>();
    r.final_sql = doc.at("final_sql").get<std::string>();
    r.status = doc.at("status").get<std::string>();
    r.first_failed_sql = OptFrom(doc, "first_failed_sql");
    r.knowledge_version = doc.at("knowledge_version").get<std::uint64_t>();
    r.verdicts = doc.value("verdicts", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed request record: ") + e.what());
  }
}

AdaptationJournal::AdaptationJournal(std::optional<fs::path> dir) : dir_(std::move(dir)) {}

void AdaptationJournal::AppendLine(const std::string& file, const std::string& line) {
  std::error_code ec;
  fs::create_directories(*dir_, ec);
  std::ofstream out(*dir_ / file, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + (*dir_ / file).string());
  const std::string record = line + "\n";
  out.write(record.data(), static_cast<std::streamsize>(record.size()));
  out.flush();
  if (!out) throw IoError("append failed for " + (*dir_ / file).string());
}

std::vector<nlohmann::json> AdaptationJournal::ReadLines(const std::string& file) const {
  std::vector<nlohmann::json> out;
  std::ifstream in(*dir_ / file, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    auto doc = nlohmann::json::parse(line, nullptr, false);
    // A torn final line from a crash is skipped.
    if (!doc.is_discarded()) out.push_back(std::move(doc));
  }
  return out;
}

void AdaptationJournal::AppendRejection(const RejectionRecord& r) {
  std::lock_guard lock(mu_);
  if (!dir_) {
    rejections_.push_back(r);
    return;
  }
  ojson j;
  j["request_id"] = r.request_id;
  j["original_sql"] = r.original_sql;
  j["corrected_sql"] = OptString(r.corrected_sql);
  j["intent"] = r.intent;
  j["source"] = SourceLabel(r.source);
  j["note"] = OptString(r.note);
  j["version"] = r.version;
  j["timestamp"] = r.timestamp;
  AppendLine(kRejectionsFile, j.dump());
}

std::vector<RejectionRecord> AdaptationJournal::Rejections() const {
  std::lock_guard lock(mu_);
  if (!dir_) return rejections_;
  std::vector<RejectionRecord> out;
  for (const auto& j : ReadLines(kRejectionsFile)) {
    RejectionRecord r;
    r.request_id = j.value("request_id", "");
    r.original_sql = j.value("original_sql", "");
    r.corrected_sql = OptFrom(j, "corrected_sql");
    r.intent = j.value("intent", "");
    r.source = j.value("source", "user") == "system" ? FeedbackSource::kSystem : FeedbackSource::kUser;
    r.note = OptFrom(j, "note");
    r.version = j.value("version", std::uint64_t{0});
    r.timestamp = j.value("timestamp", "");
    out.push_back(std::move(r));
  }
  return out;
}

void AdaptationJournal::AppendError(const ErrorRecord& r) {
  std::lock_guard lock(mu_);
  if (!dir_) {
    errors_.push_back(r);
    return;
  }
  ojson j;
  j["request_id"] = r.request_id;
  j["version"] = r.version;
  j["kind"] = r.kind;
  j["message"] = r.message;
  j["timestamp"] = r.timestamp;
  AppendLine(kErrorsFile, j.dump());
}

std::vector<ErrorRecord> AdaptationJournal::Errors() const {
  std::lock_guard lock(mu_);
  if (!dir_) return errors_;
  std::vector<ErrorRecord> out;
  for (const auto& j : ReadLines(kErrorsFile)) {
    out.push_back({j.value("request_id", ""), j.value("version", std::uint64_t{0}),
                   j.value("kind", ""), j.value("message", ""), j.value("timestamp", "")});
  }
  return out;
}

std::string UtcTimestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

void RecordExecutionError(const std::string& request_id, const ExecutionFeedback& feedback,
                          std::uint64_t version, AdaptationJournal& journal) {
  journal.AppendError({request_id, version, std::string(FeedbackKindName(feedback.kind)),
                       feedback.message, UtcTimestamp()});
}

std::string DiffPattern(const std::string& original, const std::string& corrected) {
  const auto a = SqlTokens(original);
  const auto b = SqlTokens(corrected);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  auto same = [&](std::size_t i, std::size_t j) {
    return a[i].kind == b[j].kind &&
           (a[i].kind == sql::TokenKind::kString ? a[i].text == b[j].text
                                                 : a[i].Upper() == b[j].Upper());
  };
  // lcs[i][j]: LCS length of a[i:] and b[j:].
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = same(i, j) ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::vector<std::string> hunks;
  std::vector<std::string> removed;
  std::vector<std::string> added;
  auto flush = [&]() {
    if (removed.empty() && added.empty()) return;
    std::string h;
    if (!removed.empty()) h += "-[" + Join(removed, " ") + "]";
    if (!added.empty()) h += std::string(h.empty() ? "" : " ") + "+[" + Join(added, " ") + "]";
    hunks.push_back(std::move(h));
    removed.clear();
    added.clear();
  };
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && same(i, j)) {
      flush();
      ++i;
      ++j;
    } else if (j < m && (i == n || lcs[i][j + 1] >= lcs[i + 1][j])) {
      added.push_back(Abstract(b[j++]));
    } else {
      removed.push_back(Abstract(a[i++]));
    }
  }
  flush();
  return Join(hunks, " ; ");
}

std::string AdaptationId(const std::string& pattern) {
  return "adapt_" + Sha256Hex(pattern).substr(0, 12);
}

std::optional<Instruction> DeriveInstruction(const std::vector<RejectionPair>& rejections,
                                             ModelClient& model, std::size_t min_group,
                                             const std::set<std::string>& known_ids) {
  std::map<std::string, std::vector<const RejectionPair*>> groups;
  for (const auto& r : rejections) {
    std::string pattern = DiffPattern(r.original_sql, r.corrected_sql);
    if (!pattern.empty()) groups[pattern].push_back(&r);
  }
  const std::string* best = nullptr;
  std::size_t best_size = 0;
  for (const auto& [pattern, members] : groups) {
    if (members.size() < min_group || known_ids.count(AdaptationId(pattern))) continue;
    if (members.size() > best_size) {
      best = &pattern;
      best_size = members.size();
    }
  }
  if (!best) return std::nullopt;
  const auto& group = groups[*best];

  std::string reply;
  try {
    reply = StripCodeFences(model.Complete(GroupPrompt(*best, group), ModelRole::kDerive));
  } catch (const ModelError&) {
    return std::nullopt;
  }
  Instruction instr;
  instr.id = AdaptationId(*best);
  instr.source = InstructionSource::kAdaptation;
  std::istringstream in(reply);
  std::string line;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    if (line.rfind("e.g.", 0) == 0) {
      if (!instr.sql_snippet) instr.sql_snippet = Trim(line.substr(4));
    } else if (instr.text.empty()) {
      instr.text = line;
    } else if (!instr.sql_snippet) {
      instr.text += " " + line;
    }
  }
  if (instr.text.empty()) return std::nullopt;
  if (instr.sql_snippet && instr.sql_snippet->empty()) instr.sql_snippet.reset();
  std::set<std::string> intents;
  for (const auto* r : group) {
    if (!r->intent.empty()) intents.insert(r->intent);
  }
  instr.intents.assign(intents.begin(), intents.end());
  return instr;
}

KnowledgeSet IngestFeedback(const Feedback& feedback, const RequestRecord& context,
                            const KnowledgeSet& ks, ModelClient& model,
                            AdaptationJournal& journal, std::size_t min_group) {
  if (feedback.request_id != context.request_id) {
    throw UnknownRequest("feedback for " + feedback.request_id + " does not match the request record");
  }
  if (feedback.corrected_sql) {
    if (auto problem = SqlProblem(CleanModelSql(*feedback.corrected_sql))) {
      throw InvalidCorrection("corrected SQL does not parse: " + *problem);
    }
  }

  KnowledgeSet out = ks;
  if (feedback.verdict == Verdict::kAccept) {
    Promote(context.final_sql, context, ks, model, out);
    return out;
  }

  std::optional<std::string> corrected;
  if (feedback.corrected_sql) corrected = CleanModelSql(*feedback.corrected_sql);
  journal.AppendRejection({context.request_id, context.final_sql, corrected,
                           context.canonical.intent, feedback.source, feedback.note, ks.version,
                           UtcTimestamp()});
  if (!corrected) return out;

  Promote(*corrected, context, ks, model, out);

  std::vector<RejectionPair> pairs;
  for (const auto& r : journal.Rejections()) {
    if (r.corrected_sql) pairs.push_back({r.original_sql, *r.corrected_sql, r.intent});
  }
  std::set<std::string> known;
  for (const auto& [id, instr] : out.instructions) known.insert(id);
  if (auto derived = DeriveInstruction(pairs, model, min_group, known)) {
    out = AddInstruction(out, *derived);
  }
  return out;
}

}  // namespace sqlinsight
