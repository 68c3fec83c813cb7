#include "sqlinsight/pipeline.hpp"

#include <cstdio>
#include <random>
#include <set>

#include "sqlinsight/errors.hpp"

namespace sqlinsight {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename T>
T Get(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

fs::path Resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

PipelineConfig PipelineConfig::FromJson(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "knowledge_dir", "database",     "schema_file",         "model",
      "k_examples",    "k_instructions", "lambda",            "tau_intent",
      "prune_per_table", "max_rounds", "execution_timeout_s", "request_timeout_s",
      "criteria",      "row_count_bound", "preview_rows",     "dialect",
      "rejection_threshold"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  PipelineConfig c;
  c.knowledge_dir = Resolve(base_dir, Get<std::string>(doc, "knowledge_dir", ""));
  c.database = Resolve(base_dir, Get<std::string>(doc, "database", ""));
  if (auto schema = Get<std::string>(doc, "schema_file", ""); !schema.empty()) {
    c.schema_file = Resolve(base_dir, schema);
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    if (!m.is_object()) throw ConfigError("config key 'model' must be an object");
    c.model.provider = Get<std::string>(m, "provider", c.model.provider);
    if (auto fixture = Get<std::string>(m, "fixture", ""); !fixture.empty()) {
      c.model.fixture = Resolve(base_dir, fixture).string();
    }
    c.model.http.endpoint = Get<std::string>(m, "endpoint", "");
    c.model.http.api_key = Get<std::string>(m, "api_key", "");
    c.model.http.model_id = Get<std::string>(m, "model_id", "");
    c.model.http.timeout = std::chrono::seconds(Get<long>(m, "timeout_s", 30));
  }
  c.retrieval.k_examples = Get<std::size_t>(doc, "k_examples", c.retrieval.k_examples);
  c.retrieval.k_instructions = Get<std::size_t>(doc, "k_instructions", c.retrieval.k_instructions);
  c.retrieval.lambda = Get<double>(doc, "lambda", c.retrieval.lambda);
  c.retrieval.tau_intent = Get<double>(doc, "tau_intent", c.retrieval.tau_intent);
  c.retrieval.prune_per_table = Get<bool>(doc, "prune_per_table", false);
  c.max_rounds = Get<int>(doc, "max_rounds", c.max_rounds);
  c.assessment.timeout =
      std::chrono::milliseconds(static_cast<long>(Get<double>(doc, "execution_timeout_s", 15) * 1000));
  c.request_timeout = std::chrono::seconds(Get<long>(doc, "request_timeout_s", 60));
  if (doc.contains("criteria")) {
    c.assessment.criteria.clear();
    for (const auto& id : Get<std::vector<std::string>>(doc, "criteria", {})) {
      c.assessment.criteria.insert(id);
    }
  }
  c.assessment.row_count_bound = Get<std::size_t>(doc, "row_count_bound", c.assessment.row_count_bound);
  c.assessment.preview_rows = Get<std::size_t>(doc, "preview_rows", c.assessment.preview_rows);
  c.dialect = Get<std::string>(doc, "dialect", c.dialect);
  c.rejection_threshold = Get<std::size_t>(doc, "rejection_threshold", c.rejection_threshold);
  c.Validate();
  return c;
}

PipelineConfig PipelineConfig::FromFile(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  PipelineConfig c = FromJson(doc, fs::absolute(path).parent_path());
  c.model = ApplyModelEnvironment(c.model);
  c.Validate();
  return c;
}

void PipelineConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(retrieval.k_examples >= 1 && retrieval.k_examples <= 50, "k_examples must be in [1, 50]");
  require(retrieval.k_instructions >= 1 && retrieval.k_instructions <= 100,
          "k_instructions must be in [1, 100]");
  require(retrieval.lambda >= 0.0 && retrieval.lambda <= 1.0, "lambda must be in [0, 1]");
  require(retrieval.tau_intent >= 0.0 && retrieval.tau_intent <= 1.0, "tau_intent must be in [0, 1]");
  require(max_rounds >= 0 && max_rounds <= 10, "max_rounds must be in [0, 10]");
  require(assessment.timeout.count() > 0, "execution_timeout_s must be positive");
  require(request_timeout.count() > 0, "request_timeout_s must be positive");
  require(assessment.preview_rows >= 1, "preview_rows must be at least 1");
  require(rejection_threshold >= 1, "rejection_threshold must be at least 1");
  require(dialect == "ansi", "dialect must be \"ansi\"");
  static const std::set<std::string> kCriteria = {kCriterionEmptyResult, kCriterionAllNullColumn,
                                                  kCriterionRowCount, kCriterionSemanticFit};
  for (const auto& id : assessment.criteria) require(kCriteria.count(id) > 0, "unknown criterion '" + id + "'");
  require(model.provider == "scripted" || model.provider == "openai",
          "model.provider must be \"scripted\" or \"openai\"");
}

ojson QueryResponse::ToJson(bool include_volatile) const {
  ojson j;
  if (include_volatile) {
    j["request_id"] = request_id;
    j["created_at"] = created_at;
  }
  j["status"] = status;
  j["error"] = error.empty() ? ojson(nullptr) : ojson(error);
  j["canonical"] = {{"original", canonical.original},
                    {"reformulated", canonical.reformulated},
                    {"intent", canonical.intent},
                    {"key_terms", canonical.key_terms}};
  j["sql"] = sql;
  j["plan"] = sqlinsight::ToJson(plan);
  auto scored = [](const std::vector<std::pair<std::string, double>>& items) {
    ojson arr = ojson::array();
    for (const auto& [id, score] : items) arr.push_back({{"id", id}, {"score", score}});
    return arr;
  };
  j["retrieval"] = {{"examples", scored(examples)},
                    {"instructions", scored(instructions)},
                    {"schema_tables", schema_tables}};
  ojson history_json = ojson::array();
  for (const auto& round : history) {
    ojson fb = ojson::array();
    for (const auto& f : round.feedback) fb.push_back(sqlinsight::ToJson(f));
    history_json.push_back({{"sql", round.candidate.sql},
                            {"role", RoleName(round.candidate.role)},
                            {"attempt", round.candidate.attempt},
                            {"feedback", fb}});
  }
  j["correction"] = {
      {"status", correction_status ? ojson(StatusName(*correction_status)) : ojson(nullptr)},
      {"rounds_used", rounds_used},
      {"history", history_json}};
  j["execution"] = preview ? sqlinsight::ToJson(*preview) : ojson(nullptr);
  ojson timings;
  if (include_volatile) {
    ojson ms = ojson::object();
    for (const auto& [stage, value] : stage_ms) ms[stage] = value;
    timings["stages_ms"] = ms;
  }
  timings["stages"] = stages;
  timings["fallbacks"] = fallbacks;
  j["timings"] = timings;
  j["model_calls"] = model_calls;
  j["knowledge_version"] = knowledge_version;
  return j;
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<const ModelProvider> provider,
                   std::optional<DatabaseHandle> db)
    : config_(std::move(config)),
      provider_(provider ? std::move(provider) : MakeModelProvider(config_.model)),
      db_(std::move(db)),
      store_(config_.knowledge_dir.empty() || !HasSnapshot(config_.knowledge_dir)
                 ? KnowledgeSet{}
                 : Load(config_.knowledge_dir),
             config_.knowledge_dir.empty() ? std::nullopt
                                           : std::optional<fs::path>(config_.knowledge_dir)),
      journal_(config_.knowledge_dir.empty() ? std::nullopt
                                             : std::optional<fs::path>(config_.knowledge_dir)) {
  config_.Validate();
  if (!db_ && !config_.database.empty()) db_ = DatabaseHandle::OpenFile(config_.database.string());
}

const DatabaseHandle& Pipeline::db() const {
  if (!db_) throw ConfigError("no database configured");
  return *db_;
}

BootstrapReport Pipeline::Preprocess(const std::optional<fs::path>& logs,
                                     const std::optional<fs::path>& docs) {
  std::vector<LogEntry> entries;
  std::vector<fs::path> doc_files;
  if (logs) entries = LoadLogs(*logs);
  if (docs) doc_files = ListDocs(*docs);

  auto snapshot = store_.Snapshot();
  const bool existing = snapshot->version > 0;
  if (entries.empty() && doc_files.empty()) {
    if (!existing) throw IoError("no usable inputs and no existing knowledge set");
    return {};
  }

  SchemaSource source;
  if (config_.schema_file) {
    source = *config_.schema_file;
  } else if (db_) {
    source = *db_;
  }
  auto model = provider_->OpenSession();
  BootstrapReport report;
  store_.Update([&](const KnowledgeSet& ks) {
    BootstrapResult result =
        Bootstrap(entries, source, doc_files, *model, ks, config_.retrieval.tau_intent);
    report = std::move(result.report);
    return std::move(result.ks);
  });
  if (!existing && report.examples == 0 && report.instructions == 0 && report.tables == 0) {
    throw IoError("no usable inputs and no existing knowledge set");
  }
  return report;
}

std::string Pipeline::NewRequestId() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[24];
  std::snprintf(buf, sizeof buf, "req_%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

QueryResponse Pipeline::Query(const std::string& nl, RequestTrace* external_trace) {
  RequestTrace local_trace;
  RequestTrace& trace = external_trace ? *external_trace : local_trace;
  const auto started = Clock::now();
  const auto deadline = started + config_.request_timeout;

  QueryResponse response;
  response.request_id = NewRequestId();
  response.created_at = UtcTimestamp();
  auto snapshot = store_.Snapshot();
  response.knowledge_version = snapshot->version;
  auto model = provider_->OpenSession();

  auto finish = [&](std::string status) {
    response.status = std::move(status);
    response.stages = trace.stages;
    response.fallbacks = trace.fallbacks;
    response.model_calls = model->call_count();
    return response;
  };
  auto timed = [&](const char* stage, auto&& fn) {
    auto t0 = Clock::now();
    if (stage != std::string_view("retrieval")) trace.Enter(stage);
    fn();
    response.stage_ms.emplace_back(stage, MillisSince(t0));
  };
  auto out_of_time = [&]() {
    if (Clock::now() <= deadline) return false;
    response.error = "request exceeded " + std::to_string(config_.request_timeout.count()) + " s";
    return true;
  };

  if (nl.empty()) {
    response.error = "empty query";
    return finish("error");
  }

  try {
    CanonicalQuery cq;
    timed("reformulate", [&] {
      cq = Reformulate(nl, *snapshot, *model, config_.retrieval.tau_intent, &trace);
    });
    response.canonical = cq;
    if (out_of_time()) return finish("timeout");

    RetrievalResult rr;
    timed("retrieval", [&] { rr = Retrieve(cq, *snapshot, *model, config_.retrieval, &trace); });
    for (const auto& e : rr.examples) response.examples.emplace_back(e.id, e.score);
    for (const auto& i : rr.instructions) response.instructions.emplace_back(i.id, i.score);
    for (const auto& t : rr.pruned_schema.tables) response.schema_tables.push_back(t.name);
    if (out_of_time()) return finish("timeout");

    CoTPlan plan;
    timed("plan", [&] {
      std::vector<DecomposedExample> examples;
      for (const auto& e : rr.examples) examples.push_back(e.example);
      plan = AugmentWithPseudoSql(BuildPlan(cq, rr, *model, &trace), examples);
    });
    response.plan = plan;
    if (out_of_time()) return finish("timeout");

    PromptBundle bundle = AssemblePrompt(cq, rr, plan);
    CandidateSql candidate;
    try {
      timed("generate", [&] { candidate = GenerateSql(bundle, plan, *model); });
    } catch (const UnparsableGeneration& e) {
      response.error = e.what();
      return finish("unparsable");
    }
    response.sql = candidate.sql;
    if (out_of_time()) return finish("timeout");

    CorrectionOutcome outcome;
    timed("correction", [&] {
      outcome = RunCorrectionLoop(candidate, cq, bundle, db(), *model, config_.max_rounds,
                                  config_.assessment, &trace);
    });
    response.sql = outcome.final.sql;
    response.correction_status = outcome.status;
    response.rounds_used = outcome.rounds_used;
    response.history = outcome.history;
    response.preview = outcome.result;

    RequestRecord record;
    record.request_id = response.request_id;
    record.created_at = response.created_at;
    record.nl = nl;
    record.canonical = cq;
    for (const auto& e : rr.examples) record.example_ids.push_back(e.id);
    for (const auto& i : rr.instructions) record.instruction_ids.push_back(i.id);
    record.final_sql = outcome.final.sql;
    record.status = std::string(StatusName(outcome.status));
    record.knowledge_version = snapshot->version;
    for (const auto& round : outcome.history) {
      for (const auto& fb : round.feedback) {
        if (fb.kind != FeedbackKind::kAssessmentFailure) {
          RecordExecutionError(record.request_id, fb, snapshot->version, journal_);
        }
      }
    }
    if (outcome.status == CorrectionStatus::kCorrected) {
      record.first_failed_sql = outcome.history.front().candidate.sql;
      journal_.AppendRejection({record.request_id, *record.first_failed_sql, record.final_sql,
                                cq.intent, FeedbackSource::kSystem, std::nullopt,
                                snapshot->version, UtcTimestamp()});
    }
    SaveRecord(record);
    return finish(outcome.status == CorrectionStatus::kExhausted ? "exhausted" : "ok");
  } catch (const ModelError& e) {
    response.error = e.what();
    return finish("error");
  }
}

void Pipeline::SaveRecord(const RequestRecord& record) {
  if (!config_.knowledge_dir.empty()) {
    fs::path dir = config_.knowledge_dir / "requests";
    std::error_code ec;
    fs::create_directories(dir, ec);
    WriteFileAtomic(dir / (record.request_id + ".json"), ToJson(record).dump(2) + "\n");
  }
  std::lock_guard lock(requests_mu_);
  requests_[record.request_id] = record;
}

RequestRecord Pipeline::GetRequest(const std::string& request_id) const {
  {
    std::lock_guard lock(requests_mu_);
    auto it = requests_.find(request_id);
    if (it != requests_.end()) return it->second;
  }
  const bool safe_id = !request_id.empty() &&
                       request_id.find_first_of("/\\.") == std::string::npos;
  if (safe_id && !config_.knowledge_dir.empty()) {
    fs::path file = config_.knowledge_dir / "requests" / (request_id + ".json");
    if (fs::exists(file)) {
      try {
        return RequestFromJson(nlohmann::json::parse(ReadFile(file)));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError(file.string() + ": " + e.what());
      }
    }
  }
  throw UnknownRequest("unknown request " + request_id);
}

std::uint64_t Pipeline::SubmitFeedback(const Feedback& feedback) {
  std::lock_guard serial(feedback_mu_);
  RequestRecord record = GetRequest(feedback.request_id);
  auto model = provider_->OpenSession();
  std::uint64_t version = store_.Update([&](const KnowledgeSet& ks) {
    return IngestFeedback(feedback, record, ks, *model, journal_, config_.rejection_threshold);
  });
  record.verdicts.push_back(feedback.verdict == Verdict::kAccept ? "accept" : "reject");
  SaveRecord(record);
  return version;
}

ojson Pipeline::KnowledgeSummary() const {
  auto ks = store_.Snapshot();
  ojson partitions = ojson::object();
  for (const auto& [intent, ids] : ks->partitions) partitions[intent] = ids.size();
  std::vector<std::string> tables;
  for (const auto& t : ks->schema.tables) tables.push_back(t.name);
  return {{"version", ks->version},
          {"examples", ks->examples.size()},
          {"instructions", ks->instructions.size()},
          {"partitions", partitions},
          {"tables", tables}};
}

}  // namespace sqlinsight
