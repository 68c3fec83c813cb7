// Command line front end.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "sqlinsight/decomposer.hpp"
#include "sqlinsight/demo_data.hpp"
#include "sqlinsight/knowledge.hpp"
#include "sqlinsight/pipeline.hpp"
#include "sqlinsight/service.hpp"

namespace fs = std::filesystem;
using namespace sqlinsight;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void OnSignal(int) { g_stop = 1; }

std::string ReadInput(const std::string& path_or_dash) {
  if (path_or_dash == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  return ReadFile(path_or_dash);
}

int Run(int argc, char** argv) {
  CLI::App app{"sqlinsight: natural language to SQL"};
  app.require_subcommand(1);
  std::string config_path = "sqlinsight.json";
  app.add_option("-c,--config", config_path, "Pipeline config file");

  auto* preprocess = app.add_subcommand("preprocess", "Build or extend the knowledge set");
  std::string logs, docs;
  preprocess->add_option("--logs", logs, "SQL log file or directory");
  preprocess->add_option("--docs", docs, "Instruction document file or directory");

  auto* query = app.add_subcommand("query", "Answer a question");
  std::string nl;
  bool brief = false;
  query->add_option("nl", nl, "Question")->required();
  query->add_flag("--sql-only", brief, "Print only the final SQL");

  auto* feedback = app.add_subcommand("feedback", "Accept or reject a past answer");
  std::string request_id, corrected_file, note;
  bool accept = false, reject = false;
  feedback->add_option("request_id", request_id)->required();
  auto* accept_flag = feedback->add_flag("--accept", accept);
  auto* reject_flag = feedback->add_flag("--reject", reject);
  accept_flag->excludes(reject_flag);
  feedback->add_option("--sql", corrected_file, "Corrected SQL file, - for stdin");
  feedback->add_option("--note", note);

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* decompose = app.add_subcommand("decompose", "Print the decomposition of a query");
  std::string sql_file;
  decompose->add_option("file", sql_file, "SQL file, - for stdin")->required();

  auto* init_db = app.add_subcommand("init-demo-db", "Create the sports demo database");
  std::string db_path;
  init_db->add_option("path", db_path)->required();

  CLI11_PARSE(app, argc, argv);

  if (*init_db) {
    if (fs::exists(db_path)) throw IoError(db_path + " already exists");
    auto handle = DatabaseHandle::CreateFile(db_path);
    auto conn = handle.Connect();
    SeedSportsDatabase(conn);
    std::cout << "created " << db_path << "\n";
    return 0;
  }
  if (*decompose) {
    QuerySketch sketch = Decompose(ReadInput(sql_file));
    std::cout << Recompose(sketch) << "\n";
    ScriptedModel none({});
    std::cout << ToJson(Annotate(sketch, std::nullopt, none)).dump(4) << "\n";
    return 0;
  }

  Pipeline pipeline(PipelineConfig::FromFile(config_path));

  if (*preprocess) {
    if (logs.empty() && docs.empty()) throw ConfigError("preprocess needs --logs or --docs");
    auto report = pipeline.Preprocess(logs.empty() ? std::nullopt : std::optional<fs::path>(logs),
                                      docs.empty() ? std::nullopt : std::optional<fs::path>(docs));
    std::cout << ToJson(report).dump(2) << "\n";
    return 0;
  }
  if (*query) {
    QueryResponse r = pipeline.Query(nl);
    if (brief) {
      std::cout << r.sql << "\n";
    } else {
      std::cout << r.ToJson().dump(2) << "\n";
    }
    return r.status == "ok" ? 0 : 3;
  }
  if (*feedback) {
    if (!accept && !reject) throw ConfigError("feedback needs --accept or --reject");
    Feedback fb;
    fb.request_id = request_id;
    fb.verdict = accept ? Verdict::kAccept : Verdict::kReject;
    if (!corrected_file.empty()) fb.corrected_sql = ReadInput(corrected_file);
    if (!note.empty()) fb.note = note;
    std::uint64_t version = pipeline.SubmitFeedback(fb);
    std::cout << "knowledge_version " << version << "\n";
    return 0;
  }
  if (*serve) {
    Service service(pipeline);
    int bound = service.Bind(host, port);
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    std::thread watcher([&service] {
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.Stop();
    });
    std::cerr << "listening on " << host << ":" << bound << "\n";
    service.Listen();
    g_stop = 1;
    watcher.join();
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
