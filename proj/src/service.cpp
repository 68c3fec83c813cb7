#include "sqlinsight/service.hpp"

#include "httplib.h"

namespace sqlinsight {
namespace {

using ojson = nlohmann::ordered_json;

void Send(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

ojson ErrorBody(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

}  // namespace

std::pair<int, ojson> ErrorResponse(const std::exception& e) {
  if (dynamic_cast<const UnknownRequest*>(&e)) return {404, ErrorBody("unknown_request", e.what())};
  if (dynamic_cast<const InvalidCorrection*>(&e)) {
    return {422, ErrorBody("invalid_correction", e.what())};
  }
  if (dynamic_cast<const DuplicateExample*>(&e)) return {409, ErrorBody("duplicate_example", e.what())};
  if (dynamic_cast<const nlohmann::json::exception*>(&e) || dynamic_cast<const FormatError*>(&e)) {
    return {400, ErrorBody("bad_request", e.what())};
  }
  if (dynamic_cast<const ConnectionError*>(&e) || dynamic_cast<const PermissionError*>(&e)) {
    return {503, ErrorBody("database_unavailable", e.what())};
  }
  if (dynamic_cast<const ModelError*>(&e)) return {502, ErrorBody("model_error", e.what())};
  return {500, ErrorBody("internal", e.what())};
}

struct Service::Impl {
  Pipeline& pipeline;
  httplib::Server server;

  explicit Impl(Pipeline& p) : pipeline(p) {
    auto guarded = [](auto handler) {
      return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
          handler(req, res);
        } catch (const std::exception& e) {
          auto [status, body] = ErrorResponse(e);
          Send(res, status, body);
        }
      };
    };

    server.Post("/v1/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto doc = nlohmann::json::parse(req.body);
      if (!doc.is_object() || !doc.contains("nl") || !doc.at("nl").is_string()) {
        throw FormatError("body must be {\"nl\": string}");
      }
      QueryResponse response = pipeline.Query(doc.at("nl").get<std::string>());
      Send(res, 200, response.ToJson());
    }));

    server.Post("/v1/feedback", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto doc = nlohmann::json::parse(req.body);
      if (!doc.is_object()) throw FormatError("body must be a JSON object");
      Feedback fb;
      fb.request_id = doc.at("request_id").get<std::string>();
      std::string verdict = doc.at("verdict").get<std::string>();
      if (verdict == "accept") {
        fb.verdict = Verdict::kAccept;
      } else if (verdict == "reject") {
        fb.verdict = Verdict::kReject;
      } else {
        throw FormatError("verdict must be \"accept\" or \"reject\"");
      }
      if (doc.contains("corrected_sql") && !doc.at("corrected_sql").is_null()) {
        fb.corrected_sql = doc.at("corrected_sql").get<std::string>();
      }
      if (doc.contains("note") && !doc.at("note").is_null()) fb.note = doc.at("note").get<std::string>();
      std::uint64_t version = pipeline.SubmitFeedback(fb);
      Send(res, 200, {{"request_id", fb.request_id}, {"knowledge_version", version}});
    }));

    server.Get(R"(/v1/requests/([A-Za-z0-9_\-]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 Send(res, 200, ToJson(pipeline.GetRequest(req.matches[1].str())));
               }));

    server.Get("/v1/knowledge/summary",
               guarded([this](const httplib::Request&, httplib::Response& res) {
                 Send(res, 200, pipeline.KnowledgeSummary());
               }));

    server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
      Send(res, 200, {{"status", "ok"}, {"knowledge_version", pipeline.version()}});
    }));
  }
};

Service::Service(Pipeline& pipeline) : impl_(std::make_unique<Impl>(pipeline)) {}
Service::~Service() { Stop(); }

int Service::Bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::Listen() { impl_->server.listen_after_bind(); }
void Service::Stop() { impl_->server.stop(); }
bool Service::running() const { return impl_->server.is_running(); }

}  // namespace sqlinsight
