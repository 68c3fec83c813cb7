#pragma once

#include <memory>
#include <string>

#include "sqlinsight/pipeline.hpp"

namespace sqlinsight {

/// HTTP front end for a Pipeline. Routes:
///   POST /v1/query              {nl}
///   POST /v1/feedback           {request_id, verdict, corrected_sql?, note?}
///   GET  /v1/requests/{id}
///   GET  /v1/knowledge/summary
///   GET  /healthz
class Service {
 public:
  explicit Service(Pipeline& pipeline);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  /// Blocks until Stop().
  void Listen();
  void Stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Status code and body the service sends for a thrown error.
std::pair<int, nlohmann::ordered_json> ErrorResponse(const std::exception& e);

}  // namespace sqlinsight
