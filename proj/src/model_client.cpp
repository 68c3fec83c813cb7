#include "sqlinsight/model_client.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <utility>

#include "httplib.h"

#include "sqlinsight/errors.hpp"

namespace sqlinsight {
namespace {

constexpr std::array<std::pair<ModelRole, std::string_view>, 9> kRoleNames = {{
    {ModelRole::kReformulate, "reformulate"},
    {ModelRole::kIntent, "intent"},
    {ModelRole::kPrune, "prune"},
    {ModelRole::kPlan, "plan"},
    {ModelRole::kGenerate, "generate"},
    {ModelRole::kAssess, "assess"},
    {ModelRole::kCorrect, "correct"},
    {ModelRole::kAnnotate, "annotate"},
    {ModelRole::kDerive, "derive"},
}};

class HttpModel : public ModelClient {
 public:
  explicit HttpModel(const HttpModelSettings& settings) : settings_(settings) {}

 protected:
  std::string DoComplete(const std::string& prompt, ModelRole role) override {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(settings_.endpoint, m, kUrl)) {
      throw ModelError("invalid model endpoint: " + settings_.endpoint);
    }
    std::string path = m[2].matched ? m[2].str() : "/v1/chat/completions";

    httplib::Client client(m[1].str());
    auto secs = static_cast<time_t>(settings_.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!settings_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + settings_.api_key);
    }

    nlohmann::json body = {
        {"model", settings_.model_id},
        {"temperature", 0},
        {"messages",
         {{{"role", "system"},
           {"content", "You are the " + std::string(RoleName(role)) +
                           " step of a text-to-SQL pipeline. Answer with the "
                           "requested content only."}},
          {{"role", "user"}, {"content", prompt}}}},
    };
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      throw ModelError("model request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ModelError("model endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
      auto doc = nlohmann::json::parse(res->body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ModelError(std::string("malformed model response: ") + e.what());
    }
  }

 private:
  HttpModelSettings settings_;
};

}  // namespace

std::string_view RoleName(ModelRole role) {
  for (const auto& [r, name] : kRoleNames) {
    if (r == role) return name;
  }
  return "unknown";
}

std::optional<ModelRole> RoleFromName(std::string_view name) {
  for (const auto& [r, n] : kRoleNames) {
    if (n == name) return r;
  }
  return std::nullopt;
}

std::string ModelClient::Complete(const std::string& prompt, ModelRole role) {
  calls_.push_back(role);
  return DoComplete(prompt, role);
}

std::string ScriptedModel::DoComplete(const std::string& prompt, ModelRole role) {
  prompts_.push_back(prompt);
  auto it = script_.find(role);
  if (it == script_.end() || it->second.empty()) {
    throw ModelError("scripted model has no response for role " +
                     std::string(RoleName(role)));
  }
  std::size_t& cursor = cursor_[role];
  const auto& responses = it->second;
  const ScriptedResponse& r = responses[std::min(cursor, responses.size() - 1)];
  ++cursor;
  if (r.fail) throw ModelError(r.text.empty() ? "scripted failure" : r.text);
  return r.text;
}

std::shared_ptr<ScriptedModelProvider> ScriptedModelProvider::FromJson(
    const nlohmann::json& doc) {
  if (!doc.is_object()) throw FormatError("scripted model fixture must be a JSON object");
  ScriptedModel::Script script;
  for (const auto& [key, value] : doc.items()) {
    auto role = RoleFromName(key);
    if (!role) throw FormatError("scripted model fixture: unknown role '" + key + "'");
    auto& list = script[*role];
    auto add = [&](const nlohmann::json& entry) {
      if (entry.is_string()) {
        list.push_back({entry.get<std::string>(), false});
      } else if (entry.is_object() && entry.contains("error")) {
        list.push_back({entry.at("error").get<std::string>(), true});
      } else {
        throw FormatError("scripted model fixture: role '" + key +
                          "' entries must be strings or {\"error\": ...}");
      }
    };
    if (value.is_array()) {
      for (const auto& entry : value) add(entry);
    } else {
      add(value);
    }
  }
  return std::make_shared<ScriptedModelProvider>(std::move(script));
}

std::shared_ptr<ScriptedModelProvider> ScriptedModelProvider::FromFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scripted model fixture " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

std::unique_ptr<ModelClient> ScriptedModelProvider::OpenSession() const {
  return std::make_unique<ScriptedModel>(script_);
}

HttpModelProvider::HttpModelProvider(HttpModelSettings settings)
    : settings_(std::move(settings)) {}

std::unique_ptr<ModelClient> HttpModelProvider::OpenSession() const {
  return std::make_unique<HttpModel>(settings_);
}

ModelSettings ApplyModelEnvironment(ModelSettings settings) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("SQLINSIGHT_MODEL_PROVIDER")) settings.provider = *v;
  if (auto v = env("SQLINSIGHT_MODEL_FIXTURE")) settings.fixture = *v;
  if (auto v = env("SQLINSIGHT_MODEL_ENDPOINT")) settings.http.endpoint = *v;
  if (auto v = env("SQLINSIGHT_MODEL_API_KEY")) settings.http.api_key = *v;
  if (auto v = env("SQLINSIGHT_MODEL_ID")) settings.http.model_id = *v;
  if (auto v = env("SQLINSIGHT_MODEL_TIMEOUT_S")) {
    try {
      settings.http.timeout = std::chrono::seconds(std::stol(*v));
    } catch (const std::exception&) {
      throw ConfigError("SQLINSIGHT_MODEL_TIMEOUT_S must be an integer");
    }
  }
  return settings;
}

std::shared_ptr<ModelProvider> MakeModelProvider(const ModelSettings& settings) {
  if (settings.provider == "scripted") {
    if (settings.fixture.empty()) {
      throw ConfigError("scripted model provider needs a fixture path");
    }
    return ScriptedModelProvider::FromFile(settings.fixture);
  }
  if (settings.provider == "openai") {
    if (settings.http.endpoint.empty()) {
      throw ConfigError("openai model provider needs an endpoint");
    }
    return std::make_shared<HttpModelProvider>(settings.http);
  }
  throw ConfigError("unknown model provider '" + settings.provider + "'");
}

}  // namespace sqlinsight
