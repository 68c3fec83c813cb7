#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sqlinsight {

enum class ModelRole {
  kReformulate,
  kIntent,
  kPrune,
  kPlan,
  kGenerate,
  kAssess,
  kCorrect,
  kAnnotate,
  kDerive,
};

std::string_view RoleName(ModelRole role);
std::optional<ModelRole> RoleFromName(std::string_view name);

/// One model conversation scope, normally one pipeline request. Every model
/// interaction goes through Complete(), which counts calls and records the
/// role sequence. Not thread-safe; open one session per request.
class ModelClient {
 public:
  virtual ~ModelClient() = default;

  /// Throws ModelError on provider failure.
  std::string Complete(const std::string& prompt, ModelRole role);

  std::size_t call_count() const { return calls_.size(); }
  const std::vector<ModelRole>& calls() const { return calls_; }

 protected:
  virtual std::string DoComplete(const std::string& prompt, ModelRole role) = 0;

 private:
  std::vector<ModelRole> calls_;
};

/// Shared, thread-safe factory of per-request sessions.
class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual std::unique_ptr<ModelClient> OpenSession() const = 0;
  virtual std::string name() const = 0;
};

/// A canned response: text, or an injected provider failure.
struct ScriptedResponse {
  std::string text;
  bool fail = false;
};

/// Replays responses keyed by role. Within one session each role's list is
/// consumed in order and the last entry repeats once the list runs out. A
/// role with no entries fails with ModelError.
class ScriptedModel : public ModelClient {
 public:
  using Script = std::map<ModelRole, std::vector<ScriptedResponse>>;

  explicit ScriptedModel(Script script) : script_(std::move(script)) {}

  /// Prompts seen so far, in call order.
  const std::vector<std::string>& prompts() const { return prompts_; }

 protected:
  std::string DoComplete(const std::string& prompt, ModelRole role) override;

 private:
  Script script_;
  std::map<ModelRole, std::size_t> cursor_;
  std::vector<std::string> prompts_;
};

class ScriptedModelProvider : public ModelProvider {
 public:
  explicit ScriptedModelProvider(ScriptedModel::Script script)
      : script_(std::move(script)) {}

  /// Fixture file: {"<role>": ["response", {"error": "message"}, ...], ...}
  static std::shared_ptr<ScriptedModelProvider> FromFile(const std::filesystem::path& path);
  static std::shared_ptr<ScriptedModelProvider> FromJson(const nlohmann::json& doc);

  std::unique_ptr<ModelClient> OpenSession() const override;
  std::string name() const override { return "scripted"; }

 private:
  ScriptedModel::Script script_;
};

/// Adapts a callable; handy for instrumenting tests.
class CallbackModel : public ModelClient {
 public:
  using Fn = std::function<std::string(const std::string&, ModelRole)>;
  explicit CallbackModel(Fn fn) : fn_(std::move(fn)) {}

 protected:
  std::string DoComplete(const std::string& prompt, ModelRole role) override {
    return fn_(prompt, role);
  }

 private:
  Fn fn_;
};

struct HttpModelSettings {
  std::string endpoint;  // e.g. http://localhost:8080/v1/chat/completions
  std::string api_key;
  std::string model_id;
  std::chrono::seconds timeout{30};
};

/// OpenAI-compatible chat-completions client.
class HttpModelProvider : public ModelProvider {
 public:
  explicit HttpModelProvider(HttpModelSettings settings);
  std::unique_ptr<ModelClient> OpenSession() const override;
  std::string name() const override { return "openai"; }

 private:
  HttpModelSettings settings_;
};

struct ModelSettings {
  std::string provider = "scripted";  // "scripted" | "openai"
  std::string fixture;                // scripted fixture path
  HttpModelSettings http;
};

/// Applies SQLINSIGHT_MODEL_{PROVIDER,FIXTURE,ENDPOINT,API_KEY,ID,TIMEOUT_S}
/// on top of the given settings.
ModelSettings ApplyModelEnvironment(ModelSettings settings);

std::shared_ptr<ModelProvider> MakeModelProvider(const ModelSettings& settings);

}  // namespace sqlinsight
