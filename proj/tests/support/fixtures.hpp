#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sqlinsight/database.hpp"
#include "sqlinsight/decomposer.hpp"
#include "sqlinsight/model_client.hpp"
#include "sqlinsight/pipeline.hpp"

namespace testing_support {

inline constexpr const char* kDemoQuestion =
    "Identify the top 5 sports associations with the best and worst quarter-over-quarter "
    "financial performance in the United States for Q2 2023.";

std::filesystem::path DataDir();
std::string GoldenSql();

/// Shared in-memory database with the sports tables seeded.
sqlinsight::DatabaseHandle SeededDb(const std::string& name);

/// Hand-written queries over the sports tables.
const std::vector<std::string>& RoundTripCorpus();

/// Rows rendered as literals and sorted, so order does not matter.
std::vector<std::vector<std::string>> ResultMultiset(const sqlinsight::DatabaseHandle& db,
                                                     const std::string& sql);

/// Sample rows of an integer column, computed without the library.
std::vector<std::string> BruteForceSample(const std::vector<std::optional<std::int64_t>>& col);

/// Decomposed example with template descriptions.
sqlinsight::DecomposedExample MakeExample(const std::string& sql, const std::string& nl);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Demo fixture with some roles replaced.
std::shared_ptr<sqlinsight::ScriptedModelProvider> DemoModel(
    const nlohmann::json& overrides = nlohmann::json::object());

/// Pipeline over the demo logs, docs and schema, knowledge kept in `dir`
/// (in memory when empty). Preprocess has already run.
std::unique_ptr<sqlinsight::Pipeline> DemoPipeline(
    const std::filesystem::path& dir, const sqlinsight::DatabaseHandle& db,
    std::shared_ptr<const sqlinsight::ModelProvider> model = nullptr);

}  // namespace testing_support
