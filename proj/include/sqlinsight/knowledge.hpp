#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlinsight/decomposer.hpp"
#include "sqlinsight/schema.hpp"

namespace sqlinsight {

enum class InstructionSource { kExampleDerived, kDocument, kAdaptation };

std::string_view SourceName(InstructionSource source);
InstructionSource SourceFromName(std::string_view name);

struct Instruction {
  std::string id;
  std::string text;
  std::optional<std::string> sql_snippet;
  std::vector<std::string> intents;
  InstructionSource source = InstructionSource::kDocument;

  bool operator==(const Instruction&) const = default;
};

struct KnowledgeSet {
  std::map<std::string, DecomposedExample> examples;
  std::map<std::string, Instruction> instructions;
  SchemaRepresentation schema;
  std::map<std::string, std::vector<std::string>> partitions;
  std::uint64_t version = 0;

  bool operator==(const KnowledgeSet&) const = default;
  /// Intents whose partition lists `example_id`.
  std::vector<std::string> IntentsOf(const std::string& example_id) const;
};

/// Returns the id used for `ex` inside `ks` after the add.
struct AddResult {
  KnowledgeSet ks;
  std::string id;
};

/// Adds an example under `intent`. An identical query already stored under
/// another intent gains the extra partition instead of a second copy.
/// Throws DuplicateExample or InvalidExample.
AddResult AddExample(const KnowledgeSet& ks, const DecomposedExample& ex,
                     const std::string& intent);

/// Throws DuplicateId, or InvalidExample when the text is empty.
KnowledgeSet AddInstruction(const KnowledgeSet& ks, const Instruction& instr);

/// Replaces the schema; the version moves only when it differs.
KnowledgeSet SetSchema(const KnowledgeSet& ks, const SchemaRepresentation& schema);

/// Numbered list in the instruction layout: "1. text" then the snippet
/// indented by three spaces.
std::string RenderInstructions(const std::vector<const Instruction*>& items);

nlohmann::ordered_json ToJson(const Instruction& instr);
Instruction InstructionFromJson(const nlohmann::json& doc, const std::string& where);

/// Reads a structured instruction document: a JSON array (or {"instructions":
/// [...]}) of {id?, text, sql?, intents?}. Missing ids become
/// "<prefix>_<n>". Throws FormatError or IoError.
std::vector<Instruction> LoadInstructionFile(const std::filesystem::path& path,
                                             const std::string& id_prefix);

/// Writes examples.json, instructions.json, schema.json and manifest.json.
/// Files are replaced atomically. Throws IoError.
void Persist(const KnowledgeSet& ks, const std::filesystem::path& dir);
/// Throws IoError when files are missing, CorruptSnapshot on checksum or
/// content errors.
KnowledgeSet Load(const std::filesystem::path& dir);
bool HasSnapshot(const std::filesystem::path& dir);

std::string Sha256Hex(std::string_view data);

/// Writes a file via a temporary sibling and rename.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);
std::string ReadFile(const std::filesystem::path& path);

/// Holds the current immutable knowledge set. Readers take a snapshot
/// pointer; writers are serialized and publish a new version.
class KnowledgeStore {
 public:
  explicit KnowledgeStore(KnowledgeSet initial = {},
                          std::optional<std::filesystem::path> dir = std::nullopt);

  std::shared_ptr<const KnowledgeSet> Snapshot() const;

  /// Runs `fn` on a copy under the writer lock; persists and publishes the
  /// result when its version moved. Returns the published version.
  std::uint64_t Update(const std::function<KnowledgeSet(const KnowledgeSet&)>& fn);

  const std::optional<std::filesystem::path>& dir() const { return dir_; }

 private:
  mutable std::mutex read_mu_;
  std::mutex write_mu_;
  std::shared_ptr<const KnowledgeSet> current_;
  std::optional<std::filesystem::path> dir_;
};

}  // namespace sqlinsight
