#include "sqlinsight/knowledge.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/printer.hpp"

namespace sqlinsight {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kExamplesFile = "examples.json";
constexpr const char* kInstructionsFile = "instructions.json";
constexpr const char* kSchemaFile = "schema.json";
constexpr const char* kManifestFile = "manifest.json";

std::string QueryKey(const std::string& sql_text) {
  try {
    return sql::NormalizeSql(sql_text);
  } catch (const Error&) {
    return sql::NormalizeFragment(sql_text);
  }
}

std::string Dump(const ojson& doc) { return doc.dump(2) + "\n"; }

}  // namespace

std::string_view SourceName(InstructionSource source) {
  switch (source) {
    case InstructionSource::kExampleDerived:
      return "example-derived";
    case InstructionSource::kDocument:
      return "document";
    case InstructionSource::kAdaptation:
      return "adaptation";
  }
  return "document";
}

InstructionSource SourceFromName(std::string_view name) {
  if (name == "example-derived") return InstructionSource::kExampleDerived;
  if (name == "document") return InstructionSource::kDocument;
  if (name == "adaptation") return InstructionSource::kAdaptation;
  throw FormatError("unknown instruction source '" + std::string(name) + "'");
}

std::vector<std::string> KnowledgeSet::IntentsOf(const std::string& example_id) const {
  std::vector<std::string> out;
  for (const auto& [intent, ids] : partitions) {
    if (std::find(ids.begin(), ids.end(), example_id) != ids.end()) out.push_back(intent);
  }
  return out;
}

AddResult AddExample(const KnowledgeSet& ks, const DecomposedExample& ex,
                     const std::string& intent) {
  if (intent.empty()) throw InvalidExample("intent label is empty");
  if (auto problem = ValidateExample(ex)) throw InvalidExample(*problem);

  const std::string key = QueryKey(ex.full_sql_query);
  const auto partition = ks.partitions.find(intent);
  std::optional<std::string> existing;
  for (const auto& [id, stored] : ks.examples) {
    if (QueryKey(stored.full_sql_query) != key) continue;
    if (partition != ks.partitions.end() &&
        std::find(partition->second.begin(), partition->second.end(), id) !=
            partition->second.end()) {
      throw DuplicateExample("query already stored under intent '" + intent + "' as " + id);
    }
    existing = id;
  }

  AddResult result{ks, {}};
  if (existing) {
    result.id = *existing;
  } else {
    for (std::size_t n = ks.examples.size() + 1;; ++n) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "ex_%06zu", n);
      if (!ks.examples.count(buf)) {
        result.id = buf;
        break;
      }
    }
    result.ks.examples.emplace(result.id, ex);
  }
  result.ks.partitions[intent].push_back(result.id);
  ++result.ks.version;
  return result;
}

KnowledgeSet AddInstruction(const KnowledgeSet& ks, const Instruction& instr) {
  if (instr.id.empty()) throw InvalidExample("instruction id is empty");
  if (instr.text.empty()) throw InvalidExample("instruction " + instr.id + " has empty text");
  if (ks.instructions.count(instr.id)) throw DuplicateId("instruction id " + instr.id + " already exists");
  KnowledgeSet out = ks;
  out.instructions.emplace(instr.id, instr);
  ++out.version;
  return out;
}

KnowledgeSet SetSchema(const KnowledgeSet& ks, const SchemaRepresentation& schema) {
  if (ks.schema == schema) return ks;
  KnowledgeSet out = ks;
  out.schema = schema;
  ++out.version;
  return out;
}

std::string RenderInstructions(const std::vector<const Instruction*>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string number = std::to_string(i + 1) + ". ";
    out += number + items[i]->text + "\n";
    if (items[i]->sql_snippet) {
      out += std::string(number.size(), ' ') + "e.g. " + *items[i]->sql_snippet + "\n";
    }
  }
  return out;
}

ojson ToJson(const Instruction& instr) {
  ojson j;
  j["id"] = instr.id;
  j["text"] = instr.text;
  j["sql"] = instr.sql_snippet ? ojson(*instr.sql_snippet) : ojson(nullptr);
  j["intents"] = instr.intents;
  j["source"] = SourceName(instr.source);
  return j;
}

Instruction InstructionFromJson(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object()) throw FormatError(where + ": expected an object");
  Instruction instr;
  auto str = [&](const char* key) -> std::optional<std::string> {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    if (!doc.at(key).is_string()) throw FormatError(where + "." + key + ": expected a string");
    return doc.at(key).get<std::string>();
  };
  if (auto v = str("id")) instr.id = *v;
  auto text = str("text");
  if (!text || text->empty()) throw FormatError(where + ".text: missing or empty");
  instr.text = *text;
  instr.sql_snippet = str("sql");
  if (doc.contains("intents")) {
    const auto& intents = doc.at("intents");
    if (!intents.is_array()) throw FormatError(where + ".intents: expected an array");
    for (const auto& i : intents) {
      if (!i.is_string()) throw FormatError(where + ".intents: expected strings");
      instr.intents.push_back(i.get<std::string>());
    }
  }
  if (auto v = str("source")) instr.source = SourceFromName(*v);
  return instr;
}

std::vector<Instruction> LoadInstructionFile(const fs::path& path, const std::string& id_prefix) {
  std::string text = ReadFile(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("instructions")) doc = doc.at("instructions");
  if (!doc.is_array()) throw FormatError(path.string() + ": expected an array of instructions");
  std::vector<Instruction> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    Instruction instr =
        InstructionFromJson(doc[i], path.filename().string() + "[" + std::to_string(i) + "]");
    if (instr.id.empty()) instr.id = id_prefix + "_" + std::to_string(i + 1);
    out.push_back(std::move(instr));
  }
  return out;
}

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

void WriteFileAtomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Persist(const KnowledgeSet& ks, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  ojson examples = ojson::object();
  for (const auto& [id, ex] : ks.examples) examples[id] = ToJson(ex);
  ojson partitions = ojson::object();
  for (const auto& [intent, ids] : ks.partitions) partitions[intent] = ids;
  const std::string examples_text = Dump({{"examples", examples}, {"partitions", partitions}});

  ojson instructions = ojson::array();
  std::size_t number = 0;
  for (const auto& [id, instr] : ks.instructions) {
    ojson entry = {{"number", ++number}};
    const ojson body = ToJson(instr);
    for (const auto& [k, v] : body.items()) entry[k] = v;
    instructions.push_back(std::move(entry));
  }
  const std::string instructions_text = Dump({{"instructions", instructions}});
  const std::string schema_text = Dump(ToJson(ks.schema));

  ojson manifest;
  manifest["version"] = ks.version;
  manifest["checksums"] = {
      {kExamplesFile, Sha256Hex(examples_text)},
      {kInstructionsFile, Sha256Hex(instructions_text)},
      {kSchemaFile, Sha256Hex(schema_text)},
  };
  WriteFileAtomic(dir / kExamplesFile, examples_text);
  WriteFileAtomic(dir / kInstructionsFile, instructions_text);
  WriteFileAtomic(dir / kSchemaFile, schema_text);
  WriteFileAtomic(dir / kManifestFile, Dump(manifest));
}

bool HasSnapshot(const fs::path& dir) { return fs::exists(dir / kManifestFile); }

KnowledgeSet Load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("no knowledge snapshot at " + dir.string());
  auto parse = [](const std::string& text, const std::string& name) {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorruptSnapshot(name + ": " + e.what());
    }
  };
  const nlohmann::json manifest = parse(ReadFile(dir / kManifestFile), kManifestFile);

  std::map<std::string, std::string> texts;
  for (const char* name : {kExamplesFile, kInstructionsFile, kSchemaFile}) {
    std::string text = ReadFile(dir / name);
    std::string expected;
    try {
      expected = manifest.at("checksums").at(name).get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw CorruptSnapshot(std::string(kManifestFile) + ": no checksum for " + name);
    }
    if (Sha256Hex(text) != expected) throw CorruptSnapshot(std::string(name) + ": checksum mismatch");
    texts[name] = std::move(text);
  }

  KnowledgeSet ks;
  try {
    ks.version = manifest.at("version").get<std::uint64_t>();
    const auto examples = ojson::parse(texts[kExamplesFile]);
    for (const auto& [id, doc] : examples.at("examples").items()) {
      ks.examples.emplace(id, ExampleFromJson(doc));
    }
    for (const auto& [intent, ids] : examples.at("partitions").items()) {
      ks.partitions[intent] = ids.get<std::vector<std::string>>();
    }
    const auto instructions = nlohmann::json::parse(texts[kInstructionsFile]);
    for (const auto& doc : instructions.at("instructions")) {
      Instruction instr = InstructionFromJson(doc, kInstructionsFile);
      ks.instructions.emplace(instr.id, std::move(instr));
    }
    ks.schema = ParseSchemaJson(nlohmann::json::parse(texts[kSchemaFile]));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptSnapshot(std::string("malformed snapshot: ") + e.what());
  } catch (const FormatError& e) {
    throw CorruptSnapshot(std::string("malformed snapshot: ") + e.what());
  }

  for (const auto& [intent, ids] : ks.partitions) {
    for (const auto& id : ids) {
      if (!ks.examples.count(id)) throw CorruptSnapshot("partition " + intent + " lists unknown " + id);
    }
  }
  for (const auto& [id, ex] : ks.examples) {
    if (ks.IntentsOf(id).empty()) throw CorruptSnapshot("example " + id + " is in no partition");
  }
  return ks;
}

KnowledgeStore::KnowledgeStore(KnowledgeSet initial, std::optional<fs::path> dir)
    : current_(std::make_shared<const KnowledgeSet>(std::move(initial))), dir_(std::move(dir)) {}

std::shared_ptr<const KnowledgeSet> KnowledgeStore::Snapshot() const {
  std::lock_guard lock(read_mu_);
  return current_;
}

std::uint64_t KnowledgeStore::Update(const std::function<KnowledgeSet(const KnowledgeSet&)>& fn) {
  std::lock_guard writer(write_mu_);
  auto base = Snapshot();
  KnowledgeSet next = fn(*base);
  if (next.version == base->version) return base->version;
  if (next.version < base->version) throw Error("knowledge version must not decrease");
  if (dir_) Persist(next, *dir_);
  auto published = std::make_shared<const KnowledgeSet>(std::move(next));
  std::lock_guard lock(read_mu_);
  current_ = published;
  return current_->version;
}

}  // namespace sqlinsight
