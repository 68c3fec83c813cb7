#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "sqlinsight/errors.hpp"
#include "sqlinsight/knowledge.hpp"

using namespace sqlinsight;
using testing_support::MakeExample;
namespace fs = std::filesystem;

namespace {

KnowledgeSet SmallSet() {
  KnowledgeSet ks;
  ks = AddExample(ks, MakeExample("SELECT COUNTRY FROM SPORTS_FINANCIALS", "list countries"), "lookup").ks;
  ks = AddExample(ks, MakeExample("SELECT SUM(REVENUE) FROM SPORTS_FINANCIALS", "total revenue"), "totals").ks;
  ks = AddInstruction(ks, {"i1", "Use upper case country names.", "COUNTRY = 'CANADA'", {"lookup"},
                           InstructionSource::kDocument});
  ks = SetSchema(ks, LoadSchemaFile(testing_support::DataDir() / "demo" / "schema.json"));
  return ks;
}

}  // namespace

TEST(KnowledgeSet, AddExampleAssignsIdsAndVersions) {
  KnowledgeSet ks;
  auto a = AddExample(ks, MakeExample("SELECT 1 AS X", "one"), "misc");
  EXPECT_EQ(a.id, "ex_000001");
  EXPECT_EQ(a.ks.version, 1u);
  auto b = AddExample(a.ks, MakeExample("SELECT 2 AS X", "two"), "misc");
  EXPECT_EQ(b.id, "ex_000002");
  EXPECT_EQ(b.ks.partitions.at("misc"), (std::vector<std::string>{"ex_000001", "ex_000002"}));
  EXPECT_EQ(ks.version, 0u);  // inputs untouched
}

TEST(KnowledgeSet, DuplicatesPerIntent) {
  auto a = AddExample({}, MakeExample("select 1 as x", "one"), "misc");
  EXPECT_THROW(AddExample(a.ks, MakeExample("SELECT 1 AS X", "uno"), "misc"), DuplicateExample);
  auto b = AddExample(a.ks, MakeExample("SELECT 1 AS X", "uno"), "other");
  EXPECT_EQ(b.id, a.id);
  EXPECT_EQ(b.ks.examples.size(), 1u);
  EXPECT_EQ(b.ks.IntentsOf(a.id), (std::vector<std::string>{"misc", "other"}));
}

TEST(KnowledgeSet, InvalidExampleRejected) {
  DecomposedExample ex = MakeExample("SELECT 1 AS X", "one");
  ex.features.tables.push_back("SPORTS_VIEWERSHIP");
  EXPECT_THROW(AddExample({}, ex, "misc"), InvalidExample);
}

TEST(KnowledgeSet, InstructionIdsUnique) {
  KnowledgeSet ks = SmallSet();
  EXPECT_THROW(AddInstruction(ks, {"i1", "again", std::nullopt, {}, InstructionSource::kDocument}),
               DuplicateId);
}

TEST(KnowledgeSet, RenderInstructions) {
  Instruction a{"a", "First rule.", "X = -1 * Y", {}, InstructionSource::kDocument};
  Instruction b{"b", "Second rule.", std::nullopt, {}, InstructionSource::kDocument};
  EXPECT_EQ(RenderInstructions({&a, &b}), "1. First rule.\n   e.g. X = -1 * Y\n2. Second rule.\n");
}

TEST(Persist, ByteStableAndLoadable) {
  testing_support::TempDir d1, d2;
  KnowledgeSet ks = SmallSet();
  Persist(ks, d1.path());
  Persist(Load(d1.path()), d2.path());
  for (const char* f : {"examples.json", "instructions.json", "schema.json", "manifest.json"}) {
    EXPECT_EQ(ReadFile(d1.path() / f), ReadFile(d2.path() / f)) << f;
  }
  EXPECT_EQ(Load(d2.path()), ks);
}

TEST(Persist, CorruptionDetected) {
  testing_support::TempDir d;
  Persist(SmallSet(), d.path());
  {
    std::ofstream out(d.path() / "examples.json", std::ios::app);
    out << " ";
  }
  EXPECT_THROW(Load(d.path()), CorruptSnapshot);
  fs::remove(d.path() / "examples.json");
  EXPECT_THROW(Load(d.path()), IoError);
  EXPECT_FALSE(HasSnapshot(d.path() / "elsewhere"));
}

TEST(KnowledgeStore, SnapshotsAreStableAcrossUpdates) {
  testing_support::TempDir d;
  KnowledgeStore store(SmallSet(), d.path());
  auto before = store.Snapshot();
  auto v = store.Update([](const KnowledgeSet& ks) {
    return AddExample(ks, MakeExample("SELECT 3 AS X", "three"), "misc").ks;
  });
  EXPECT_EQ(v, before->version + 1);
  EXPECT_EQ(before->examples.size(), 2u);
  EXPECT_EQ(store.Snapshot()->examples.size(), 3u);
  EXPECT_EQ(Load(d.path()).version, v);

  // unchanged version is not persisted again
  auto stamp = fs::last_write_time(d.path() / "manifest.json");
  store.Update([](const KnowledgeSet& ks) { return ks; });
  EXPECT_EQ(fs::last_write_time(d.path() / "manifest.json"), stamp);
}

TEST(LoadInstructionFile, DemoGuide) {
  auto items = LoadInstructionFile(testing_support::DataDir() / "demo" / "docs" / "analyst_guide.json", "doc");
  ASSERT_EQ(items.size(), 10u);
  EXPECT_EQ(items[0].sql_snippet, std::optional<std::string>("COST_CHANGE = -1 * (CURRENT_COST - PRIOR_COST)"));
  EXPECT_EQ(items[0].source, InstructionSource::kDocument);
}
