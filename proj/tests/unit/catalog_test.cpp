#include <gtest/gtest.h>

#include <functional>
#include <thread>

#include "dq/catalog.hpp"
#include "dq/error.hpp"
#include "fixtures.hpp"

using namespace dq;

namespace {

Database olist() { return dq::testing::memory_db(dq::testing::read_text(dq::testing::fixture_path("mini_olist.sql"))); }

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Database, RejectsUnsupportedScheme) {
    EXPECT_EQ(code_of([] { Database::open("mysql://user@host/db"); }), ErrorCode::connection_failed);
    EXPECT_THROW(Database::open("/no/such/dir/x.db"), Error);
}

TEST(Database, ReadOnlyHandleRefusesWrites) {
    const auto dir = dq::testing::scratch_dir("db-readonly");
    const auto fx = dq::testing::make_mini_olist(dir);
    Database db = Database::open(fx.url);
    EXPECT_TRUE(db.read_only());
    EXPECT_THROW(db.query("DELETE FROM products"), Error);
    EXPECT_EQ(std::get<std::int64_t>(db.query("SELECT COUNT(*) FROM products").rows[0][0]), 12);
}

TEST(Database, ValueOrdering) {
    EXPECT_TRUE(value_less(Value{}, Value{std::int64_t{1}}));
    EXPECT_TRUE(value_less(Value{2.5}, Value{std::string("a")}));
    EXPECT_TRUE(value_less(Value{std::int64_t{1}}, Value{1.5}));
}

TEST(Catalog, ReadsTablesKeysAndForeignKeys) {
    Database db = olist();
    const auto schema = read_catalog(db);
    EXPECT_EQ(schema.tables().size(), 6u);
    const auto& items = schema.table("ORDER_ITEMS");
    EXPECT_EQ(items.primary_key, (std::vector<std::string>{"order_id", "item_no"}));
    EXPECT_EQ(items.foreign_keys.size(), 3u);
    const Column* price = schema.table("products").find_column("PRICE");
    ASSERT_NE(price, nullptr);
    EXPECT_EQ(price->data_type, "REAL");
    EXPECT_FALSE(price->nullable);
    EXPECT_EQ(schema.foreign_key_count(), 5u);
}

TEST(Catalog, SchemaInvariants) {
    Table a;
    a.name = "a";
    a.columns.push_back({"id", "INTEGER", false, std::nullopt, Modality::none});
    Table dup = a;
    dup.name = "A";
    EXPECT_THROW(SchemaModel("x", {a, dup}), Error);
    Table dangling = a;
    dangling.name = "b";
    dangling.foreign_keys.push_back({{"id"}, "missing", {"id"}});
    EXPECT_THROW(SchemaModel("x", {a, dangling}), Error);
}

TEST(Catalog, CacheSharesOneScanAcrossThreads) {
    SchemaCache cache;
    const auto dir = dq::testing::scratch_dir("cache");
    const auto fx = dq::testing::make_mini_olist(dir);
    std::vector<std::thread> threads;
    std::vector<std::shared_ptr<const SchemaModel>> results(8);
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            Database db = Database::open(fx.url);
            results[i] = cache.introspect(db);
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(cache.scans(), 1u);
    for (const auto& r : results) EXPECT_EQ(r.get(), results[0].get());
}

TEST(Catalog, EnrichmentAppliesAndReportsUnknownKeys) {
    Database db = dq::testing::memory_db(dq::testing::read_text(dq::testing::fixture_path("olist_schema.sql")));
    const auto schema = read_catalog(db);
    auto doc = SemanticEnrichment::parse(R"(
tables:
  order_reviews:
    description: Satisfaction survey answers
    columns:
      review_score: 1 to 5
      no_such_column: ignored
  ghost_table: nothing
)");
    const auto result = apply_enrichment(schema, doc);
    EXPECT_EQ(result.diagnostics.size(), 2u);
    EXPECT_EQ(*result.schema.table("order_reviews").comment, "Satisfaction survey answers");
    const auto text = render_schema_context(result.schema, RenderStyle::full);
    EXPECT_NE(text.find("Satisfaction survey answers"), std::string::npos);
    EXPECT_NE(text.find("1 to 5"), std::string::npos);
    EXPECT_EQ(render_schema_context(schema, RenderStyle::full).find("Satisfaction"), std::string::npos);
}

TEST(Catalog, MalformedEnrichmentIsInputError) {
    EXPECT_EQ(code_of([] { SemanticEnrichment::parse("- just\n- a list\n"); }), ErrorCode::input_data);
}

TEST(Catalog, TableContextMatchesSchemaRendering) {
    Database db = olist();
    const auto schema = read_catalog(db);
    const auto all = render_schema_context(schema, RenderStyle::full);
    for (const auto& t : schema.tables())
        EXPECT_NE(all.find(render_table_context(t, RenderStyle::full)), std::string::npos) << t.name;
}
