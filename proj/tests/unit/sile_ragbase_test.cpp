#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dq/catalog.hpp"
#include "dq/error.hpp"
#include "dq/ragbase.hpp"
#include "dq/sile.hpp"
#include "fixtures.hpp"

using namespace dq;

namespace {

SchemaModel olist_schema() {
    Database db = dq::testing::memory_db(dq::testing::read_text(dq::testing::fixture_path("mini_olist.sql")));
    return read_catalog(db);
}

QueryPlan make_plan(std::string base, std::vector<std::string> joins) {
    QueryPlan p;
    p.base_table = std::move(base);
    p.join_tables = std::move(joins);
    return p;
}

std::shared_ptr<ModelBackend> scripted(std::vector<std::string> answers) {
    auto queue = std::make_shared<std::vector<std::string>>(std::move(answers));
    auto next = std::make_shared<std::size_t>(0);
    return std::make_shared<FunctionBackend>([queue, next](const ResolvedRequest&) {
        const auto i = std::min(*next, queue->size() - 1);
        ++*next;
        return (*queue)[i];
    });
}

}  // namespace

TEST(PlanParsing, FencedBlockAndReasoning) {
    const auto p = parse_plan_output(
        "Reviews hang off orders.\n```json\n{\"base_table\": \"orders\", \"join_tables\": [\"reviews\"]}\n```");
    EXPECT_EQ(p.base_table, "orders");
    EXPECT_EQ(p.join_tables, std::vector<std::string>{"reviews"});
    EXPECT_EQ(p.reasoning, "Reviews hang off orders.");
}

TEST(PlanParsing, BareTrailingObject) {
    const auto p = parse_plan_output("I pick {\"base_table\": \"products\"}");
    EXPECT_EQ(p.base_table, "products");
    EXPECT_TRUE(p.join_tables.empty());
}

TEST(PlanParsing, MalformedBlocksAreRejected) {
    for (const char* bad : {"no plan here", "```json\n{\"join_tables\": []}\n```",
                            "```json\n{\"base_table\": \"\"}\n```",
                            "```json\n{\"base_table\": \"a\", \"join_tables\": \"b\"}\n```"}) {
        try {
            parse_plan_output(bad);
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::plan_invalid) << bad;
        }
    }
}

TEST(PlanValidation, ReportsEveryViolation) {
    const auto schema = olist_schema();
    const auto v = validate_plan(make_plan("orders", {"ghosts", "orders", "reviews", "REVIEWS"}), schema);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].kind, PlanViolationKind::unknown_table);
    EXPECT_EQ(v[0].table, "ghosts");
    EXPECT_EQ(v[1].kind, PlanViolationKind::base_in_joins);
    EXPECT_EQ(v[2].kind, PlanViolationKind::duplicate);
    EXPECT_THROW(certify_plan(make_plan("ghosts", {}), schema), Error);
}

TEST(PlanValidation, NormalizationUsesCatalogSpelling) {
    const auto schema = olist_schema();
    const auto p = normalize_plan(make_plan(" ORDERS ", {"Reviews", "orders", "reviews"}), schema);
    EXPECT_EQ(p.base_table, "orders");
    EXPECT_EQ(p.join_tables, std::vector<std::string>{"reviews"});
    EXPECT_TRUE(validate_plan(p, schema).empty());
}

TEST(Planner, RepairsOnceThenSucceeds) {
    const auto schema = olist_schema();
    ModelGateway gw(scripted({"```json\n{\"base_table\": \"shipments\"}\n```",
                              "```json\n{\"base_table\": \"orders\", \"join_tables\": [\"customers\"]}\n```"}));
    const auto p = plan(NLQuery{"Which customers ordered?", {}}, schema, gw);
    EXPECT_EQ(p->model_calls, 2u);
    EXPECT_EQ(p->tables(), (std::vector<std::string>{"orders", "customers"}));
    EXPECT_EQ(gw.call_count(), 2u);
}

TEST(Planner, GivesUpAfterRepair) {
    const auto schema = olist_schema();
    ModelGateway gw(scripted({"```json\n{\"base_table\": \"shipments\"}\n```"}));
    try {
        plan(NLQuery{"Where are shipments?", {}}, schema, gw);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::plan_invalid);
    }
    EXPECT_EQ(gw.call_count(), 2u);
}

TEST(Planner, RejectsEmptySchemaAndQuestion) {
    ModelGateway gw(dq::testing::olist_backend());
    try {
        plan(NLQuery{"anything", {}}, SchemaModel{}, gw);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty_schema);
    }
    EXPECT_THROW(plan(NLQuery{"  ", {}}, olist_schema(), gw), Error);
    EXPECT_EQ(gw.call_count(), 0u);
}

TEST(Pruning, KeepsOnlyPlannedTablesAndInternalKeys) {
    const auto schema = olist_schema();
    const auto pruned = prune_schema(schema, certify_plan(make_plan("order_items", {"orders"}), schema));
    auto names = pruned.schema.table_names();
    std::sort(names.begin(), names.end());
    EXPECT_EQ(names, (std::vector<std::string>{"order_items", "orders"}));
    const auto& items = pruned.schema.table("order_items");
    ASSERT_EQ(items.foreign_keys.size(), 1u);
    EXPECT_EQ(items.foreign_keys[0].referenced_table, "orders");
}

TEST(Pruning, FlagsDroppedBridgeTables) {
    const auto schema = olist_schema();
    const auto pruned = prune_schema(schema, certify_plan(make_plan("orders", {"products"}), schema));
    ASSERT_FALSE(pruned.diagnostics.empty());
    EXPECT_NE(pruned.diagnostics[0].find("order_items"), std::string::npos);
}

TEST(Retrieval, TokenizerSplitsIdentifiers) {
    EXPECT_EQ(LexicalEmbedder::tokenize("orderItems_v2 PRICE"),
              (std::vector<std::string>{"order", "items", "v", "2", "price"}));
}

TEST(Retrieval, CosineOfUnitVectors) {
    EXPECT_DOUBLE_EQ(cosine({1, 0}, {1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(cosine({1, 0}, {0, 1}), 0.0);
}

TEST(Retrieval, RanksLexicallyClosestTablesFirst) {
    const auto schema = olist_schema();
    LexicalEmbedder embedder;
    const auto index = index_schema(schema, embedder);
    EXPECT_EQ(index.chunks.size(), schema.tables().size());
    for (const auto& c : index.chunks) {
        double norm = 0;
        for (double x : c.vector) norm += x * x;
        EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
    }
    const auto r = retrieve(NLQuery{"reviews with a score and a comment", {}}, index, embedder, 2);
    ASSERT_EQ(r.tables().size(), 2u);
    EXPECT_EQ(r.tables()[0], "reviews");
    EXPECT_GE(r.ranked[0].second, r.ranked[1].second);
}

TEST(Retrieval, DepthIsCappedBySchemaSize) {
    const auto schema = olist_schema();
    LexicalEmbedder embedder;
    const auto index = index_schema(schema, embedder);
    EXPECT_EQ(retrieve(NLQuery{"price", {}}, index, embedder, 50).tables().size(), 6u);
}
