#include <gtest/gtest.h>

#include <functional>

#include "dq/error.hpp"
#include "dq/sqp.hpp"
#include "fixtures.hpp"

using namespace dq;

namespace {

Database olist() { return dq::testing::memory_db(dq::testing::read_text(dq::testing::fixture_path("mini_olist.sql"))); }

Error caught(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    ADD_FAILURE() << "no error raised";
    return Error(ErrorCode::invalid_argument, "none");
}

}  // namespace

TEST(Sanitize, ExtractsStatementFromProseAndFences) {
    EXPECT_EQ(sanitize("Here you go:\n```sql\nSELECT 1 AS one;\n```\nHope it helps.").text(), "SELECT 1 AS one");
    EXPECT_EQ(sanitize("The answer is SELECT name FROM t WHERE x > 2").text(), "SELECT name FROM t WHERE x > 2");
    EXPECT_EQ(sanitize("WITH a AS (SELECT 1) SELECT * FROM a").text(), "WITH a AS (SELECT 1) SELECT * FROM a");
    EXPECT_EQ(sanitize("SELECT price FROM products\nThis lists every price.").text(), "SELECT price FROM products");
}

TEST(Sanitize, ProseVerbsDoNotTrip) {
    EXPECT_NO_THROW(sanitize("We do not update anything. SELECT replace(name, 'a', 'b') FROM t"));
}

TEST(Sanitize, RejectsWritesAndStacking) {
    auto e = caught([] { sanitize("DROP TABLE orders"); });
    EXPECT_EQ(e.code(), ErrorCode::forbidden_statement);
    EXPECT_EQ(e.detail(), "DROP");
    EXPECT_EQ(caught([] { sanitize("SELECT * INTO backup FROM orders"); }).code(), ErrorCode::forbidden_statement);
    EXPECT_EQ(caught([] { sanitize("SELECT 1; DELETE FROM orders"); }).code(), ErrorCode::multi_statement);
    EXPECT_EQ(caught([] { sanitize("SELECT 1; SELECT 2"); }).code(), ErrorCode::multi_statement);
    EXPECT_EQ(caught([] { sanitize("I cannot answer that."); }).code(), ErrorCode::no_select_found);
    EXPECT_EQ(caught([] { sanitize("SELECT FROM WHERE"); }).code(), ErrorCode::sql_parse_failure);
}

TEST(Sanitize, Idempotent) {
    for (const char* raw : {"```sql\nSELECT a, b FROM t ORDER BY a\n```", "sure: SELECT COUNT(*) FROM x;"}) {
        const auto once = sanitize(raw);
        EXPECT_EQ(sanitize(once.text()).text(), once.text());
    }
}

TEST(Execute, MarksOrderedResults) {
    Database db = olist();
    const auto ordered = execute(sanitize("SELECT product_id FROM products ORDER BY price DESC LIMIT 2"), db);
    EXPECT_TRUE(ordered.ordered);
    ASSERT_EQ(ordered.rows.size(), 2u);
    EXPECT_EQ(std::get<std::string>(ordered.rows[0][0]), "p11");
    EXPECT_FALSE(execute(sanitize("SELECT product_id FROM products"), db).ordered);
    EXPECT_FALSE(execute(sanitize("SELECT c FROM (SELECT category AS c FROM products ORDER BY price)"), db).ordered);
}

TEST(Pipeline, AnswersWithProvenance) {
    Database db = olist();
    const auto schema = read_catalog(db);
    ModelGateway gw(dq::testing::olist_backend());
    const auto run = run_sqp(NLQuery{std::string(dq::testing::kDeliveredQuestion), {}}, schema, db, gw);
    ASSERT_EQ(run.result.rows.size(), 1u);
    EXPECT_EQ(std::get<std::int64_t>(run.result.rows[0][0]), 4);
    EXPECT_EQ(run.provenance.pruned_tables, std::vector<std::string>{"orders"});
    EXPECT_EQ(run.provenance.template_ids, (std::vector<std::string>{"sile_plan.v1", "sqp_generate.v1"}));
    const auto report = provenance_json(run);
    EXPECT_NE(report.find("delivered"), std::string::npos);
    EXPECT_EQ(report, provenance_json(run));
}

TEST(Pipeline, FailuresNameTheirStage) {
    Database db = olist();
    const auto schema = read_catalog(db);
    ModelGateway gw(std::make_shared<FunctionBackend>([](const ResolvedRequest& r) -> std::string {
        if (r.request->template_id == "sile_plan.v1") return "```json\n{\"base_table\": \"orders\"}\n```";
        return "```sql\nDELETE FROM orders\n```";
    }));
    try {
        run_sqp(NLQuery{"remove everything", {}}, schema, db, gw);
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_EQ(e.stage(), "sanitize");
        EXPECT_EQ(e.code(), ErrorCode::forbidden_statement);
        EXPECT_EQ(std::string(e.what()).rfind("[sanitize]", 0), 0u);
    }
}
