#include <gtest/gtest.h>

#include "dq/error.hpp"
#include "dq/net.hpp"
#include "dq/sql/lexer.hpp"
#include "dq/sql/parser.hpp"
#include "dq/sql/printer.hpp"
#include "dq/text.hpp"

using namespace dq;

TEST(Text, CaseHelpersAndTrim) {
    EXPECT_EQ(text::to_lower("AbC"), "abc");
    EXPECT_EQ(text::trim("  x y \n"), "x y");
    EXPECT_TRUE(text::iequals("Orders", "ORDERS"));
    EXPECT_TRUE(text::istarts_with("SELECT 1", "select"));
    EXPECT_TRUE(text::iends_with("photo.PNG", ".png"));
}

TEST(Text, GlobMatch) {
    EXPECT_TRUE(text::glob_match("*image*", "product_image_url"));
    EXPECT_TRUE(text::glob_match("*url*", "URL"));
    EXPECT_FALSE(text::glob_match("*photo*", "price"));
}

TEST(Text, FencedBlocksKeepLanguage) {
    const auto blocks = text::fenced_blocks("intro\n```sql\nSELECT 1\n```\nthen\n```json\n{}\n```\n");
    ASSERT_EQ(blocks.size(), 2u);
    EXPECT_EQ(blocks[0].language, "sql");
    EXPECT_EQ(text::trim(blocks[0].body), "SELECT 1");
    EXPECT_EQ(blocks[1].language, "json");
}

TEST(Text, RenderTemplateSubstitutes) {
    EXPECT_EQ(text::render_template("Q: {{question}} in {{db}}", {{"question", "why"}, {"db", "x"}}), "Q: why in x");
}

TEST(Net, Sha256KnownVector) {
    EXPECT_EQ(net::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(net::base64_encode("hi!"), "aGkh");
}

TEST(Lexer, SkipsCommentsAndUnquotes) {
    const auto toks = sql::tokenize("SELECT \"a b\" -- note\n FROM t /* c */ WHERE x = 'it''s'");
    ASSERT_GE(toks.size(), 7u);
    EXPECT_EQ(toks[1].kind, sql::TokenKind::quoted_identifier);
    EXPECT_EQ(toks[1].text, "a b");
    bool saw_string = false;
    for (const auto& t : toks) saw_string |= t.kind == sql::TokenKind::string && t.text == "it's";
    EXPECT_TRUE(saw_string);
}

TEST(Lexer, UnterminatedLiteralThrows) {
    EXPECT_THROW(sql::tokenize("SELECT 'abc"), Error);
}

TEST(Parser, SelectWithJoinsAndAliases) {
    const auto q = sql::parse_query("SELECT a.x, COUNT(*) AS n FROM t a JOIN u ON a.id = u.id WHERE a.y > 2 GROUP BY a.x");
    ASSERT_TRUE(q.core.from.has_value());
    EXPECT_EQ(q.core.from->first.name, "t");
    EXPECT_EQ(q.core.from->first.alias, "a");
    ASSERT_EQ(q.core.from->joins.size(), 1u);
    EXPECT_EQ(q.core.items.size(), 2u);
    EXPECT_EQ(q.core.items[1].alias, "n");
    EXPECT_EQ(q.core.group_by.size(), 1u);
}

TEST(Parser, CteCompoundAndOrder) {
    const auto q = sql::parse_query(
        "WITH c AS (SELECT 1 AS v) SELECT v FROM c UNION ALL SELECT 2 ORDER BY 1 LIMIT 5;");
    EXPECT_EQ(q.ctes.size(), 1u);
    ASSERT_EQ(q.compounds.size(), 1u);
    EXPECT_TRUE(q.compounds[0].all);
    EXPECT_EQ(q.order_by.size(), 1u);
    EXPECT_TRUE(q.limit.has_value());
}

TEST(Parser, WriteBodyAfterWithNamesVerb) {
    try {
        sql::parse_query("WITH c AS (SELECT 1) DELETE FROM t");
        FAIL() << "expected a parse error";
    } catch (const sql::ParseError& e) {
        EXPECT_EQ(e.forbidden_verb(), "DELETE");
    }
}

TEST(Parser, RejectsTrailingGarbage) {
    EXPECT_THROW(sql::parse_query("SELECT 1 FROM"), sql::ParseError);
    EXPECT_THROW(sql::parse_query("SELECT 1; SELECT 2"), sql::ParseError);
}

TEST(Parser, WriteVerbs) {
    for (const char* v : {"INSERT", "UPDATE", "DELETE", "DROP", "ALTER", "CREATE", "ATTACH", "PRAGMA"})
        EXPECT_TRUE(sql::is_write_verb(v)) << v;
    EXPECT_FALSE(sql::is_write_verb("SELECT"));
}

TEST(Printer, RoundTripsThroughParser) {
    const std::string src =
        "SELECT t.a, CASE WHEN b > 1 THEN 'x' ELSE 'y' END AS k FROM t WHERE a IN (SELECT a FROM u) AND b BETWEEN 1 AND 3 ORDER BY a DESC";
    const auto once = sql::to_sql(sql::parse_query(src));
    EXPECT_EQ(sql::to_sql(sql::parse_query(once)), once);
}

TEST(Printer, QuotesWhenNeeded) {
    EXPECT_EQ(sql::quote_identifier("plain_name"), "plain_name");
    EXPECT_EQ(sql::quote_identifier("has space"), "\"has space\"");
    EXPECT_EQ(sql::quote_identifier("select"), "\"select\"");
    EXPECT_EQ(sql::quote_literal("it's"), "'it''s'");
}
