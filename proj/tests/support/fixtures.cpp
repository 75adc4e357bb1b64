#include "fixtures.hpp"

#include <unistd.h>

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dq/text.hpp"

namespace dq::testing {

std::string fixture_path(std::string_view name) { return std::string(DQ_TEST_FIXTURES) + "/" + std::string(name); }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

fs::path scratch_dir(std::string_view name) {
    const auto dir = fs::temp_directory_path() / ("dq-tests-" + std::to_string(::getpid())) / std::string(name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_png(const fs::path& path, unsigned char shade) {
    // 1x1 greyscale PNG; `shade` goes in a trailing byte after IEND, which
    // decoders ignore, so each file has its own digest.
    static const unsigned char kPng[] = {
        0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x48, 0x44, 0x52,
        0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3A, 0x7E, 0x9B,
        0x55, 0x00, 0x00, 0x00, 0x0A, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9C, 0x63, 0x60, 0x00, 0x00, 0x00,
        0x02, 0x00, 0x01, 0xE5, 0x27, 0xDE, 0xFC, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4E, 0x44, 0xAE,
        0x42, 0x60, 0x82};
    std::string bytes(reinterpret_cast<const char*>(kPng), sizeof(kPng));
    if (shade) bytes.push_back(static_cast<char>(shade));
    write_text(path, bytes);
}

Database memory_db(std::string_view script) {
    Database db = Database::open(":memory:", false);
    db.exec_script(script);
    return db;
}

OlistFixture make_mini_olist(const fs::path& dir) {
    OlistFixture f;
    f.dir = dir;
    f.db_path = (dir / "olist.db").string();
    fs::remove(f.db_path);
    {
        Database db = Database::open(f.db_path, false);
        db.exec_script(read_text(fixture_path("mini_olist.sql")));
        std::string updates;
        for (int i = 1; i <= 3; ++i) {
            const auto id = "p0" + std::to_string(i);
            const auto img = dir / "img" / (id + ".png");
            write_png(img, static_cast<unsigned char>(i));
            updates += "UPDATE products SET image_url = '" + img.string() + "' WHERE product_id = '" + id + "';\n";
        }
        db.exec_script(updates);
    }
    f.url = "sqlite:///" + fs::absolute(f.db_path).string().substr(1);
    return f;
}

std::string user_text(const ResolvedRequest& request) {
    std::string out;
    for (const auto& p : request.request->parts) {
        if (p.is_asset()) continue;
        if (!out.empty()) out += "\n";
        out += p.text;
    }
    return out;
}

namespace {

const std::map<std::string, std::string>& rationales() {
    static const std::map<std::string, std::string> r = {
        {"p01", "The record is in the furniture category and costs 45.0, which is under 100. "
                "The photo shows a wooden chair with a natural grain finish."},
        {"p02", "The record is in the furniture category and costs 79.9, which is under 100. "
                "The photo shows a stool made of brushed metal; no wood is visible."},
        {"p03", "The record is in the furniture category and costs 95.5, which is under 100. "
                "The photo shows a small wooden side table."},
    };
    return r;
}

std::string fenced(std::string_view lang, std::string_view body) {
    return "```" + std::string(lang) + "\n" + std::string(body) + "\n```";
}

}  // namespace

std::string olist_model(const ResolvedRequest& request) {
    const auto& id = request.request->template_id;
    const auto body = user_text(request);
    if (id == "sile_plan.v1") {
        if (body.find("furniture") != std::string::npos)
            return "The question asks for products.\n" + fenced("json", R"({"base_table": "products", "join_tables": []})");
        return "Orders carry a status.\n" + fenced("json", R"({"base_table": "orders", "join_tables": []})");
    }
    if (id == "sqp_generate.v1")
        return fenced("sql", "SELECT COUNT(*) AS delivered FROM orders WHERE status = 'delivered'");
    if (id == "mmp_where.v1") return fenced("sql", "products.category = 'furniture' AND products.price < 100");
    if (id == "mmp_rationale.v1") {
        for (const auto& [key, text] : rationales())
            if (body.find("products.product_id: " + key) != std::string::npos) return text;
        return "Nothing in the record matches.";
    }
    if (id == "decision_rule.v1") {
        const auto rationale = body.substr(std::min(body.find("Rationale:"), body.size()));
        const bool wooden = rationale.find("wooden") != std::string::npos;
        return fenced("json", std::string(R"({"constraints": [)") +
                                  R"({"text": "furniture", "status": "met"}, )" +
                                  R"({"text": "priced under 100", "status": "met"}, )" +
                                  R"({"text": "wooden piece in the photo", "status": ")" +
                                  (wooden ? "met" : "not_met") + R"("}], "label": ")" +
                                  (wooden ? "ACCEPT" : "RECOMMEND") + R"("})");
    }
    return "unsupported template " + id;
}

std::shared_ptr<ModelBackend> olist_backend() {
    return std::make_shared<FunctionBackend>(olist_model, "olist-model");
}

}  // namespace dq::testing
