#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "dq/cli.hpp"
#include "dq/error.hpp"
#include "dq/evalkit.hpp"
#include "dq/forensics.hpp"
#include "dq/mmp.hpp"
#include "dq/ragbase.hpp"
#include "dq/sile.hpp"
#include "dq/sqp.hpp"
#include "json_util.hpp"

namespace dq::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kUsageError = 2;

void write_file(const fs::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path.string() + "'", path.string());
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string value_text(const Value& v) {
    if (is_null(v)) return "NULL";
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return detail::value_json(v).dump();
}

void print_rows(const ResultSet& rs, std::ostream& out) {
    if (!rs.columns.empty()) {
        for (std::size_t i = 0; i < rs.columns.size(); ++i) out << (i ? "\t" : "") << rs.columns[i];
        out << "\n";
    }
    for (const auto& row : rs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << value_text(row[i]);
        out << "\n";
    }
    out << rs.rows.size() << (rs.rows.size() == 1 ? " row" : " rows") << "\n";
}

Database open_database(const Config& c) {
    if (c.database_url.empty())
        throw Error(ErrorCode::invalid_argument, "no database configured (--db-url or database_url)");
    try {
        return Database::open(c.database_url, true);
    } catch (const Error& e) {
        throw PipelineError("connect", e);
    }
}

struct Session {
    Database db;
    SchemaModel schema;
    std::unique_ptr<ModelGateway> gateway;
};

Session open_session(const Config& c, bool with_model) {
    Database db = open_database(c);
    SchemaModel schema = load_schema(c, db);
    Session s{std::move(db), std::move(schema), nullptr};
    if (with_model) {
        AssetOptions assets;
        assets.root = c.asset_root;
        GatewayOptions gopts;
        gopts.default_model_id = c.model.model_id;
        s.gateway = std::make_unique<ModelGateway>(make_backend(c), AssetResolver(assets), gopts);
    }
    return s;
}

std::string stratum_for(const GoldEntry& g) {
    if (g.difficulty && !g.difficulty->empty()) return *g.difficulty;
    try {
        return std::string(to_string(classify_hardness(g.sql)));
    } catch (const Error& e) {
        throw Error(ErrorCode::input_data,
                    "query '" + g.query_id + "' has no difficulty and its SQL does not parse: " + e.what(),
                    g.query_id);
    }
}

struct SampleDraw {
    std::vector<GoldEntry> entries;
    std::string manifest;
    ChiSquareResult check;
};

SampleDraw draw_sample(const std::vector<GoldEntry>& gold, std::size_t n, std::uint64_t seed) {
    std::vector<std::string> strata;
    std::map<std::string, std::size_t> population;
    for (const auto& g : gold) {
        strata.push_back(stratum_for(g));
        ++population[strata.back()];
    }
    const auto indices = stratified_sample(strata, n, seed);
    SampleDraw draw;
    std::map<std::string, std::size_t> drawn;
    ojson ids = ojson::array();
    for (const auto i : indices) {
        draw.entries.push_back(gold[i]);
        draw.entries.back().difficulty = strata[i];
        ++drawn[strata[i]];
        ids.push_back(gold[i].query_id);
    }
    draw.check = representativeness_check(drawn, population);
    ojson manifest = {{"seed", seed},
                      {"n", n},
                      {"population", gold.size()},
                      {"population_by_stratum", population},
                      {"allocation", allocate_proportional(population, n)},
                      {"query_ids", ids},
                      {"chi_square",
                       {{"statistic", draw.check.statistic},
                        {"degrees_of_freedom", draw.check.degrees_of_freedom},
                        {"p_value", draw.check.p_value},
                        {"pass", draw.check.pass}}}};
    draw.manifest = manifest.dump(2) + "\n";
    return draw;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Natural-language querying over relational databases with linked media", "dq"};
    app.require_subcommand(1);

    std::string config_path, db_url, transcript, mode;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "YAML configuration file");
    auto* db_opt = app.add_option("--db-url", db_url, "Database URL (sqlite:///path.db)");
    auto* transcript_opt = app.add_option("--transcript", transcript, "Model transcript (JSONL)");
    auto* mode_opt = app.add_option("--mode", mode, "Model gateway mode")
                         ->check(CLI::IsMember({"live", "record", "replay"}));
    auto* seed_opt = app.add_option("--seed", seed, "Random seed");
    std::string out_dir, run_root, enrich, asset_root;
    auto* out_opt = app.add_option("--out-dir", out_dir, "Write artifacts here instead of a timestamped run directory");
    auto* root_opt = app.add_option("--run-root", run_root, "Parent directory of run directories");
    auto* enrich_opt = app.add_option("--enrich", enrich, "Schema description file (YAML)");
    auto* asset_opt = app.add_option("--asset-root", asset_root, "Directory that relative media paths resolve against");

    auto* introspect_cmd = app.add_subcommand("introspect", "Print the database schema");
    std::string style = "full", cache_file;
    introspect_cmd->add_option("--style", style)->check(CLI::IsMember({"compact", "full"}));
    introspect_cmd->add_option("--cache-file", cache_file, "Also write the rendering to this file");

    auto* plan_cmd = app.add_subcommand("plan", "Link a question to a query plan");
    std::string question, linker = "sile";
    std::size_t k = 0;
    plan_cmd->add_option("question", question)->required();
    plan_cmd->add_option("--linker", linker)->check(CLI::IsMember({"sile", "rag"}));
    auto* k_opt = plan_cmd->add_option("--k", k, "Retrieval depth for the rag linker");

    auto* ask_cmd = app.add_subcommand("ask", "Answer a question through a pipeline");
    std::string pipeline, decider;
    std::optional<std::uint64_t> shuffle_seed;
    ask_cmd->add_option("question", question)->required();
    ask_cmd->add_option("--pipeline", pipeline, "sql or mm")->required()->check(CLI::IsMember({"sql", "mm"}));
    auto* decider_opt =
        ask_cmd->add_option("--decider", decider)->check(CLI::IsMember({"rule", "descriptive", "remote"}));
    ask_cmd->add_option("--shuffle-seed", shuffle_seed, "Shuffle multimodal record processing order");

    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold queries");
    std::string gold_path, pred_path;
    bool ves = false, generate = false;
    std::size_t sample_n = 0;
    eval_cmd->add_option("--gold", gold_path)->required();
    eval_cmd->add_option("--pred", pred_path);
    eval_cmd->add_flag("--generate", generate, "Generate predictions with the structured pipeline");
    eval_cmd->add_flag("--ves", ves, "Also compute the valid efficiency score");
    auto* sample_opt = eval_cmd->add_option("--sample", sample_n, "Evaluate a stratified sample of this size");

    auto* sample_cmd = app.add_subcommand("sample", "Draw a stratified sample of a gold file");
    std::size_t n = 0;
    sample_cmd->add_option("--gold", gold_path)->required();
    sample_cmd->add_option("--n", n)->required();

    auto* forensics_cmd = app.add_subcommand("forensics", "Categorize failed queries of an evaluation report");
    std::string report_path;
    forensics_cmd->add_option("--report", report_path)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        Config c;
        if (!config_path.empty()) apply_config_file(c, config_path);
        apply_env(c, env);
        if (db_opt->count()) c.database_url = db_url;
        if (transcript_opt->count()) c.transcript_path = transcript;
        if (mode_opt->count()) c.mode = gateway_mode_from_string(mode);
        if (seed_opt->count()) c.seed = seed;
        if (out_opt->count()) c.out_dir = out_dir;
        if (asset_opt->count()) c.asset_root = asset_root;
        if (root_opt->count()) c.run_root = run_root;
        if (enrich_opt->count()) c.enrichment_path = enrich;
        if (decider_opt->count()) c.decider = decider;
        if (k_opt->count()) c.retrieval_k = k;
        QueryOptions qopts;
        qopts.timeout = c.query_timeout;

        if (*introspect_cmd) {
            const Database db = open_database(c);
            std::vector<std::string> diagnostics;
            const SchemaModel schema = load_schema(c, db, &diagnostics);
            for (const auto& d : diagnostics) err << "warning: " << d << "\n";
            const auto rendering =
                render_schema_context(schema, style == "compact" ? RenderStyle::compact : RenderStyle::full);
            out << rendering;
            if (!cache_file.empty()) write_file(cache_file, rendering);
            return 0;
        }

        if (*plan_cmd) {
            if (linker == "rag") {
                Session s = open_session(c, false);
                std::unique_ptr<Embedder> embedder;
                if (c.embed_url.empty()) {
                    embedder = std::make_unique<LexicalEmbedder>();
                } else {
                    auto ec = HttpEmbedderConfig::from_env();
                    ec.url = c.embed_url;
                    embedder = std::make_unique<HttpEmbedder>(ec);
                }
                const auto index = index_schema(s.schema, *embedder);
                const auto result = retrieve(NLQuery{question, {}}, index, *embedder, c.retrieval_k);
                ojson ranked = ojson::array();
                for (const auto& [table, score] : result.ranked) ranked.push_back({{"table", table}, {"score", score}});
                out << ojson{{"linker", "rag"}, {"k", result.k}, {"ranked", ranked}}.dump(2) << "\n";
                return 0;
            }
            Session s = open_session(c, true);
            const ValidatedPlan p = plan(NLQuery{question, {}}, s.schema, *s.gateway);
            out << ojson{{"base_table", p->base_table}, {"join_tables", p->join_tables}, {"reasoning", p->reasoning}}
                       .dump(2)
                << "\n";
            return 0;
        }

        if (*ask_cmd) {
            Session s = open_session(c, true);
            const NLQuery query{question, {}};
            std::string report;
            if (pipeline == "sql") {
                SqpOptions opts;
                opts.query = qopts;
                const SqpRun run = run_sqp(query, s.schema, s.db, *s.gateway, opts);
                print_rows(run.result, out);
                report = provenance_json(run);
            } else {
                auto d = make_decider(c, *s.gateway);
                MmpOptions opts;
                opts.query = qopts;
                opts.shuffle_seed = shuffle_seed;
                const MmpRun run = run_mmp(query, s.schema, s.db, *s.gateway, *d, opts);
                print_rows(run.result, out);
                report = report_json(run);
            }
            const fs::path path = fs::path(run_directory(c)) / "report.json";
            write_file(path, report);
            err << "report: " << path.string() << "\n";
            return 0;
        }

        if (*eval_cmd) {
            if (pred_path.empty() == !generate)
                throw Error(ErrorCode::invalid_argument, "eval needs exactly one of --pred or --generate");
            auto gold = load_gold(gold_path);
            const fs::path dir = run_directory(c);
            if (sample_opt->count()) {
                const auto draw = draw_sample(gold, sample_n, c.seed);
                write_file(dir / "sample_manifest.json", draw.manifest);
                gold = draw.entries;
            }
            std::vector<Prediction> preds;
            Session s = open_session(c, generate);
            if (generate) {
                std::string jsonl;
                for (const auto& g : gold) {
                    Prediction p{g.query_id, {}};
                    try {
                        SqpOptions opts;
                        opts.query = qopts;
                        p.sql = run_sqp(NLQuery{g.question, {}}, s.schema, s.db, *s.gateway, opts)
                                    .provenance.sanitized_sql;
                    } catch (const Error& e) {
                        err << "warning: " << g.query_id << ": " << e.what() << "\n";
                    }
                    jsonl += ojson{{"query_id", p.query_id}, {"sql", p.sql}}.dump() + "\n";
                    preds.push_back(std::move(p));
                }
                write_file(dir / "predictions.jsonl", jsonl);
            } else {
                preds = load_predictions(pred_path);
            }
            EvalOptions opts;
            opts.ves = ves;
            opts.query = qopts;
            const EvalReport rep = evaluate(gold, preds, s.db, opts);
            const auto table = report_table(rep);
            write_file(dir / "report.json", report_json(rep));
            write_file(dir / "table.txt", table);
            out << table;
            err << "report: " << (dir / "report.json").string() << "\n";
            return 0;
        }

        if (*sample_cmd) {
            const auto draw = draw_sample(load_gold(gold_path), n, c.seed);
            const fs::path path = fs::path(run_directory(c)) / "sample_manifest.json";
            write_file(path, draw.manifest);
            out << draw.manifest;
            if (!draw.check.pass) err << "warning: sample fails the representativeness check\n";
            return 0;
        }

        if (*forensics_cmd) {
            const EvalReport rep = parse_report_json(read_file(report_path));
            Session s = open_session(c, false);
            const auto findings = analyze_report(rep, s.schema);
            const fs::path dir = run_directory(c);
            write_file(dir / "findings.jsonl", findings_jsonl(findings));
            if (findings.empty()) {
                out << "no failures\n";
                return 0;
            }
            const auto table = render_failure_table(failure_report(findings));
            write_file(dir / "failures.txt", table);
            out << table;
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return kUsageError;
}

}  // namespace dq::cli
