#include "dq/mmp.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "dq/error.hpp"
#include "dq/net.hpp"
#include "dq/resources.hpp"
#include "dq/sql/parser.hpp"
#include "dq/sql/printer.hpp"
#include "dq/text.hpp"
#include "json_util.hpp"

namespace dq {

namespace {

constexpr std::string_view kWhereTemplate = "mmp_where.v1";
constexpr std::string_view kRationaleTemplate = "mmp_rationale.v1";

constexpr std::string_view kImageExtensions[] = {".jpg", ".jpeg", ".png", ".gif", ".webp",
                                                 ".bmp", ".tif",  ".tiff", ".svg", ".heic"};
constexpr std::string_view kDocumentExtensions[] = {".pdf", ".doc", ".docx", ".txt", ".md",
                                                    ".rtf", ".odt", ".html", ".htm", ".csv"};

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        throw PipelineError(name, e);
    }
}

std::string extension_of(std::string_view value) {
    std::string_view path = text::trim(value);
    if (const auto q = path.find_first_of("?#"); q != std::string_view::npos) path = path.substr(0, q);
    const auto slash = path.find_last_of('/');
    const auto dot = path.rfind('.');
    if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash)) return {};
    return text::to_lower(path.substr(dot));
}

template <std::size_t N>
bool has_extension(const std::string& ext, const std::string_view (&list)[N]) {
    return std::find(std::begin(list), std::end(list), ext) != std::end(list);
}

std::string q(std::string_view identifier) { return sql::quote_identifier(identifier); }

void collect_columns(const sql::Expr& e, std::vector<const sql::Expr*>& out) {
    if (e.kind == sql::ExprKind::column) out.push_back(&e);
    for (const auto& a : e.args) collect_columns(a, out);
}

MediaKind media_kind(Modality m) {
    return m == Modality::document_path ? MediaKind::document : MediaKind::image;
}

}  // namespace

std::string_view to_string(RecordStatus status) {
    switch (status) {
        case RecordStatus::accepted: return "ACCEPT";
        case RecordStatus::recommended: return "RECOMMEND";
        case RecordStatus::rejected: return "REJECT";
        case RecordStatus::skipped: return "SKIPPED";
    }
    return "SKIPPED";
}

// ---- discovery ----------------------------------------------------------

MultimodalColumnSet discover_multimodal_columns(const PrunedSchema& pruned, const Database& db,
                                                const DiscoveryOptions& options) {
    MultimodalColumnSet out;
    for (const auto& table : pruned.schema.tables()) {
        for (const auto& column : table.columns) {
            const bool name_match =
                std::any_of(options.patterns.begin(), options.patterns.end(),
                            [&](const std::string& p) { return text::glob_match(p, column.name); });
            if (!name_match) continue;
            const std::string sample_sql = "SELECT " + q(column.name) + " FROM " + q(table.name) +
                                           " WHERE " + q(column.name) + " IS NOT NULL LIMIT " +
                                           std::to_string(options.sample_size);
            ResultSet rs;
            try {
                rs = db.query(sample_sql);
            } catch (const Error& e) {
                throw Error(ErrorCode::sql_runtime,
                            "sampling " + table.name + "." + column.name + " failed: " + e.what(),
                            table.name + "." + column.name);
            }
            std::size_t images = 0, documents = 0;
            for (const auto& row : rs.rows) {
                const auto* s = std::get_if<std::string>(&row.front());
                if (!s) continue;
                const auto ext = extension_of(*s);
                if (has_extension(ext, kImageExtensions)) ++images;
                else if (has_extension(ext, kDocumentExtensions)) ++documents;
            }
            const std::size_t n = rs.rows.size();
            if (n == 0) continue;
            if (images * 2 > n) out.entries.push_back({table.name, column.name, Modality::image_url});
            else if (documents * 2 > n)
                out.entries.push_back({table.name, column.name, Modality::document_path});
        }
    }
    return out;
}

// ---- fragments ----------------------------------------------------------

void validate_where_fragment(std::string_view fragment, const PrunedSchema& pruned) {
    sql::Expr expr;
    try {
        expr = sql::parse_expression(fragment);
    } catch (const Error& e) {
        throw Error(ErrorCode::fragment_invalid,
                    "where fragment does not parse: " + std::string(e.what()), std::string(fragment));
    }
    std::vector<const sql::Expr*> columns;
    collect_columns(expr, columns);
    for (const auto* c : columns) {
        if (!c->qualifier.empty()) {
            const Table* t = pruned.schema.find_table(c->qualifier);
            if (!t)
                throw Error(ErrorCode::fragment_invalid,
                            "where fragment references table '" + c->qualifier +
                                "' which is not part of the plan",
                            c->qualifier);
            if (!t->find_column(c->text))
                throw Error(ErrorCode::fragment_invalid,
                            "where fragment references unknown column '" + c->qualifier + "." +
                                c->text + "'",
                            c->qualifier + "." + c->text);
            continue;
        }
        const auto& tables = pruned.schema.tables();
        const auto owners = std::count_if(tables.begin(), tables.end(),
                                          [&](const Table& t) { return t.find_column(c->text) != nullptr; });
        if (owners == 0)
            throw Error(ErrorCode::fragment_invalid,
                        "where fragment references unknown column '" + c->text + "'", c->text);
        if (owners > 1)
            throw Error(ErrorCode::fragment_invalid,
                        "where fragment column '" + c->text + "' is ambiguous; qualify it with its table",
                        c->text);
    }
}

std::string extract_where_fragment(std::string_view model_output) {
    std::string body;
    const auto blocks = text::fenced_blocks(model_output);
    if (!blocks.empty()) body = blocks.front().body;
    else body = std::string(model_output);
    std::string_view frag = text::trim(body);
    if (text::istarts_with(frag, "WHERE") &&
        (frag.size() == 5 || !std::isalnum(static_cast<unsigned char>(frag[5]))))
        frag = text::trim(frag.substr(5));
    while (!frag.empty() && frag.back() == ';') frag = text::trim(frag.substr(0, frag.size() - 1));
    return std::string(frag);
}

SqlFragment build_where_clause(const NLQuery& query, const PrunedSchema& pruned,
                               const ValidatedPlan& plan, ModelGateway& gateway) {
    const Prompt prompt = render_prompt(
        kWhereTemplate, {{"schema", render_schema_context(pruned.schema, RenderStyle::full)},
                         {"base_table", plan->base_table},
                         {"join_tables", plan->join_tables.empty() ? std::string("(none)")
                                                                   : text::join(plan->join_tables, ", ")},
                         {"question", query.text}});
    ModelRequest request;
    request.system_prompt = prompt.system;
    request.parts.push_back(ContentPart::text_part(prompt.user));
    request.template_id = prompt.template_id;
    const SqlFragment join = build_join_clause(pruned, plan);
    for (int attempt = 1;; ++attempt) {
        const ModelResponse response = gateway.complete(request);
        try {
            SqlFragment out{FragmentRole::where, extract_where_fragment(response.text)};
            if (!out.empty()) {
                validate_where_fragment(out.text, pruned);
                assemble_sql("*", join, out, {FragmentRole::not_null, {}}, plan->base_table);
            }
            return out;
        } catch (const Error& e) {
            if (attempt == 2)
                throw Error(ErrorCode::fragment_invalid,
                            std::string("where fragment still invalid after repair: ") + e.what(),
                            e.detail());
            const Prompt repair =
                render_prompt("repair.v1", {{"previous", response.text}, {"error", e.what()}});
            request.parts.push_back(ContentPart::text_part(repair.user));
        }
    }
}

SqlFragment build_join_clause(const PrunedSchema& pruned, const ValidatedPlan& plan) {
    SqlFragment out{FragmentRole::join, {}};
    if (plan->join_tables.empty()) return out;
    const auto& schema = pruned.schema;
    const Table& base = schema.table(plan->base_table);

    struct Edge {
        std::string neighbour;
        std::vector<std::pair<std::string, std::string>> columns;  // (this side, neighbour side)
    };
    std::map<std::string, std::vector<Edge>> graph;  // lower-cased table -> edges, catalog order
    for (const auto& t : schema.tables()) {
        for (const auto& fk : t.foreign_keys) {
            const Table& ref = schema.table(fk.referenced_table);
            Edge fwd{ref.name, {}}, back{t.name, {}};
            for (std::size_t i = 0; i < fk.local_columns.size(); ++i) {
                fwd.columns.emplace_back(fk.local_columns[i], fk.referenced_columns[i]);
                back.columns.emplace_back(fk.referenced_columns[i], fk.local_columns[i]);
            }
            graph[text::to_lower(t.name)].push_back(std::move(fwd));
            if (!text::iequals(t.name, ref.name)) graph[text::to_lower(ref.name)].push_back(std::move(back));
        }
    }

    std::map<std::string, std::pair<std::string, const Edge*>> parent;  // child -> (parent, edge)
    std::vector<std::string> order;
    std::deque<std::string> frontier{base.name};
    std::set<std::string> seen{text::to_lower(base.name)};
    while (!frontier.empty()) {
        const std::string cur = frontier.front();
        frontier.pop_front();
        for (const auto& e : graph[text::to_lower(cur)]) {
            const auto key = text::to_lower(e.neighbour);
            if (!seen.insert(key).second) continue;
            parent[key] = {cur, &e};
            order.push_back(e.neighbour);
            frontier.push_back(e.neighbour);
        }
    }
    for (const auto& j : plan->join_tables) {
        if (!parent.count(text::to_lower(j)))
            throw Error(ErrorCode::no_join_path,
                        "no foreign-key path between '" + base.name + "' and '" + j +
                            "' in the pruned schema",
                        base.name + "," + j);
    }
    std::vector<std::string> clauses;
    for (const auto& child : order) {
        const auto& [par, edge] = parent.at(text::to_lower(child));
        std::vector<std::string> conds;
        for (const auto& [par_col, child_col] : edge->columns)
            conds.push_back(q(child) + "." + q(child_col) + " = " + q(par) + "." + q(par_col));
        clauses.push_back("INNER JOIN " + q(child) + " ON " + text::join(conds, " AND "));
    }
    out.text = text::join(clauses, " ");
    return out;
}

SqlFragment build_not_null_clause(const MultimodalColumnSet& columns) {
    std::vector<std::string> parts;
    for (const auto& e : columns.entries) parts.push_back(q(e.table) + "." + q(e.column) + " IS NOT NULL");
    return {FragmentRole::not_null, text::join(parts, " AND ")};
}

SanitizedSql assemble_sql(std::string_view projection, const SqlFragment& join,
                          const SqlFragment& where, const SqlFragment& not_null,
                          std::string_view base_table, std::string_view dialect) {
    std::string stmt = "SELECT " + std::string(projection) + " FROM " + q(base_table);
    if (!join.empty()) stmt += " " + join.text;
    if (!where.empty() && !not_null.empty()) stmt += " WHERE (" + where.text + ") AND " + not_null.text;
    else if (!where.empty()) stmt += " WHERE " + where.text;
    else if (!not_null.empty()) stmt += " WHERE " + not_null.text;
    return sanitize(stmt, dialect);
}

// ---- per-record reasoning ----------------------------------------------

Rationale generate_rationale(const NLQuery& query, const CandidateRecord& record,
                             const MultimodalColumnSet& columns, ModelGateway& gateway) {
    std::vector<AssetRef> assets;
    for (const auto& [col, ref] : record.asset_refs) {
        const bool listed = std::any_of(columns.entries.begin(), columns.entries.end(),
                                        [&](const MultimodalColumn& e) { return text::iequals(e.qualified(), col); });
        if (listed || columns.empty()) assets.push_back(ref);
    }
    if (assets.empty())
        throw Error(ErrorCode::asset_unavailable, "record has no linked assets");
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < record.columns.size(); ++i)
        lines.push_back(record.columns[i] + ": " + display(record.values[i]));
    const Prompt prompt = render_prompt(
        kRationaleTemplate, {{"question", query.text}, {"record", text::join(lines, "\n")}});
    ModelRequest request;
    request.system_prompt = prompt.system;
    request.parts.push_back(ContentPart::text_part(prompt.user));
    for (const auto& ref : assets) request.parts.push_back({{}, ref});
    request.template_id = prompt.template_id;
    const ModelResponse response = gateway.complete(request);
    if (text::trim(response.text).empty())
        throw Error(ErrorCode::empty_completion, "model returned an empty rationale");
    return {response.text, record.primary_key};
}

std::string final_query_sql(const Table& base, std::vector<std::vector<Value>> keys) {
    std::sort(keys.begin(), keys.end(), rows_less);
    keys.erase(std::unique(keys.begin(), keys.end(),
                           [](const auto& a, const auto& b) { return !rows_less(a, b) && !rows_less(b, a); }),
               keys.end());
    std::vector<std::string> items;
    for (const auto& k : keys) {
        std::vector<std::string> lits;
        for (const auto& v : k) lits.push_back(to_sql_literal(v));
        items.push_back(k.size() == 1 ? lits.front() : "(" + text::join(lits, ", ") + ")");
    }
    std::vector<std::string> cols;
    for (const auto& c : base.primary_key) cols.push_back(q(c));
    const std::string lhs = cols.size() == 1 ? cols.front() : "(" + text::join(cols, ", ") + ")";
    return "SELECT * FROM " + q(base.name) + " WHERE " + lhs + " IN (" + text::join(items, ", ") + ")";
}

// ---- pipeline -----------------------------------------------------------

MmpRun run_mmp(const NLQuery& query, const SchemaModel& schema, const Database& db,
               ModelGateway& gateway, Decider& decider, const MmpOptions& options) {
    MmpRun run;
    MmpReport& rep = run.report;
    rep.question = query.text;

    const ValidatedPlan validated = stage("plan", [&] { return plan(query, schema, gateway); });
    rep.plan = validated.plan();
    rep.template_ids.push_back(validated->template_id);

    const PrunedSchema pruned = stage("prune", [&] { return prune_schema(schema, validated); });
    rep.pruned_tables = pruned.schema.table_names();
    rep.prune_diagnostics = pruned.diagnostics;
    const Table& base = pruned.schema.table(validated->base_table);

    rep.multimodal_columns =
        stage("discover", [&] { return discover_multimodal_columns(pruned, db, options.discovery); });
    rep.join = stage("join", [&] { return build_join_clause(pruned, validated); });
    rep.where = stage("where", [&] { return build_where_clause(query, pruned, validated, gateway); });
    rep.template_ids.emplace_back(kWhereTemplate);
    rep.not_null = build_not_null_clause(rep.multimodal_columns);
    const SanitizedSql assembled = stage("assemble", [&] {
        return assemble_sql("*", rep.join, rep.where, rep.not_null, base.name, db.dialect());
    });
    rep.assembled_sql = assembled.text();
    const ResultSet candidates_rs = stage("execute", [&] { return execute(assembled, db, options.query); });

    // Map result positions to qualified names: SELECT * yields the base
    // columns, then each joined table's columns in join order.
    std::vector<std::string> qualified;
    std::vector<std::string> joined_order{base.name};
    {
        const auto joined = sql::parse_query(assembled.text());
        if (joined.core.from) {
            for (const auto& j : joined.core.from->joins) joined_order.push_back(j.table.name);
        }
    }
    for (const auto& tname : joined_order) {
        for (const auto& c : pruned.schema.table(tname).columns) qualified.push_back(pruned.schema.table(tname).name + "." + c.name);
    }
    if (qualified.size() != candidates_rs.columns.size()) qualified = candidates_rs.columns;

    const auto position_of = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < qualified.size(); ++i)
            if (text::iequals(qualified[i], name)) return i;
        return std::nullopt;
    };

    rep.primary_key = base.primary_key;
    if (base.primary_key.empty())
        throw PipelineError("candidates", Error(ErrorCode::missing_primary_key,
                                                "base table '" + base.name + "' has no primary key",
                                                base.name));
    std::vector<std::size_t> key_pos;
    for (const auto& k : base.primary_key) {
        const auto p = position_of(base.name + "." + k);
        if (!p)
            throw PipelineError("candidates", Error(ErrorCode::missing_primary_key,
                                                    "primary key column '" + k + "' not in candidate rows", k));
        key_pos.push_back(*p);
    }

    std::vector<CandidateRecord> candidates;
    std::set<std::vector<Value>, decltype(&rows_less)> seen_keys(&rows_less);
    for (const auto& row : candidates_rs.rows) {
        CandidateRecord rec;
        for (const auto p : key_pos) rec.primary_key.push_back(row[p]);
        if (!seen_keys.insert(rec.primary_key).second) continue;
        rec.columns = qualified;
        rec.values = row;
        for (const auto& e : rep.multimodal_columns.entries) {
            const auto p = position_of(e.qualified());
            if (!p) continue;
            if (const auto* s = std::get_if<std::string>(&row[*p]))
                rec.asset_refs.emplace_back(e.qualified(), AssetRef{*s, media_kind(e.kind)});
        }
        candidates.push_back(std::move(rec));
    }
    rep.candidate_count = candidates.size();

    // Phase 2: bounded fan-out; each worker writes only its own slot.
    std::vector<RecordOutcome> outcomes(candidates.size());
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (options.shuffle_seed) {
        std::mt19937_64 rng(*options.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> rationale_calls{0};
    const auto worker = [&] {
        for (std::size_t slot = next++; slot < order.size(); slot = next++) {
            const std::size_t idx = order[slot];
            const auto& rec = candidates[idx];
            RecordOutcome& out = outcomes[idx];
            out.key = rec.primary_key;
            if (rec.asset_refs.empty()) {
                out.skipped_reason = "no_assets";
                continue;
            }
            Rationale rationale;
            try {
                rationale = generate_rationale(query, rec, rep.multimodal_columns, gateway);
                ++rationale_calls;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::asset_unavailable) ++rationale_calls;
                out.skipped_reason = std::string(to_string(e.code())) + ": " + e.what();
                continue;
            }
            out.rationale_digest = net::sha256_hex(rationale.text);
            try {
                switch (decider.decide(query.text, rationale.text)) {
                    case DecisionLabel::accept: out.status = RecordStatus::accepted; break;
                    case DecisionLabel::recommend: out.status = RecordStatus::recommended; break;
                    case DecisionLabel::reject: out.status = RecordStatus::rejected; break;
                }
            } catch (const Error& e) {
                out.skipped_reason = std::string(to_string(e.code())) + ": " + e.what();
            }
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(std::max<std::size_t>(options.max_parallel, 1), candidates.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    rep.rationale_calls = rationale_calls.load();
    rep.template_ids.emplace_back(kRationaleTemplate);
    rep.template_ids.push_back("decision:" + decider.id());

    std::sort(outcomes.begin(), outcomes.end(),
              [](const RecordOutcome& a, const RecordOutcome& b) { return rows_less(a.key, b.key); });
    for (const auto& o : outcomes) {
        if (o.status == RecordStatus::accepted) rep.accepted_keys.push_back(o.key);
        else if (o.status == RecordStatus::recommended) rep.recommended_keys.push_back(o.key);
        else if (o.status == RecordStatus::skipped) ++rep.skipped_count;
    }
    rep.records = std::move(outcomes);

    if (rep.accepted_keys.empty()) {
        for (const auto& c : base.columns) run.result.columns.push_back(c.name);
        return run;
    }
    rep.final_sql = stage("synthesize", [&] {
        return sanitize(final_query_sql(base, rep.accepted_keys), db.dialect()).text();
    });
    run.result = stage("synthesize", [&] {
        return execute(sanitize(*rep.final_sql, db.dialect()), db, options.query);
    });
    return run;
}

std::string report_json(const MmpRun& run) {
    using ojson = nlohmann::ordered_json;
    const auto& r = run.report;
    const auto key_json = [](const std::vector<Value>& key) {
        ojson k = ojson::array();
        for (const auto& v : key) k.push_back(detail::value_json(v));
        return k;
    };
    ojson plan_json = nullptr;
    if (r.plan) {
        plan_json = {{"base_table", r.plan->base_table},
                     {"join_tables", r.plan->join_tables},
                     {"reasoning", r.plan->reasoning},
                     {"template_id", r.plan->template_id},
                     {"model_calls", r.plan->model_calls}};
    }
    ojson mm = ojson::array();
    for (const auto& e : r.multimodal_columns.entries)
        mm.push_back({{"table", e.table}, {"column", e.column}, {"kind", to_string(e.kind)}});
    ojson records = ojson::array();
    for (const auto& o : r.records) {
        records.push_back({{"key", key_json(o.key)},
                           {"label", to_string(o.status)},
                           {"rationale_digest", o.rationale_digest},
                           {"skipped_reason", o.skipped_reason}});
    }
    ojson accepted = ojson::array(), recommended = ojson::array();
    for (const auto& k : r.accepted_keys) accepted.push_back(key_json(k));
    for (const auto& k : r.recommended_keys) recommended.push_back(key_json(k));
    ojson doc = {{"pipeline", "multimodal"},
                 {"question", r.question},
                 {"plan", plan_json},
                 {"pruned_tables", r.pruned_tables},
                 {"prune_diagnostics", r.prune_diagnostics},
                 {"multimodal_columns", mm},
                 {"fragments", {{"where", r.where.text}, {"join", r.join.text}, {"not_null", r.not_null.text}}},
                 {"assembled_sql", r.assembled_sql},
                 {"primary_key", r.primary_key},
                 {"candidate_count", r.candidate_count},
                 {"rationale_calls", r.rationale_calls},
                 {"records", records},
                 {"skipped_count", r.skipped_count},
                 {"accepted_keys", accepted},
                 {"recommended", recommended},
                 {"final_sql", r.final_sql ? ojson(*r.final_sql) : ojson(nullptr)},
                 {"template_ids", r.template_ids},
                 {"result", detail::result_json(run.result)}};
    return doc.dump(2) + "\n";
}

}  // namespace dq
