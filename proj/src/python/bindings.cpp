#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dq/catalog.hpp"
#include "dq/cli.hpp"
#include "dq/decision.hpp"
#include "dq/error.hpp"
#include "dq/evalkit.hpp"
#include "dq/forensics.hpp"
#include "dq/mmp.hpp"
#include "dq/modelgate.hpp"
#include "dq/sile.hpp"
#include "dq/sqp.hpp"

namespace py = pybind11;

namespace {

py::object to_py(const dq::Value& v) {
    if (dq::is_null(v)) return py::none();
    if (const auto* i = std::get_if<std::int64_t>(&v)) return py::int_(*i);
    if (const auto* d = std::get_if<double>(&v)) return py::float_(*d);
    return py::str(std::get<std::string>(v));
}

py::dict result_dict(const dq::ResultSet& rs) {
    py::list rows;
    for (const auto& row : rs.rows) {
        py::list r;
        for (const auto& v : row) r.append(to_py(v));
        rows.append(py::tuple(r));
    }
    py::dict d;
    d["columns"] = rs.columns;
    d["rows"] = rows;
    d["ordered"] = rs.ordered;
    return d;
}

// Python responder: fn(system_prompt, [text parts], [asset locations]) -> str.
using Responder = std::function<std::string(std::string, std::vector<std::string>, std::vector<std::string>)>;

std::unique_ptr<dq::ModelGateway> make_gateway(Responder responder, const std::string& asset_root) {
    auto backend = std::make_shared<dq::FunctionBackend>(
        [responder = std::move(responder)](const dq::ResolvedRequest& r) {
            std::vector<std::string> texts, assets;
            for (const auto& p : r.request->parts) {
                if (p.is_asset())
                    assets.push_back(p.asset->location);
                else
                    texts.push_back(p.text);
            }
            py::gil_scoped_acquire gil;
            return responder(r.request->system_prompt, texts, assets);
        },
        "python");
    dq::AssetOptions assets;
    assets.root = asset_root;
    return std::make_unique<dq::ModelGateway>(backend, dq::AssetResolver(assets));
}

dq::SchemaModel schema_of(const dq::Database& db) { return *dq::introspect(db); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Natural-language querying over relational databases";

    static py::exception<dq::Error> error_type(m, "DqError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const dq::Error& e) {
            const py::tuple args = py::make_tuple(e.what(), std::string(dq::to_string(e.code())), e.detail());
            PyErr_SetObject(error_type.ptr(), args.ptr());
        }
    });

    py::class_<dq::Database>(m, "Database")
        .def_static("open", &dq::Database::open, py::arg("url"), py::arg("read_only") = true)
        .def_property_readonly("name", &dq::Database::name)
        .def(
            "query",
            [](const dq::Database& db, const std::string& sql) {
                const auto sanitized = dq::sanitize(sql, db.dialect());
                return result_dict(dq::execute(sanitized, db));
            },
            py::arg("sql"), "Runs a read-only query through the guardrail.")
        .def("table_names", [](const dq::Database& db) { return schema_of(db).table_names(); })
        .def(
            "schema_text",
            [](const dq::Database& db, bool compact) {
                return dq::render_schema_context(schema_of(db),
                                                 compact ? dq::RenderStyle::compact : dq::RenderStyle::full);
            },
            py::arg("compact") = false);

    m.def(
        "sanitize", [](const std::string& raw) { return dq::sanitize(raw).text(); }, py::arg("raw"));

    m.def(
        "plan",
        [](const std::string& question, const dq::Database& db, Responder responder) {
            auto gateway = make_gateway(std::move(responder), ".");
            const auto schema = schema_of(db);
            py::gil_scoped_release release;
            const auto p = dq::plan(dq::NLQuery{question, {}}, schema, *gateway);
            return std::make_pair(p->base_table, p->join_tables);
        },
        py::arg("question"), py::arg("db"), py::arg("responder"));

    m.def(
        "ask_sql",
        [](const std::string& question, const dq::Database& db, Responder responder) {
            auto gateway = make_gateway(std::move(responder), ".");
            const auto schema = schema_of(db);
            dq::SqpRun run;
            {
                py::gil_scoped_release release;
                run = dq::run_sqp(dq::NLQuery{question, {}}, schema, db, *gateway);
            }
            py::dict d = result_dict(run.result);
            d["sql"] = run.provenance.sanitized_sql;
            d["report"] = dq::provenance_json(run);
            return d;
        },
        py::arg("question"), py::arg("db"), py::arg("responder"));

    m.def(
        "ask_multimodal",
        [](const std::string& question, const dq::Database& db, Responder responder, const std::string& asset_root) {
            auto gateway = make_gateway(std::move(responder), asset_root);
            const auto schema = schema_of(db);
            dq::RuleBasedDecider decider(*gateway);
            std::optional<dq::MmpRun> run;
            {
                py::gil_scoped_release release;
                run = dq::run_mmp(dq::NLQuery{question, {}}, schema, db, *gateway, decider);
            }
            py::dict d = result_dict(run->result);
            d["rationale_calls"] = run->report.rationale_calls;
            d["report"] = dq::report_json(*run);
            return d;
        },
        py::arg("question"), py::arg("db"), py::arg("responder"), py::arg("asset_root") = ".");

    m.def(
        "decide",
        [](const std::vector<std::string>& statuses) {
            dq::ConstraintChecklist c;
            for (const auto& s : statuses) {
                const auto parsed = dq::parse_status(s);
                if (!parsed) throw dq::Error(dq::ErrorCode::invalid_argument, "unknown status '" + s + "'", s);
                c.constraints.push_back("constraint " + std::to_string(c.constraints.size() + 1));
                c.satisfied.push_back(*parsed);
            }
            return std::string(dq::to_string(dq::rule(c)));
        },
        py::arg("statuses"), "Label for a checklist of met / not_met / unverifiable statuses.");

    m.def(
        "classify_hardness", [](const std::string& sql) { return std::string(dq::to_string(dq::classify_hardness(sql))); },
        py::arg("sql"));

    m.def(
        "linking_prf",
        [](const std::set<std::string>& pred, const std::set<std::string>& gold) {
            const auto s = dq::linking_prf(pred, gold).classes.front();
            return py::make_tuple(s.precision, s.recall, s.f1);
        },
        py::arg("predicted"), py::arg("gold"));

    m.def("stratified_sample", &dq::stratified_sample, py::arg("strata"), py::arg("n"), py::arg("seed"));

    m.def(
        "representativeness_check",
        [](const std::map<std::string, std::size_t>& sample, const std::map<std::string, std::size_t>& population,
           double alpha) {
            const auto r = dq::representativeness_check(sample, population, alpha);
            py::dict d;
            d["statistic"] = r.statistic;
            d["p_value"] = r.p_value;
            d["degrees_of_freedom"] = r.degrees_of_freedom;
            d["pass"] = r.pass;
            return d;
        },
        py::arg("sample"), py::arg("population"), py::arg("alpha") = 0.05);

    m.def(
        "evaluate",
        [](const std::string& gold_jsonl, const std::string& pred_jsonl, const dq::Database& db, bool ves) {
            dq::EvalOptions opts;
            opts.ves = ves;
            dq::EvalReport rep;
            const auto gold = dq::parse_gold(gold_jsonl);
            const auto preds = dq::parse_predictions(pred_jsonl);
            {
                py::gil_scoped_release release;
                rep = dq::evaluate(gold, preds, db, opts);
            }
            py::dict d;
            d["ea"] = rep.ea_overall;
            d["ea_by_stratum"] = rep.ea_by_stratum;
            d["ves"] = rep.ves_overall ? py::cast(*rep.ves_overall) : py::none();
            d["report"] = dq::report_json(rep);
            return d;
        },
        py::arg("gold_jsonl"), py::arg("pred_jsonl"), py::arg("db"), py::arg("ves") = false);

    m.def(
        "classify_failure",
        [](const std::string& pred, const std::string& gold, const dq::Database& db) {
            const auto f = dq::classify_failure(pred, gold, schema_of(db));
            return py::make_tuple(std::string(dq::to_string(f.category)), f.evidence);
        },
        py::arg("pred_sql"), py::arg("gold_sql"), py::arg("db"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = dq::cli::run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a dq command in-process; returns (exit_code, stdout, stderr).");
}
