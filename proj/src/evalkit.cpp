#include "dq/evalkit.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "dq/error.hpp"
#include "dq/sql/parser.hpp"
#include "dq/sqp.hpp"
#include "dq/text.hpp"

namespace dq {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---- execution comparison ----------------------------------------------

namespace {

bool values_equal(const Value& a, const Value& b, double tol) {
    if (is_null(a) || is_null(b)) return is_null(a) && is_null(b);
    const auto* sa = std::get_if<std::string>(&a);
    const auto* sb = std::get_if<std::string>(&b);
    if (sa || sb) return sa && sb && *sa == *sb;
    const auto num = [](const Value& v) {
        if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        return std::get<double>(v);
    };
    const auto* ia = std::get_if<std::int64_t>(&a);
    const auto* ib = std::get_if<std::int64_t>(&b);
    if (ia && ib) return *ia == *ib;
    return std::fabs(num(a) - num(b)) <= tol;
}

bool rows_equal(const std::vector<Value>& a, const std::vector<Value>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!values_equal(a[i], b[i], tol)) return false;
    return true;
}

std::string stratum_of(const EvalRecord& r) { return r.difficulty ? *r.difficulty : "unlabeled"; }

}  // namespace

bool execution_match(const ResultSet& pred, const ResultSet& gold, double tolerance) {
    if (pred.rows.size() != gold.rows.size()) return false;
    if (pred.columns.size() != gold.columns.size()) return false;
    if (gold.ordered) {
        for (std::size_t i = 0; i < gold.rows.size(); ++i)
            if (!rows_equal(pred.rows[i], gold.rows[i], tolerance)) return false;
        return true;
    }
    auto p = pred.rows;
    auto g = gold.rows;
    std::sort(p.begin(), p.end(), rows_less);
    std::sort(g.begin(), g.end(), rows_less);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!rows_equal(p[i], g[i], tolerance)) return false;
    return true;
}

double safe_div(double numerator, double denominator) {
    return denominator == 0.0 ? 0.0 : numerator / denominator;
}

double execution_accuracy(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "execution accuracy needs at least one record");
    const auto correct = std::count_if(records.begin(), records.end(), [](const EvalRecord& r) { return r.correct; });
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

double ves_term(const EvalRecord& r) {
    if (!r.correct) return 0.0;
    if (!r.pred_runtime || !r.gold_runtime)
        throw Error(ErrorCode::invalid_argument, "correct record '" + r.query_id + "' lacks runtimes", r.query_id);
    if (*r.pred_runtime <= 0.0 || *r.gold_runtime <= 0.0)
        throw Error(ErrorCode::invalid_argument, "record '" + r.query_id + "' has a nonpositive runtime", r.query_id);
    return std::sqrt(*r.gold_runtime / *r.pred_runtime);
}

double valid_efficiency_score(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "VES needs at least one record");
    double sum = 0.0;
    for (const auto& r : records) sum += ves_term(r);
    return 100.0 * sum / static_cast<double>(records.size());
}

EvalReport aggregate(std::vector<EvalRecord> records, bool with_ves) {
    EvalReport rep;
    rep.records = std::move(records);
    rep.ea_overall = execution_accuracy(rep.records);
    std::map<std::string, std::vector<EvalRecord>> strata;
    for (const auto& r : rep.records) strata[stratum_of(r)].push_back(r);
    for (const auto& [name, rs] : strata) {
        rep.ea_by_stratum[name] = execution_accuracy(rs);
        rep.count_by_stratum[name] = rs.size();
        if (with_ves) rep.ves_by_stratum[name] = valid_efficiency_score(rs);
    }
    if (with_ves) rep.ves_overall = valid_efficiency_score(rep.records);
    return rep;
}

double measure_runtime(const Database& db, const std::string& sql, const TimingOptions& options,
                       const QueryOptions& query) {
    const std::size_t repeats = std::max<std::size_t>(options.repeats, 1);
    for (int round = 0; round < 2; ++round) {
        for (std::size_t i = 0; i < options.warmup; ++i) db.query(sql, query);
        std::vector<double> samples;
        for (std::size_t i = 0; i < repeats; ++i) {
            const auto start = std::chrono::steady_clock::now();
            db.query(sql, query);
            samples.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        }
        std::sort(samples.begin(), samples.end());
        const double median = samples.size() % 2 == 1
                                  ? samples[samples.size() / 2]
                                  : 0.5 * (samples[samples.size() / 2 - 1] + samples[samples.size() / 2]);
        if (median > 0.0) return median;
    }
    throw Error(ErrorCode::sql_runtime, "measured a nonpositive runtime twice", sql);
}

// ---- classification metrics --------------------------------------------

ClassScore score_counts(std::string label, std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassScore s;
    s.label = std::move(label);
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
    s.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
    s.f1 = safe_div(2.0 * s.precision * s.recall, s.precision + s.recall);
    return s;
}

ClassMetrics linking_prf(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
    if (gold.empty()) throw Error(ErrorCode::empty_input, "gold table set is empty");
    std::set<std::string> p, g;
    for (const auto& t : predicted) p.insert(text::to_lower(t));
    for (const auto& t : gold) g.insert(text::to_lower(t));
    std::size_t tp = 0;
    for (const auto& t : p) tp += g.count(t);
    ClassMetrics m;
    m.classes.push_back(score_counts("table", tp, p.size() - tp, g.size() - tp));
    m.macro_precision = m.classes.front().precision;
    m.macro_recall = m.classes.front().recall;
    m.macro_f1 = m.classes.front().f1;
    return m;
}

ClassMetrics macro_f1(const Confusion3& confusion, const std::array<std::string, 3>& labels) {
    ClassMetrics m;
    for (std::size_t c = 0; c < 3; ++c) {
        std::size_t tp = confusion[c][c], fp = 0, fn = 0;
        for (std::size_t o = 0; o < 3; ++o) {
            if (o == c) continue;
            fp += confusion[o][c];
            fn += confusion[c][o];
        }
        m.classes.push_back(score_counts(labels[c], tp, fp, fn));
    }
    for (const auto& s : m.classes) {
        m.macro_precision += s.precision / 3.0;
        m.macro_recall += s.recall / 3.0;
        m.macro_f1 += s.f1 / 3.0;
    }
    return m;
}

// ---- sampling -----------------------------------------------------------

std::map<std::string, std::size_t> allocate_proportional(const std::map<std::string, std::size_t>& counts,
                                                         std::size_t n) {
    std::size_t total = 0;
    for (const auto& [_, c] : counts) total += c;
    if (n > total)
        throw Error(ErrorCode::invalid_argument, "sample size " + std::to_string(n) +
                                                     " exceeds population " + std::to_string(total));
    std::map<std::string, std::size_t> out;
    if (total == 0) return out;
    struct Share {
        std::string name;
        std::uint64_t remainder;
    };
    std::vector<Share> shares;
    std::size_t assigned = 0;
    for (const auto& [name, c] : counts) {
        const auto prod = static_cast<unsigned __int128>(n) * c;
        out[name] = static_cast<std::size_t>(prod / total);
        assigned += out[name];
        shares.push_back({name, static_cast<std::uint64_t>(prod % total)});
    }
    // std::map iteration is name-ascending, so a stable sort keeps ties in name order.
    std::stable_sort(shares.begin(), shares.end(),
                     [](const Share& a, const Share& b) { return a.remainder > b.remainder; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++out[shares[i].name];
    return out;
}

namespace {

// Uniform integer in [0, bound) without the implementation-defined
// behaviour of std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % bound;
}

}  // namespace

std::vector<std::size_t> stratified_sample(const std::vector<std::string>& strata, std::size_t n,
                                           std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < strata.size(); ++i) {
        if (strata[i].empty())
            throw Error(ErrorCode::invalid_argument, "entry " + std::to_string(i) + " has no stratum label");
        members[strata[i]].push_back(i);
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& [name, idx] : members) counts[name] = idx.size();
    const auto allocation = allocate_proportional(counts, n);

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out;
    for (auto& [name, idx] : members) {
        const std::size_t take = allocation.at(name);
        if (take > 0 && idx.empty())
            throw Error(ErrorCode::invalid_argument, "stratum '" + name + "' is empty but allocated", name);
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
            std::swap(idx[i], idx[j]);
            out.push_back(idx[i]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

ChiSquareResult representativeness_check(const std::map<std::string, std::size_t>& sample,
                                         const std::map<std::string, std::size_t>& population,
                                         double alpha) {
    for (const auto& [name, _] : sample) {
        if (!population.count(name))
            throw Error(ErrorCode::invalid_argument,
                        "sample category '" + name + "' does not occur in the population", name);
    }
    std::size_t n = 0, total = 0;
    for (const auto& [_, c] : sample) n += c;
    for (const auto& [_, c] : population) total += c;
    if (n == 0 || total == 0) throw Error(ErrorCode::empty_input, "chi-square needs non-empty counts");

    ChiSquareResult r;
    std::size_t categories = 0;
    for (const auto& [name, pop] : population) {
        const auto it = sample.find(name);
        const double observed = it == sample.end() ? 0.0 : static_cast<double>(it->second);
        const double expected = static_cast<double>(n) * static_cast<double>(pop) / static_cast<double>(total);
        if (expected == 0.0) continue;
        ++categories;
        r.statistic += (observed - expected) * (observed - expected) / expected;
    }
    r.degrees_of_freedom = categories > 0 ? categories - 1 : 0;
    r.p_value = r.degrees_of_freedom == 0
                    ? 1.0
                    : boost::math::gamma_q(static_cast<double>(r.degrees_of_freedom) / 2.0, r.statistic / 2.0);
    r.pass = r.p_value > alpha;
    return r;
}

// ---- benchmark files ----------------------------------------------------

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename F>
void for_each_jsonl(std::string_view jsonl, std::string_view what, F&& f) {
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::input_data, "malformed " + std::string(what) + " line " +
                                                   std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::string id_of(const json& j) {
    const auto& id = j.at("query_id");
    return id.is_string() ? id.get<std::string>() : id.dump();
}

}  // namespace

std::vector<GoldEntry> parse_gold(std::string_view jsonl) {
    std::vector<GoldEntry> out;
    for_each_jsonl(jsonl, "gold", [&](const json& j) {
        GoldEntry g;
        g.query_id = id_of(j);
        g.sql = j.at("sql").get<std::string>();
        g.question = j.value("question", std::string{});
        if (j.contains("difficulty") && j["difficulty"].is_string()) g.difficulty = j["difficulty"].get<std::string>();
        if (j.contains("gold_tables") && j["gold_tables"].is_array())
            g.gold_tables = j["gold_tables"].get<std::vector<std::string>>();
        out.push_back(std::move(g));
    });
    return out;
}

std::vector<Prediction> parse_predictions(std::string_view jsonl) {
    std::vector<Prediction> out;
    for_each_jsonl(jsonl, "prediction", [&](const json& j) {
        out.push_back({id_of(j), j.at("sql").get<std::string>()});
    });
    return out;
}

std::vector<GoldEntry> load_gold(const std::string& path) { return parse_gold(read_file(path)); }
std::vector<Prediction> load_predictions(const std::string& path) {
    return parse_predictions(read_file(path));
}

EvalReport evaluate(const std::vector<GoldEntry>& gold, const std::vector<Prediction>& predictions,
                    const Database& db, const EvalOptions& options) {
    std::map<std::string, const Prediction*> by_id;
    for (const auto& p : predictions) by_id[p.query_id] = &p;
    std::vector<EvalRecord> records;
    for (const auto& g : gold) {
        EvalRecord r;
        r.query_id = g.query_id;
        r.difficulty = g.difficulty;
        r.gold_sql = g.sql;
        const auto it = by_id.find(g.query_id);
        if (it == by_id.end()) {
            r.error = "no prediction";
            records.push_back(std::move(r));
            continue;
        }
        r.predicted_sql = it->second->sql;
        ResultSet gold_rs, pred_rs;
        std::string gold_text, pred_text;
        double gold_time = 0.0, pred_time = 0.0;
        const auto timed = [&](const SanitizedSql& s, double& seconds) {
            const auto start = std::chrono::steady_clock::now();
            ResultSet rs = execute(s, db, options.query);
            seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return rs;
        };
        try {
            const auto s = sanitize(g.sql, db.dialect());
            gold_text = s.text();
            gold_rs = timed(s, gold_time);
        } catch (const Error& e) {
            r.error = std::string("gold: ") + e.what();
            records.push_back(std::move(r));
            continue;
        }
        try {
            const auto s = sanitize(r.predicted_sql, db.dialect());
            pred_text = s.text();
            pred_rs = timed(s, pred_time);
        } catch (const Error& e) {
            r.error = std::string("prediction: ") + e.what();
            records.push_back(std::move(r));
            continue;
        }
        r.correct = execution_match(pred_rs, gold_rs);
        if (r.correct) {
            if (options.ves) {
                try {
                    r.gold_runtime = measure_runtime(db, gold_text, options.timing, options.query);
                    r.pred_runtime = measure_runtime(db, pred_text, options.timing, options.query);
                } catch (const Error& e) {
                    r.correct = false;
                    r.gold_runtime.reset();
                    r.pred_runtime.reset();
                    r.error = std::string("timing: ") + e.what();
                }
            } else {
                r.gold_runtime = std::max(gold_time, 1e-9);
                r.pred_runtime = std::max(pred_time, 1e-9);
            }
        }
        records.push_back(std::move(r));
    }
    return aggregate(std::move(records), options.ves);
}

std::string report_json(const EvalReport& report) {
    ojson records = ojson::array();
    for (const auto& r : report.records) {
        ojson j = {{"query_id", r.query_id},
                   {"difficulty", r.difficulty ? ojson(*r.difficulty) : ojson(nullptr)},
                   {"predicted_sql", r.predicted_sql},
                   {"gold_sql", r.gold_sql},
                   {"correct", r.correct},
                   {"pred_runtime", r.pred_runtime ? ojson(*r.pred_runtime) : ojson(nullptr)},
                   {"gold_runtime", r.gold_runtime ? ojson(*r.gold_runtime) : ojson(nullptr)},
                   {"error", r.error ? ojson(*r.error) : ojson(nullptr)}};
        records.push_back(std::move(j));
    }
    ojson doc = {{"ea_overall", report.ea_overall},
                 {"ea_by_stratum", report.ea_by_stratum},
                 {"count_by_stratum", report.count_by_stratum},
                 {"ves_overall", report.ves_overall ? ojson(*report.ves_overall) : ojson(nullptr)},
                 {"ves_by_stratum", report.ves_by_stratum},
                 {"records", records}};
    return doc.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view json_text) {
    std::vector<EvalRecord> records;
    bool with_ves = false;
    try {
        const auto doc = json::parse(json_text);
        with_ves = doc.contains("ves_overall") && !doc["ves_overall"].is_null();
        for (const auto& j : doc.at("records")) {
            EvalRecord r;
            r.query_id = id_of(j);
            if (j.contains("difficulty") && j["difficulty"].is_string()) r.difficulty = j["difficulty"].get<std::string>();
            r.predicted_sql = j.value("predicted_sql", std::string{});
            r.gold_sql = j.at("gold_sql").get<std::string>();
            r.correct = j.at("correct").get<bool>();
            if (j.contains("pred_runtime") && j["pred_runtime"].is_number()) r.pred_runtime = j["pred_runtime"].get<double>();
            if (j.contains("gold_runtime") && j["gold_runtime"].is_number()) r.gold_runtime = j["gold_runtime"].get<double>();
            if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
            records.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::input_data, std::string("malformed evaluation report: ") + e.what());
    }
    return aggregate(std::move(records), with_ves);
}

std::string report_table(const EvalReport& report) {
    static const std::vector<std::string> kKnown = {"easy", "medium", "hard", "extra",
                                                    "simple", "moderate", "challenging"};
    std::vector<std::string> strata;
    for (const auto& k : kKnown) {
        for (const auto& [name, _] : report.ea_by_stratum)
            if (text::iequals(name, k)) strata.push_back(name);
    }
    for (const auto& [name, _] : report.ea_by_stratum) {
        if (std::find(strata.begin(), strata.end(), name) == strata.end()) strata.push_back(name);
    }

    const auto cell = [](const std::string& s) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%12s", s.c_str());
        return std::string(buf);
    };
    const auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::string out = cell("");
    for (const auto& s : strata) out += cell(s);
    out += cell("overall") + "\n" + cell("count");
    for (const auto& s : strata) out += cell(std::to_string(report.count_by_stratum.at(s)));
    out += cell(std::to_string(report.records.size())) + "\n" + cell("EA (%)");
    for (const auto& s : strata) out += cell(pct(100.0 * report.ea_by_stratum.at(s)));
    out += cell(pct(100.0 * report.ea_overall)) + "\n";
    if (report.ves_overall) {
        out += cell("VES");
        for (const auto& s : strata) out += cell(pct(report.ves_by_stratum.at(s)));
        out += cell(pct(*report.ves_overall)) + "\n";
    }
    return out;
}

}  // namespace dq
