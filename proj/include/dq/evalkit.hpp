#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dq/database.hpp"
#include "dq/sql/ast.hpp"

namespace dq {

// ---- execution comparison ----------------------------------------------

constexpr double kNumericTolerance = 1e-6;

// Ordered gold: row sequences must match. Otherwise rows are compared as
// multisets. Columns are positional; numbers match within the tolerance.
bool execution_match(const ResultSet& pred, const ResultSet& gold,
                     double tolerance = kNumericTolerance);

struct EvalRecord {
    std::string query_id;
    std::optional<std::string> difficulty;
    std::string predicted_sql;
    std::string gold_sql;
    bool correct = false;
    std::optional<double> pred_runtime;  // seconds; present iff correct
    std::optional<double> gold_runtime;
    std::optional<std::string> error;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    double ea_overall = 0.0;
    std::map<std::string, double> ea_by_stratum;
    std::map<std::string, std::size_t> count_by_stratum;
    std::optional<double> ves_overall;  // scaled x100
    std::map<std::string, double> ves_by_stratum;
};

// 0/0 is defined as 0 throughout.
double safe_div(double numerator, double denominator);

// Throws Error(empty_input) for an empty list.
double execution_accuracy(const std::vector<EvalRecord>& records);

// sqrt(gold/pred) for correct records, 0 otherwise.
double ves_term(const EvalRecord& record);
// Mean of the terms, scaled x100. Throws Error(empty_input) / Error(invalid_argument)
// when a correct record lacks runtimes.
double valid_efficiency_score(const std::vector<EvalRecord>& records);

// Recomputes every aggregate from the records.
EvalReport aggregate(std::vector<EvalRecord> records, bool with_ves);

struct TimingOptions {
    std::size_t repeats = 5;
    std::size_t warmup = 1;
};

// Median wall time in seconds of `repeats` executions after `warmup`
// discarded ones. A nonpositive median is re-measured once, then an error.
double measure_runtime(const Database& db, const std::string& sql, const TimingOptions& options = {},
                       const QueryOptions& query = {});

// ---- classification metrics --------------------------------------------

struct ClassScore {
    std::string label;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassMetrics {
    std::vector<ClassScore> classes;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

ClassScore score_counts(std::string label, std::size_t tp, std::size_t fp, std::size_t fn);

// Single-class metrics over table sets, compared case-insensitively. Throws
// Error(empty_input) for an empty gold set.
ClassMetrics linking_prf(const std::set<std::string>& predicted, const std::set<std::string>& gold);

// confusion[gold][predicted] over three labels.
using Confusion3 = std::array<std::array<std::size_t, 3>, 3>;
ClassMetrics macro_f1(const Confusion3& confusion,
                      const std::array<std::string, 3>& labels = {"ACCEPT", "RECOMMEND", "REJECT"});

// ---- hardness -----------------------------------------------------------

enum class HardnessLabel { easy, medium, hard, extra };
std::string_view to_string(HardnessLabel label);
std::optional<HardnessLabel> parse_hardness(std::string_view s);

struct HardnessComponents {
    int component1 = 0;
    int component2 = 0;
    int others = 0;
};

HardnessComponents hardness_components(const sql::Query& query);

struct Bound {
    std::optional<int> min;
    std::optional<int> max;
    bool admits(int v) const { return (!min || v >= *min) && (!max || v <= *max); }
};

struct HardnessRule {
    Bound component1, component2, others;
};

// Ordered label -> rules table; the first label with a matching rule wins.
struct HardnessRules {
    std::vector<std::pair<HardnessLabel, std::vector<HardnessRule>>> labels;
    HardnessLabel fallback = HardnessLabel::extra;

    static HardnessRules parse(std::string_view json_text);
    static const HardnessRules& builtin();
    HardnessLabel classify(const HardnessComponents& c) const;
};

// Throws Error(sql_parse_failure) when `sql` does not parse.
HardnessLabel classify_hardness(std::string_view sql,
                                const HardnessRules& rules = HardnessRules::builtin());

// ---- sampling -----------------------------------------------------------

// Largest-remainder proportional allocation of n over strata counts;
// remainder ties go to the stratum name that sorts first.
std::map<std::string, std::size_t> allocate_proportional(const std::map<std::string, std::size_t>& counts,
                                                         std::size_t n);

// Indices (ascending, population order) of a reproducible stratified sample.
std::vector<std::size_t> stratified_sample(const std::vector<std::string>& strata, std::size_t n,
                                           std::uint64_t seed);

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t degrees_of_freedom = 0;
    bool pass = true;
};

// Goodness of fit of sample counts against population proportions;
// passes when p > alpha.
ChiSquareResult representativeness_check(const std::map<std::string, std::size_t>& sample,
                                         const std::map<std::string, std::size_t>& population,
                                         double alpha = 0.05);

// ---- benchmark files and runs ------------------------------------------

struct GoldEntry {
    std::string query_id;
    std::string question;
    std::string sql;
    std::optional<std::string> difficulty;
    std::optional<std::vector<std::string>> gold_tables;
};

struct Prediction {
    std::string query_id;
    std::string sql;
};

std::vector<GoldEntry> load_gold(const std::string& path);
std::vector<Prediction> load_predictions(const std::string& path);
std::vector<GoldEntry> parse_gold(std::string_view jsonl);
std::vector<Prediction> parse_predictions(std::string_view jsonl);

struct EvalOptions {
    bool ves = false;
    TimingOptions timing;
    QueryOptions query;
};

// Executes every (prediction, gold) pair through the read-only guardrail.
// Per-query failures are recorded on the record, never fatal.
EvalReport evaluate(const std::vector<GoldEntry>& gold, const std::vector<Prediction>& predictions,
                    const Database& db, const EvalOptions& options = {});

std::string report_json(const EvalReport& report);
EvalReport parse_report_json(std::string_view json_text);
// Plain-text table: one column per difficulty stratum plus overall.
std::string report_table(const EvalReport& report);

}  // namespace dq
