#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dq/modelgate.hpp"

namespace dq {

enum class DecisionLabel { accept, recommend, reject };

std::string_view to_string(DecisionLabel label);
// Case-insensitive; nullopt for anything outside the enumeration.
std::optional<DecisionLabel> parse_label(std::string_view s);

enum class ConstraintStatus { met, not_met, unverifiable };

std::string_view to_string(ConstraintStatus status);
std::optional<ConstraintStatus> parse_status(std::string_view s);

struct ConstraintChecklist {
    std::vector<std::string> constraints;
    std::vector<ConstraintStatus> satisfied;

    // Throws Error(checklist_invalid) when the lists differ in length or are empty.
    void validate() const;
};

// ALL met -> ACCEPT, SOME -> RECOMMEND, NONE -> REJECT. Unverifiable counts
// as not met.
DecisionLabel rule(const ConstraintChecklist& checklist);

struct RuleDecision {
    DecisionLabel label;
    ConstraintChecklist checklist;
    std::optional<DecisionLabel> stated_label;  // what the model claimed, if anything
    std::size_t model_calls = 0;
};

// Parses the fenced JSON checklist of a rule-based answer.
ConstraintChecklist parse_checklist(std::string_view model_output,
                                    std::optional<DecisionLabel>* stated = nullptr);

RuleDecision decide_rule_based(std::string_view question, std::string_view rationale,
                               ModelGateway& gateway);

// Label from the final line, case-folded, markdown emphasis removed.
std::optional<DecisionLabel> parse_final_line_label(std::string_view model_output);

DecisionLabel decide_descriptive(std::string_view question, std::string_view rationale,
                                 ModelGateway& gateway);

struct RemoteClassifierConfig {
    std::string url;
    std::chrono::milliseconds timeout{30'000};

    // DQ_CLASSIFIER_URL
    static RemoteClassifierConfig from_env();
};

// POSTs {question, rationale}; expects {label}.
DecisionLabel decide_remote(std::string_view question, std::string_view rationale,
                            const RemoteClassifierConfig& config);

class Decider {
public:
    virtual ~Decider() = default;
    virtual DecisionLabel decide(std::string_view question, std::string_view rationale) = 0;
    virtual std::string id() const = 0;
};

class RuleBasedDecider final : public Decider {
public:
    explicit RuleBasedDecider(ModelGateway& gateway) : gateway_(gateway) {}
    DecisionLabel decide(std::string_view q, std::string_view r) override {
        return decide_rule_based(q, r, gateway_).label;
    }
    std::string id() const override { return "rule"; }

private:
    ModelGateway& gateway_;
};

class DescriptiveDecider final : public Decider {
public:
    explicit DescriptiveDecider(ModelGateway& gateway) : gateway_(gateway) {}
    DecisionLabel decide(std::string_view q, std::string_view r) override {
        return decide_descriptive(q, r, gateway_);
    }
    std::string id() const override { return "descriptive"; }

private:
    ModelGateway& gateway_;
};

class RemoteDecider final : public Decider {
public:
    explicit RemoteDecider(RemoteClassifierConfig config) : config_(std::move(config)) {}
    DecisionLabel decide(std::string_view q, std::string_view r) override {
        return decide_remote(q, r, config_);
    }
    std::string id() const override { return "remote"; }

private:
    RemoteClassifierConfig config_;
};

class FunctionDecider final : public Decider {
public:
    using Fn = std::function<DecisionLabel(std::string_view, std::string_view)>;
    explicit FunctionDecider(Fn fn) : fn_(std::move(fn)) {}
    DecisionLabel decide(std::string_view q, std::string_view r) override { return fn_(q, r); }
    std::string id() const override { return "function"; }

private:
    Fn fn_;
};

}  // namespace dq
