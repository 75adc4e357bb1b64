#include "dq/decision.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>

#include "dq/error.hpp"
#include "dq/net.hpp"
#include "dq/resources.hpp"
#include "dq/text.hpp"

namespace dq {

using json = nlohmann::json;

std::string_view to_string(DecisionLabel label) {
    switch (label) {
        case DecisionLabel::accept: return "ACCEPT";
        case DecisionLabel::recommend: return "RECOMMEND";
        case DecisionLabel::reject: return "REJECT";
    }
    return "REJECT";
}

std::optional<DecisionLabel> parse_label(std::string_view s) {
    const auto u = text::to_upper(text::trim(s));
    if (u == "ACCEPT") return DecisionLabel::accept;
    if (u == "RECOMMEND") return DecisionLabel::recommend;
    if (u == "REJECT") return DecisionLabel::reject;
    return std::nullopt;
}

std::string_view to_string(ConstraintStatus status) {
    switch (status) {
        case ConstraintStatus::met: return "met";
        case ConstraintStatus::not_met: return "not_met";
        case ConstraintStatus::unverifiable: return "unverifiable";
    }
    return "unverifiable";
}

std::optional<ConstraintStatus> parse_status(std::string_view s) {
    const auto l = text::to_lower(text::trim(s));
    if (l == "met" || l == "yes" || l == "true") return ConstraintStatus::met;
    if (l == "not_met" || l == "not met" || l == "unmet" || l == "no" || l == "false")
        return ConstraintStatus::not_met;
    if (l == "unverifiable" || l == "unknown" || l == "unclear") return ConstraintStatus::unverifiable;
    return std::nullopt;
}

void ConstraintChecklist::validate() const {
    if (constraints.empty())
        throw Error(ErrorCode::checklist_invalid, "checklist has no constraints");
    if (constraints.size() != satisfied.size())
        throw Error(ErrorCode::checklist_invalid, "checklist constraint and status lists differ in length");
}

DecisionLabel rule(const ConstraintChecklist& checklist) {
    checklist.validate();
    const auto met = static_cast<std::size_t>(
        std::count(checklist.satisfied.begin(), checklist.satisfied.end(), ConstraintStatus::met));
    if (met == checklist.satisfied.size()) return DecisionLabel::accept;
    if (met == 0) return DecisionLabel::reject;
    return DecisionLabel::recommend;
}

ConstraintChecklist parse_checklist(std::string_view model_output,
                                    std::optional<DecisionLabel>* stated) {
    const auto blocks = text::fenced_blocks(model_output);
    const text::FencedBlock* chosen = nullptr;
    for (const auto& b : blocks) {
        if (b.language == "json" || (b.language.empty() && text::trim(b.body).substr(0, 1) == "{"))
            chosen = &b;
    }
    if (!chosen) throw Error(ErrorCode::checklist_invalid, "no fenced checklist block found");
    json j;
    try {
        j = json::parse(chosen->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::checklist_invalid, std::string("checklist is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("constraints") || !j["constraints"].is_array())
        throw Error(ErrorCode::checklist_invalid, "checklist lacks a constraints list");
    ConstraintChecklist out;
    for (const auto& c : j["constraints"]) {
        if (!c.is_object() || !c.contains("text") || !c.contains("status") ||
            !c["text"].is_string() || !c["status"].is_string())
            throw Error(ErrorCode::checklist_invalid, "each constraint needs text and status");
        const auto status = parse_status(c["status"].get<std::string>());
        if (!status)
            throw Error(ErrorCode::checklist_invalid,
                        "unknown constraint status '" + c["status"].get<std::string>() + "'");
        out.constraints.push_back(c["text"].get<std::string>());
        out.satisfied.push_back(*status);
    }
    out.validate();
    if (stated) {
        *stated = std::nullopt;
        if (j.contains("label") && j["label"].is_string()) *stated = parse_label(j["label"].get<std::string>());
    }
    return out;
}

namespace {

template <typename Parse>
auto ask_with_repair(const Prompt& prompt, ModelGateway& gateway, Parse&& parse,
                     ErrorCode failure_code, std::size_t& calls) {
    ModelRequest request;
    request.system_prompt = prompt.system;
    request.parts.push_back(ContentPart::text_part(prompt.user));
    request.template_id = prompt.template_id;
    for (std::size_t attempt = 1;; ++attempt) {
        const ModelResponse response = gateway.complete(request);
        calls = attempt;
        try {
            return parse(response.text);
        } catch (const Error& e) {
            if (attempt == 2)
                throw Error(failure_code, std::string("still invalid after repair: ") + e.what(),
                            e.detail());
            const Prompt repair =
                render_prompt("repair.v1", {{"previous", response.text}, {"error", e.what()}});
            request.parts.push_back(ContentPart::text_part(repair.user));
        }
    }
}

void require_rationale(std::string_view rationale) {
    if (text::trim(rationale).empty())
        throw Error(ErrorCode::invalid_argument, "rationale is empty");
}

}  // namespace

RuleDecision decide_rule_based(std::string_view question, std::string_view rationale,
                               ModelGateway& gateway) {
    require_rationale(rationale);
    const Prompt prompt = render_prompt(
        "decision_rule.v1", {{"question", std::string(question)}, {"rationale", std::string(rationale)}});
    RuleDecision out{DecisionLabel::reject, {}, std::nullopt, 0};
    out.checklist = ask_with_repair(
        prompt, gateway,
        [&](const std::string& text) { return parse_checklist(text, &out.stated_label); },
        ErrorCode::checklist_invalid, out.model_calls);
    out.label = rule(out.checklist);
    return out;
}

std::optional<DecisionLabel> parse_final_line_label(std::string_view model_output) {
    const auto lines = text::split_lines(model_output);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string line(text::trim(*it));
        if (line.empty()) continue;
        std::string cleaned;
        for (char c : line) {
            if (std::string_view("*_`#>\"'.!:[]()").find(c) == std::string_view::npos) cleaned += c;
        }
        auto label = std::string(text::trim(cleaned));
        for (const std::string_view prefix : {"final label", "label", "decision", "answer"}) {
            if (text::istarts_with(label, prefix)) {
                label = std::string(text::trim(std::string_view(label).substr(prefix.size())));
                break;
            }
        }
        return parse_label(label);
    }
    return std::nullopt;
}

DecisionLabel decide_descriptive(std::string_view question, std::string_view rationale,
                                 ModelGateway& gateway) {
    require_rationale(rationale);
    const Prompt prompt = render_prompt("decision_descriptive.v1", {{"question", std::string(question)},
                                                                    {"rationale", std::string(rationale)}});
    std::size_t calls = 0;
    return ask_with_repair(
        prompt, gateway,
        [](const std::string& text) {
            const auto label = parse_final_line_label(text);
            if (!label)
                throw Error(ErrorCode::label_invalid,
                            "final line is not one of ACCEPT, RECOMMEND, REJECT");
            return *label;
        },
        ErrorCode::label_invalid, calls);
}

RemoteClassifierConfig RemoteClassifierConfig::from_env() {
    RemoteClassifierConfig c;
    if (const char* v = std::getenv("DQ_CLASSIFIER_URL")) c.url = v;
    return c;
}

DecisionLabel decide_remote(std::string_view question, std::string_view rationale,
                            const RemoteClassifierConfig& config) {
    if (config.url.empty())
        throw Error(ErrorCode::invalid_argument, "remote classifier endpoint is not configured");
    const json body = {{"question", std::string(question)}, {"rationale", std::string(rationale)}};
    net::HttpOptions opts;
    opts.timeout = config.timeout;
    const auto res = net::post_json(config.url, body.dump(), opts);
    if (res.status < 200 || res.status >= 300)
        throw Error(ErrorCode::transport,
                    "classifier endpoint returned HTTP " + std::to_string(res.status), config.url);
    std::string raw;
    try {
        raw = json::parse(res.body).at("label").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::bad_response, std::string("malformed classifier response: ") + e.what());
    }
    const auto label = parse_label(raw);
    if (!label) throw Error(ErrorCode::label_invalid, "classifier returned invalid label '" + raw + "'", raw);
    return *label;
}

}  // namespace dq
