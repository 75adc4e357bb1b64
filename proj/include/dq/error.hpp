#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dq {

// Every failure raised by the library carries one of these codes so callers
// (CLI, bindings, tests) can branch on the kind without parsing messages.
enum class ErrorCode {
    invalid_argument,
    connection_failed,
    catalog_failed,
    sql_parse_failure,
    no_select_found,
    forbidden_statement,
    multi_statement,
    sql_runtime,
    timeout,
    unmatched_request,
    retries_exhausted,
    auth_failure,
    payload_too_large,
    transport,
    bad_response,
    asset_unavailable,
    empty_completion,
    plan_invalid,
    empty_schema,
    fragment_invalid,
    no_join_path,
    missing_primary_key,
    checklist_invalid,
    label_invalid,
    empty_input,
    input_data,
    io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }

    // Machine-readable payload: the forbidden verb, the unmatched
    // fingerprint, the offending identifier, etc.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

// Pipeline failures wrap the first failing stage's error with a stage tag.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const Error& cause)
        : Error(cause.code(), "[" + stage + "] " + cause.what(), cause.detail()),
          stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace dq
