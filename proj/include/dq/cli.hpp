#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dq/catalog.hpp"
#include "dq/decision.hpp"
#include "dq/modelgate.hpp"

namespace dq::cli {

struct Config {
    std::string database_url;
    HttpBackendConfig model;
    std::string embed_url;
    std::string classifier_url;
    std::string asset_root = ".";
    std::string enrichment_path;
    std::string transcript_path;
    GatewayMode mode = GatewayMode::live;
    std::size_t retrieval_k = 4;
    std::chrono::milliseconds query_timeout{30'000};
    std::uint64_t seed = 0;
    std::string run_root = "runs";
    std::string out_dir;  // overrides the timestamped run directory
    std::string decider = "rule";

    // Throws Error(invalid_argument): replay/record need a transcript path,
    // live/record need a model endpoint.
    void validate_model_settings() const;
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// YAML keys: database_url, model.{url,id,api_key,timeout_ms}, embedding.url,
// classifier.url, asset_root, enrichment, transcript.{path,mode},
// retrieval_k, query_timeout_ms, seed, run_root, decider.
void apply_config_file(Config& config, const std::string& path);
void apply_config_text(Config& config, std::string_view yaml);
void apply_env(Config& config, const EnvLookup& env = process_env);

// `<run_root>/<UTC timestamp>-seed<seed>` unless out_dir is set. Created on demand.
std::string run_directory(const Config& config);

std::shared_ptr<ModelBackend> make_backend(const Config& config);
std::unique_ptr<Decider> make_decider(const Config& config, ModelGateway& gateway);
// Introspected schema with the configured enrichment applied.
SchemaModel load_schema(const Config& config, const Database& db, std::vector<std::string>* diagnostics = nullptr);

// Entry point shared by the executable and in-process callers; args exclude
// the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

}  // namespace dq::cli
