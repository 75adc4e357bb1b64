#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dq/cli.hpp"
#include "dq/error.hpp"

namespace dq::cli {

namespace fs = std::filesystem;

void Config::validate_model_settings() const {
    if ((mode == GatewayMode::replay || mode == GatewayMode::record) && transcript_path.empty())
        throw Error(ErrorCode::invalid_argument, "replay and record modes require --transcript");
    if ((mode == GatewayMode::live || mode == GatewayMode::record) && model.url.empty())
        throw Error(ErrorCode::invalid_argument,
                    "live model calls require a model endpoint (DQ_MODEL_URL or model.url)");
}

std::optional<std::string> process_env(const char* name) {
    if (const char* v = std::getenv(name)) return std::string(v);
    return std::nullopt;
}

namespace {

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
    if (node && node[key]) out = node[key].as<T>();
}

void read_ms(const YAML::Node& node, const char* key, std::chrono::milliseconds& out) {
    if (node && node[key]) out = std::chrono::milliseconds(node[key].as<long long>());
}

}  // namespace

void apply_config_text(Config& c, std::string_view yaml) {
    try {
        const YAML::Node root = YAML::Load(std::string(yaml));
        if (!root || root.IsNull()) return;
        if (!root.IsMap()) throw Error(ErrorCode::invalid_argument, "config document must be a mapping");
        read(root, "database_url", c.database_url);
        if (const auto m = root["model"]) {
            read(m, "url", c.model.url);
            read(m, "id", c.model.model_id);
            read(m, "api_key", c.model.api_key);
            read_ms(m, "timeout_ms", c.model.timeout);
        }
        if (const auto e = root["embedding"]) read(e, "url", c.embed_url);
        if (const auto k = root["classifier"]) read(k, "url", c.classifier_url);
        read(root, "asset_root", c.asset_root);
        read(root, "enrichment", c.enrichment_path);
        if (const auto t = root["transcript"]) {
            read(t, "path", c.transcript_path);
            if (t["mode"]) c.mode = gateway_mode_from_string(t["mode"].as<std::string>());
        }
        read(root, "retrieval_k", c.retrieval_k);
        read_ms(root, "query_timeout_ms", c.query_timeout);
        read(root, "seed", c.seed);
        read(root, "run_root", c.run_root);
        read(root, "decider", c.decider);
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("invalid config: ") + e.what());
    }
}

void apply_config_file(Config& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot read config '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(c, ss.str());
}

void apply_env(Config& c, const EnvLookup& env) {
    if (auto v = env("DQ_MODEL_URL")) c.model.url = *v;
    if (auto v = env("DQ_MODEL_ID")) c.model.model_id = *v;
    if (auto v = env("DQ_API_KEY")) c.model.api_key = *v;
    if (auto v = env("DQ_EMBED_URL")) c.embed_url = *v;
    if (auto v = env("DQ_CLASSIFIER_URL")) c.classifier_url = *v;
}

std::string run_directory(const Config& c) {
    fs::path dir;
    if (!c.out_dir.empty()) {
        dir = c.out_dir;
    } else {
        const std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm);
        dir = fs::path(c.run_root) / (std::string(stamp) + "-seed" + std::to_string(c.seed));
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create run directory '" + dir.string() + "'", dir.string());
    return dir.string();
}

std::shared_ptr<ModelBackend> make_backend(const Config& c) {
    c.validate_model_settings();
    switch (c.mode) {
        case GatewayMode::replay:
            return std::make_shared<ScriptedBackend>(Transcript::load(c.transcript_path));
        case GatewayMode::record:
            return std::make_shared<RecordingBackend>(std::make_shared<HttpChatBackend>(c.model),
                                                      c.transcript_path);
        case GatewayMode::live:
            break;
    }
    return std::make_shared<HttpChatBackend>(c.model);
}

std::unique_ptr<Decider> make_decider(const Config& c, ModelGateway& gateway) {
    if (c.decider == "rule") return std::make_unique<RuleBasedDecider>(gateway);
    if (c.decider == "descriptive") return std::make_unique<DescriptiveDecider>(gateway);
    if (c.decider == "remote") {
        RemoteClassifierConfig rc;
        rc.url = c.classifier_url;
        return std::make_unique<RemoteDecider>(rc);
    }
    throw Error(ErrorCode::invalid_argument, "unknown decider '" + c.decider + "'", c.decider);
}

SchemaModel load_schema(const Config& c, const Database& db, std::vector<std::string>* diagnostics) {
    const auto schema = introspect(db);
    if (c.enrichment_path.empty()) return *schema;
    auto enriched = apply_enrichment(*schema, SemanticEnrichment::load(c.enrichment_path));
    if (diagnostics) *diagnostics = std::move(enriched.diagnostics);
    return std::move(enriched.schema);
}

}  // namespace dq::cli
