#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dq {

enum class MediaKind { image, document };

struct AssetRef {
    std::string location;  // http(s) URL, file:// URL, or filesystem path
    MediaKind kind = MediaKind::image;
};

struct ContentPart {
    std::string text;
    std::optional<AssetRef> asset;

    static ContentPart text_part(std::string text) { return {std::move(text), std::nullopt}; }
    static ContentPart asset_part(std::string location, MediaKind kind) {
        return {{}, AssetRef{std::move(location), kind}};
    }
    bool is_asset() const { return asset.has_value(); }
};

struct ModelRequest {
    std::string system_prompt;
    std::vector<ContentPart> parts;
    double temperature = 0.0;
    std::string model_id;
    // Provenance only; not part of the fingerprint.
    std::string template_id;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ModelResponse {
    std::string text;
    std::optional<Usage> usage;
    std::string backend_id;
};

struct ResolvedAsset {
    AssetRef ref;
    std::string bytes;
    std::string media_type;
    std::string digest;  // sha256 hex of bytes
};

// A request whose assets have been read and digested, ready for a backend.
struct ResolvedRequest {
    const ModelRequest* request = nullptr;
    std::vector<std::optional<ResolvedAsset>> assets;  // parallel to request->parts
    std::string fingerprint;
};

struct AssetOptions {
    std::string root = ".";
    std::chrono::milliseconds http_timeout{10'000};
    std::size_t max_bytes = 10u * 1024u * 1024u;
};

class AssetResolver {
public:
    explicit AssetResolver(AssetOptions options = {}) : options_(std::move(options)) {}
    // Throws Error(asset_unavailable) naming the location.
    ResolvedAsset resolve(const AssetRef& ref) const;
    const AssetOptions& options() const noexcept { return options_; }

private:
    AssetOptions options_;
};

class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual ModelResponse complete(const ResolvedRequest& request) = 0;
    virtual std::string id() const = 0;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    double jitter = 0.25;  // fraction of the delay added at random
};

struct HttpBackendConfig {
    std::string url;       // chat-completion endpoint
    std::string model_id;  // used when a request leaves model_id empty
    std::string api_key;
    std::chrono::milliseconds timeout{120'000};
    RetryPolicy retry;

    // DQ_MODEL_URL, DQ_MODEL_ID, DQ_API_KEY
    static HttpBackendConfig from_env();
};

// OpenAI-compatible JSON chat-completion client.
class HttpChatBackend final : public ModelBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);
    ModelResponse complete(const ResolvedRequest& request) override;
    std::string id() const override { return "http:" + config_.url; }

    // Request body exactly as sent; exposed for tests.
    static std::string build_body(const ResolvedRequest& request, const std::string& model_id);

private:
    HttpBackendConfig config_;
};

// Callable-backed backend: scripted fakes in tests, Python callbacks.
class FunctionBackend final : public ModelBackend {
public:
    using Fn = std::function<std::string(const ResolvedRequest&)>;
    explicit FunctionBackend(Fn fn, std::string id = "function") : fn_(std::move(fn)), id_(std::move(id)) {}
    ModelResponse complete(const ResolvedRequest& request) override;
    std::string id() const override { return id_; }

private:
    Fn fn_;
    std::string id_;
};

struct TranscriptEntry {
    std::string fingerprint;
    std::string request_summary;
    std::string response_text;
};

// Ordered (fingerprint, response) pairs with unique fingerprints, stored as
// line-delimited JSON.
class Transcript {
public:
    static Transcript load(const std::string& path);
    static Transcript parse(std::string_view jsonl);
    void save(const std::string& path) const;
    std::string to_jsonl() const;

    // Returns false (and leaves the transcript unchanged) on a duplicate.
    bool add(TranscriptEntry entry);
    const TranscriptEntry* find(const std::string& fingerprint) const;
    const std::vector<TranscriptEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<TranscriptEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

// Replays a transcript; lookups are read-only after construction.
class ScriptedBackend final : public ModelBackend {
public:
    explicit ScriptedBackend(Transcript transcript) : transcript_(std::move(transcript)) {}
    ModelResponse complete(const ResolvedRequest& request) override;
    std::string id() const override { return "scripted"; }
    const Transcript& transcript() const noexcept { return transcript_; }

private:
    Transcript transcript_;
};

// Forwards to an inner backend and records each exchange; when a path is
// given, every new entry is appended to that file as it happens.
class RecordingBackend final : public ModelBackend {
public:
    RecordingBackend(std::shared_ptr<ModelBackend> inner, std::string path = {});
    ModelResponse complete(const ResolvedRequest& request) override;
    std::string id() const override { return "record:" + inner_->id(); }
    Transcript transcript() const;

private:
    std::shared_ptr<ModelBackend> inner_;
    std::string path_;
    mutable std::mutex mu_;
    Transcript transcript_;
};

enum class GatewayMode { live, record, replay };
GatewayMode gateway_mode_from_string(std::string_view s);

struct GatewayOptions {
    std::size_t max_in_flight = 4;
    std::string default_model_id;
};

// Single entry point for every model call: resolves assets, fingerprints,
// bounds concurrency, and dispatches to the configured backend.
class ModelGateway {
public:
    using Observer = std::function<void(const ModelRequest&, const ResolvedRequest&,
                                        const ModelResponse&)>;

    ModelGateway(std::shared_ptr<ModelBackend> backend, AssetResolver resolver = AssetResolver{},
                 GatewayOptions options = {});

    ModelResponse complete(const ModelRequest& request);
    std::string fingerprint(const ModelRequest& request) const;

    std::size_t call_count() const noexcept { return calls_.load(); }
    void set_observer(Observer observer);
    const AssetResolver& assets() const noexcept { return resolver_; }
    ModelBackend& backend() noexcept { return *backend_; }

private:
    ResolvedRequest resolve(const ModelRequest& request) const;

    std::shared_ptr<ModelBackend> backend_;
    AssetResolver resolver_;
    GatewayOptions options_;
    std::mutex slot_mu_;
    std::condition_variable slot_cv_;
    std::size_t in_flight_ = 0;
    std::atomic<std::size_t> calls_{0};
    std::mutex observer_mu_;
    Observer observer_;
};

// Digest over (system prompt, user parts with assets replaced by their
// content digests, model id).
std::string compute_fingerprint(const ModelRequest& request,
                                const std::vector<std::optional<ResolvedAsset>>& assets);

}  // namespace dq
