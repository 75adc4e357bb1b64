#include "dq/modelgate.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "dq/error.hpp"
#include "dq/net.hpp"
#include "dq/text.hpp"

namespace dq {

using json = nlohmann::json;

namespace {

std::string media_type_for(std::string_view location, MediaKind kind) {
    std::string_view path = location;
    if (const auto q = path.find_first_of("?#"); q != std::string_view::npos)
        path = path.substr(0, q);
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string_view::npos ? "" : text::to_lower(path.substr(dot));
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".png") return "image/png";
    if (ext == ".gif") return "image/gif";
    if (ext == ".webp") return "image/webp";
    if (ext == ".bmp") return "image/bmp";
    if (ext == ".tif" || ext == ".tiff") return "image/tiff";
    if (ext == ".pdf") return "application/pdf";
    if (ext == ".txt" || ext == ".md") return "text/plain";
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".json") return "application/json";
    return kind == MediaKind::image ? "image/jpeg" : "application/octet-stream";
}

std::string read_file_capped(const std::filesystem::path& p, std::size_t cap,
                             const std::string& location) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec))
        throw Error(ErrorCode::asset_unavailable, "asset not found: " + location, location);
    const auto size = std::filesystem::file_size(p, ec);
    if (ec || size > cap)
        throw Error(ErrorCode::asset_unavailable,
                    "asset unreadable or larger than " + std::to_string(cap) + " bytes: " + location,
                    location);
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in && !in.eof())
        throw Error(ErrorCode::asset_unavailable, "asset unreadable: " + location, location);
    return ss.str();
}

void append_field(std::string& out, std::string_view tag, std::string_view value) {
    out += tag;
    out += std::to_string(value.size());
    out += ':';
    out += value;
}

bool looks_textual(std::string_view bytes) {
    if (bytes.find('\0') != std::string_view::npos) return false;
    std::size_t i = 0;
    while (i < bytes.size()) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 0;
        if (len == 0 || i + len > bytes.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            if ((static_cast<unsigned char>(bytes[i + k]) >> 6) != 0x2) return false;
        }
        i += len;
    }
    return true;
}

}  // namespace

// ---- assets -------------------------------------------------------------

ResolvedAsset AssetResolver::resolve(const AssetRef& ref) const {
    ResolvedAsset out;
    out.ref = ref;
    out.media_type = media_type_for(ref.location, ref.kind);
    const auto& loc = ref.location;
    if (text::istarts_with(loc, "http://") || text::istarts_with(loc, "https://")) {
        net::HttpOptions opts;
        opts.timeout = options_.http_timeout;
        opts.max_body_bytes = options_.max_bytes;
        net::HttpResponse res;
        try {
            res = net::get(loc, opts);
        } catch (const Error& e) {
            throw Error(ErrorCode::asset_unavailable, std::string("asset fetch failed: ") + e.what(),
                        loc);
        }
        if (res.status < 200 || res.status >= 300)
            throw Error(ErrorCode::asset_unavailable,
                        "asset fetch returned HTTP " + std::to_string(res.status) + ": " + loc, loc);
        out.bytes = std::move(res.body);
        if (!res.content_type.empty() && ref.kind == MediaKind::image &&
            text::istarts_with(res.content_type, "image/"))
            out.media_type = res.content_type.substr(0, res.content_type.find(';'));
    } else {
        std::filesystem::path p =
            text::istarts_with(loc, "file://") ? std::filesystem::path(loc.substr(7))
                                               : std::filesystem::path(loc);
        if (p.is_relative()) p = std::filesystem::path(options_.root) / p;
        out.bytes = read_file_capped(p, options_.max_bytes, loc);
    }
    out.digest = net::sha256_hex(out.bytes);
    return out;
}

// ---- fingerprint --------------------------------------------------------

std::string compute_fingerprint(const ModelRequest& request,
                                const std::vector<std::optional<ResolvedAsset>>& assets) {
    std::string canon = "dq-request-v1|";
    append_field(canon, "S", request.system_prompt);
    append_field(canon, "M", request.model_id);
    for (std::size_t i = 0; i < request.parts.size(); ++i) {
        const auto& part = request.parts[i];
        if (part.is_asset()) {
            if (i >= assets.size() || !assets[i])
                throw Error(ErrorCode::asset_unavailable,
                            "asset part was not resolved: " + part.asset->location,
                            part.asset->location);
            append_field(canon, part.asset->kind == MediaKind::image ? "I" : "D",
                         assets[i]->digest);
        } else {
            append_field(canon, "T", part.text);
        }
    }
    return net::sha256_hex(canon);
}

// ---- live HTTP backend --------------------------------------------------

HttpBackendConfig HttpBackendConfig::from_env() {
    HttpBackendConfig c;
    if (const char* v = std::getenv("DQ_MODEL_URL")) c.url = v;
    if (const char* v = std::getenv("DQ_MODEL_ID")) c.model_id = v;
    if (const char* v = std::getenv("DQ_API_KEY")) c.api_key = v;
    return c;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.url.empty())
        throw Error(ErrorCode::invalid_argument, "live model backend requires an endpoint URL");
    if (config_.retry.attempts < 1) config_.retry.attempts = 1;
}

std::string HttpChatBackend::build_body(const ResolvedRequest& resolved,
                                        const std::string& model_id) {
    const ModelRequest& req = *resolved.request;
    json content = json::array();
    for (std::size_t i = 0; i < req.parts.size(); ++i) {
        const auto& part = req.parts[i];
        if (!part.is_asset()) {
            content.push_back({{"type", "text"}, {"text", part.text}});
            continue;
        }
        const auto& asset = *resolved.assets[i];
        if (part.asset->kind == MediaKind::document && looks_textual(asset.bytes)) {
            content.push_back({{"type", "text"},
                               {"text", "[document " + part.asset->location + "]\n" + asset.bytes}});
            continue;
        }
        const std::string data_url =
            "data:" + asset.media_type + ";base64," + net::base64_encode(asset.bytes);
        if (part.asset->kind == MediaKind::image) {
            content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url}}}});
        } else {
            const auto name = std::filesystem::path(part.asset->location).filename().string();
            content.push_back(
                {{"type", "file"}, {"file", {{"filename", name}, {"file_data", data_url}}}});
        }
    }
    json body = {
        {"model", req.model_id.empty() ? model_id : req.model_id},
        {"temperature", req.temperature},
        {"messages",
         json::array({{{"role", "system"}, {"content", req.system_prompt}},
                      {{"role", "user"}, {"content", content}}})},
    };
    return body.dump();
}

ModelResponse HttpChatBackend::complete(const ResolvedRequest& request) {
    const std::string body = build_body(request, config_.model_id);
    net::HttpOptions opts;
    opts.timeout = config_.timeout;
    opts.max_body_bytes = 64u * 1024u * 1024u;
    if (!config_.api_key.empty()) opts.headers["Authorization"] = "Bearer " + config_.api_key;

    std::mt19937 rng(std::random_device{}());
    std::uniform_real_distribution<double> jitter(0.0, config_.retry.jitter);
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.attempts; ++attempt) {
        if (attempt > 1) {
            const double factor = static_cast<double>(1 << (attempt - 2)) * (1.0 + jitter(rng));
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
                static_cast<double>(config_.retry.base_delay.count()) * factor));
        }
        net::HttpResponse res;
        try {
            res = net::post_json(config_.url, body, opts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::transport) throw;
            last_error = e.what();
            continue;
        }
        if (res.status == 401 || res.status == 403)
            throw Error(ErrorCode::auth_failure,
                        "model endpoint rejected credentials (HTTP " + std::to_string(res.status) + ")");
        if (res.status == 413)
            throw Error(ErrorCode::payload_too_large, "model endpoint rejected payload size (HTTP 413)");
        if (res.status == 408 || res.status == 429 || res.status >= 500) {
            last_error = "HTTP " + std::to_string(res.status);
            continue;
        }
        if (res.status < 200 || res.status >= 300)
            throw Error(ErrorCode::bad_response,
                        "model endpoint returned HTTP " + std::to_string(res.status) + ": " +
                            res.body.substr(0, 200));
        try {
            const auto parsed = json::parse(res.body);
            const auto& msg = parsed.at("choices").at(0).at("message").at("content");
            ModelResponse out;
            out.backend_id = id();
            if (msg.is_string()) {
                out.text = msg.get<std::string>();
            } else if (msg.is_array()) {
                for (const auto& p : msg) {
                    if (p.contains("text")) out.text += p.at("text").get<std::string>();
                }
            } else if (!msg.is_null()) {
                throw Error(ErrorCode::bad_response, "unexpected message content type");
            }
            if (parsed.contains("usage") && parsed["usage"].is_object()) {
                Usage u;
                u.prompt_tokens = parsed["usage"].value("prompt_tokens", std::int64_t{0});
                u.completion_tokens = parsed["usage"].value("completion_tokens", std::int64_t{0});
                out.usage = u;
            }
            return out;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::bad_response,
                        std::string("malformed completion response: ") + e.what());
        }
    }
    throw Error(ErrorCode::retries_exhausted,
                "model endpoint failed after " + std::to_string(config_.retry.attempts) +
                    " attempts: " + last_error);
}

// ---- function / scripted / recording backends ---------------------------

ModelResponse FunctionBackend::complete(const ResolvedRequest& request) {
    ModelResponse out;
    out.text = fn_(request);
    out.backend_id = id_;
    return out;
}

Transcript Transcript::parse(std::string_view jsonl) {
    Transcript t;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            TranscriptEntry e;
            e.fingerprint = j.at("fingerprint").get<std::string>();
            e.request_summary = j.value("request_summary", std::string{});
            e.response_text = j.at("response_text").get<std::string>();
            if (!t.add(std::move(e)))
                throw Error(ErrorCode::input_data,
                            "duplicate fingerprint on transcript line " + std::to_string(line_no));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::input_data, "malformed transcript line " +
                                                   std::to_string(line_no) + ": " + e.what());
        }
    }
    return t;
}

Transcript Transcript::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read transcript '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

namespace {
std::string entry_line(const TranscriptEntry& e) {
    return json{{"fingerprint", e.fingerprint},
                {"request_summary", e.request_summary},
                {"response_text", e.response_text}}
        .dump();
}
}  // namespace

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& e : entries_) out += entry_line(e) + "\n";
    return out;
}

void Transcript::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write transcript '" + path + "'", path);
    out << to_jsonl();
}

bool Transcript::add(TranscriptEntry entry) {
    if (index_.count(entry.fingerprint)) return false;
    index_.emplace(entry.fingerprint, entries_.size());
    entries_.push_back(std::move(entry));
    return true;
}

const TranscriptEntry* Transcript::find(const std::string& fingerprint) const {
    const auto it = index_.find(fingerprint);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

ModelResponse ScriptedBackend::complete(const ResolvedRequest& request) {
    const auto* entry = transcript_.find(request.fingerprint);
    if (!entry)
        throw Error(ErrorCode::unmatched_request,
                    "unmatched request: no transcript entry for fingerprint " + request.fingerprint,
                    request.fingerprint);
    ModelResponse out;
    out.text = entry->response_text;
    out.backend_id = id();
    return out;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ModelBackend> inner, std::string path)
    : inner_(std::move(inner)), path_(std::move(path)) {
    if (!path_.empty() && std::filesystem::exists(path_)) transcript_ = Transcript::load(path_);
}

namespace {
std::string summarize(const ModelRequest& req) {
    std::string s = req.template_id.empty() ? std::string("request") : req.template_id;
    for (const auto& p : req.parts) {
        if (!p.is_asset()) {
            std::string t(text::trim(p.text));
            if (t.size() > 160) t = t.substr(0, 160) + "...";
            s += ": " + t;
            break;
        }
    }
    return s;
}
}  // namespace

ModelResponse RecordingBackend::complete(const ResolvedRequest& request) {
    {
        std::lock_guard lock(mu_);
        if (const auto* e = transcript_.find(request.fingerprint)) {
            ModelResponse out;
            out.text = e->response_text;
            out.backend_id = id();
            return out;
        }
    }
    ModelResponse res = inner_->complete(request);
    std::lock_guard lock(mu_);
    TranscriptEntry entry{request.fingerprint, summarize(*request.request), res.text};
    if (transcript_.add(entry) && !path_.empty()) {
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw Error(ErrorCode::io, "cannot append to transcript '" + path_ + "'", path_);
        out << entry_line(entry) << "\n";
    }
    return res;
}

Transcript RecordingBackend::transcript() const {
    std::lock_guard lock(mu_);
    return transcript_;
}

GatewayMode gateway_mode_from_string(std::string_view s) {
    if (s == "live") return GatewayMode::live;
    if (s == "record") return GatewayMode::record;
    if (s == "replay") return GatewayMode::replay;
    throw Error(ErrorCode::invalid_argument, "unknown gateway mode '" + std::string(s) + "'",
                std::string(s));
}

// ---- gateway ------------------------------------------------------------

ModelGateway::ModelGateway(std::shared_ptr<ModelBackend> backend, AssetResolver resolver,
                           GatewayOptions options)
    : backend_(std::move(backend)), resolver_(std::move(resolver)), options_(std::move(options)) {
    if (!backend_) throw Error(ErrorCode::invalid_argument, "model gateway requires a backend");
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
}

ResolvedRequest ModelGateway::resolve(const ModelRequest& request) const {
    ResolvedRequest r;
    r.request = &request;
    r.assets.resize(request.parts.size());
    for (std::size_t i = 0; i < request.parts.size(); ++i) {
        if (request.parts[i].is_asset()) r.assets[i] = resolver_.resolve(*request.parts[i].asset);
    }
    r.fingerprint = compute_fingerprint(request, r.assets);
    return r;
}

std::string ModelGateway::fingerprint(const ModelRequest& request) const {
    return resolve(request).fingerprint;
}

void ModelGateway::set_observer(Observer observer) {
    std::lock_guard lock(observer_mu_);
    observer_ = std::move(observer);
}

ModelResponse ModelGateway::complete(const ModelRequest& request) {
    if (request.parts.empty())
        throw Error(ErrorCode::invalid_argument, "model request needs at least one content part");
    if (request.temperature != 0.0)
        throw Error(ErrorCode::invalid_argument, "framework requests must use temperature 0.0");

    ModelRequest effective = request;
    if (effective.model_id.empty()) effective.model_id = options_.default_model_id;
    const ResolvedRequest resolved = resolve(effective);

    {
        std::unique_lock lock(slot_mu_);
        slot_cv_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        ModelGateway* g;
        ~Release() {
            {
                std::lock_guard lock(g->slot_mu_);
                --g->in_flight_;
            }
            g->slot_cv_.notify_one();
        }
    } release{this};

    ++calls_;
    ModelResponse response = backend_->complete(resolved);
    Observer observer;
    {
        std::lock_guard lock(observer_mu_);
        observer = observer_;
    }
    if (observer) observer(effective, resolved, response);
    return response;
}

}  // namespace dq
