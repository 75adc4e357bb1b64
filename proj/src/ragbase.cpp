#include "dq/ragbase.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "dq/error.hpp"
#include "dq/net.hpp"

namespace dq {

using json = nlohmann::json;

namespace {

void normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    for (double& x : v) x /= norm;
}

}  // namespace

std::vector<std::string> LexicalEmbedder::tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (!std::isalnum(c)) {
            flush();
            continue;
        }
        if (!cur.empty()) {
            const auto prev = static_cast<unsigned char>(text[i - 1]);
            const bool lower_to_upper = std::islower(prev) && std::isupper(c);
            const bool digit_edge = std::isdigit(prev) != std::isdigit(c);
            // "HTTPServer" -> http, server
            const bool acronym_end = std::isupper(prev) && std::isupper(c) && i + 1 < text.size() &&
                                     std::islower(static_cast<unsigned char>(text[i + 1]));
            if (lower_to_upper || digit_edge || acronym_end) flush();
        }
        cur += static_cast<char>(std::tolower(c));
    }
    flush();
    return out;
}

std::uint64_t LexicalEmbedder::hash(std::string_view token) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : token) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::vector<double>> LexicalEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        std::vector<double> v(dimension_, 0.0);
        for (const auto& tok : tokenize(t)) v[hash(tok) % dimension_] += 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

HttpEmbedderConfig HttpEmbedderConfig::from_env() {
    HttpEmbedderConfig c;
    if (const char* v = std::getenv("DQ_EMBED_URL")) c.url = v;
    if (const char* v = std::getenv("DQ_MODEL_ID")) c.model_id = v;
    if (const char* v = std::getenv("DQ_API_KEY")) c.api_key = v;
    return c;
}

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
    if (config_.url.empty())
        throw Error(ErrorCode::invalid_argument, "embedding backend requires an endpoint URL");
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
    json body = {{"input", texts}};
    if (!config_.model_id.empty()) body["model"] = config_.model_id;
    net::HttpOptions opts;
    opts.timeout = config_.timeout;
    opts.max_body_bytes = 256u * 1024u * 1024u;
    if (!config_.api_key.empty()) opts.headers["Authorization"] = "Bearer " + config_.api_key;
    const auto res = net::post_json(config_.url, body.dump(), opts);
    if (res.status < 200 || res.status >= 300)
        throw Error(ErrorCode::bad_response,
                    "embedding endpoint returned HTTP " + std::to_string(res.status));
    std::vector<std::vector<double>> out;
    try {
        const auto j = json::parse(res.body);
        if (j.contains("data")) {
            for (const auto& item : j.at("data"))
                out.push_back(item.at("embedding").get<std::vector<double>>());
        } else {
            out = j.at("embeddings").get<std::vector<std::vector<double>>>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::bad_response, std::string("malformed embedding response: ") + e.what());
    }
    if (out.size() != texts.size())
        throw Error(ErrorCode::bad_response, "embedding endpoint returned " +
                                                 std::to_string(out.size()) + " vectors for " +
                                                 std::to_string(texts.size()) + " inputs");
    for (const auto& v : out) {
        if (v.empty() || v.size() != out.front().size())
            throw Error(ErrorCode::bad_response, "embedding vectors have inconsistent dimensions");
    }
    return out;
}

std::vector<std::string> RetrievalResult::tables() const {
    std::vector<std::string> out;
    for (const auto& [t, _] : ranked) out.push_back(t);
    return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::invalid_argument, "vector dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

ChunkIndex index_schema(const SchemaModel& schema, Embedder& embedder) {
    if (schema.empty())
        throw Error(ErrorCode::empty_schema, "cannot index an empty schema", schema.database_name());
    ChunkIndex index;
    index.embedder_id = embedder.id();
    std::vector<std::string> texts;
    for (const auto& t : schema.tables()) {
        index.chunks.push_back({t.name, render_table_context(t, RenderStyle::full), {}});
        texts.push_back(index.chunks.back().text);
    }
    auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size())
        throw Error(ErrorCode::bad_response, "embedder returned the wrong number of vectors");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        normalize(vectors[i]);
        index.chunks[i].vector = std::move(vectors[i]);
    }
    index.dimension = index.chunks.front().vector.size();
    return index;
}

RetrievalResult retrieve(const NLQuery& query, const ChunkIndex& index, Embedder& embedder,
                         std::size_t k) {
    if (index.chunks.empty()) throw Error(ErrorCode::invalid_argument, "retrieval index is empty");
    if (k == 0) throw Error(ErrorCode::invalid_argument, "retrieval depth k must be positive");
    auto qv = embedder.embed({query.text});
    if (qv.size() != 1 || qv.front().size() != index.dimension)
        throw Error(ErrorCode::bad_response, "query embedding dimension does not match the index");
    normalize(qv.front());

    RetrievalResult result;
    result.k = k;
    for (const auto& c : index.chunks) {
        double dot = 0.0;
        for (std::size_t i = 0; i < c.vector.size(); ++i) dot += c.vector[i] * qv.front()[i];
        result.ranked.emplace_back(c.table, dot);
    }
    std::sort(result.ranked.begin(), result.ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (result.ranked.size() > k) result.ranked.resize(k);
    return result;
}

}  // namespace dq
