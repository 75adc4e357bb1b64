#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dq/catalog.hpp"
#include "dq/sile.hpp"

namespace dq {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
    virtual std::string id() const = 0;
};

// Bag of lowercase sub-word tokens (split on punctuation, snake_case,
// camelCase and letter/digit boundaries), feature-hashed into a fixed
// dimension.
class LexicalEmbedder final : public Embedder {
public:
    explicit LexicalEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return "lexical-" + std::to_string(dimension_); }

    static std::vector<std::string> tokenize(std::string_view text);
    static std::uint64_t hash(std::string_view token);

private:
    std::size_t dimension_;
};

struct HttpEmbedderConfig {
    std::string url;
    std::string model_id;
    std::string api_key;
    std::chrono::milliseconds timeout{60'000};

    // DQ_EMBED_URL, DQ_MODEL_ID, DQ_API_KEY
    static HttpEmbedderConfig from_env();
};

// JSON embedding endpoint; accepts `{"data": [{"embedding": [...]}]}` or
// `{"embeddings": [[...]]}` responses.
class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderConfig config);
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
    std::string id() const override { return "http:" + config_.url; }

private:
    HttpEmbedderConfig config_;
};

struct SchemaChunk {
    std::string table;
    std::string text;
    std::vector<double> vector;  // unit-normalized
};

struct ChunkIndex {
    std::string embedder_id;
    std::size_t dimension = 0;
    std::vector<SchemaChunk> chunks;
};

struct RetrievalResult {
    std::vector<std::pair<std::string, double>> ranked;
    std::size_t k = 0;

    std::vector<std::string> tables() const;
};

constexpr std::size_t kDefaultRetrievalDepth = 4;

ChunkIndex index_schema(const SchemaModel& schema, Embedder& embedder);
RetrievalResult retrieve(const NLQuery& query, const ChunkIndex& index, Embedder& embedder,
                         std::size_t k = kDefaultRetrievalDepth);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace dq
