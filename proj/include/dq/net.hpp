#pragma once

// HTTP transport and content digests used by the gateway, the embedding
// client, and the remote classifier client.

#include <chrono>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace dq::net {

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;
};

struct HttpOptions {
    std::chrono::milliseconds timeout{10'000};
    std::size_t max_body_bytes = 10u * 1024u * 1024u;
    std::map<std::string, std::string> headers;
};

// Both throw Error(transport) when no HTTP response is obtained and
// Error(payload_too_large) when the body exceeds max_body_bytes.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const HttpOptions& options = {});
HttpResponse get(const std::string& url, const HttpOptions& options = {});

}  // namespace dq::net
