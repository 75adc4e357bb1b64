#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <array>
#include <memory>

#include "dq/error.hpp"
#include "dq/net.hpp"

namespace dq::net {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1)
        throw Error(ErrorCode::io, "sha256 digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[md[i] >> 4];
        out += kHex[md[i] & 0xf];
    }
    return out;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::invalid_argument, "malformed URL '" + url + "'", url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw Error(ErrorCode::invalid_argument, "unsupported URL scheme '" + scheme + "'", url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Client make_client(const SplitUrl& u, const HttpOptions& options) {
    httplib::Client client(u.origin);
    const auto secs = options.timeout.count() / 1000;
    const auto usecs = (options.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    client.set_follow_location(true);
    return client;
}

HttpResponse finish(const httplib::Result& res, const std::string& url, std::string body,
                    bool overflow, std::size_t cap) {
    if (overflow)
        throw Error(ErrorCode::payload_too_large,
                    "response from " + url + " exceeds " + std::to_string(cap) + " bytes", url);
    if (!res)
        throw Error(ErrorCode::transport,
                    "HTTP request to " + url + " failed: " + httplib::to_string(res.error()), url);
    HttpResponse out;
    out.status = res->status;
    out.body = std::move(body);
    out.content_type = res->get_header_value("Content-Type");
    return out;
}

}  // namespace

HttpResponse post_json(const std::string& url, const std::string& body,
                       const HttpOptions& options) {
    const auto u = split(url);
    auto client = make_client(u, options);
    httplib::Headers headers;
    for (const auto& [k, v] : options.headers) headers.emplace(k, v);
    std::string received;
    bool overflow = false;
    httplib::Request req;
    req.method = "POST";
    req.path = u.path;
    req.headers = headers;
    req.body = body;
    req.set_header("Content-Type", "application/json");
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t,
                               std::uint64_t) {
        if (received.size() + len > options.max_body_bytes) {
            overflow = true;
            return false;
        }
        received.append(data, len);
        return true;
    };
    auto res = client.send(req);
    return finish(res, url, std::move(received), overflow, options.max_body_bytes);
}

HttpResponse get(const std::string& url, const HttpOptions& options) {
    const auto u = split(url);
    auto client = make_client(u, options);
    httplib::Headers headers;
    for (const auto& [k, v] : options.headers) headers.emplace(k, v);
    std::string received;
    bool overflow = false;
    auto res = client.Get(u.path, headers, [&](const char* data, std::size_t len) {
        if (received.size() + len > options.max_body_bytes) {
            overflow = true;
            return false;
        }
        received.append(data, len);
        return true;
    });
    return finish(res, url, std::move(received), overflow, options.max_body_bytes);
}

}  // namespace dq::net
