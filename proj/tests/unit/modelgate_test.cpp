#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

#include "dq/error.hpp"
#include "dq/modelgate.hpp"
#include "fixtures.hpp"

using namespace dq;

namespace {

ModelRequest text_request(std::string text, std::string system = "sys") {
    ModelRequest r;
    r.system_prompt = std::move(system);
    r.parts.push_back(ContentPart::text_part(std::move(text)));
    return r;
}

std::shared_ptr<FunctionBackend> echo() {
    return std::make_shared<FunctionBackend>([](const ResolvedRequest& r) { return "echo:" + r.request->parts[0].text; });
}

class LocalServer {
public:
    explicit LocalServer(httplib::Server& server) : server_(server) {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server& server_;
    int port_ = 0;
    std::thread thread_;
};

HttpBackendConfig fast_config(const std::string& url) {
    HttpBackendConfig c;
    c.url = url;
    c.model_id = "m";
    c.timeout = std::chrono::milliseconds(5000);
    c.retry.base_delay = std::chrono::milliseconds(1);
    return c;
}

}  // namespace

TEST(Gateway, RejectsNonzeroTemperatureAndEmptyRequests) {
    ModelGateway g(echo());
    auto r = text_request("x");
    r.temperature = 0.7;
    EXPECT_THROW(g.complete(r), Error);
    EXPECT_THROW(g.complete(ModelRequest{}), Error);
    EXPECT_EQ(g.complete(text_request("x")).text, "echo:x");
    EXPECT_EQ(g.call_count(), 1u);
}

TEST(Gateway, FingerprintDependsOnContentNotTemplateId) {
    ModelGateway g(echo());
    auto a = text_request("hello");
    auto b = a;
    b.template_id = "other";
    EXPECT_EQ(g.fingerprint(a), g.fingerprint(b));
    EXPECT_NE(g.fingerprint(a), g.fingerprint(text_request("hello!")));
    EXPECT_NE(g.fingerprint(a), g.fingerprint(text_request("hello", "other system")));
}

TEST(Gateway, AssetBytesEnterTheFingerprint) {
    const auto dir = dq::testing::scratch_dir("gateway-assets");
    dq::testing::write_png(dir / "a.png", 1);
    ModelGateway g(echo());
    auto r = text_request("look");
    r.parts.push_back(ContentPart::asset_part((dir / "a.png").string(), MediaKind::image));
    const auto before = g.fingerprint(r);
    dq::testing::write_png(dir / "a.png", 2);
    EXPECT_NE(g.fingerprint(r), before);
}

TEST(Gateway, MissingAssetIsUnavailable) {
    ModelGateway g(echo());
    auto r = text_request("look");
    r.parts.push_back(ContentPart::asset_part("/no/such/file.png", MediaKind::image));
    try {
        g.complete(r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::asset_unavailable);
    }
}

TEST(Gateway, BoundsConcurrentCalls) {
    std::atomic<int> active{0}, peak{0};
    auto slow = std::make_shared<FunctionBackend>([&](const ResolvedRequest&) {
        const int now = ++active;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --active;
        return std::string("ok");
    });
    GatewayOptions opts;
    opts.max_in_flight = 2;
    ModelGateway g(slow, AssetResolver{}, opts);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { g.complete(text_request(std::to_string(i))); });
    for (auto& t : threads) t.join();
    EXPECT_LE(peak.load(), 2);
    EXPECT_EQ(g.call_count(), 8u);
}

TEST(Transcript, RoundTripAndDuplicates) {
    Transcript t;
    EXPECT_TRUE(t.add({"fp1", "summary", "answer one"}));
    EXPECT_FALSE(t.add({"fp1", "summary", "different"}));
    EXPECT_TRUE(t.add({"fp2", "s2", "line\nbreak"}));
    const auto parsed = Transcript::parse(t.to_jsonl());
    ASSERT_EQ(parsed.size(), 2u);
    EXPECT_EQ(parsed.find("fp2")->response_text, "line\nbreak");
    EXPECT_EQ(parsed.find("missing"), nullptr);
}

TEST(Transcript, RecordThenReplay) {
    const auto dir = dq::testing::scratch_dir("record");
    const auto path = (dir / "t.jsonl").string();
    {
        ModelGateway rec(std::make_shared<RecordingBackend>(echo(), path));
        EXPECT_EQ(rec.complete(text_request("a")).text, "echo:a");
        EXPECT_EQ(rec.complete(text_request("b")).text, "echo:b");
    }
    ModelGateway replay(std::make_shared<ScriptedBackend>(Transcript::load(path)));
    EXPECT_EQ(replay.complete(text_request("b")).text, "echo:b");
    try {
        replay.complete(text_request("never recorded"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unmatched_request);
        EXPECT_EQ(e.detail(), replay.fingerprint(text_request("never recorded")));
    }
}

TEST(Gateway, ModeNames) {
    EXPECT_EQ(gateway_mode_from_string("replay"), GatewayMode::replay);
    EXPECT_THROW(gateway_mode_from_string("bogus"), Error);
}

TEST(HttpBackend, RetriesTransientFailuresThenSucceeds) {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
        if (++hits < 3) {
            res.status = 503;
            return;
        }
        EXPECT_NE(req.body.find("\"temperature\""), std::string::npos);
        res.set_content(R"({"choices":[{"message":{"content":"fine"}}],"usage":{"prompt_tokens":3,"completion_tokens":1}})",
                        "application/json");
    });
    LocalServer live(server);
    HttpChatBackend backend(fast_config(live.url("/v1/chat")));
    ModelGateway g(std::shared_ptr<ModelBackend>(&backend, [](ModelBackend*) {}));
    const auto res = g.complete(text_request("hi"));
    EXPECT_EQ(res.text, "fine");
    ASSERT_TRUE(res.usage.has_value());
    EXPECT_EQ(res.usage->prompt_tokens, 3);
    EXPECT_EQ(hits.load(), 3);
}

TEST(HttpBackend, ErrorClassification) {
    httplib::Server server;
    server.Post("/auth", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    server.Post("/big", [](const httplib::Request&, httplib::Response& res) { res.status = 413; });
    server.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    LocalServer live(server);
    const auto code_for = [&](const std::string& path) {
        HttpChatBackend backend(fast_config(live.url(path)));
        ModelGateway g(std::shared_ptr<ModelBackend>(&backend, [](ModelBackend*) {}));
        try {
            g.complete(text_request("hi"));
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::invalid_argument;
    };
    EXPECT_EQ(code_for("/auth"), ErrorCode::auth_failure);
    EXPECT_EQ(code_for("/big"), ErrorCode::payload_too_large);
    EXPECT_EQ(code_for("/down"), ErrorCode::retries_exhausted);
}

TEST(HttpBackend, ImagesTravelAsDataUrls) {
    const auto dir = dq::testing::scratch_dir("http-body");
    dq::testing::write_png(dir / "p.png");
    ModelGateway g(echo());
    auto r = text_request("describe");
    r.parts.push_back(ContentPart::asset_part((dir / "p.png").string(), MediaKind::image));
    ResolvedRequest resolved{&r, {std::nullopt, g.assets().resolve(r.parts[1].asset.value())}, ""};
    const auto body = HttpChatBackend::build_body(resolved, "model-x");
    EXPECT_NE(body.find("data:image/png;base64,"), std::string::npos);
    EXPECT_NE(body.find("model-x"), std::string::npos);
}
