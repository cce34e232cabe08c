#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "demosel/errors.hpp"
#include "demosel/llm_gateway.hpp"

using namespace demosel;
using json = nlohmann::json;

namespace {

// Local completion server running for the lifetime of the object.
class StubServer {
  public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/v1/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    EndpointConfig endpoint() const {
        EndpointConfig e;
        e.base_url = "http://127.0.0.1:" + std::to_string(port_);
        e.initial_backoff = std::chrono::milliseconds(1);
        e.max_backoff = std::chrono::milliseconds(4);
        e.request_timeout = std::chrono::seconds(5);
        return e;
    }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

void reply(httplib::Response& res, const std::string& text) {
    res.set_content(json{{"choices", {{{"text", text}}}}}.dump(), "application/json");
}

}  // namespace

TEST_CASE("completion request and response") {
    json seen;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        reply(res, " answer (state (all))");
    });
    CompletionRequest r;
    r.prompt = "source: x\ntarget:";
    auto out = complete(r, server.endpoint());
    CHECK(out.text == " answer (state (all))");
    CHECK(out.retries == 0);
    CHECK(seen["prompt"] == r.prompt);
    CHECK(seen["temperature"] == 0.0);
    CHECK(seen["max_tokens"] == 256);
    CHECK(seen["stop"] == json({"\n", "source:"}));
    CHECK(seen["model"] == "code-davinci-002");
}

TEST_CASE("rate limits are retried") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        if (calls++ < 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        reply(res, "f (a)");
    });
    auto out = complete({"p"}, server.endpoint());
    CHECK(out.text == "f (a)");
    CHECK(out.retries == 2);
    CHECK(calls == 3);
}

TEST_CASE("stop sequences cut the completion") {
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        reply(res, " f (a)\nsource: next");
    });
    CHECK(complete({"p"}, server.endpoint()).text == " f (a)");
    CHECK(cut_at_stop("abc source: d", {"\n", "source:"}) == "abc ");
    CHECK(cut_at_stop("abc", {}) == "abc");
}

TEST_CASE("client errors are not retried") {
    std::atomic<int> calls{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.status = 401;
        res.set_content("bad key", "text/plain");
    });
    try {
        complete({"p"}, server.endpoint());
        FAIL("expected ApiError");
    } catch (const ApiError& e) {
        CHECK(e.status == 401);
    }
    CHECK(calls == 1);
}

TEST_CASE("retries run out") {
    StubServer server([&](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    auto ep = server.endpoint();
    ep.max_retries = 2;
    CHECK_THROWS_AS(complete({"p"}, ep), ApiError);
}

TEST_CASE("unreachable endpoint is a transport error") {
    EndpointConfig ep;
    ep.base_url = "http://127.0.0.1:1";
    ep.max_retries = 1;
    ep.initial_backoff = std::chrono::milliseconds(1);
    ep.request_timeout = std::chrono::seconds(1);
    CHECK_THROWS_AS(complete({"p"}, ep), TransportError);
    EndpointConfig none;
    CHECK_THROWS_AS(complete({"p"}, none), ConfigError);
}

TEST_CASE("concurrent completions keep request order") {
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        reply(res, "echo " + json::parse(req.body)["prompt"].get<std::string>());
    });
    std::vector<CompletionRequest> reqs;
    for (int i = 0; i < 12; ++i) reqs.push_back({std::to_string(i)});
    auto out = complete_all(reqs, server.endpoint(), 4);
    REQUIRE(out.size() == 12);
    for (int i = 0; i < 12; ++i) CHECK(out[static_cast<std::size_t>(i)].text == "echo " + std::to_string(i));
}

TEST_CASE("mock oracle") {
    const std::string gold = "count (filter (black, find (dog)))";
    // every gold structure of size <= 2 appears in some demonstration
    std::vector<std::string> enough = {"count (filter (white, find (cat)))", "exists (filter (black, find (dog)))",
                                       "count (find (dog))"};
    CHECK(mock_complete(enough, gold) == gold);

    std::vector<std::string> lacking = {"exists (find (cat))", "count (find (cat))"};
    // neither has filter: copy the demonstration with the largest overlap
    CHECK(mock_complete(lacking, gold) == "count (find (cat))");

    std::vector<std::string> tie = {"exists (find (cat))", "exists (find (cow))"};
    CHECK(mock_complete(tie, gold) == "exists (find (cat))");

    CHECK(mock_complete({}, gold).empty());

    MockOracleConfig strict;
    strict.compose_threshold_size = 3;
    CHECK(mock_complete(enough, gold, strict) != gold);
    MockOracleConfig bad;
    bad.compose_threshold_size = 0;
    CHECK_THROWS_AS(mock_complete(enough, gold, bad), ConfigError);
}
