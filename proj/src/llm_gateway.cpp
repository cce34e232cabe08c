#include "demosel/llm_gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "demosel/local_structures.hpp"

namespace demosel {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

bool retryable(int status) { return status == 429 || status >= 500; }

std::string excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

LsSet structures_of(std::string_view program, const Dialect& dialect) {
    return enumerate_local_structures(anonymize(parse_program(program, dialect)));
}

}  // namespace

EndpointConfig EndpointConfig::from_env() {
    EndpointConfig cfg;
    if (const char* key = std::getenv("DEMOSEL_API_KEY")) cfg.api_key = key;
    if (const char* url = std::getenv("DEMOSEL_BASE_URL")) cfg.base_url = url;
    return cfg;
}

std::string cut_at_stop(std::string_view text, const std::vector<std::string>& stop) {
    std::size_t cut = text.size();
    for (const auto& s : stop) {
        if (s.empty()) continue;
        cut = std::min(cut, text.find(s));
    }
    return std::string(text.substr(0, cut));
}

CompletionResult complete(const CompletionRequest& request, const EndpointConfig& endpoint) {
    if (request.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (endpoint.base_url.empty()) throw ConfigError("no completion endpoint configured (set DEMOSEL_BASE_URL)");

    httplib::Client client(endpoint.base_url);
    auto timeout = endpoint.request_timeout;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

    json body = {
        {"model", endpoint.model},
        {"prompt", request.prompt},
        {"max_tokens", request.max_tokens},
        {"temperature", request.temperature},
        {"stop", request.stop},
    };
    const std::string payload = body.dump();
    const auto deadline = Clock::now() + endpoint.total_timeout;

    CompletionResult result;
    auto backoff = endpoint.initial_backoff;
    std::string last_error;
    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(endpoint.path, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            json parsed;
            try {
                parsed = json::parse(res->body);
                const auto& choices = parsed.at("choices");
                if (choices.empty()) throw ApiError(res->status, "response has no choices");
                result.text = cut_at_stop(choices.at(0).at("text").get<std::string>(), request.stop);
            } catch (const json::exception& e) {
                throw ApiError(res->status, std::string("malformed response: ") + e.what());
            }
            return result;
        }
        if (res && !retryable(res->status)) throw ApiError(res->status, excerpt(res->body));
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());

        if (attempt >= endpoint.max_retries || Clock::now() + backoff > deadline) {
            if (res) throw ApiError(res->status, excerpt(res->body));
            throw TransportError("completion request failed after " + std::to_string(attempt) +
                                 " retries: " + last_error);
        }
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, endpoint.max_backoff);
        ++result.retries;
    }
}

std::vector<CompletionResult> complete_all(const std::vector<CompletionRequest>& requests,
                                           const EndpointConfig& endpoint, int width) {
    std::vector<CompletionResult> results(requests.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed) {
            std::size_t i = next++;
            if (i >= requests.size()) return;
            try {
                results[i] = complete(requests[i], endpoint);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };

    std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(width, 1)), 1,
                                                  std::max<std::size_t>(requests.size(), 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return results;
}

void MockOracleConfig::validate() const {
    if (compose_threshold_size < 1) throw ConfigError("compose_threshold_size must be >= 1");
}

std::string mock_complete(const std::vector<std::string>& demo_programs, std::string_view gold_program,
                          const MockOracleConfig& config, const Dialect& dialect) {
    config.validate();
    if (demo_programs.empty()) return "";

    LsSet gold = structures_of(gold_program, dialect);
    std::vector<LsSet> demos;
    LsSet demo_union;
    for (const auto& p : demo_programs) {
        try {
            demos.push_back(structures_of(p, dialect));
        } catch (const SyntaxError&) {
            demos.emplace_back();
        }
        demo_union.merge(demos.back());
    }

    bool composable = std::all_of(gold.begin(), gold.end(), [&](const auto& entry) {
        return entry.second.size > config.compose_threshold_size || demo_union.contains(entry.first);
    });
    if (composable) return std::string(gold_program);

    std::size_t best = 0;
    std::size_t best_overlap = 0;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        std::size_t overlap = 0;
        for (const auto& [canon, e] : demos[i]) overlap += gold.contains(canon) ? 1 : 0;
        if (i == 0 || overlap > best_overlap) {
            best = i;
            best_overlap = overlap;
        }
    }
    return demo_programs[best];
}

}  // namespace demosel
