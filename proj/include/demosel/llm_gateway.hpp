#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "demosel/program_ast.hpp"

namespace demosel {

struct CompletionRequest {
    std::string prompt;
    int max_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop = {"\n", "source:"};
};

struct EndpointConfig {
    // e.g. http://localhost:8000 ; https requires an OpenSSL-enabled build.
    std::string base_url;
    std::string path = "/v1/completions";
    std::string model = "code-davinci-002";
    std::string api_key;
    int max_retries = 5;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::milliseconds max_backoff{16000};
    std::chrono::seconds request_timeout{60};
    // Bound on the whole call including backoff sleeps.
    std::chrono::seconds total_timeout{300};

    // DEMOSEL_API_KEY and DEMOSEL_BASE_URL override the defaults when set.
    static EndpointConfig from_env();
};

struct CompletionResult {
    std::string text;
    int retries = 0;
};

// Text before the first occurrence of any stop sequence.
std::string cut_at_stop(std::string_view text, const std::vector<std::string>& stop);

// POSTs {model, prompt, max_tokens, temperature, stop} and returns the first
// choice's text. 429 and 5xx responses and transport failures are retried with
// exponential backoff.
CompletionResult complete(const CompletionRequest& request, const EndpointConfig& endpoint);

// Runs `complete` over many requests with at most `width` in flight. Results
// line up with requests. The first error is rethrown after all workers stop.
std::vector<CompletionResult> complete_all(const std::vector<CompletionRequest>& requests,
                                           const EndpointConfig& endpoint, int width);

struct MockOracleConfig {
    int compose_threshold_size = 2;

    void validate() const;
};

// Deterministic stand-in for the model: returns the gold program when every
// gold structure up to the threshold size appears somewhere in the
// demonstrations, otherwise copies the demonstration whose structures overlap
// gold the most (first in prompt order on ties). No demonstrations give "".
std::string mock_complete(const std::vector<std::string>& demo_programs, std::string_view gold_program,
                          const MockOracleConfig& config = {}, const Dialect& dialect = {});

}  // namespace demosel
