#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "demosel/selection.hpp"

namespace demosel {

struct Ordering {
    enum class Mode { ascending_score, shuffled };
    Mode mode = Mode::ascending_score;
    std::uint64_t seed = 0;

    static Ordering ascending() { return {}; }
    static Ordering shuffled(std::uint64_t seed) { return {Mode::shuffled, seed}; }
};

// Ascending score puts the most similar demonstration last, next to the test
// utterance. Equal scores keep selection order.
std::vector<SelectedItem> order_demonstrations(const DemonstrationSet& set, Ordering ordering);

struct PromptDemo {
    std::string id;
    // Empty optional renders a program-only block.
    std::optional<std::string> utterance;
    std::string program;
};

struct Prompt {
    std::string text;
    std::vector<std::string> demo_ids;
    std::vector<std::string> demo_blocks;
    std::string test_block;
    int truncated_count = 0;
    std::size_t token_estimate = 0;
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

// Whitespace-delimited words times 1.3, rounded up.
std::size_t default_token_count(std::string_view text);

// `source: <utterance>\ntarget: <program>\n` per demonstration, then
// `source: <test>\ntarget:` with no trailing newline.
Prompt format_prompt(const std::vector<PromptDemo>& demos, std::string_view test_utterance,
                     const TokenCounter& counter = default_token_count);

// Drops whole demonstrations from the front until the prompt fits.
Prompt truncate_prompt(const Prompt& prompt, std::size_t budget, const TokenCounter& counter = default_token_count);

}  // namespace demosel
