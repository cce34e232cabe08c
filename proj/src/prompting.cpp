#include "demosel/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace demosel {
namespace {

std::string join_blocks(const std::vector<std::string>& blocks, const std::string& test_block) {
    std::string out;
    for (const auto& b : blocks) out += b;
    out += test_block;
    return out;
}

}  // namespace

std::vector<SelectedItem> order_demonstrations(const DemonstrationSet& set, Ordering ordering) {
    std::vector<SelectedItem> out = set.items;
    if (ordering.mode == Ordering::Mode::ascending_score) {
        std::stable_sort(out.begin(), out.end(),
                         [](const SelectedItem& a, const SelectedItem& b) { return a.score < b.score; });
    } else {
        std::mt19937_64 rng(ordering.seed);
        for (std::size_t i = out.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> dist(0, i - 1);
            std::swap(out[i - 1], out[dist(rng)]);
        }
    }
    return out;
}

std::size_t default_token_count(std::string_view text) {
    std::size_t words = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return static_cast<std::size_t>(std::ceil(static_cast<double>(words) * 1.3));
}

Prompt format_prompt(const std::vector<PromptDemo>& demos, std::string_view test_utterance,
                     const TokenCounter& counter) {
    Prompt p;
    for (const auto& d : demos) {
        std::string block;
        if (d.utterance) block += "source: " + *d.utterance + "\n";
        block += "target: " + d.program + "\n";
        p.demo_blocks.push_back(std::move(block));
        p.demo_ids.push_back(d.id);
    }
    p.test_block = "source: " + std::string(test_utterance) + "\ntarget:";
    p.text = join_blocks(p.demo_blocks, p.test_block);
    p.token_estimate = counter(p.text);
    return p;
}

Prompt truncate_prompt(const Prompt& prompt, std::size_t budget, const TokenCounter& counter) {
    if (counter(prompt.test_block) >= budget) {
        throw BudgetTooSmall("token budget " + std::to_string(budget) + " does not exceed the test block alone");
    }
    Prompt out = prompt;
    std::size_t drop = 0;
    std::size_t tokens = counter(out.text);
    while (tokens > budget && drop < out.demo_blocks.size()) {
        ++drop;
        std::vector<std::string> rest(out.demo_blocks.begin() + static_cast<std::ptrdiff_t>(drop),
                                      out.demo_blocks.end());
        tokens = counter(join_blocks(rest, out.test_block));
    }
    if (drop > 0) {
        out.demo_blocks.erase(out.demo_blocks.begin(), out.demo_blocks.begin() + static_cast<std::ptrdiff_t>(drop));
        out.demo_ids.erase(out.demo_ids.begin(), out.demo_ids.begin() + static_cast<std::ptrdiff_t>(drop));
        out.text = join_blocks(out.demo_blocks, out.test_block);
        out.truncated_count += static_cast<int>(drop);
    }
    out.token_estimate = tokens;
    return out;
}

}  // namespace demosel
