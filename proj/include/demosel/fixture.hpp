#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "demosel/corpus.hpp"

namespace demosel {

// A synchronous grammar: every rule pairs a program template with an
// utterance template over the same `{NT}` placeholders. The n-th occurrence
// of a nonterminal in the utterance is the n-th occurrence in the program.
struct GrammarRule {
    std::string program;
    std::string utterance;
    double weight = 1.0;
};

struct FixtureGrammar {
    std::string start;
    // Past this expansion depth a nonterminal always takes its first rule, so
    // the first rule must lead toward termination.
    int max_depth = 4;
    std::map<std::string, std::vector<GrammarRule>> rules;
    // Programs with more symbols than this are discarded (0 = no limit).
    int max_symbols = 0;
    // Simulated parser beams: each terminal choice is swapped for another
    // terminal rule of the same nonterminal with this probability.
    double beam_noise = 0.1;
    int beams = 1;
    // Size of the structures withheld by the held-out-ls split, and an
    // optional explicit list of them.
    int planted_size = 3;
    std::vector<std::string> held_out;

    void validate() const;

    static FixtureGrammar from_json_text(std::string_view text);
    static FixtureGrammar load(const std::filesystem::path& path);
    // Built-in COVR-style grammar (find/filter/with_relation/count/query_attr).
    static FixtureGrammar covr();
};

enum class FixtureSplit { iid, template_split, held_out_ls };

std::string_view to_string(FixtureSplit s);
FixtureSplit parse_fixture_split(std::string_view name);

struct FixtureOptions {
    std::size_t n_train = 1000;
    std::size_t n_test = 200;
    FixtureSplit split = FixtureSplit::held_out_ls;
    std::uint64_t seed = 0;
};

struct Fixture {
    std::vector<RawExample> examples;  // train records first, then test
    // Withheld structures (held-out-ls split only).
    std::vector<std::string> planted;
    // Test id -> withheld structures its program contains.
    std::map<std::string, std::vector<std::string>> planted_by_test;
    // Test id -> simulated beams.
    std::map<std::string, std::vector<std::string>> predictions;
};

Fixture gen_fixture(const FixtureGrammar& grammar, const FixtureOptions& options);

// Convenience for tests and the CLI: prepared corpus of a fixture.
Corpus fixture_corpus(const Fixture& fixture, const Dialect& dialect = {});

void write_fixture(const Fixture& fixture, const std::filesystem::path& corpus_path,
                   const std::filesystem::path& predictions_path, const std::filesystem::path& planted_path);

}  // namespace demosel
