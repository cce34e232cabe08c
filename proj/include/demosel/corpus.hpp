#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "demosel/local_structures.hpp"
#include "demosel/program_ast.hpp"
#include "demosel/retrieval.hpp"

namespace demosel {

enum class Split { train, dev, test };

std::string_view to_string(Split s);
Split parse_split(std::string_view name);

struct Example {
    std::string id;
    std::string utterance;
    std::string program;
    std::string anonymized;
    Template tmpl;
    LsSet ls_set;
    Split split = Split::train;
    std::vector<std::string> utterance_tokens;
    // Sorted, distinct utterance tokens.
    std::vector<std::string> utterance_vocab;
    // Anonymized pre-order program symbols.
    std::vector<std::string> symbols;

    bool has_token(std::string_view token) const;
};

// Parses, anonymizes and enumerates. Throws SyntaxError.
Example make_example(std::string id, std::string utterance, std::string program, Split split,
                     const Dialect& dialect);

struct RawExample {
    std::string id;
    std::string utterance;
    std::string program;
    Split split = Split::train;
};

struct PrepareResult {
    std::vector<Example> examples;
    std::vector<std::string> failures;  // "id: message"
};

// Builds examples from raw records, in input order. Parallel over records.
PrepareResult prepare_examples(std::span<const RawExample> raw, const Dialect& dialect);
PrepareResult prepare_examples_serial(std::span<const RawExample> raw, const Dialect& dialect);

struct Corpus {
    Dialect dialect;
    std::vector<Example> examples;

    std::vector<Example> split(Split s) const;
    const Example* find(std::string_view id) const;
};

struct LoadReport {
    Corpus corpus;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
};

// JSONL with {id?, utterance, program, split?}. Unparseable programs are
// skipped and reported; more than 10% failures raise CorpusError.
LoadReport load_examples(const std::filesystem::path& path, const Dialect& dialect);
LoadReport load_examples(std::istream& in, const Dialect& dialect);

void write_examples(std::ostream& out, std::span<const Example> examples);

struct PredictionBundle {
    std::string id;
    std::vector<std::string> beams;
    std::vector<bool> repaired;
    // Per beam: the anonymized program after repair, empty when unrepairable.
    std::vector<std::optional<ProgramAst>> programs;

    // Union over the usable beams among the first `max_beams` (0 = all).
    // Empty when none is usable.
    LsSet ls_union(int max_beams = 0, int max_size = kUnboundedSize) const;
    std::size_t usable_count() const;
    LsSet symbols(int max_beams = 0) const { return ls_union(max_beams, 1); }
};

struct PredictionLoad {
    std::map<std::string, PredictionBundle> bundles;
    std::vector<std::string> warnings;
};

PredictionBundle make_prediction_bundle(std::string id, std::vector<std::string> beams, const Dialect& dialect);

// JSONL with {id, beams: [program]}. `known_test_ids`, when given, drives
// warnings for ids outside the test split.
PredictionLoad load_predictions(const std::filesystem::path& path, const Dialect& dialect,
                                const std::vector<std::string>* known_test_ids = nullptr);
PredictionLoad load_predictions(std::istream& in, const Dialect& dialect,
                                const std::vector<std::string>* known_test_ids = nullptr);

using Postings = std::unordered_map<std::string, std::vector<std::uint32_t>>;

Postings build_ls_postings(std::span<const Example> pool);
Postings build_token_postings(std::span<const Example> pool);

// Everything derived from the training pool that selection reads.
struct CorpusIndex {
    static constexpr int kVersion = 1;

    std::vector<std::string> example_ids;
    std::vector<std::string> templates;
    Postings ls_postings;
    Postings token_postings;
    Bm25Index utterance_bm25;
    Bm25Index symbol_bm25;
    std::optional<LsTfidf> tfidf;

    struct Stats {
        std::size_t examples = 0;
        std::size_t templates = 0;
        std::size_t local_structures = 0;
    };
    Stats stats() const;
};

struct IndexOptions {
    double k1 = 1.2;
    double b = 0.75;
    bool tfidf = true;
    int tfidf_max_size = kUnboundedSize;
};

CorpusIndex build_indexes(std::span<const Example> pool, const IndexOptions& options = {});

void save_index(const CorpusIndex& index, std::ostream& out);
void save_index(const CorpusIndex& index, const std::filesystem::path& path);
CorpusIndex load_index(std::istream& in);
CorpusIndex load_index(const std::filesystem::path& path);

}  // namespace demosel
