#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "demosel/local_structures.hpp"
#include "demosel/program_ast.hpp"

namespace demosel {

enum class ErrorLabel { syntax, over_copy, oov_hallucination, missing_symbols };

std::string_view to_string(ErrorLabel label);
using ErrorLabels = std::set<ErrorLabel>;

// Equality after collapsing whitespace runs and trimming.
bool exact_match(std::string_view pred, std::string_view gold);
std::string normalize_whitespace(std::string_view text);

struct CoverageMetrics {
    double symbol_coverage = 0.0;
    double ls_coverage = 0.0;
    std::size_t unique_ls_count = 0;
};

// Structure sets are of anonymized programs.
CoverageMetrics coverage_metrics(std::span<const LsSet> demos, const LsSet& gold);

// Labels for a wrong prediction; each test is independent.
//   syntax            parentheses do not balance
//   over_copy         template of the prediction equals a demonstration's
//   oov_hallucination a predicted symbol is in neither gold nor any demonstration
//   missing_symbols   a gold symbol is absent from the prediction
// Unparseable predictions are repaired first; if that fails too, symbols come
// from a lexical scan and over_copy cannot fire.
ErrorLabels classify_errors(std::string_view pred, std::string_view gold, std::span<const std::string> demo_programs,
                            const Dialect& dialect = {});

inline constexpr int kUnobservedMaxSize = 4;

// True iff some gold structure of size <= max_size never occurs in training.
bool unobserved_ls(const LsSet& gold, const LsSet& training_union, int max_size = kUnobservedMaxSize);

// Mean token Jaccard between the test utterance and each demonstration
// utterance; 0 without demonstrations.
double utterance_jaccard(std::span<const std::string> test_tokens,
                         std::span<const std::vector<std::string>> demo_tokens);

struct EvalRecord {
    std::string id;
    std::string strategy;
    std::string prediction;
    bool exact_match = false;
    double symbol_coverage = 0.0;
    double ls_coverage = 0.0;
    std::size_t unique_ls_count = 0;
    double utt_jaccard = 0.0;
    ErrorLabels error_labels;
    bool unobserved_ls = false;
};

struct EvalInput {
    std::string id;
    std::string strategy;
    std::string prediction;
    std::string gold_program;
    std::vector<std::string> demo_programs;
    std::vector<std::string> test_tokens;
    std::vector<std::vector<std::string>> demo_tokens;
};

EvalRecord evaluate_record(const EvalInput& input, const LsSet& training_union, const Dialect& dialect = {});

struct SummaryRow {
    std::string group;
    std::size_t count = 0;
    double accuracy = 0.0;
    double symbol_coverage = 0.0;
    double ls_coverage = 0.0;
    double unique_ls_count = 0.0;
    double utt_jaccard = 0.0;
    double unobserved_ls_rate = 0.0;
    std::size_t wrong = 0;
    // Percent of wrong predictions carrying each label.
    double syntax_pct = 0.0;
    double over_copy_pct = 0.0;
    double oov_pct = 0.0;
    double missing_pct = 0.0;
};

// One row per strategy when `by_strategy`, else a single "all" row. Empty
// input gives no rows.
std::vector<SummaryRow> aggregate(std::span<const EvalRecord> records, bool by_strategy = true);

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

}  // namespace demosel
