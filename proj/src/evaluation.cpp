#include "demosel/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <ostream>

namespace demosel {
namespace {

std::set<std::string> symbol_set(const ProgramAst& anonymized) {
    auto syms = anonymized.symbols();
    return {syms.begin(), syms.end()};
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view to_string(ErrorLabel label) {
    switch (label) {
        case ErrorLabel::syntax: return "syntax";
        case ErrorLabel::over_copy: return "over-copy";
        case ErrorLabel::oov_hallucination: return "oov-hallucination";
        case ErrorLabel::missing_symbols: return "missing-symbols";
    }
    return "?";
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

bool exact_match(std::string_view pred, std::string_view gold) {
    return normalize_whitespace(pred) == normalize_whitespace(gold);
}

CoverageMetrics coverage_metrics(std::span<const LsSet> demos, const LsSet& gold) {
    LsSet demo_union;
    for (const auto& d : demos) demo_union.merge(d);

    std::size_t symbols = 0;
    std::size_t symbols_hit = 0;
    std::size_t hit = 0;
    for (const auto& [canon, e] : gold) {
        bool covered = demo_union.contains(canon);
        hit += covered ? 1 : 0;
        if (e.size == 1) {
            ++symbols;
            symbols_hit += covered ? 1 : 0;
        }
    }
    return {ratio(symbols_hit, symbols), ratio(hit, gold.size()), demo_union.size()};
}

ErrorLabels classify_errors(std::string_view pred, std::string_view gold, std::span<const std::string> demo_programs,
                            const Dialect& dialect) {
    ErrorLabels labels;
    if (!parentheses_balanced(pred)) labels.insert(ErrorLabel::syntax);

    std::optional<ProgramAst> pred_ast;
    try {
        pred_ast = anonymize(parse_program(pred, dialect));
    } catch (const SyntaxError&) {
        auto repaired = repair_parentheses(pred, dialect);
        if (repaired.usable()) pred_ast = anonymize(parse_program(repaired.text, dialect));
    }

    std::set<std::string> pred_symbols;
    if (pred_ast) {
        pred_symbols = symbol_set(*pred_ast);
    } else {
        auto scanned = scan_symbols(pred, dialect);
        pred_symbols.insert(scanned.begin(), scanned.end());
    }

    std::set<std::string> gold_symbols = symbol_set(anonymize(parse_program(gold, dialect)));
    std::set<std::string> known = gold_symbols;
    std::set<std::string> demo_templates;
    for (const auto& d : demo_programs) {
        try {
            auto ast = anonymize(parse_program(d, dialect));
            auto syms = ast.symbols();
            known.insert(syms.begin(), syms.end());
            demo_templates.insert(render(ast));
        } catch (const SyntaxError&) {
            auto syms = scan_symbols(d, dialect);
            known.insert(syms.begin(), syms.end());
        }
    }

    if (pred_ast && demo_templates.contains(render(*pred_ast))) labels.insert(ErrorLabel::over_copy);
    if (std::any_of(pred_symbols.begin(), pred_symbols.end(), [&](const auto& s) { return !known.contains(s); })) {
        labels.insert(ErrorLabel::oov_hallucination);
    }
    if (std::any_of(gold_symbols.begin(), gold_symbols.end(),
                    [&](const auto& s) { return !pred_symbols.contains(s); })) {
        labels.insert(ErrorLabel::missing_symbols);
    }
    return labels;
}

bool unobserved_ls(const LsSet& gold, const LsSet& training_union, int max_size) {
    return std::any_of(gold.begin(), gold.end(), [&](const auto& entry) {
        return entry.second.size <= max_size && !training_union.contains(entry.first);
    });
}

double utterance_jaccard(std::span<const std::string> test_tokens,
                         std::span<const std::vector<std::string>> demo_tokens) {
    if (demo_tokens.empty()) return 0.0;
    std::set<std::string> test(test_tokens.begin(), test_tokens.end());
    double total = 0.0;
    for (const auto& d : demo_tokens) {
        std::set<std::string> demo(d.begin(), d.end());
        std::size_t inter = 0;
        for (const auto& t : demo) inter += test.contains(t) ? 1 : 0;
        std::size_t uni = test.size() + demo.size() - inter;
        total += ratio(inter, uni);
    }
    return total / static_cast<double>(demo_tokens.size());
}

EvalRecord evaluate_record(const EvalInput& input, const LsSet& training_union, const Dialect& dialect) {
    EvalRecord rec;
    rec.id = input.id;
    rec.strategy = input.strategy;
    rec.prediction = input.prediction;
    rec.exact_match = exact_match(input.prediction, input.gold_program);

    LsSet gold = enumerate_local_structures(anonymize(parse_program(input.gold_program, dialect)));
    std::vector<LsSet> demos;
    for (const auto& d : input.demo_programs) {
        try {
            demos.push_back(enumerate_local_structures(anonymize(parse_program(d, dialect))));
        } catch (const SyntaxError&) {
            demos.emplace_back();
        }
    }
    auto cov = coverage_metrics(demos, gold);
    rec.symbol_coverage = cov.symbol_coverage;
    rec.ls_coverage = cov.ls_coverage;
    rec.unique_ls_count = cov.unique_ls_count;
    rec.utt_jaccard = utterance_jaccard(input.test_tokens, input.demo_tokens);
    rec.unobserved_ls = unobserved_ls(gold, training_union);
    if (!rec.exact_match) {
        rec.error_labels = classify_errors(input.prediction, input.gold_program, input.demo_programs, dialect);
    }
    return rec;
}

std::vector<SummaryRow> aggregate(std::span<const EvalRecord> records, bool by_strategy) {
    std::map<std::string, std::vector<const EvalRecord*>> groups;
    for (const auto& r : records) groups[by_strategy ? r.strategy : "all"].push_back(&r);

    std::vector<SummaryRow> rows;
    for (const auto& [name, group] : groups) {
        SummaryRow row;
        row.group = name;
        row.count = group.size();
        std::size_t correct = 0;
        std::size_t unobserved = 0;
        std::map<ErrorLabel, std::size_t> label_counts;
        for (const auto* r : group) {
            correct += r->exact_match ? 1 : 0;
            unobserved += r->unobserved_ls ? 1 : 0;
            row.symbol_coverage += r->symbol_coverage;
            row.ls_coverage += r->ls_coverage;
            row.unique_ls_count += static_cast<double>(r->unique_ls_count);
            row.utt_jaccard += r->utt_jaccard;
            for (auto l : r->error_labels) ++label_counts[l];
        }
        const auto n = static_cast<double>(row.count);
        row.accuracy = static_cast<double>(correct) / n;
        row.symbol_coverage /= n;
        row.ls_coverage /= n;
        row.unique_ls_count /= n;
        row.utt_jaccard /= n;
        row.unobserved_ls_rate = static_cast<double>(unobserved) / n;
        row.wrong = row.count - correct;
        row.syntax_pct = 100.0 * ratio(label_counts[ErrorLabel::syntax], row.wrong);
        row.over_copy_pct = 100.0 * ratio(label_counts[ErrorLabel::over_copy], row.wrong);
        row.oov_pct = 100.0 * ratio(label_counts[ErrorLabel::oov_hallucination], row.wrong);
        row.missing_pct = 100.0 * ratio(label_counts[ErrorLabel::missing_symbols], row.wrong);
        rows.push_back(row);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    out << "group,count,accuracy,symbol_coverage,ls_coverage,unique_ls_count,utt_jaccard,unobserved_ls_rate,wrong,"
           "syntax_pct,over_copy_pct,oov_pct,missing_pct\n";
    for (const auto& r : rows) {
        out << r.group << ',' << r.count << ',' << r.accuracy << ',' << r.symbol_coverage << ',' << r.ls_coverage
            << ',' << r.unique_ls_count << ',' << r.utt_jaccard << ',' << r.unobserved_ls_rate << ',' << r.wrong << ','
            << r.syntax_pct << ',' << r.over_copy_pct << ',' << r.oov_pct << ',' << r.missing_pct << '\n';
    }
}

}  // namespace demosel
