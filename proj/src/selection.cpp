#include "demosel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace demosel {
namespace {

void check_k(int k) {
    if (k <= 0) throw InvalidK("k must be positive, got " + std::to_string(k));
}

void check_scores(const SelectionPool& pool, std::span<const double> scores) {
    if (scores.size() != pool.size()) {
        throw ConfigError("score vector has " + std::to_string(scores.size()) + " entries for a pool of " +
                          std::to_string(pool.size()));
    }
}

// Higher score first, then lower position.
bool better(std::span<const double> scores, std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
}

// Shared coverage loop for cover_ls, cover_utt and training mode.
struct CoverageLoop {
    const SelectionPool& pool;
    std::span<const double> scores;
    std::span<const CoverageElement> elements;
    std::function<std::span<const std::uint32_t>(const CoverageElement&)> containing;
    std::function<bool(const Example&, const CoverageElement&)> contains;
    Pick pick;
    std::uint64_t seed;
    std::optional<std::size_t> exclude = std::nullopt;

    DemonstrationSet run(int k, Strategy strategy) const {
        DemonstrationSet out;
        out.k = k;
        out.strategy = strategy;

        std::vector<bool> alive(pool.size(), true);
        std::size_t alive_count = pool.size();
        if (exclude && *exclude < pool.size()) {
            alive[*exclude] = false;
            --alive_count;
        }
        std::mt19937_64 rng(seed);
        const auto want = static_cast<std::size_t>(k);

        auto take = [&](std::size_t e) {
            out.items.push_back({e, scores[e]});
            int tid = pool.template_id(e);
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (alive[i] && pool.template_id(i) == tid) {
                    alive[i] = false;
                    --alive_count;
                }
            }
        };

        auto choose = [&](std::vector<std::size_t>& candidates) -> std::size_t {
            if (pick == Pick::uniform_random) {
                std::uniform_int_distribution<std::size_t> dist(0, candidates.size() - 1);
                return candidates[dist(rng)];
            }
            return *std::min_element(candidates.begin(), candidates.end(),
                                     [&](std::size_t a, std::size_t b) { return better(scores, a, b); });
        };

        std::vector<std::size_t> candidates;
        while (out.items.size() < want && alive_count > 0) {
            std::vector<bool> uncovered(elements.size(), true);
            std::size_t added = 0;
            for (std::size_t s = 0; s < elements.size() && out.items.size() < want; ++s) {
                if (!uncovered[s]) continue;
                candidates.clear();
                for (auto e : containing(elements[s])) {
                    if (alive[e]) candidates.push_back(e);
                }
                if (candidates.empty()) {
                    out.coverage_trace.push_back({elements[s].payload, std::nullopt, TraceEntry::Kind::uncoverable});
                    uncovered[s] = false;
                    continue;
                }
                std::size_t e = choose(candidates);
                out.coverage_trace.push_back({elements[s].payload, e, TraceEntry::Kind::covered});
                const Example& ex = pool[e];
                for (std::size_t j = s; j < elements.size(); ++j) {
                    if (uncovered[j] && contains(ex, elements[j])) uncovered[j] = false;
                }
                take(e);
                ++added;
            }
            if (added == 0) break;
        }

        // Nothing left to cover: fill the remaining slots from what is left.
        while (out.items.size() < want && alive_count > 0) {
            candidates.clear();
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (alive[i]) candidates.push_back(i);
            }
            std::size_t e = choose(candidates);
            out.coverage_trace.push_back({"", e, TraceEntry::Kind::fill});
            take(e);
        }
        out.underfilled = out.items.size() < want;
        return out;
    }
};

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::top_k: return "top-k";
        case Strategy::random: return "random";
        case Strategy::cover_ls: return "cover-ls";
        case Strategy::cover_utt: return "cover-utt";
        case Strategy::dpp: return "dpp";
        case Strategy::train_mode: return "train-mode";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : {Strategy::top_k, Strategy::random, Strategy::cover_ls, Strategy::cover_utt, Strategy::dpp,
                   Strategy::train_mode}) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(TraceEntry::Kind k) {
    switch (k) {
        case TraceEntry::Kind::covered: return "covered";
        case TraceEntry::Kind::uncoverable: return "uncoverable";
        case TraceEntry::Kind::fill: return "fill";
    }
    return "?";
}

std::vector<std::size_t> DemonstrationSet::positions() const {
    std::vector<std::size_t> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(item.example);
    return out;
}

SelectionPool::SelectionPool(std::span<const Example> examples)
    : SelectionPool(examples, build_ls_postings(examples), build_token_postings(examples)) {}

SelectionPool::SelectionPool(std::span<const Example> examples, Postings ls_postings, Postings token_postings)
    : examples_(examples), ls_postings_(std::move(ls_postings)), token_postings_(std::move(token_postings)) {
    assign_templates();
}

void SelectionPool::assign_templates() {
    std::map<std::string_view, int> ids;
    template_ids_.reserve(examples_.size());
    for (const auto& ex : examples_) {
        auto [it, inserted] = ids.try_emplace(ex.tmpl.text, static_cast<int>(ids.size()));
        template_ids_.push_back(it->second);
    }
}

std::span<const std::uint32_t> SelectionPool::containing_ls(std::string_view canonical) const {
    auto it = ls_postings_.find(std::string(canonical));
    if (it == ls_postings_.end()) return {};
    return it->second;
}

std::span<const std::uint32_t> SelectionPool::containing_token(std::string_view token) const {
    auto it = token_postings_.find(std::string(token));
    if (it == token_postings_.end()) return {};
    return it->second;
}

DemonstrationSet select_top_k(const SelectionPool& pool, std::span<const double> scores, int k) {
    check_k(k);
    check_scores(pool, scores);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t take = std::min(order.size(), static_cast<std::size_t>(k));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) { return better(scores, a, b); });
    DemonstrationSet out;
    out.k = k;
    out.strategy = Strategy::top_k;
    for (std::size_t i = 0; i < take; ++i) out.items.push_back({order[i], scores[order[i]]});
    out.underfilled = take < static_cast<std::size_t>(k);
    return out;
}

DemonstrationSet select_random(const SelectionPool& pool, std::span<const double> scores, int k, std::uint64_t seed) {
    check_k(k);
    check_scores(pool, scores);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t take = std::min(order.size(), static_cast<std::size_t>(k));
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> dist(i, order.size() - 1);
        std::swap(order[i], order[dist(rng)]);
    }
    DemonstrationSet out;
    out.k = k;
    out.strategy = Strategy::random;
    for (std::size_t i = 0; i < take; ++i) out.items.push_back({order[i], scores[order[i]]});
    out.underfilled = take < static_cast<std::size_t>(k);
    return out;
}

std::vector<CoverageElement> order_ls_elements(const LsSet& elements, int max_ls_size) {
    std::vector<CoverageElement> out;
    for (const auto& [canon, e] : elements) {
        if (max_ls_size == kUnboundedSize || e.size <= max_ls_size) out.push_back({canon, static_cast<double>(e.size)});
    }
    // LsSet iterates canonically, so a stable sort keeps canonical order within a size.
    std::stable_sort(out.begin(), out.end(),
                     [](const CoverageElement& a, const CoverageElement& b) { return a.weight > b.weight; });
    return out;
}

DemonstrationSet cover_ls(const LsSet& elements, const SelectionPool& pool, std::span<const double> scores, int k,
                          int max_ls_size, Pick pick, std::uint64_t seed) {
    check_k(k);
    check_scores(pool, scores);
    auto ordered = order_ls_elements(elements, max_ls_size);
    CoverageLoop loop{
        pool,
        scores,
        ordered,
        [&](const CoverageElement& el) { return pool.containing_ls(el.payload); },
        [](const Example& ex, const CoverageElement& el) { return ex.ls_set.contains(el.payload); },
        pick,
        seed,
    };
    return loop.run(k, Strategy::cover_ls);
}

std::vector<CoverageElement> order_utt_elements(std::span<const std::string> utterance_tokens,
                                                const std::function<double(std::string_view)>& idf) {
    std::vector<CoverageElement> out;
    for (const auto& tok : utterance_tokens) {
        bool seen = std::any_of(out.begin(), out.end(), [&](const CoverageElement& el) { return el.payload == tok; });
        if (!seen) out.push_back({tok, idf(tok)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const CoverageElement& a, const CoverageElement& b) { return a.weight > b.weight; });
    return out;
}

DemonstrationSet cover_utt(std::span<const std::string> utterance_tokens, const SelectionPool& pool,
                           std::span<const double> scores, const std::function<double(std::string_view)>& idf, int k) {
    check_k(k);
    check_scores(pool, scores);
    auto ordered = order_utt_elements(utterance_tokens, idf);
    CoverageLoop loop{
        pool,
        scores,
        ordered,
        [&](const CoverageElement& el) { return pool.containing_token(el.payload); },
        [](const Example& ex, const CoverageElement& el) { return ex.has_token(el.payload); },
        Pick::retriever_top,
        0,
    };
    return loop.run(k, Strategy::cover_utt);
}

GreedyDpp greedy_log_det(std::span<const double> quality, std::span<const SparseVector> features, std::size_t k) {
    const std::size_t n = quality.size();
    if (features.size() != n) throw ConfigError("quality and feature counts differ");

    auto kernel = [&](std::size_t i, std::size_t j) { return quality[i] * quality[j] * dot(features[i], features[j]); };

    std::vector<double> diag(n);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = diag[i] = kernel(i, i);
    std::vector<std::vector<double>> chol(n);
    std::vector<bool> chosen(n, false);

    GreedyDpp out;
    while (out.order.size() < k) {
        std::size_t best = n;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            // A residual this small means L_D would be singular: gain -inf.
            if (chosen[i] || !(residual[i] > 1e-9 * diag[i]) || !(residual[i] > 0.0)) continue;
            double gain = std::log(residual[i]);
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        if (best == n) break;
        chosen[best] = true;
        out.order.push_back(best);
        out.gains.push_back(best_gain);

        const double pivot = std::sqrt(residual[best]);
        const auto& cb = chol[best];
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            double e = kernel(best, i);
            for (std::size_t t = 0; t < cb.size(); ++t) e -= cb[t] * chol[i][t];
            e /= pivot;
            chol[i].push_back(e);
            residual[i] -= e * e;
        }
    }
    return out;
}

DemonstrationSet dpp_select(std::span<const double> scores, std::span<const SparseVector> features, int k,
                            const DppOptions& options) {
    check_k(k);
    if (features.size() != scores.size()) throw ConfigError("dpp needs one feature vector per pool example");

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!features[i].empty()) candidates.push_back(i);
    }
    std::size_t m = std::min(candidates.size(), static_cast<std::size_t>(std::max(options.candidate_pool_size, 0)));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m), candidates.end(),
                      [&](std::size_t a, std::size_t b) { return better(scores, a, b); });
    candidates.resize(m);
    // Keep index order so that gain ties resolve to the lower position.
    std::sort(candidates.begin(), candidates.end());

    double top = 0.0;
    for (auto c : candidates) top = std::max(top, scores[c]);
    std::vector<double> quality;
    std::vector<SparseVector> feats;
    for (auto c : candidates) {
        quality.push_back(top > 0.0 ? std::max(scores[c] / top, options.quality_floor) : 1.0);
        feats.push_back(features[c]);
    }

    auto greedy = greedy_log_det(quality, feats, static_cast<std::size_t>(k));
    DemonstrationSet out;
    out.k = k;
    out.strategy = Strategy::dpp;
    for (auto i : greedy.order) out.items.push_back({candidates[i], scores[candidates[i]]});
    out.marginal_gains = std::move(greedy.gains);
    out.underfilled = out.items.size() < static_cast<std::size_t>(k);
    return out;
}

DemonstrationSet training_mode_select(const LsSet& gold_structures, const SelectionPool& pool,
                                      std::span<const double> scores, int k, std::uint64_t seed,
                                      std::optional<std::size_t> exclude) {
    check_k(k);
    check_scores(pool, scores);
    auto ordered = order_ls_elements(gold_structures, 1);
    CoverageLoop loop{
        pool,
        scores,
        ordered,
        [&](const CoverageElement& el) { return pool.containing_ls(el.payload); },
        [](const Example& ex, const CoverageElement& el) { return ex.ls_set.contains(el.payload); },
        Pick::uniform_random,
        seed,
        exclude,
    };
    return loop.run(k, Strategy::train_mode);
}

LsSet oracle_elements(std::string_view gold_program, const Dialect& dialect) {
    return enumerate_local_structures(anonymize(parse_program(gold_program, dialect)));
}

}  // namespace demosel
