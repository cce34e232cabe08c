#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demosel/corpus.hpp"

namespace demosel {

enum class Strategy { top_k, random, cover_ls, cover_utt, dpp, train_mode };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

// Positions refer to the pool the set was selected from.
struct SelectedItem {
    std::size_t example;
    double score;
};

struct TraceEntry {
    enum class Kind { covered, uncoverable, fill };
    std::string element;
    std::optional<std::size_t> example;
    Kind kind = Kind::covered;
};

std::string_view to_string(TraceEntry::Kind k);

struct DemonstrationSet {
    std::vector<SelectedItem> items;
    int k = 0;
    Strategy strategy = Strategy::top_k;
    std::vector<TraceEntry> coverage_trace;
    // Log-det gain of each pick, DPP only.
    std::vector<double> marginal_gains;
    bool underfilled = false;

    std::vector<std::size_t> positions() const;
};

// Training examples plus the lookups selection needs. Does not own the
// examples.
class SelectionPool {
  public:
    explicit SelectionPool(std::span<const Example> examples);
    SelectionPool(std::span<const Example> examples, Postings ls_postings, Postings token_postings);

    std::size_t size() const { return examples_.size(); }
    const Example& operator[](std::size_t i) const { return examples_[i]; }
    std::span<const Example> examples() const { return examples_; }

    std::span<const std::uint32_t> containing_ls(std::string_view canonical) const;
    std::span<const std::uint32_t> containing_token(std::string_view token) const;
    int template_id(std::size_t i) const { return template_ids_[i]; }

  private:
    void assign_templates();

    std::span<const Example> examples_;
    Postings ls_postings_;
    Postings token_postings_;
    std::vector<int> template_ids_;
};

enum class Pick { retriever_top, uniform_random };

struct CoverageElement {
    std::string payload;
    double weight = 0.0;
};

DemonstrationSet select_top_k(const SelectionPool& pool, std::span<const double> scores, int k);

// Uniform sample without replacement. k > |pool| returns the whole pool,
// flagged underfilled.
DemonstrationSet select_random(const SelectionPool& pool, std::span<const double> scores, int k,
                               std::uint64_t seed);

// Greedy coverage of local structures. Elements are visited largest first
// (ties by canonical form); each uncovered one pulls in the best-scoring pool
// example containing it, which then retires every element it contains and
// every pool example sharing its template. Passes repeat until k examples are
// chosen. When a whole pass adds nothing, the remaining slots are filled by
// retriever score from what is left of the pool.
DemonstrationSet cover_ls(const LsSet& elements, const SelectionPool& pool, std::span<const double> scores, int k,
                          int max_ls_size = kUnboundedSize, Pick pick = Pick::retriever_top, std::uint64_t seed = 0);

// Element order for cover_ls.
std::vector<CoverageElement> order_ls_elements(const LsSet& elements, int max_ls_size = kUnboundedSize);

// Same loop over the distinct utterance tokens, rarest (highest idf) first,
// ties in utterance order.
DemonstrationSet cover_utt(std::span<const std::string> utterance_tokens, const SelectionPool& pool,
                           std::span<const double> scores, const std::function<double(std::string_view)>& idf, int k);

std::vector<CoverageElement> order_utt_elements(std::span<const std::string> utterance_tokens,
                                                const std::function<double(std::string_view)>& idf);

struct GreedyDpp {
    std::vector<std::size_t> order;
    std::vector<double> gains;
};

// Greedy maximization of log det(L_D) with L_ij = q_i q_j <phi_i, phi_j>,
// via incremental Cholesky. Stops at k items or when no remaining candidate
// has a finite gain. Ties go to the lower index.
GreedyDpp greedy_log_det(std::span<const double> quality, std::span<const SparseVector> features, std::size_t k);

struct DppOptions {
    int candidate_pool_size = 200;
    double quality_floor = 1e-6;
};

// Candidates are the top `candidate_pool_size` examples by score among those
// with a non-zero feature vector; quality is the score over the candidate
// maximum, floored.
DemonstrationSet dpp_select(std::span<const double> scores, std::span<const SparseVector> features, int k,
                            const DppOptions& options = {});

// Training-time selection: cover the gold program's symbols, picking a random
// pool example for each. `exclude` keeps the example itself out of its prompt.
DemonstrationSet training_mode_select(const LsSet& gold_structures, const SelectionPool& pool,
                                      std::span<const double> scores, int k, std::uint64_t seed,
                                      std::optional<std::size_t> exclude = std::nullopt);

// Structures of the anonymized gold program, any size.
LsSet oracle_elements(std::string_view gold_program, const Dialect& dialect = {});

}  // namespace demosel
