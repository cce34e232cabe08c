#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "demosel/local_structures.hpp"

namespace demosel {

// Lower-cased runs of alphanumeric characters.
std::vector<std::string> tokenize_utterance(std::string_view text);

enum class RetrieverVariant { bm25_utterance, bm25_symbols, random, oracle_bm25_gold_symbols };

std::string_view to_string(RetrieverVariant v);
RetrieverVariant parse_retriever_variant(std::string_view name);

struct RetrieverConfig {
    RetrieverVariant variant = RetrieverVariant::bm25_utterance;
    double k1 = 1.2;
    double b = 0.75;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ScoredDoc {
    std::size_t doc;
    double score;
};

// Okapi BM25 over a fixed document collection. idf uses the
// ln((N - n + 0.5) / (n + 0.5) + 1) variant so weights stay positive.
class Bm25Index {
  public:
    Bm25Index() = default;
    Bm25Index(std::vector<std::vector<std::string>> docs, double k1 = 1.2, double b = 0.75);

    std::size_t doc_count() const { return doc_len_.size(); }
    double avg_doc_len() const { return avgdl_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    double idf(std::string_view term) const;
    std::size_t doc_freq(std::string_view term) const;

    // One score per document; every query token contributes, repeats included.
    // Parallel over documents.
    std::vector<double> score_all(std::span<const std::string> query) const;
    // Reference route: accumulate through the postings lists.
    std::vector<double> score_all_serial(std::span<const std::string> query) const;

    // Descending score, ties by document index.
    std::vector<ScoredDoc> rank(std::span<const std::string> query) const;

    const std::vector<std::vector<std::string>>& documents() const { return docs_; }

  private:
    double term_weight(int tf, std::size_t doc, double idf) const;
    int term_id(std::string_view term) const;

    std::vector<std::vector<std::string>> docs_;
    std::unordered_map<std::string, int> vocab_;
    // postings_[term] = (doc, tf), docs ascending
    std::vector<std::vector<std::pair<std::uint32_t, int>>> postings_;
    // doc_terms_[doc] = (term, tf), terms ascending
    std::vector<std::vector<std::pair<int, int>>> doc_terms_;
    std::vector<std::size_t> doc_len_;
    double avgdl_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
};

std::vector<ScoredDoc> rank_scores(std::span<const double> scores);

// Seeded uniform scores in [0, 1), stable for a given (seed, query key).
std::vector<double> random_scores(std::size_t n, std::uint64_t seed, std::string_view query_key);

std::uint64_t stable_hash(std::string_view text);

// Sparse vector, coordinates ascending.
using SparseVector = std::vector<std::pair<int, double>>;

double dot(const SparseVector& u, const SparseVector& v);
// Dot product of L2-normalized vectors clamped to [0, 1]; zero vectors give 0.
double cosine(const SparseVector& u, const SparseVector& v);

// tf = occurrences of the structure in the program, idf = ln((1 + N) / (1 + df)) + 1,
// rows L2-normalized. A program without structures gets the zero vector.
class LsTfidf {
  public:
    LsTfidf() = default;
    explicit LsTfidf(std::span<const LsSet> docs, int max_size = kUnboundedSize);

    const SparseVector& vector(std::size_t doc) const { return vectors_[doc]; }
    const std::vector<SparseVector>& vectors() const { return vectors_; }
    double idf(std::string_view canonical) const;
    int max_size() const { return max_size_; }
    std::size_t size() const { return vectors_.size(); }

    const std::vector<std::string>& vocabulary() const { return terms_; }
    static LsTfidf from_parts(std::vector<std::string> terms, std::vector<double> idf,
                              std::vector<SparseVector> vectors, int max_size);
    const std::vector<double>& idf_weights() const { return idf_; }

  private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, int> index_;
    std::vector<double> idf_;
    std::vector<SparseVector> vectors_;
    int max_size_ = kUnboundedSize;
};

}  // namespace demosel
