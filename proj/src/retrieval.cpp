#include "demosel/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

namespace demosel {

std::vector<std::string> tokenize_utterance(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string_view to_string(RetrieverVariant v) {
    switch (v) {
        case RetrieverVariant::bm25_utterance: return "bm25-utterance";
        case RetrieverVariant::bm25_symbols: return "bm25-symbols";
        case RetrieverVariant::random: return "random";
        case RetrieverVariant::oracle_bm25_gold_symbols: return "oracle-bm25-gold-symbols";
    }
    return "?";
}

RetrieverVariant parse_retriever_variant(std::string_view name) {
    for (auto v : {RetrieverVariant::bm25_utterance, RetrieverVariant::bm25_symbols, RetrieverVariant::random,
                   RetrieverVariant::oracle_bm25_gold_symbols}) {
        if (to_string(v) == name) return v;
    }
    throw ConfigError("unknown retriever '" + std::string(name) + "'");
}

void RetrieverConfig::validate() const {
    if (!(k1 >= 0.0)) throw ConfigError("BM25 k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("BM25 b must lie in [0, 1]");
}

Bm25Index::Bm25Index(std::vector<std::vector<std::string>> docs, double k1, double b)
    : docs_(std::move(docs)), k1_(k1), b_(b) {
    doc_terms_.resize(docs_.size());
    doc_len_.resize(docs_.size());
    std::size_t total = 0;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
        std::unordered_map<int, int> tf;
        for (const auto& tok : docs_[d]) {
            auto [it, inserted] = vocab_.try_emplace(tok, static_cast<int>(vocab_.size()));
            if (inserted) postings_.emplace_back();
            ++tf[it->second];
        }
        auto& terms = doc_terms_[d];
        terms.assign(tf.begin(), tf.end());
        std::sort(terms.begin(), terms.end());
        for (auto [term, count] : terms) postings_[term].emplace_back(static_cast<std::uint32_t>(d), count);
        doc_len_[d] = docs_[d].size();
        total += docs_[d].size();
    }
    avgdl_ = docs_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs_.size());
}

int Bm25Index::term_id(std::string_view term) const {
    auto it = vocab_.find(std::string(term));
    return it == vocab_.end() ? -1 : it->second;
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
    int id = term_id(term);
    return id < 0 ? 0 : postings_[id].size();
}

double Bm25Index::idf(std::string_view term) const {
    auto n = static_cast<double>(doc_freq(term));
    auto N = static_cast<double>(doc_count());
    return std::log((N - n + 0.5) / (n + 0.5) + 1.0);
}

double Bm25Index::term_weight(int tf, std::size_t doc, double idf) const {
    double norm = avgdl_ > 0.0 ? static_cast<double>(doc_len_[doc]) / avgdl_ : 0.0;
    double f = tf;
    return idf * f * (k1_ + 1.0) / (f + k1_ * (1.0 - b_ + b_ * norm));
}

std::vector<double> Bm25Index::score_all(std::span<const std::string> query) const {
    std::vector<std::pair<int, double>> terms;
    for (const auto& q : query) {
        int id = term_id(q);
        if (id >= 0) terms.emplace_back(id, idf(q));
    }
    std::vector<double> scores(doc_count(), 0.0);
    const auto n = static_cast<std::int64_t>(doc_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t d = 0; d < n; ++d) {
        const auto& dt = doc_terms_[d];
        double s = 0.0;
        for (auto [term, w] : terms) {
            auto it = std::lower_bound(dt.begin(), dt.end(), std::make_pair(term, 0));
            if (it != dt.end() && it->first == term) s += term_weight(it->second, d, w);
        }
        scores[d] = s;
    }
    return scores;
}

std::vector<double> Bm25Index::score_all_serial(std::span<const std::string> query) const {
    std::vector<double> scores(doc_count(), 0.0);
    for (const auto& q : query) {
        int id = term_id(q);
        if (id < 0) continue;
        double w = idf(q);
        for (auto [doc, tf] : postings_[id]) scores[doc] += term_weight(tf, doc, w);
    }
    return scores;
}

std::vector<ScoredDoc> rank_scores(std::span<const double> scores) {
    std::vector<ScoredDoc> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = {i, scores[i]};
    std::stable_sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) { return a.score > b.score; });
    return out;
}

std::vector<ScoredDoc> Bm25Index::rank(std::span<const std::string> query) const {
    auto scores = score_all(query);
    return rank_scores(scores);
}

std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> random_scores(std::size_t n, std::uint64_t seed, std::string_view query_key) {
    std::mt19937_64 rng(seed ^ stable_hash(query_key));
    std::vector<double> out(n);
    for (auto& s : out) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return out;
}

double dot(const SparseVector& u, const SparseVector& v) {
    double s = 0.0;
    auto a = u.begin();
    auto b = v.begin();
    while (a != u.end() && b != v.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            s += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return s;
}

double cosine(const SparseVector& u, const SparseVector& v) {
    if (u.empty() || v.empty()) return 0.0;
    return std::clamp(dot(u, v), 0.0, 1.0);
}

LsTfidf::LsTfidf(std::span<const LsSet> docs, int max_size) : max_size_(max_size) {
    std::vector<int> df;
    for (const auto& doc : docs) {
        for (const auto& [canon, e] : doc) {
            if (max_size != kUnboundedSize && e.size > max_size) continue;
            auto [it, inserted] = index_.try_emplace(canon, static_cast<int>(terms_.size()));
            if (inserted) {
                terms_.push_back(canon);
                df.push_back(0);
            }
            ++df[it->second];
        }
    }
    const double n = static_cast<double>(docs.size());
    idf_.resize(terms_.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) idf_[t] = std::log((1.0 + n) / (1.0 + df[t])) + 1.0;

    vectors_.resize(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        SparseVector v;
        for (const auto& [canon, e] : docs[d]) {
            if (max_size != kUnboundedSize && e.size > max_size) continue;
            int t = index_.at(canon);
            v.emplace_back(t, e.occurrences * idf_[t]);
        }
        std::sort(v.begin(), v.end());
        double norm = std::sqrt(std::accumulate(v.begin(), v.end(), 0.0,
                                                [](double acc, const auto& p) { return acc + p.second * p.second; }));
        if (norm > 0.0) {
            for (auto& p : v) p.second /= norm;
        }
        vectors_[d] = std::move(v);
    }
}

double LsTfidf::idf(std::string_view canonical) const {
    auto it = index_.find(std::string(canonical));
    return it == index_.end() ? 0.0 : idf_[it->second];
}

LsTfidf LsTfidf::from_parts(std::vector<std::string> terms, std::vector<double> idf, std::vector<SparseVector> vectors,
                            int max_size) {
    LsTfidf out;
    out.terms_ = std::move(terms);
    for (std::size_t i = 0; i < out.terms_.size(); ++i) out.index_.emplace(out.terms_[i], static_cast<int>(i));
    out.idf_ = std::move(idf);
    out.vectors_ = std::move(vectors);
    out.max_size_ = max_size;
    return out;
}

}  // namespace demosel
