#include <doctest.h>

#include <algorithm>
#include <random>

#include "demosel/errors.hpp"
#include "demosel/retrieval.hpp"
#include "oracles.hpp"

using namespace demosel;

namespace {

std::vector<std::vector<std::string>> toy() { return {{"a", "b"}, {"a"}, {"c"}}; }

double coord(const LsTfidf& t, std::size_t doc, const std::string& term) {
    const auto& vocab = t.vocabulary();
    auto it = std::find(vocab.begin(), vocab.end(), term);
    if (it == vocab.end()) return -1.0;
    int id = static_cast<int>(it - vocab.begin());
    for (auto [i, v] : t.vector(doc)) {
        if (i == id) return v;
    }
    return 0.0;
}

}  // namespace

TEST_CASE("tokenizer") {
    CHECK(tokenize_utterance("What's the Longest river, in Texas?") ==
          std::vector<std::string>{"what", "s", "the", "longest", "river", "in", "texas"});
    CHECK(tokenize_utterance("  ").empty());
    CHECK(tokenize_utterance("route 66") == std::vector<std::string>{"route", "66"});
}

TEST_CASE("bm25 toy corpus") {
    Bm25Index idx(toy());
    CHECK(idx.avg_doc_len() == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(idx.idf("a") - 0.47000362924573563) < 1e-12);
    CHECK(std::abs(idx.idf("c") - 0.9808292530117263) < 1e-12);

    std::vector<std::string> qc{"c"};
    auto c = idx.score_all(qc);
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.0);
    CHECK(std::abs(c[2] - 1.0925692944940748) < 1e-9);
    CHECK(idx.rank(qc).front().doc == 2);

    std::vector<std::string> qa{"a"};
    auto a = idx.score_all(qa);
    CHECK(std::abs(a[0] - 0.39019169220400696) < 1e-9);
    CHECK(std::abs(a[1] - 0.523548346501579) < 1e-9);
    CHECK(a[1] > a[0]);

    std::vector<std::string> qac{"a", "c"};
    auto ranked = idx.rank(qac);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].doc == 2);
    CHECK(ranked[1].doc == 1);
    CHECK(ranked[2].doc == 0);

    // repeated query tokens count twice
    std::vector<std::string> qaa{"a", "a"};
    CHECK(std::abs(idx.score_all(qaa)[0] - 0.7803833844080139) < 1e-9);

    std::vector<std::string> none{"zzz"};
    for (double s : idx.score_all(none)) CHECK(s == 0.0);
}

TEST_CASE("bm25 parallel and serial scoring agree with the formula") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f", "g", "h"};
    std::vector<std::vector<std::string>> docs(300);
    for (auto& d : docs) {
        int len = std::uniform_int_distribution<int>(1, 12)(rng);
        for (int i = 0; i < len; ++i) d.push_back(words[rng() % words.size()]);
    }
    Bm25Index idx(docs);
    for (int t = 0; t < 20; ++t) {
        std::vector<std::string> q;
        for (int i = 0; i < 4; ++i) q.push_back(words[rng() % words.size()]);
        auto par = idx.score_all(q);
        auto ser = idx.score_all_serial(q);
        for (std::size_t d = 0; d < docs.size(); d += 17) {
            CHECK(std::abs(par[d] - oracle::bm25(docs, q, d)) < 1e-9);
        }
        for (std::size_t d = 0; d < docs.size(); ++d) REQUIRE(std::abs(par[d] - ser[d]) < 1e-12);
    }
}

TEST_CASE("ranking ties go to the lower index") {
    std::vector<double> s{1.0, 2.0, 2.0, 0.5};
    auto r = rank_scores(s);
    CHECK(r[0].doc == 1);
    CHECK(r[1].doc == 2);
    CHECK(r[2].doc == 0);
}

TEST_CASE("random scores are reproducible") {
    auto a = random_scores(50, 9, "q1");
    CHECK(a == random_scores(50, 9, "q1"));
    CHECK(a != random_scores(50, 9, "q2"));
    CHECK(a != random_scores(50, 10, "q1"));
    for (double x : a) {
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("retriever config") {
    CHECK(parse_retriever_variant("bm25-symbols") == RetrieverVariant::bm25_symbols);
    CHECK(to_string(RetrieverVariant::oracle_bm25_gold_symbols) == "oracle-bm25-gold-symbols");
    CHECK_THROWS_AS(parse_retriever_variant("sbert"), ConfigError);
    RetrieverConfig bad;
    bad.k1 = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ls tf-idf toy table") {
    std::vector<LsSet> sets;
    for (const char* p : {"f (a)", "f (b)", "g (a)"}) {
        sets.push_back(enumerate_local_structures(anonymize(parse_program(p))));
    }
    LsTfidf t(sets);
    CHECK(std::abs(t.idf("f") - 1.2876820724517808) < 1e-12);
    CHECK(std::abs(t.idf("f -> a") - 1.6931471805599454) < 1e-12);

    CHECK(std::abs(coord(t, 0, "f") - 0.39351120409397233) < 1e-12);
    CHECK(std::abs(coord(t, 0, "<root> -> f -> a") - 0.5174199439321682) < 1e-12);
    CHECK(std::abs(coord(t, 1, "b") - 0.49047908420610337) < 1e-12);
    CHECK(std::abs(coord(t, 2, "a") - 0.35543246785041743) < 1e-12);
    CHECK(coord(t, 2, "f") == 0.0);

    CHECK(std::abs(cosine(t.vector(0), t.vector(1)) - 0.2935766616181385) < 1e-12);
    CHECK(std::abs(cosine(t.vector(0), t.vector(2)) - 0.13986665839790988) < 1e-12);
    CHECK(cosine(t.vector(1), t.vector(2)) == 0.0);
    CHECK(std::abs(cosine(t.vector(0), t.vector(0)) - 1.0) < 1e-12);
}

TEST_CASE("tf-idf size limit and empty programs") {
    std::vector<LsSet> sets{enumerate_local_structures(anonymize(parse_program("f (a)"))), LsSet{}};
    LsTfidf t(sets, 1);
    CHECK(t.vocabulary().size() == 2);
    CHECK(t.vector(1).empty());
    CHECK(cosine(t.vector(0), t.vector(1)) == 0.0);
}
