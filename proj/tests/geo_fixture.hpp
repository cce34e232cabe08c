#pragma once

// The GeoQuery mini-pool behind the golden prompt files.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "demosel/corpus.hpp"
#include "demosel/prompting.hpp"
#include "demosel/selection.hpp"

namespace geo {

inline std::string data_path(const std::string& rel) { return std::string(DEMOSEL_TEST_DATA) + "/" + rel; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Fixture {
    demosel::Corpus corpus;
    std::vector<demosel::Example> pool;
    demosel::Example test;
    std::vector<double> scores;
};

inline Fixture load() {
    Fixture f;
    f.corpus = demosel::load_examples(data_path("data/geo_pool.jsonl"), {}).corpus;
    f.pool = f.corpus.split(demosel::Split::train);
    f.test = f.corpus.split(demosel::Split::test).at(0);
    // retriever scores for the test utterance
    f.scores = {0.6, 0.7, 0.8, 0.9, 0.5, 0.55, 0.1, 0.58};
    return f;
}

inline std::string render(const Fixture& f, const demosel::DemonstrationSet& set) {
    std::vector<demosel::PromptDemo> demos;
    for (const auto& item : demosel::order_demonstrations(set, demosel::Ordering::ascending())) {
        const auto& ex = f.pool[item.example];
        demos.push_back({ex.id, ex.utterance, ex.program});
    }
    return demosel::format_prompt(demos, f.test.utterance).text;
}

inline std::string top_k_prompt(const Fixture& f) {
    const demosel::SelectionPool pool(f.pool);
    return render(f, demosel::select_top_k(pool, f.scores, 4));
}

inline std::string cover_ls_prompt(const Fixture& f) {
    const demosel::SelectionPool pool(f.pool);
    return render(f, demosel::cover_ls(f.test.ls_set, pool, f.scores, 4));
}

// The DPP row is given as a fixed set rather than recomputed.
inline std::string dpp_prompt(const Fixture& f) {
    demosel::DemonstrationSet set;
    set.k = 4;
    set.strategy = demosel::Strategy::dpp;
    for (std::size_t i : {3u, 2u, 5u, 4u}) set.items.push_back({i, f.scores[i]});
    return render(f, set);
}

}  // namespace geo
