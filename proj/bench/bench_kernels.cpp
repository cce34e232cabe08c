// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <map>

#include "demosel/fixture.hpp"
#include "demosel/pipeline.hpp"

using namespace demosel;

namespace {

struct Data {
    Fixture fx;
    std::vector<RawExample> raw;
    std::vector<Example> pool;
    std::vector<Example> tests;
    CorpusIndex index;
    std::map<std::string, PredictionBundle> bundles;
};

const Data& data() {
    static const Data d = [] {
        Data d;
        FixtureOptions o;
        o.n_train = 4000;
        o.n_test = 400;
        o.seed = 5;
        d.fx = gen_fixture(FixtureGrammar::covr(), o);
        d.raw = d.fx.examples;
        auto corpus = fixture_corpus(d.fx);
        d.pool = corpus.split(Split::train);
        d.tests = corpus.split(Split::test);
        d.index = build_indexes(d.pool);
        for (const auto& [id, beams] : d.fx.predictions) d.bundles.emplace(id, make_prediction_bundle(id, beams, {}));
        return d;
    }();
    return d;
}

void BM_prepare_parallel(benchmark::State& st) {
    const auto& d = data();
    for (auto _ : st) benchmark::DoNotOptimize(prepare_examples(d.raw, {}));
    st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(d.raw.size()));
}

void BM_prepare_serial(benchmark::State& st) {
    const auto& d = data();
    for (auto _ : st) benchmark::DoNotOptimize(prepare_examples_serial(d.raw, {}));
    st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(d.raw.size()));
}

void BM_bm25_parallel(benchmark::State& st) {
    const auto& d = data();
    std::size_t i = 0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(d.index.utterance_bm25.score_all(d.tests[i++ % d.tests.size()].utterance_tokens));
    }
}

void BM_bm25_serial(benchmark::State& st) {
    const auto& d = data();
    std::size_t i = 0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(
            d.index.utterance_bm25.score_all_serial(d.tests[i++ % d.tests.size()].utterance_tokens));
    }
}

template <bool Parallel>
void BM_select(benchmark::State& st) {
    const auto& d = data();
    RunConfig cfg;
    cfg.strategy = static_cast<Strategy>(st.range(0));
    cfg.k = 8;
    Selector sel(d.pool, d.index, cfg, &d.bundles);
    for (auto _ : st) {
        if constexpr (Parallel) {
            benchmark::DoNotOptimize(select_batch(sel, d.tests));
        } else {
            benchmark::DoNotOptimize(select_batch_serial(sel, d.tests));
        }
    }
    st.SetLabel(std::string(to_string(cfg.strategy)));
    st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(d.tests.size()));
}

}  // namespace

BENCHMARK(BM_prepare_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_prepare_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_bm25_parallel)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_bm25_serial)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK_TEMPLATE(BM_select, true)
    ->Arg(static_cast<int>(Strategy::top_k))
    ->Arg(static_cast<int>(Strategy::cover_ls))
    ->Arg(static_cast<int>(Strategy::dpp))
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK_TEMPLATE(BM_select, false)
    ->Arg(static_cast<int>(Strategy::top_k))
    ->Arg(static_cast<int>(Strategy::cover_ls))
    ->Arg(static_cast<int>(Strategy::dpp))
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
