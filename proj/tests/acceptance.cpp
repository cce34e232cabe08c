// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "demosel/fixture.hpp"
#include "demosel/pipeline.hpp"
#include "error_triples.hpp"
#include "geo_fixture.hpp"
#include "oracles.hpp"

using namespace demosel;

namespace {

// Pinned tolerances and limits.
constexpr double kBm25Tol = 1e-9;
constexpr double kLogDetTol = 1e-9;
// A stop is accepted when every remaining Schur residual is this small
// relative to its diagonal entry.
constexpr double kDppStopRel = 1e-6;
constexpr double kMinSeparation = 10.0;  // accuracy points
constexpr double kInversionTol = 2.0;    // accuracy points
constexpr double kLimitTableSec = 1.0;
constexpr double kLimitOracleSec = 60.0;
constexpr double kLimitFixtureSec = 300.0;

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 2) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- 1

Outcome app_a_table() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    auto ls = enumerate_local_structures(
        anonymize(parse_program(R"j(CreateEvent (AND (has_subject ("Work on Project"), starts_at (NextDOW ("Friday")))))j")));
    const std::map<int, std::set<std::string>> rows = {
        {1, {"CreateEvent", "AND", "has_subject", "starts_at", "NextDOW", "string"}},
        {2,
         {"<root> -> CreateEvent", "CreateEvent -> AND", "AND -> has_subject", "AND -> starts_at",
          "has_subject -> string", "starts_at -> NextDOW", "NextDOW -> string", "has_subject <-> starts_at"}},
        {3,
         {"<root> -> CreateEvent -> AND", "CreateEvent -> AND -> has_subject", "CreateEvent -> AND -> starts_at",
          "AND -> has_subject -> string", "AND -> starts_at -> NextDOW", "starts_at -> NextDOW -> string",
          "AND -> has_subject <-> starts_at"}},
        {6, {"<root> -> CreateEvent -> AND -> starts_at -> NextDOW -> string"}},
    };
    for (const auto& [size, want] : rows) {
        std::set<std::string> got;
        for (const auto& [canon, e] : ls.of_size(size)) got.insert(canon);
        if (got != want) o.fail("size " + std::to_string(size) + " rows differ");
    }
    double dt = seconds_since(t0);
    if (dt >= kLimitTableSec) o.fail("took " + fmt(dt) + "s");
    if (o.pass) o.detail = "6/8/7 rows and the size-6 path match, " + fmt(dt, 4) + "s";
    return o;
}

// ---------------------------------------------------------------- 2

Outcome oracle_equivalence() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    FixtureOptions opts;
    opts.split = FixtureSplit::iid;
    opts.n_train = 1500;
    opts.n_test = 100;
    opts.seed = 11;
    auto fx = gen_fixture(FixtureGrammar::covr(), opts);
    int checked = 0;
    std::size_t largest = 0;
    for (const auto& raw : fx.examples) {
        if (checked == 500) break;
        auto g = build_structure_graph(anonymize(parse_program(raw.program)));
        // node_count includes the root marker
        if (g.node_count() - 1 > 12) continue;
        largest = std::max(largest, g.node_count() - 1);
        if (oracle::to_map(enumerate_local_structures(g)) != oracle::brute_force_ls(g)) {
            o.fail("mismatch on " + raw.program);
        }
        ++checked;
    }
    double dt = seconds_since(t0);
    if (checked < 500) o.fail("only " + std::to_string(checked) + " programs with <= 12 nodes");
    if (dt >= kLimitOracleSec) o.fail("took " + fmt(dt) + "s");
    if (o.pass) {
        o.detail = std::to_string(checked) + " programs (up to " + std::to_string(largest) + " nodes) equal, " +
                   fmt(dt) + "s";
    }
    return o;
}

// ---------------------------------------------------------------- 3

struct PoolRow {
    std::string id;
    std::string tmpl;
    double score;
    std::vector<std::pair<std::string, int>> ls;
};

struct TraceCase {
    std::string name;
    std::vector<std::pair<std::string, int>> elements;
    std::vector<PoolRow> pool;
    int k;
    int max_size;
    // "cover <element> <id>", "uncoverable <element>", "fill <id>"
    std::vector<std::string> trace;
    std::vector<std::string> chosen;
    bool underfilled;
};

// Each expected trace below was worked out by hand: elements sorted by size
// then canonical form; each uncovered element takes the highest scoring live
// example containing it (lower position on ties); the pick retires the
// elements it contains and every example sharing its template; a new pass
// starts from the full element list while slots remain; a pass that adds
// nothing hands the remaining slots to the best live examples by score.
std::vector<TraceCase> trace_cases() {
    const int all = kUnboundedSize;
    return {
        {"refill after one pass",
         {{"a -> b -> c", 3}, {"a -> b", 2}, {"b -> c", 2}, {"a", 1}, {"b", 1}, {"c", 1}},
         {{"p0", "T0", 0.9, {{"a", 1}, {"b", 1}, {"a -> b", 2}}},
          {"p1", "T1", 0.5, {{"a", 1}, {"b", 1}, {"c", 1}, {"a -> b", 2}, {"b -> c", 2}, {"a -> b -> c", 3}}},
          {"p2", "T2", 0.8, {{"c", 1}}}},
         2, all,
         {"cover a -> b -> c p1", "uncoverable a -> b -> c", "cover a -> b p0"},
         {"p1", "p0"}, false},
        {"score ties go to the earlier example",
         {{"x -> y", 2}, {"x", 1}, {"z", 1}},
         {{"p0", "T0", 0.4, {{"x", 1}}},
          {"p1", "T1", 0.7, {{"x", 1}, {"x -> y", 2}}},
          {"p2", "T2", 0.7, {{"x", 1}, {"x -> y", 2}}},
          {"p3", "T3", 0.1, {{"z", 1}}}},
         3, all,
         {"cover x -> y p1", "cover z p3", "cover x -> y p2"},
         {"p1", "p3", "p2"}, false},
        {"template removal",
         {{"f -> g", 2}, {"h", 1}},
         {{"p0", "TA", 0.9, {{"f -> g", 2}}},
          {"p1", "TA", 0.8, {{"f -> g", 2}, {"h", 1}}},
          {"p2", "TB", 0.3, {{"h", 1}}},
          {"p3", "TC", 0.2, {{"f -> g", 2}}}},
         3, all,
         {"cover f -> g p0", "cover h p2", "cover f -> g p3"},
         {"p0", "p2", "p3"}, false},
        {"fill after an empty pass",
         {{"q", 1}},
         {{"p0", "T0", 0.2, {{"q", 1}}}, {"p1", "T1", 0.9, {{"r", 1}}}, {"p2", "T2", 0.5, {{"s", 1}}}},
         3, all,
         {"cover q p0", "uncoverable q", "fill p1", "fill p2"},
         {"p0", "p1", "p2"}, false},
        {"one template empties the pool",
         {{"a", 1}},
         {{"p0", "T0", 0.5, {{"a", 1}}}, {"p1", "T0", 0.6, {{"a", 1}}}, {"p2", "T0", 0.9, {{"b", 1}}}},
         3, all,
         {"cover a p1"},
         {"p1"}, true},
        {"largest element uncoverable",
         {{"m -> n -> o", 3}, {"m -> n", 2}, {"o", 1}},
         {{"p0", "T0", 0.3, {{"m", 1}, {"n", 1}, {"m -> n", 2}}},
          {"p1", "T1", 0.6, {{"o", 1}}},
          {"p2", "T2", 0.1, {{"m -> n", 2}, {"o", 1}}}},
         2, all,
         {"uncoverable m -> n -> o", "cover m -> n p0", "cover o p1"},
         {"p0", "p1"}, false},
        {"canonical order within a size",
         {{"b -> c", 2}, {"a <-> b", 2}, {"a -> c", 2}},
         {{"p0", "T0", 0.9, {{"b -> c", 2}}},
          {"p1", "T1", 0.5, {{"a <-> b", 2}, {"b -> c", 2}}},
          {"p2", "T2", 0.1, {{"a -> c", 2}}}},
         2, all,
         {"cover a -> c p2", "cover a <-> b p1"},
         {"p2", "p1"}, false},
        {"a pick covers later elements",
         {{"p -> q -> r", 3}, {"p -> q", 2}, {"t", 1}, {"r", 1}},
         {{"p0", "T0", 0.2, {{"p -> q -> r", 3}, {"p -> q", 2}, {"r", 1}}},
          {"p1", "T1", 0.9, {{"p -> q", 2}}},
          {"p2", "T2", 0.4, {{"t", 1}, {"r", 1}}},
          {"p3", "T3", 0.8, {{"t", 1}}}},
         4, all,
         {"cover p -> q -> r p0", "cover t p3", "uncoverable p -> q -> r", "cover p -> q p1", "cover r p2"},
         {"p0", "p3", "p1", "p2"}, false},
        {"fill retires templates and underfills",
         {{"u", 1}},
         {{"p0", "T0", 0.5, {{"u", 1}}}, {"p1", "T1", 0.7, {{"v", 1}}}, {"p2", "T1", 0.9, {{"w", 1}}}},
         4, all,
         {"cover u p0", "uncoverable u", "fill p2"},
         {"p0", "p2"}, true},
        {"size limit drops large elements",
         {{"a -> b -> c", 3}, {"a -> b", 2}, {"c", 1}},
         {{"p0", "T0", 0.9, {{"a -> b -> c", 3}, {"a -> b", 2}, {"c", 1}}},
          {"p1", "T1", 0.4, {{"a -> b", 2}}},
          {"p2", "T2", 0.6, {{"c", 1}}}},
         2, 2,
         {"cover a -> b p0", "cover a -> b p1"},
         {"p0", "p1"}, false},
    };
}

Outcome trace_conformance() {
    Outcome o;
    int n = 0;
    for (const auto& c : trace_cases()) {
        std::vector<Example> examples;
        std::vector<double> scores;
        for (const auto& row : c.pool) {
            Example ex;
            ex.id = row.id;
            ex.tmpl.text = row.tmpl;
            for (const auto& [canon, size] : row.ls) ex.ls_set.add(canon, size);
            examples.push_back(std::move(ex));
            scores.push_back(row.score);
        }
        LsSet elements;
        for (const auto& [canon, size] : c.elements) elements.add(canon, size);
        SelectionPool pool(examples);
        auto set = cover_ls(elements, pool, scores, c.k, c.max_size);

        std::vector<std::string> trace;
        for (const auto& t : set.coverage_trace) {
            switch (t.kind) {
            case TraceEntry::Kind::covered: trace.push_back("cover " + t.element + " " + examples[*t.example].id); break;
            case TraceEntry::Kind::uncoverable: trace.push_back("uncoverable " + t.element); break;
            case TraceEntry::Kind::fill: trace.push_back("fill " + examples[*t.example].id); break;
            }
        }
        std::vector<std::string> chosen;
        for (auto p : set.positions()) chosen.push_back(examples[p].id);
        if (trace != c.trace) o.fail(c.name + ": trace differs");
        if (chosen != c.chosen) o.fail(c.name + ": selection differs");
        if (set.underfilled != c.underfilled) o.fail(c.name + ": underfill flag differs");
        ++n;
    }
    if (o.pass) o.detail = std::to_string(n) + " pools, traces identical";
    return o;
}

// ---------------------------------------------------------------- 4

Outcome dpp_greedy() {
    Outcome o;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int instances = 0, steps = 0, early_stops = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const int n = 1 + static_cast<int>(rng() % 8);
        const std::size_t k = 1 + rng() % 3;
        const int dim = 2 + static_cast<int>(rng() % 5);
        std::vector<double> q(n);
        std::vector<SparseVector> phi(n);
        for (int i = 0; i < n; ++i) {
            q[i] = 0.05 + 0.95 * unit(rng);
            if (i > 0 && unit(rng) < 0.1) {
                phi[i] = phi[rng() % static_cast<unsigned>(i)];  // duplicate direction
                continue;
            }
            for (int d = 0; d < dim; ++d) {
                if (unit(rng) < 0.6) phi[i].push_back({d, unit(rng)});
            }
            if (phi[i].empty()) phi[i].push_back({static_cast<int>(rng() % dim), 1.0});
        }
        auto L = oracle::dpp_kernel(q, phi);
        auto got = greedy_log_det(q, phi, k);
        std::string tag = "instance " + std::to_string(inst);
        if (got.order.size() != got.gains.size()) o.fail(tag + ": gains and order differ in length");

        std::vector<std::size_t> chosen;
        double base = 0.0;
        for (std::size_t t = 0; t <= got.order.size() && t < k; ++t) {
            // exhaustive marginal gains given the current prefix
            std::vector<double> gain(n, -INFINITY);
            double best = -INFINITY;
            for (int i = 0; i < n; ++i) {
                if (std::find(chosen.begin(), chosen.end(), static_cast<std::size_t>(i)) != chosen.end()) continue;
                auto trial = chosen;
                trial.push_back(static_cast<std::size_t>(i));
                gain[i] = oracle::log_det(L, trial) - base;
                best = std::max(best, gain[i]);
            }
            if (t == got.order.size()) {
                // the greedy stopped before k: nothing left may have a usable residual
                if (t < static_cast<std::size_t>(n)) {
                    ++early_stops;
                    for (int i = 0; i < n; ++i) {
                        if (std::isfinite(gain[i]) && std::exp(gain[i]) > kDppStopRel * L(i, i)) {
                            o.fail(tag + ": stopped with candidate " + std::to_string(i) + " still usable");
                        }
                    }
                }
                break;
            }
            std::size_t pick = got.order[t];
            ++steps;
            if (!(std::abs(got.gains[t] - gain[pick]) <= kLogDetTol * std::max(1.0, std::abs(gain[pick])))) {
                o.fail(tag + ": reported gain " + fmt(got.gains[t], 12) + " vs " + fmt(gain[pick], 12));
            }
            if (gain[pick] < best - kLogDetTol) o.fail(tag + ": step " + std::to_string(t) + " is not the argmax");
            if (t > 0 && got.gains[t] > got.gains[t - 1] + kLogDetTol) o.fail(tag + ": gains increase");
            chosen.push_back(pick);
            base += gain[pick];
        }
        ++instances;
    }
    if (o.pass) {
        o.detail = std::to_string(instances) + " instances, " + std::to_string(steps) + " greedy steps, " +
                   std::to_string(early_stops) + " rank-deficient stops";
    }
    return o;
}

// ---------------------------------------------------------------- 5, 6, 10

struct Synthetic {
    Fixture fx;
    Corpus corpus;
    std::vector<Example> pool;
    std::vector<Example> tests;
    CorpusIndex index;
    std::map<std::string, PredictionBundle> bundles;
};

const Synthetic& synthetic() {
    static const Synthetic s = [] {
        Synthetic s;
        FixtureOptions opts;
        opts.split = FixtureSplit::held_out_ls;
        opts.n_train = 1000;
        opts.n_test = 200;
        opts.seed = 1;
        s.fx = gen_fixture(FixtureGrammar::covr(), opts);
        s.corpus = fixture_corpus(s.fx);
        s.pool = s.corpus.split(Split::train);
        s.tests = s.corpus.split(Split::test);
        s.index = build_indexes(s.pool);
        for (const auto& [id, beams] : s.fx.predictions) s.bundles.emplace(id, make_prediction_bundle(id, beams, {}));
        return s;
    }();
    return s;
}

std::vector<SelectionRecord> run_selection(Strategy strategy, int k) {
    const auto& s = synthetic();
    RunConfig cfg;
    cfg.strategy = strategy;
    cfg.k = k;
    Selector sel(s.pool, s.index, cfg, &s.bundles);
    return select_batch(sel, s.tests);
}

Outcome coverage_dominance() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    const auto& s = synthetic();
    auto mean_metrics = [&](Strategy strategy) {
        auto recs = run_selection(strategy, 4);
        double cov = 0.0, uniq = 0.0;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            std::vector<LsSet> demos;
            for (const auto& item : recs[i].set.items) demos.push_back(s.pool[item.example].ls_set);
            auto m = coverage_metrics(demos, s.tests[i].ls_set);
            cov += m.ls_coverage;
            uniq += static_cast<double>(m.unique_ls_count);
        }
        const double n = static_cast<double>(recs.size());
        return std::pair{cov / n, uniq / n};
    };
    auto [cov_top, uniq_top] = mean_metrics(Strategy::top_k);
    auto [cov_cls, uniq_cls] = mean_metrics(Strategy::cover_ls);
    double dt = seconds_since(t0);
    if (!(cov_cls > cov_top)) o.fail("ls_coverage not higher");
    if (!(uniq_cls > uniq_top)) o.fail("unique_ls_count not higher");
    if (dt >= kLimitFixtureSec) o.fail("took " + fmt(dt) + "s");
    std::string numbers = "ls_coverage " + fmt(cov_cls, 3) + " vs " + fmt(cov_top, 3) + ", unique_ls " +
                          fmt(uniq_cls, 1) + " vs " + fmt(uniq_top, 1) + ", " + fmt(dt) + "s";
    o.detail = o.pass ? numbers : o.detail + " (" + numbers + ")";
    return o;
}

double mock_accuracy(Strategy strategy, int k) {
    const auto& s = synthetic();
    RunConfig cfg;
    cfg.strategy = strategy;
    cfg.k = k;
    Selector sel(s.pool, s.index, cfg, &s.bundles);
    auto recs = select_batch(sel, s.tests);
    std::vector<PromptRecord> prompts;
    for (std::size_t i = 0; i < recs.size(); ++i) prompts.push_back(build_prompt(recs[i], sel.pool(), s.tests[i], cfg));
    auto preds = infer_mock(prompts, s.corpus, cfg);
    auto evals = evaluate_all(preds, prompts, s.corpus, std::string(to_string(strategy)));
    std::size_t right = 0;
    for (const auto& e : evals) right += e.exact_match ? 1 : 0;
    return 100.0 * static_cast<double>(right) / static_cast<double>(evals.size());
}

Outcome mock_separation() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    double top4 = mock_accuracy(Strategy::top_k, 4);
    std::vector<double> cls;
    for (int k : {1, 2, 4, 8}) cls.push_back(mock_accuracy(Strategy::cover_ls, k));
    double dt = seconds_since(t0);

    if (!(cls[2] >= top4 + kMinSeparation)) o.fail("separation below " + fmt(kMinSeparation, 0) + " points");
    int inversions = 0;
    for (std::size_t i = 1; i < cls.size(); ++i) {
        if (cls[i] < cls[i - 1]) {
            ++inversions;
            if (cls[i - 1] - cls[i] > kInversionTol) o.fail("drop larger than " + fmt(kInversionTol, 0) + " points");
        }
    }
    if (inversions > 1) o.fail("more than one inversion");
    if (dt >= kLimitFixtureSec) o.fail("took " + fmt(dt) + "s");
    std::string numbers = "cover-ls k=1/2/4/8: " + fmt(cls[0], 1) + "/" + fmt(cls[1], 1) + "/" + fmt(cls[2], 1) + "/" +
                          fmt(cls[3], 1) + ", top-k k=4: " + fmt(top4, 1) + ", " + fmt(dt) + "s";
    o.detail = o.pass ? numbers : o.detail + " (" + numbers + ")";
    return o;
}

Outcome template_dedup() {
    Outcome o;
    const auto& s = synthetic();
    std::size_t sets = 0, underfilled = 0;
    for (auto strategy : {Strategy::cover_ls, Strategy::cover_utt}) {
        for (int k : {1, 2, 4, 8, 16}) {
            for (const auto& rec : run_selection(strategy, k)) {
                ++sets;
                if (rec.set.underfilled) {
                    ++underfilled;
                    continue;
                }
                std::set<std::string> seen;
                for (const auto& item : rec.set.items) {
                    if (!seen.insert(s.pool[item.example].tmpl.text).second) {
                        o.fail(rec.id + " repeats a template (" + std::string(to_string(strategy)) + ", k=" +
                               std::to_string(k) + ")");
                    }
                }
            }
        }
    }
    if (sets < 1000) o.fail("only " + std::to_string(sets) + " selections");
    if (o.pass) {
        o.detail = std::to_string(sets) + " selections, none repeats a template (" + std::to_string(underfilled) +
                   " underfilled)";
    }
    return o;
}

// ---------------------------------------------------------------- 7

Outcome golden_prompts() {
    Outcome o;
    auto f = geo::load();
    const std::pair<std::string, std::function<std::string(const geo::Fixture&)>> cases[] = {
        {"prompt_top_k.txt", geo::top_k_prompt},
        {"prompt_cover_ls.txt", geo::cover_ls_prompt},
        {"prompt_dpp.txt", geo::dpp_prompt},
    };
    for (const auto& [file, render] : cases) {
        if (render(f) != geo::slurp(geo::data_path("golden/" + file))) o.fail(file + " differs");
    }
    if (o.pass) o.detail = "top-k, cover-ls and dpp renderings byte-identical";
    return o;
}

// ---------------------------------------------------------------- 8

Outcome error_triples() {
    Outcome o;
    auto cases = triples::cases();
    for (const auto& c : cases) {
        if (classify_errors(c.pred, triples::kGold, triples::kDemos) != c.expected) o.fail(c.name + " mislabeled");
    }
    if (cases.size() != 12) o.fail("expected 12 triples");
    if (o.pass) o.detail = std::to_string(cases.size()) + " triples labeled as constructed";
    return o;
}

// ---------------------------------------------------------------- 9

Outcome bm25_toy() {
    Outcome o;
    Bm25Index idx({{"a", "b"}, {"a"}, {"c"}});
    auto close = [](double x, double y) { return std::abs(x - y) <= kBm25Tol; };
    const std::vector<std::pair<std::vector<std::string>, std::vector<double>>> cases = {
        {{"a"}, {0.39019169220400696, 0.523548346501579, 0.0}},
        {{"c"}, {0.0, 0.0, 1.0925692944940748}},
        {{"a", "a"}, {0.7803833844080139, 1.047096693003158, 0.0}},
    };
    for (const auto& [q, want] : cases) {
        auto got = idx.score_all(q);
        for (std::size_t d = 0; d < 3; ++d) {
            if (!close(got[d], want[d])) o.fail("score mismatch for doc " + std::to_string(d));
        }
    }
    if (!close(idx.idf("a"), 0.47000362924573563) || !close(idx.idf("c"), 0.9808292530117263)) o.fail("idf mismatch");
    if (!close(idx.avg_doc_len(), 4.0 / 3.0)) o.fail("avgdl mismatch");
    std::vector<std::string> ac{"a", "c"};
    auto ranked = idx.rank(ac);
    if (ranked.size() != 3 || ranked[0].doc != 2 || ranked[1].doc != 1 || ranked[2].doc != 0) o.fail("ranking differs");
    if (o.pass) o.detail = "scores, idf and ranking within " + fmt(kBm25Tol * 1e9, 0) + "e-9";
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"local structure table", app_a_table},
        {"brute-force enumeration oracle", oracle_equivalence},
        {"cover-ls trace conformance", trace_conformance},
        {"greedy dpp correctness", dpp_greedy},
        {"coverage dominance", coverage_dominance},
        {"mock oracle separation", mock_separation},
        {"prompt golden files", golden_prompts},
        {"error classifier triples", error_triples},
        {"bm25 hand computation", bm25_toy},
        {"template de-duplication", template_dedup},
    };
    int failed = 0, n = 0;
    for (const auto& [name, fn] : criteria) {
        ++n;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2d %-32s %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria pass\n", n - failed, n);
    return failed == 0 ? 0 : 1;
}
