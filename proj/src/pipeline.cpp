#include "demosel/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace demosel {
namespace {

using json = nlohmann::json;

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

template <class F>
void for_each_jsonl(std::istream& in, F&& f) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw IoError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::unordered_map<std::string, std::size_t> id_positions(const SelectionPool& pool) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < pool.size(); ++i) pos.emplace(pool[i].id, i);
    return pos;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

std::vector<std::string> distinct(std::vector<std::string> v) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (auto& s : v) {
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

struct Loaded {
    Corpus corpus;
    std::vector<Example> pool;
    std::vector<Example> tests;
};

Loaded load_split(const StageContext& ctx) {
    Loaded l;
    l.corpus = load_corpus(ctx.corpus, ctx.dialect);
    l.pool = l.corpus.split(Split::train);
    l.tests = l.corpus.split(Split::test);
    if (l.pool.empty()) throw ConfigError("corpus has no training examples");
    return l;
}

}  // namespace

void RunConfig::validate() const {
    if (k <= 0) throw InvalidK("k must be positive, got " + std::to_string(k));
    if (beams < 0) throw ConfigError("beams must be >= 0");
    if (max_ls_size < 0) throw ConfigError("max_ls_size must be >= 0");
    if (fallback != Strategy::cover_utt && fallback != Strategy::top_k) {
        throw ConfigError("fallback must be cover-utt or top-k");
    }
    if (dpp.candidate_pool_size <= 0) throw ConfigError("dpp candidate pool size must be positive");
    retriever.validate();
    mock.validate();
}

Corpus load_corpus(const std::filesystem::path& path, const std::string& dialect) {
    auto report = load_examples(path, Dialect::preset(dialect));
    for (const auto& w : report.warnings) warn(w);
    for (const auto& f : report.failures) warn("skipped " + f);
    return std::move(report.corpus);
}

Selector::Selector(std::span<const Example> pool, const CorpusIndex& index, RunConfig config,
                   const std::map<std::string, PredictionBundle>* predictions)
    : index_(index),
      config_(std::move(config)),
      predictions_(predictions),
      pool_(pool, index.ls_postings, index.token_postings) {
    config_.validate();
    if (index.example_ids.size() != pool.size()) throw ConfigError("index does not match the training pool");
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (index.example_ids[i] != pool[i].id) throw ConfigError("index does not match the training pool");
    }
    if (config_.retriever.variant == RetrieverVariant::bm25_symbols && predictions_ == nullptr) {
        throw ConfigError("retriever bm25-symbols needs parser predictions");
    }
    if (config_.strategy == Strategy::dpp) {
        if (!index.tfidf) throw ConfigError("dpp needs an index built with tf-idf vectors");
        if (index.tfidf->max_size() != config_.max_ls_size) {
            std::vector<LsSet> sets;
            for (const auto& ex : pool) sets.push_back(ex.ls_set);
            tfidf_.emplace(sets, config_.max_ls_size);
        }
    }
}

const PredictionBundle* Selector::bundle(const Example& test) const {
    if (!predictions_) return nullptr;
    auto it = predictions_->find(test.id);
    return it == predictions_->end() ? nullptr : &it->second;
}

// Called per test from inside select_batch's parallel loop, so scoring takes
// the postings route rather than the per-document parallel one.
std::vector<double> Selector::scores(const Example& test) const {
    switch (config_.retriever.variant) {
        case RetrieverVariant::bm25_utterance:
            return index_.utterance_bm25.score_all_serial(test.utterance_tokens);
        case RetrieverVariant::bm25_symbols: {
            std::vector<std::string> query;
            if (const auto* b = bundle(test)) {
                for (const auto& [sym, e] : b->symbols(config_.beams)) query.push_back(sym);
            }
            return index_.symbol_bm25.score_all_serial(query);
        }
        case RetrieverVariant::oracle_bm25_gold_symbols:
            return index_.symbol_bm25.score_all_serial(distinct(test.symbols));
        case RetrieverVariant::random:
            return random_scores(pool_.size(), config_.retriever.seed, test.id);
    }
    return {};
}

SelectionRecord Selector::select(const Example& test) const {
    SelectionRecord rec;
    rec.id = test.id;
    const auto sc = scores(test);
    const std::uint64_t seed = config_.seed ^ stable_hash(test.id);

    Strategy strategy = config_.strategy;
    LsSet elements;
    if (strategy == Strategy::cover_ls) {
        if (config_.oracle) {
            elements = test.ls_set;
        } else if (const auto* b = bundle(test); b && b->usable_count() > 0) {
            elements = b->ls_union(config_.beams);
        } else {
            strategy = config_.fallback;
            rec.fallback = true;
        }
    }

    switch (strategy) {
        case Strategy::top_k:
            rec.set = select_top_k(pool_, sc, config_.k);
            break;
        case Strategy::random:
            rec.set = select_random(pool_, sc, config_.k, seed);
            break;
        case Strategy::cover_ls:
            rec.set = cover_ls(elements, pool_, sc, config_.k, config_.max_ls_size);
            break;
        case Strategy::cover_utt:
            rec.set = cover_utt(test.utterance_tokens, pool_, sc,
                                [this](std::string_view t) { return index_.utterance_bm25.idf(t); }, config_.k);
            break;
        case Strategy::dpp: {
            const auto& vectors = tfidf_ ? tfidf_->vectors() : index_.tfidf->vectors();
            rec.set = dpp_select(sc, vectors, config_.k, config_.dpp);
            break;
        }
        case Strategy::train_mode:
            throw ConfigError("train-mode selection runs over the training split, not test examples");
    }
    return rec;
}

std::vector<SelectionRecord> select_batch(const Selector& selector, std::span<const Example> tests) {
    std::vector<SelectionRecord> out(tests.size());
    std::exception_ptr error;
    const auto n = static_cast<std::ptrdiff_t>(tests.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = selector.select(tests[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<SelectionRecord> select_batch_serial(const Selector& selector, std::span<const Example> tests) {
    std::vector<SelectionRecord> out;
    out.reserve(tests.size());
    for (const auto& t : tests) out.push_back(selector.select(t));
    return out;
}

PromptRecord build_prompt(const SelectionRecord& selection, const SelectionPool& pool, const Example& test,
                          const RunConfig& config) {
    Ordering ordering = config.shuffle_demos ? Ordering::shuffled(config.seed ^ stable_hash(test.id))
                                             : Ordering::ascending();
    std::vector<PromptDemo> demos;
    for (const auto& item : order_demonstrations(selection.set, ordering)) {
        const Example& ex = pool[item.example];
        demos.push_back({ex.id, config.programs_only ? std::nullopt : std::optional(ex.utterance), ex.program});
    }
    Prompt p = format_prompt(demos, test.utterance);
    if (config.token_budget) p = truncate_prompt(p, *config.token_budget);
    return {test.id, p.text, p.demo_ids, p.truncated_count, std::nullopt};
}

std::vector<PromptRecord> training_prompts(const SelectionPool& pool, const RunConfig& config) {
    std::vector<PromptRecord> out(pool.size());
    const std::vector<double> zeros(pool.size(), 0.0);
    const auto n = static_cast<std::ptrdiff_t>(pool.size());
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        try {
            const Example& ex = pool[u];
            SelectionRecord sel{ex.id, training_mode_select(ex.ls_set, pool, zeros, config.k,
                                                            config.seed ^ stable_hash(ex.id), u),
                                false};
            RunConfig shuffled = config;
            shuffled.shuffle_demos = true;
            out[u] = build_prompt(sel, pool, ex, shuffled);
            out[u].target = ex.program;
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::vector<PredictionRecord> infer_mock(std::span<const PromptRecord> prompts, const Corpus& corpus,
                                         const RunConfig& config) {
    std::vector<PredictionRecord> out;
    for (const auto& p : prompts) {
        const Example* test = corpus.find(p.id);
        if (!test) throw ConfigError("prompt for unknown example '" + p.id + "'");
        std::vector<std::string> demos;
        for (const auto& id : p.demo_ids) {
            const Example* d = corpus.find(id);
            if (!d) throw ConfigError("prompt demonstration '" + id + "' is not in the corpus");
            demos.push_back(d->program);
        }
        out.push_back({p.id, mock_complete(demos, test->program, config.mock, corpus.dialect)});
    }
    return out;
}

std::vector<PredictionRecord> infer_endpoint(std::span<const PromptRecord> prompts, const EndpointConfig& endpoint,
                                             const CompletionRequest& request_template, int width) {
    std::vector<CompletionRequest> requests;
    for (const auto& p : prompts) {
        CompletionRequest r = request_template;
        r.prompt = p.prompt;
        requests.push_back(std::move(r));
    }
    auto results = complete_all(requests, endpoint, width);
    std::vector<PredictionRecord> out;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        out.push_back({prompts[i].id, normalize_whitespace(results[i].text)});
    }
    return out;
}

std::vector<EvalRecord> evaluate_all(std::span<const PredictionRecord> predictions,
                                     std::span<const PromptRecord> prompts, const Corpus& corpus,
                                     const std::string& strategy) {
    LsSet training_union;
    for (const auto& ex : corpus.examples) {
        if (ex.split == Split::train) training_union.merge(ex.ls_set.restricted(kUnobservedMaxSize));
    }
    std::unordered_map<std::string, const PromptRecord*> by_id;
    for (const auto& p : prompts) by_id.emplace(p.id, &p);

    std::vector<EvalInput> inputs;
    for (const auto& pred : predictions) {
        const Example* test = corpus.find(pred.id);
        if (!test) throw ConfigError("prediction for unknown example '" + pred.id + "'");
        EvalInput in{pred.id, strategy, pred.prediction, test->program, {}, test->utterance_tokens, {}};
        if (auto it = by_id.find(pred.id); it != by_id.end()) {
            for (const auto& id : it->second->demo_ids) {
                if (const Example* d = corpus.find(id)) {
                    in.demo_programs.push_back(d->program);
                    in.demo_tokens.push_back(d->utterance_tokens);
                }
            }
        } else {
            warn("no prompt recorded for '" + pred.id + "'; evaluating without demonstrations");
        }
        inputs.push_back(std::move(in));
    }

    std::vector<EvalRecord> out(inputs.size());
    const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        out[u] = evaluate_record(inputs[u], training_union, corpus.dialect);
    }
    return out;
}

void write_selections(std::ostream& out, std::span<const SelectionRecord> records, const SelectionPool& pool) {
    for (const auto& r : records) {
        json items = json::array();
        for (const auto& it : r.set.items) items.push_back({{"id", pool[it.example].id}, {"score", it.score}});
        json trace = json::array();
        for (const auto& t : r.set.coverage_trace) {
            trace.push_back({{"element", t.element},
                             {"example", t.example ? json(pool[*t.example].id) : json(nullptr)},
                             {"kind", to_string(t.kind)}});
        }
        json j = {{"id", r.id},
                  {"strategy", to_string(r.set.strategy)},
                  {"k", r.set.k},
                  {"items", items},
                  {"coverage_trace", trace},
                  {"underfilled", r.set.underfilled},
                  {"marginal_gains", r.set.marginal_gains},
                  {"fallback", r.fallback}};
        out << j.dump() << '\n';
    }
}

std::vector<SelectionRecord> read_selections(std::istream& in, const SelectionPool& pool) {
    auto pos = id_positions(pool);
    auto lookup = [&](const std::string& id) {
        auto it = pos.find(id);
        if (it == pos.end()) throw ConfigError("selection refers to '" + id + "', which is not in the training pool");
        return it->second;
    };
    std::vector<SelectionRecord> out;
    for_each_jsonl(in, [&](const json& j) {
        SelectionRecord r;
        r.id = j.at("id").get<std::string>();
        r.set.strategy = parse_strategy(j.at("strategy").get<std::string>());
        r.set.k = j.at("k").get<int>();
        for (const auto& it : j.at("items")) {
            r.set.items.push_back({lookup(it.at("id").get<std::string>()), it.at("score").get<double>()});
        }
        for (const auto& t : j.value("coverage_trace", json::array())) {
            TraceEntry e;
            e.element = t.at("element").get<std::string>();
            if (!t.at("example").is_null()) e.example = lookup(t.at("example").get<std::string>());
            auto kind = t.at("kind").get<std::string>();
            e.kind = kind == "fill"          ? TraceEntry::Kind::fill
                     : kind == "uncoverable" ? TraceEntry::Kind::uncoverable
                                             : TraceEntry::Kind::covered;
            r.set.coverage_trace.push_back(std::move(e));
        }
        r.set.underfilled = j.value("underfilled", false);
        r.set.marginal_gains = j.value("marginal_gains", std::vector<double>{});
        r.fallback = j.value("fallback", false);
        out.push_back(std::move(r));
    });
    return out;
}

void write_prompts(std::ostream& out, std::span<const PromptRecord> records) {
    for (const auto& r : records) {
        json j = {{"id", r.id}, {"prompt", r.prompt}, {"demo_ids", r.demo_ids}, {"truncated", r.truncated}};
        if (r.target) j["target"] = *r.target;
        out << j.dump() << '\n';
    }
}

std::vector<PromptRecord> read_prompts(std::istream& in) {
    std::vector<PromptRecord> out;
    for_each_jsonl(in, [&](const json& j) {
        PromptRecord r{j.at("id").get<std::string>(), j.at("prompt").get<std::string>(),
                       j.at("demo_ids").get<std::vector<std::string>>(), j.value("truncated", 0), std::nullopt};
        if (j.contains("target")) r.target = j.at("target").get<std::string>();
        out.push_back(std::move(r));
    });
    return out;
}

void write_predictions(std::ostream& out, std::span<const PredictionRecord> records) {
    for (const auto& r : records) out << json{{"id", r.id}, {"prediction", r.prediction}}.dump() << '\n';
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
    std::vector<PredictionRecord> out;
    for_each_jsonl(in, [&](const json& j) {
        out.push_back({j.at("id").get<std::string>(), j.at("prediction").get<std::string>()});
    });
    return out;
}

void write_eval_records(std::ostream& out, std::span<const EvalRecord> records) {
    for (const auto& r : records) {
        std::vector<std::string> labels;
        for (auto l : r.error_labels) labels.emplace_back(to_string(l));
        json j = {{"id", r.id},
                  {"strategy", r.strategy},
                  {"prediction", r.prediction},
                  {"exact_match", r.exact_match},
                  {"symbol_coverage", r.symbol_coverage},
                  {"ls_coverage", r.ls_coverage},
                  {"unique_ls_count", r.unique_ls_count},
                  {"utt_jaccard", r.utt_jaccard},
                  {"error_labels", labels},
                  {"unobserved_ls", r.unobserved_ls}};
        out << j.dump() << '\n';
    }
}

void write_report(std::ostream& out, std::span<const SummaryRow> rows) {
    json groups = json::array();
    for (const auto& r : rows) {
        groups.push_back({{"group", r.group},
                          {"count", r.count},
                          {"accuracy", r.accuracy},
                          {"symbol_coverage", r.symbol_coverage},
                          {"ls_coverage", r.ls_coverage},
                          {"unique_ls_count", r.unique_ls_count},
                          {"utt_jaccard", r.utt_jaccard},
                          {"unobserved_ls_rate", r.unobserved_ls_rate},
                          {"wrong", r.wrong},
                          {"error_pct",
                           {{"syntax", r.syntax_pct},
                            {"over-copy", r.over_copy_pct},
                            {"oov-hallucination", r.oov_pct},
                            {"missing-symbols", r.missing_pct}}}});
    }
    out << json{{"groups", groups}}.dump(2) << '\n';
}

CorpusIndex::Stats stage_index(const StageContext& ctx, const IndexOptions& options, const std::filesystem::path& out) {
    auto l = load_split(ctx);
    auto index = build_indexes(l.pool, options);
    save_index(index, out);
    return index.stats();
}

namespace {

CorpusIndex index_for(const StageContext& ctx, std::span<const Example> pool) {
    if (!ctx.index.empty()) return load_index(ctx.index);
    IndexOptions opts;
    opts.k1 = ctx.config.retriever.k1;
    opts.b = ctx.config.retriever.b;
    opts.tfidf = ctx.config.strategy == Strategy::dpp;
    opts.tfidf_max_size = ctx.config.max_ls_size;
    return build_indexes(pool, opts);
}

}  // namespace

void stage_select(const StageContext& ctx, const std::filesystem::path& out) {
    auto l = load_split(ctx);
    auto index = index_for(ctx, l.pool);

    std::optional<PredictionLoad> preds;
    if (!ctx.predictions.empty()) {
        std::vector<std::string> ids;
        for (const auto& t : l.tests) ids.push_back(t.id);
        preds = load_predictions(ctx.predictions, l.corpus.dialect, &ids);
        for (const auto& w : preds->warnings) warn(w);
    }
    Selector selector(l.pool, index, ctx.config, preds ? &preds->bundles : nullptr);
    auto records = select_batch(selector, l.tests);
    std::size_t fallbacks = 0;
    for (const auto& r : records) fallbacks += r.fallback ? 1 : 0;
    if (fallbacks > 0) {
        warn(std::to_string(fallbacks) + " test examples had no usable prediction and fell back to " +
             std::string(to_string(ctx.config.fallback)));
    }
    auto f = open_out(out);
    write_selections(f, records, selector.pool());
}

void stage_prompt(const StageContext& ctx, const std::filesystem::path& selections, const std::filesystem::path& out) {
    auto l = load_split(ctx);
    SelectionPool pool(l.pool);
    auto in = open_in(selections);
    auto records = read_selections(in, pool);
    std::vector<PromptRecord> prompts;
    for (const auto& r : records) {
        const Example* test = l.corpus.find(r.id);
        if (!test) throw ConfigError("selection for unknown example '" + r.id + "'");
        prompts.push_back(build_prompt(r, pool, *test, ctx.config));
    }
    auto f = open_out(out);
    write_prompts(f, prompts);
}

void stage_train_prompts(const StageContext& ctx, const std::filesystem::path& out) {
    auto l = load_split(ctx);
    auto ls_postings = build_ls_postings(l.pool);
    SelectionPool pool(l.pool, std::move(ls_postings), {});
    auto prompts = training_prompts(pool, ctx.config);
    auto f = open_out(out);
    write_prompts(f, prompts);
}

void stage_infer_mock(const StageContext& ctx, const std::filesystem::path& prompts, const std::filesystem::path& out) {
    Corpus corpus = load_corpus(ctx.corpus, ctx.dialect);
    auto in = open_in(prompts);
    auto records = read_prompts(in);
    auto preds = infer_mock(records, corpus, ctx.config);
    auto f = open_out(out);
    write_predictions(f, preds);
}

void stage_infer_endpoint(const StageContext&, const std::filesystem::path& prompts, const EndpointConfig& endpoint,
                          const CompletionRequest& request_template, int width, const std::filesystem::path& out) {
    auto in = open_in(prompts);
    auto records = read_prompts(in);
    auto preds = infer_endpoint(records, endpoint, request_template, width);
    auto f = open_out(out);
    write_predictions(f, preds);
}

EvalOutcome stage_eval(const StageContext& ctx, const std::filesystem::path& prompts,
                       const std::filesystem::path& predictions, const std::filesystem::path& out_dir) {
    Corpus corpus = load_corpus(ctx.corpus, ctx.dialect);
    auto pin = open_in(prompts);
    auto prompt_records = read_prompts(pin);
    auto din = open_in(predictions);
    auto pred_records = read_predictions(din);

    auto records = evaluate_all(pred_records, prompt_records, corpus, std::string(to_string(ctx.config.strategy)));
    EvalOutcome outcome;
    outcome.rows = aggregate(records);
    for (const auto& r : records) outcome.wrong += r.exact_match ? 0 : 1;

    std::filesystem::create_directories(out_dir);
    {
        auto f = open_out(out_dir / "report.json");
        write_report(f, outcome.rows);
    }
    {
        auto f = open_out(out_dir / "report.csv");
        write_summary_csv(f, outcome.rows);
    }
    {
        auto f = open_out(out_dir / "records.jsonl");
        write_eval_records(f, records);
    }
    return outcome;
}

}  // namespace demosel
