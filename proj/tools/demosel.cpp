// demosel: select, prompt, infer and evaluate in-context demonstrations.

#include <omp.h>

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "demosel/errors.hpp"
#include "demosel/fixture.hpp"
#include "demosel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace demosel;

namespace {

enum Exit { kOk = 0, kFailures = 1, kUsage = 2, kTransport = 3 };

struct Options {
    std::string corpus;
    std::string dialect = "default";
    std::string index;
    std::string predictions;
    std::string strategy = "cover-ls";
    std::string retriever = "bm25-utterance";
    std::string fallback = "cover-utt";
    int k = 24;
    int beams = 0;
    int max_ls_size = 0;
    bool oracle = false;
    std::uint64_t seed = 0;
    int candidate_pool = 200;
    double k1 = 1.2;
    double b = 0.75;
    std::size_t budget = 0;
    bool programs_only = false;
    bool shuffle = false;
    bool train_mode = false;
    bool mock = false;
    int threshold = 2;
    std::string endpoint;
    std::string model = "code-davinci-002";
    int max_tokens = 256;
    int width = 4;
    int jobs = 0;

    std::string selections;
    std::string prompts;
    std::string completions;
    std::string out;
    std::string out_dir;

    bool no_tfidf = false;

    std::string grammar;
    std::string split = "held-out-ls";
    std::size_t n_train = 1000;
    std::size_t n_test = 200;
};

RunConfig run_config(const Options& o) {
    RunConfig c;
    c.strategy = parse_strategy(o.strategy);
    c.k = o.k;
    c.retriever.variant = parse_retriever_variant(o.retriever);
    c.retriever.k1 = o.k1;
    c.retriever.b = o.b;
    c.retriever.seed = o.seed;
    c.beams = o.beams;
    c.max_ls_size = o.max_ls_size;
    c.oracle = o.oracle;
    c.fallback = parse_strategy(o.fallback);
    c.dpp.candidate_pool_size = o.candidate_pool;
    c.seed = o.seed;
    if (o.budget > 0) c.token_budget = o.budget;
    c.programs_only = o.programs_only || o.train_mode;
    c.shuffle_demos = o.shuffle;
    c.mock.compose_threshold_size = o.threshold;
    c.validate();
    return c;
}

StageContext context(const Options& o) {
    StageContext ctx;
    ctx.corpus = o.corpus;
    ctx.dialect = o.dialect;
    ctx.index = o.index;
    ctx.predictions = o.predictions;
    ctx.config = run_config(o);
    return ctx;
}

EndpointConfig endpoint_config(const Options& o) {
    EndpointConfig e = EndpointConfig::from_env();
    if (!o.endpoint.empty()) e.base_url = o.endpoint;
    e.model = o.model;
    return e;
}

void infer(const StageContext& ctx, const Options& o, const fs::path& prompts, const fs::path& out) {
    if (o.mock) {
        stage_infer_mock(ctx, prompts, out);
        return;
    }
    CompletionRequest tmpl;
    tmpl.max_tokens = o.max_tokens;
    stage_infer_endpoint(ctx, prompts, endpoint_config(o), tmpl, o.width, out);
}

int report(const EvalOutcome& outcome) {
    for (const auto& r : outcome.rows) {
        std::cout << r.group << ": accuracy " << r.accuracy << " over " << r.count << " examples\n";
    }
    return outcome.wrong > 0 ? kFailures : kOk;
}

void add_corpus(CLI::App* app, Options& o) {
    app->add_option("--corpus", o.corpus, "Examples JSONL")->required()->check(CLI::ExistingFile);
    app->add_option("--dialect", o.dialect, "Grammar dialect")
        ->check(CLI::IsMember({"default", "geoquery", "smcalflow-simple", "covr"}));
}

void add_selection(CLI::App* app, Options& o) {
    app->add_option("--index", o.index, "Prebuilt index (built in memory when absent)")->check(CLI::ExistingFile);
    app->add_option("--predictions", o.predictions, "Parser beams JSONL")->check(CLI::ExistingFile);
    app->add_option("--strategy", o.strategy, "top-k, random, cover-ls, cover-utt or dpp");
    app->add_option("-k,--k", o.k, "Demonstrations per prompt");
    app->add_option("--retriever", o.retriever,
                    "bm25-utterance, bm25-symbols, random or oracle-bm25-gold-symbols");
    app->add_option("--fallback", o.fallback, "Strategy for examples without usable predictions");
    app->add_option("--beams", o.beams, "Beams used for predicted structures (0 = all)");
    app->add_option("--max-ls-size", o.max_ls_size, "Largest structure size considered (0 = unbounded)");
    app->add_flag("--oracle", o.oracle, "Cover the gold program's structures");
    app->add_option("--candidate-pool", o.candidate_pool, "DPP candidate pool size");
    app->add_option("--k1", o.k1, "BM25 k1");
    app->add_option("--b", o.b, "BM25 b");
}

void add_prompting(CLI::App* app, Options& o) {
    app->add_option("--budget", o.budget, "Prompt token budget (0 = none)");
    app->add_flag("--programs-only", o.programs_only, "Omit demonstration utterances");
    app->add_flag("--shuffle", o.shuffle, "Shuffle demonstrations instead of ascending score");
}

void add_inference(CLI::App* app, Options& o) {
    app->add_flag("--mock", o.mock, "Use the deterministic mock oracle");
    app->add_option("--threshold", o.threshold, "Mock oracle composition threshold size");
    app->add_option("--endpoint", o.endpoint, "Completion endpoint base URL");
    app->add_option("--model", o.model, "Model name sent to the endpoint");
    app->add_option("--max-tokens", o.max_tokens, "Completion length limit");
    app->add_option("--width", o.width, "Concurrent completion requests");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Demonstration selection for in-context semantic parsing"};
    app.set_config("--config", "", "TOML/INI file with option values");
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--jobs", o.jobs, "Worker threads for parallel stages (0 = default)");
    app.add_option("--seed", o.seed, "Random seed");

    auto* index = app.add_subcommand("index", "Build the retrieval index over the training split");
    add_corpus(index, o);
    index->add_option("--out", o.out, "Index file")->required();
    index->add_option("--k1", o.k1, "BM25 k1");
    index->add_option("--b", o.b, "BM25 b");
    index->add_flag("--no-tfidf", o.no_tfidf, "Skip structure tf-idf vectors");
    index->add_option("--max-ls-size", o.max_ls_size, "Largest structure size in tf-idf vectors");

    auto* select = app.add_subcommand("select", "Select demonstrations for each test example");
    add_corpus(select, o);
    add_selection(select, o);
    select->add_option("--out", o.out, "Selections JSONL")->required();

    auto* prompt = app.add_subcommand("prompt", "Format prompts from selections");
    add_corpus(prompt, o);
    add_prompting(prompt, o);
    prompt->add_option("--selections", o.selections, "Selections JSONL")->check(CLI::ExistingFile);
    prompt->add_option("-k,--k", o.k, "Demonstrations per training prompt");
    prompt->add_flag("--train-mode", o.train_mode, "Build training prompts over the training split");
    prompt->add_option("--out", o.out, "Prompts JSONL")->required();

    auto* infer_cmd = app.add_subcommand("infer", "Complete prompts");
    add_corpus(infer_cmd, o);
    add_inference(infer_cmd, o);
    infer_cmd->add_option("--prompts", o.prompts, "Prompts JSONL")->required()->check(CLI::ExistingFile);
    infer_cmd->add_option("--out", o.out, "Predictions JSONL")->required();

    auto* eval = app.add_subcommand("eval", "Score predictions");
    add_corpus(eval, o);
    eval->add_option("--prompts", o.prompts, "Prompts JSONL")->required()->check(CLI::ExistingFile);
    eval->add_option("--completions", o.completions, "Predictions JSONL")->required()->check(CLI::ExistingFile);
    eval->add_option("--strategy", o.strategy, "Label for the report");
    eval->add_option("--out-dir", o.out_dir, "Report directory")->required();

    auto* run = app.add_subcommand("run", "select, prompt, infer and eval in one go");
    add_corpus(run, o);
    add_selection(run, o);
    add_prompting(run, o);
    add_inference(run, o);
    run->add_flag("--train-mode", o.train_mode, "Only build training prompts");
    run->add_option("--out-dir", o.out_dir, "Output directory")->required();

    auto* gen = app.add_subcommand("gen-fixture", "Generate a synthetic corpus from a grammar");
    gen->add_option("--grammar", o.grammar, "Grammar JSON (built-in grammar when absent)")->check(CLI::ExistingFile);
    gen->add_option("--split", o.split, "iid, template or held-out-ls");
    gen->add_option("--n-train", o.n_train, "Training examples");
    gen->add_option("--n-test", o.n_test, "Test examples");
    gen->add_option("--out-dir", o.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (o.jobs > 0) omp_set_num_threads(o.jobs);

    try {
        if (*index) {
            IndexOptions opts;
            opts.k1 = o.k1;
            opts.b = o.b;
            opts.tfidf = !o.no_tfidf;
            opts.tfidf_max_size = o.max_ls_size;
            auto st = stage_index(context(o), opts, o.out);
            std::cout << "indexed " << st.examples << " examples, " << st.templates << " templates, "
                      << st.local_structures << " local structures\n";
            return kOk;
        }
        if (*select) {
            stage_select(context(o), o.out);
            return kOk;
        }
        if (*prompt) {
            auto ctx = context(o);
            if (o.train_mode) {
                stage_train_prompts(ctx, o.out);
            } else {
                if (o.selections.empty()) throw ConfigError("prompt needs --selections (or --train-mode)");
                stage_prompt(ctx, o.selections, o.out);
            }
            return kOk;
        }
        if (*infer_cmd) {
            infer(context(o), o, o.prompts, o.out);
            return kOk;
        }
        if (*eval) {
            return report(stage_eval(context(o), o.prompts, o.completions, o.out_dir));
        }
        if (*run) {
            auto ctx = context(o);
            fs::path dir = o.out_dir;
            fs::create_directories(dir);
            if (o.train_mode) {
                stage_train_prompts(ctx, dir / "train_prompts.jsonl");
                return kOk;
            }
            stage_select(ctx, dir / "selections.jsonl");
            stage_prompt(ctx, dir / "selections.jsonl", dir / "prompts.jsonl");
            infer(ctx, o, dir / "prompts.jsonl", dir / "completions.jsonl");
            return report(stage_eval(ctx, dir / "prompts.jsonl", dir / "completions.jsonl", dir));
        }
        if (*gen) {
            FixtureGrammar grammar = o.grammar.empty() ? FixtureGrammar::covr() : FixtureGrammar::load(o.grammar);
            FixtureOptions fo;
            fo.n_train = o.n_train;
            fo.n_test = o.n_test;
            fo.split = parse_fixture_split(o.split);
            fo.seed = o.seed;
            auto fx = gen_fixture(grammar, fo);
            fs::path dir = o.out_dir;
            write_fixture(fx, dir / "corpus.jsonl", dir / "predictions.jsonl", dir / "planted.json");
            std::cout << "wrote " << fx.examples.size() << " examples to " << (dir / "corpus.jsonl").string() << '\n';
            return kOk;
        }
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kTransport;
    } catch (const ApiError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kTransport;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
