#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demosel/corpus.hpp"
#include "demosel/evaluation.hpp"
#include "demosel/llm_gateway.hpp"
#include "demosel/prompting.hpp"
#include "demosel/selection.hpp"

namespace demosel {

struct RunConfig {
    Strategy strategy = Strategy::cover_ls;
    int k = 24;
    RetrieverConfig retriever;
    // Beams whose structures feed cover-ls (0 = all).
    int beams = 0;
    int max_ls_size = kUnboundedSize;
    // Cover the gold program's structures instead of predicted ones.
    bool oracle = false;
    // Used by cover-ls when a test example has no usable prediction.
    Strategy fallback = Strategy::cover_utt;
    DppOptions dpp;
    std::uint64_t seed = 0;
    std::optional<std::size_t> token_budget;
    bool programs_only = false;
    bool shuffle_demos = false;
    MockOracleConfig mock;

    void validate() const;
};

struct SelectionRecord {
    std::string id;
    DemonstrationSet set;
    bool fallback = false;
};

class Selector {
  public:
    // `pool` must outlive the selector and match `index`.
    Selector(std::span<const Example> pool, const CorpusIndex& index, RunConfig config,
             const std::map<std::string, PredictionBundle>* predictions = nullptr);

    std::vector<double> scores(const Example& test) const;
    SelectionRecord select(const Example& test) const;

    const SelectionPool& pool() const { return pool_; }
    const RunConfig& config() const { return config_; }

  private:
    const PredictionBundle* bundle(const Example& test) const;

    const CorpusIndex& index_;
    RunConfig config_;
    const std::map<std::string, PredictionBundle>* predictions_;
    SelectionPool pool_;
    std::optional<LsTfidf> tfidf_;
};

// One record per test example, in order. Parallel over tests.
std::vector<SelectionRecord> select_batch(const Selector& selector, std::span<const Example> tests);
std::vector<SelectionRecord> select_batch_serial(const Selector& selector, std::span<const Example> tests);

struct PromptRecord {
    std::string id;
    std::string prompt;
    std::vector<std::string> demo_ids;
    int truncated = 0;
    // Training mode only: the program the prompt should produce.
    std::optional<std::string> target;
};

struct PredictionRecord {
    std::string id;
    std::string prediction;
};

PromptRecord build_prompt(const SelectionRecord& selection, const SelectionPool& pool, const Example& test,
                          const RunConfig& config);

// Training mode: a prompt per pool example, its demonstrations covering its
// own symbols with random picks, the example itself excluded.
std::vector<PromptRecord> training_prompts(const SelectionPool& pool, const RunConfig& config);

// Mock oracle over the demonstrations present in each prompt.
std::vector<PredictionRecord> infer_mock(std::span<const PromptRecord> prompts, const Corpus& corpus,
                                         const RunConfig& config);
std::vector<PredictionRecord> infer_endpoint(std::span<const PromptRecord> prompts, const EndpointConfig& endpoint,
                                             const CompletionRequest& request_template, int width);

std::vector<EvalRecord> evaluate_all(std::span<const PredictionRecord> predictions,
                                     std::span<const PromptRecord> prompts, const Corpus& corpus,
                                     const std::string& strategy);

// JSONL (de)serialization. Demonstration ids resolve against the pool.
void write_selections(std::ostream& out, std::span<const SelectionRecord> records, const SelectionPool& pool);
std::vector<SelectionRecord> read_selections(std::istream& in, const SelectionPool& pool);
void write_prompts(std::ostream& out, std::span<const PromptRecord> records);
std::vector<PromptRecord> read_prompts(std::istream& in);
void write_predictions(std::ostream& out, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::istream& in);
void write_eval_records(std::ostream& out, std::span<const EvalRecord> records);
void write_report(std::ostream& out, std::span<const SummaryRow> rows);

// File-level stages shared by the CLI subcommands and `run`.
struct StageContext {
    std::filesystem::path corpus;
    std::string dialect = "default";
    std::filesystem::path index;        // optional prebuilt index
    std::filesystem::path predictions;  // optional parser beams
    RunConfig config;
};

CorpusIndex::Stats stage_index(const StageContext& ctx, const IndexOptions& options, const std::filesystem::path& out);
void stage_select(const StageContext& ctx, const std::filesystem::path& out);
void stage_prompt(const StageContext& ctx, const std::filesystem::path& selections, const std::filesystem::path& out);
void stage_train_prompts(const StageContext& ctx, const std::filesystem::path& out);
void stage_infer_mock(const StageContext& ctx, const std::filesystem::path& prompts, const std::filesystem::path& out);
void stage_infer_endpoint(const StageContext& ctx, const std::filesystem::path& prompts, const EndpointConfig& endpoint,
                          const CompletionRequest& request_template, int width, const std::filesystem::path& out);

struct EvalOutcome {
    std::vector<SummaryRow> rows;
    std::size_t wrong = 0;
};

// Writes report.json, report.csv and records.jsonl into `out_dir`.
EvalOutcome stage_eval(const StageContext& ctx, const std::filesystem::path& prompts,
                       const std::filesystem::path& predictions, const std::filesystem::path& out_dir);

Corpus load_corpus(const std::filesystem::path& path, const std::string& dialect);

}  // namespace demosel
