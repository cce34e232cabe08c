#include "demosel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace demosel {
namespace {

using json = nlohmann::json;

constexpr std::string_view kIndexMagic = "demosel-index";

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return in;
}

std::optional<Example> try_make(const RawExample& r, const Dialect& dialect, std::string& error) {
    try {
        return make_example(r.id, r.utterance, r.program, r.split, dialect);
    } catch (const SyntaxError& e) {
        error = r.id + ": " + e.what();
    }
    return std::nullopt;
}

json postings_to_json(const Postings& postings) {
    json out = json::object();
    for (const auto& [key, ids] : postings) out[key] = ids;
    return out;
}

Postings postings_from_json(const json& j) {
    Postings out;
    for (auto it = j.begin(); it != j.end(); ++it) out.emplace(it.key(), it.value().get<std::vector<std::uint32_t>>());
    return out;
}

}  // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "dev" || name == "development" || name == "validation") return Split::dev;
    if (name == "test") return Split::test;
    throw ConfigError("unknown split '" + std::string(name) + "'");
}

bool Example::has_token(std::string_view token) const {
    return std::binary_search(utterance_vocab.begin(), utterance_vocab.end(), token,
                              [](std::string_view a, std::string_view b) { return a < b; });
}

Example make_example(std::string id, std::string utterance, std::string program, Split split,
                     const Dialect& dialect) {
    Example ex;
    ProgramAst anon = anonymize(parse_program(program, dialect));
    ex.id = std::move(id);
    ex.utterance = std::move(utterance);
    ex.program = std::move(program);
    ex.anonymized = render(anon);
    ex.tmpl = Template{ex.anonymized};
    ex.ls_set = enumerate_local_structures(anon);
    ex.split = split;
    ex.utterance_tokens = tokenize_utterance(ex.utterance);
    ex.utterance_vocab = ex.utterance_tokens;
    std::sort(ex.utterance_vocab.begin(), ex.utterance_vocab.end());
    ex.utterance_vocab.erase(std::unique(ex.utterance_vocab.begin(), ex.utterance_vocab.end()),
                             ex.utterance_vocab.end());
    ex.symbols = anon.symbols();
    return ex;
}

PrepareResult prepare_examples(std::span<const RawExample> raw, const Dialect& dialect) {
    std::vector<std::optional<Example>> built(raw.size());
    std::vector<std::string> errors(raw.size());
    const auto n = static_cast<std::int64_t>(raw.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n; ++i) built[i] = try_make(raw[i], dialect, errors[i]);

    PrepareResult out;
    out.examples.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (built[i]) {
            out.examples.push_back(std::move(*built[i]));
        } else {
            out.failures.push_back(std::move(errors[i]));
        }
    }
    return out;
}

PrepareResult prepare_examples_serial(std::span<const RawExample> raw, const Dialect& dialect) {
    PrepareResult out;
    for (const auto& r : raw) {
        std::string error;
        if (auto ex = try_make(r, dialect, error)) {
            out.examples.push_back(std::move(*ex));
        } else {
            out.failures.push_back(std::move(error));
        }
    }
    return out;
}

std::vector<Example> Corpus::split(Split s) const {
    std::vector<Example> out;
    std::copy_if(examples.begin(), examples.end(), std::back_inserter(out),
                 [s](const Example& e) { return e.split == s; });
    return out;
}

const Example* Corpus::find(std::string_view id) const {
    auto it = std::find_if(examples.begin(), examples.end(), [&](const Example& e) { return e.id == id; });
    return it == examples.end() ? nullptr : &*it;
}

LoadReport load_examples(std::istream& in, const Dialect& dialect) {
    LoadReport report;
    report.corpus.dialect = dialect;

    std::vector<RawExample> raw;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    std::size_t records = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++records;
        try {
            json j = json::parse(line);
            RawExample r;
            r.id = j.contains("id") ? j.at("id").get<std::string>() : "ex" + std::to_string(records - 1);
            r.utterance = j.at("utterance").get<std::string>();
            r.program = j.at("program").get<std::string>();
            if (j.contains("split")) r.split = parse_split(j.at("split").get<std::string>());
            if (!seen.insert(r.id).second) {
                report.failures.push_back("line " + std::to_string(line_no) + ": duplicate id '" + r.id + "'");
                continue;
            }
            raw.push_back(std::move(r));
        } catch (const std::exception& e) {
            report.failures.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    auto prepared = prepare_examples(raw, dialect);
    report.corpus.examples = std::move(prepared.examples);
    report.failures.insert(report.failures.end(), prepared.failures.begin(), prepared.failures.end());

    if (records == 0) report.warnings.push_back("corpus is empty");
    if (records > 0 && report.failures.size() * 10 > records) {
        throw CorpusError(std::to_string(report.failures.size()) + " of " + std::to_string(records) +
                              " records failed to load",
                          report.failures);
    }
    return report;
}

LoadReport load_examples(const std::filesystem::path& path, const Dialect& dialect) {
    auto in = open_input(path);
    return load_examples(in, dialect);
}

void write_examples(std::ostream& out, std::span<const Example> examples) {
    for (const auto& e : examples) {
        json j = {{"id", e.id}, {"utterance", e.utterance}, {"program", e.program}, {"split", to_string(e.split)}};
        out << j.dump() << '\n';
    }
}

LsSet PredictionBundle::ls_union(int max_beams, int max_size) const {
    LsSet out;
    std::size_t limit = max_beams > 0 ? std::min(programs.size(), static_cast<std::size_t>(max_beams)) : programs.size();
    for (std::size_t i = 0; i < limit; ++i) {
        if (programs[i]) out.merge(enumerate_local_structures(*programs[i], max_size));
    }
    return out;
}

std::size_t PredictionBundle::usable_count() const {
    return static_cast<std::size_t>(std::count_if(programs.begin(), programs.end(), [](const auto& p) { return p.has_value(); }));
}

PredictionBundle make_prediction_bundle(std::string id, std::vector<std::string> beams, const Dialect& dialect) {
    PredictionBundle b;
    b.id = std::move(id);
    for (const auto& beam : beams) {
        auto fixed = repair_parentheses(beam, dialect);
        b.repaired.push_back(fixed.status == RepairStatus::repaired);
        if (fixed.usable()) {
            b.programs.emplace_back(anonymize(parse_program(fixed.text, dialect)));
        } else {
            b.programs.emplace_back(std::nullopt);
        }
    }
    b.beams = std::move(beams);
    return b;
}

PredictionLoad load_predictions(std::istream& in, const Dialect& dialect,
                                const std::vector<std::string>* known_test_ids) {
    PredictionLoad out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
            auto id = j.at("id").get<std::string>();
            auto beams = j.at("beams").get<std::vector<std::string>>();
            if (known_test_ids &&
                std::find(known_test_ids->begin(), known_test_ids->end(), id) == known_test_ids->end()) {
                out.warnings.push_back("prediction id '" + id + "' is not in the test split");
            }
            auto bundle = make_prediction_bundle(id, std::move(beams), dialect);
            if (bundle.usable_count() == 0) out.warnings.push_back("no usable beam for '" + id + "'");
            out.bundles.insert_or_assign(id, std::move(bundle));
        } catch (const json::exception& e) {
            out.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

PredictionLoad load_predictions(const std::filesystem::path& path, const Dialect& dialect,
                                const std::vector<std::string>* known_test_ids) {
    auto in = open_input(path);
    return load_predictions(in, dialect, known_test_ids);
}

Postings build_ls_postings(std::span<const Example> pool) {
    Postings out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (const auto& [canon, e] : pool[i].ls_set) out[canon].push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

Postings build_token_postings(std::span<const Example> pool) {
    Postings out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (const auto& tok : pool[i].utterance_vocab) out[tok].push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

CorpusIndex::Stats CorpusIndex::stats() const {
    Stats s;
    s.examples = example_ids.size();
    s.templates = std::set<std::string>(templates.begin(), templates.end()).size();
    s.local_structures = ls_postings.size();
    return s;
}

CorpusIndex build_indexes(std::span<const Example> pool, const IndexOptions& options) {
    CorpusIndex index;
    std::vector<std::vector<std::string>> utterance_docs;
    std::vector<std::vector<std::string>> symbol_docs;
    std::vector<LsSet> ls_docs;
    for (const auto& ex : pool) {
        index.example_ids.push_back(ex.id);
        index.templates.push_back(ex.tmpl.text);
        utterance_docs.push_back(ex.utterance_tokens);
        symbol_docs.push_back(ex.symbols);
        if (options.tfidf) ls_docs.push_back(ex.ls_set);
    }
    index.ls_postings = build_ls_postings(pool);
    index.token_postings = build_token_postings(pool);
    index.utterance_bm25 = Bm25Index(std::move(utterance_docs), options.k1, options.b);
    index.symbol_bm25 = Bm25Index(std::move(symbol_docs), options.k1, options.b);
    if (options.tfidf) index.tfidf.emplace(ls_docs, options.tfidf_max_size);
    return index;
}

void save_index(const CorpusIndex& index, std::ostream& out) {
    json j;
    j["example_ids"] = index.example_ids;
    j["templates"] = index.templates;
    j["bm25"] = {{"k1", index.utterance_bm25.k1()}, {"b", index.utterance_bm25.b()}};
    j["utterance_docs"] = index.utterance_bm25.documents();
    j["symbol_docs"] = index.symbol_bm25.documents();
    j["ls_postings"] = postings_to_json(index.ls_postings);
    j["token_postings"] = postings_to_json(index.token_postings);
    if (index.tfidf) {
        json vectors = json::array();
        for (const auto& v : index.tfidf->vectors()) vectors.push_back(v);
        j["tfidf"] = {{"max_size", index.tfidf->max_size()},
                      {"terms", index.tfidf->vocabulary()},
                      {"idf", index.tfidf->idf_weights()},
                      {"vectors", std::move(vectors)}};
    } else {
        j["tfidf"] = nullptr;
    }
    out << kIndexMagic << ' ' << CorpusIndex::kVersion << '\n' << j.dump() << '\n';
}

void save_index(const CorpusIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    save_index(index, out);
}

CorpusIndex load_index(std::istream& in) {
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    int version = -1;
    hs >> magic >> version;
    if (magic != kIndexMagic) throw IndexVersionError("not a demosel index file");
    if (version != CorpusIndex::kVersion) {
        throw IndexVersionError("index version " + std::to_string(version) + " does not match expected " +
                                std::to_string(CorpusIndex::kVersion));
    }

    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("corrupt index body: ") + e.what());
    }
    CorpusIndex index;
    index.example_ids = j.at("example_ids").get<std::vector<std::string>>();
    index.templates = j.at("templates").get<std::vector<std::string>>();
    double k1 = j.at("bm25").at("k1").get<double>();
    double b = j.at("bm25").at("b").get<double>();
    index.utterance_bm25 = Bm25Index(j.at("utterance_docs").get<std::vector<std::vector<std::string>>>(), k1, b);
    index.symbol_bm25 = Bm25Index(j.at("symbol_docs").get<std::vector<std::vector<std::string>>>(), k1, b);
    index.ls_postings = postings_from_json(j.at("ls_postings"));
    index.token_postings = postings_from_json(j.at("token_postings"));
    if (!j.at("tfidf").is_null()) {
        const auto& t = j.at("tfidf");
        std::vector<SparseVector> vectors;
        for (const auto& v : t.at("vectors")) vectors.push_back(v.get<SparseVector>());
        index.tfidf = LsTfidf::from_parts(t.at("terms").get<std::vector<std::string>>(),
                                          t.at("idf").get<std::vector<double>>(), std::move(vectors),
                                          t.at("max_size").get<int>());
    }
    return index;
}

CorpusIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return load_index(in);
}

}  // namespace demosel
