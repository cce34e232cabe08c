#include "demosel/fixture.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "builtin_grammar.hpp"
#include "demosel/errors.hpp"

namespace demosel {
namespace {

using json = nlohmann::json;

// A template split into literal text and `{NT}` slots.
struct Segment {
    std::string text;
    int slot = -1;
};

struct CompiledRule {
    std::vector<Segment> program;
    std::vector<Segment> utterance;
    std::vector<std::string> slots;  // nonterminal per program slot
};

std::vector<std::pair<std::string, bool>> split_template(const std::string& tmpl,
                                                         const std::map<std::string, std::vector<GrammarRule>>& rules) {
    std::vector<std::pair<std::string, bool>> parts;
    std::string lit;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string::npos) {
                std::string name = tmpl.substr(i + 1, close - i - 1);
                if (rules.contains(name)) {
                    if (!lit.empty()) parts.emplace_back(std::move(lit), false);
                    lit.clear();
                    parts.emplace_back(std::move(name), true);
                    i = close;
                    continue;
                }
                throw ConfigError("unknown nonterminal '{" + name + "}' in \"" + tmpl + "\"");
            }
        }
        lit.push_back(tmpl[i]);
    }
    if (!lit.empty()) parts.emplace_back(std::move(lit), false);
    return parts;
}

CompiledRule compile_rule(const GrammarRule& rule, const std::map<std::string, std::vector<GrammarRule>>& rules) {
    CompiledRule out;
    for (auto& [text, is_slot] : split_template(rule.program, rules)) {
        if (is_slot) {
            out.program.push_back({"", static_cast<int>(out.slots.size())});
            out.slots.push_back(text);
        } else {
            out.program.push_back({text, -1});
        }
    }
    std::map<std::string, int> seen;
    for (auto& [text, is_slot] : split_template(rule.utterance, rules)) {
        if (!is_slot) {
            out.utterance.push_back({text, -1});
            continue;
        }
        int nth = seen[text]++;
        int slot = -1;
        for (std::size_t s = 0, count = 0; s < out.slots.size(); ++s) {
            if (out.slots[s] == text && static_cast<int>(count++) == nth) {
                slot = static_cast<int>(s);
                break;
            }
        }
        if (slot < 0) throw ConfigError("utterance \"" + rule.utterance + "\" uses {" + text + "} more often than its program");
        out.utterance.push_back({"", slot});
    }
    std::map<std::string, int> in_program;
    for (const auto& s : out.slots) ++in_program[s];
    if (in_program != seen) {
        throw ConfigError("program \"" + rule.program + "\" and utterance \"" + rule.utterance +
                          "\" use different nonterminals");
    }
    return out;
}

struct Derivation {
    const std::string* nt = nullptr;
    std::size_t rule = 0;
    std::vector<Derivation> kids;
};

class Generator {
public:
    explicit Generator(const FixtureGrammar& g) : grammar_(g) {
        g.validate();
        for (const auto& [nt, rules] : g.rules) {
            auto& compiled = compiled_[nt];
            std::vector<double> weights;
            for (std::size_t i = 0; i < rules.size(); ++i) {
                compiled.push_back(compile_rule(rules[i], g.rules));
                weights.push_back(rules[i].weight);
                if (compiled.back().slots.empty()) terminals_[nt].push_back(i);
            }
            choose_[nt] = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
        }
        check_base_cases();
    }

    Derivation derive(std::mt19937_64& rng) { return expand(grammar_.start, 0, rng); }

    std::string program(const Derivation& d) const { return render(d, true); }
    std::string utterance(const Derivation& d) const { return render(d, false); }

    // Copy of `d` with terminal choices resampled.
    Derivation perturb(const Derivation& d, double p, std::mt19937_64& rng) const {
        Derivation out = d;
        perturb_in_place(out, p, rng);
        return out;
    }

private:
    Derivation expand(const std::string& nt, int depth, std::mt19937_64& rng) {
        auto it = compiled_.find(nt);
        Derivation d;
        d.nt = &it->first;
        d.rule = depth >= grammar_.max_depth ? 0 : choose_.at(nt)(rng);
        for (const auto& slot : it->second[d.rule].slots) d.kids.push_back(expand(slot, depth + 1, rng));
        return d;
    }

    std::string render(const Derivation& d, bool as_program) const {
        const auto& rule = compiled_.at(*d.nt)[d.rule];
        std::string out;
        for (const auto& seg : as_program ? rule.program : rule.utterance) {
            out += seg.slot < 0 ? seg.text : render(d.kids[static_cast<std::size_t>(seg.slot)], as_program);
        }
        return out;
    }

    void perturb_in_place(Derivation& d, double p, std::mt19937_64& rng) const {
        if (d.kids.empty()) {
            auto it = terminals_.find(*d.nt);
            if (it == terminals_.end() || it->second.size() < 2) return;
            std::bernoulli_distribution flip(p);
            if (!flip(rng)) return;
            const auto& options = it->second;
            std::uniform_int_distribution<std::size_t> pick(0, options.size() - 2);
            std::size_t choice = options[pick(rng)];
            if (choice == d.rule) choice = options.back();
            d.rule = choice;
            return;
        }
        for (auto& k : d.kids) perturb_in_place(k, p, rng);
    }

    // Following first rules only must terminate.
    void check_base_cases() const {
        for (const auto& [nt, rules] : compiled_) {
            std::set<std::string> path;
            std::function<void(const std::string&)> visit = [&](const std::string& cur) {
                if (!path.insert(cur).second) {
                    throw ConfigError("first rule of '" + cur + "' does not terminate at the depth limit");
                }
                for (const auto& s : compiled_.at(cur).front().slots) visit(s);
                path.erase(cur);
            };
            visit(nt);
        }
    }

    const FixtureGrammar& grammar_;
    std::map<std::string, std::vector<CompiledRule>> compiled_;
    std::map<std::string, std::vector<std::size_t>> terminals_;
    std::map<std::string, std::discrete_distribution<std::size_t>> choose_;
};

struct Generated {
    std::string program;
    std::string utterance;
    Derivation derivation;
    LsSet structures;
    std::string tmpl;
};

template <class T>
void shuffle_seeded(std::vector<T>& v, std::mt19937_64& rng) {
    std::shuffle(v.begin(), v.end(), rng);
}

std::vector<std::size_t> iota_n(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace

void FixtureGrammar::validate() const {
    if (!rules.contains(start)) throw ConfigError("grammar start symbol '" + start + "' has no rules");
    if (max_depth < 1) throw ConfigError("grammar max_depth must be >= 1");
    if (beam_noise < 0.0 || beam_noise > 1.0) throw ConfigError("beam_noise must be in [0, 1]");
    if (beams < 1) throw ConfigError("beams must be >= 1");
    if (planted_size < 1) throw ConfigError("planted_size must be >= 1");
    if (max_symbols < 0) throw ConfigError("max_symbols must be >= 0");
    for (const auto& [nt, rs] : rules) {
        if (rs.empty()) throw ConfigError("nonterminal '" + nt + "' has no rules");
        for (const auto& r : rs) {
            if (!(r.weight > 0.0)) throw ConfigError("rule weights must be positive ('" + nt + "')");
            compile_rule(r, rules);
        }
    }
}

FixtureGrammar FixtureGrammar::from_json_text(std::string_view text) {
    FixtureGrammar g;
    try {
        auto j = json::parse(text);
        g.start = j.at("start").get<std::string>();
        g.max_depth = j.value("max_depth", g.max_depth);
        g.max_symbols = j.value("max_symbols", g.max_symbols);
        g.beam_noise = j.value("beam_noise", g.beam_noise);
        g.beams = j.value("beams", g.beams);
        g.planted_size = j.value("planted_size", g.planted_size);
        g.held_out = j.value("held_out", std::vector<std::string>{});
        for (const auto& [nt, rs] : j.at("rules").items()) {
            auto& out = g.rules[nt];
            for (const auto& r : rs) {
                out.push_back({r.at("program").get<std::string>(), r.at("utterance").get<std::string>(),
                               r.value("weight", 1.0)});
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed grammar: ") + e.what());
    }
    g.validate();
    return g;
}

FixtureGrammar FixtureGrammar::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grammar file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

FixtureGrammar FixtureGrammar::covr() { return from_json_text(detail::kCovrGrammar); }

std::string_view to_string(FixtureSplit s) {
    switch (s) {
        case FixtureSplit::iid: return "iid";
        case FixtureSplit::template_split: return "template";
        case FixtureSplit::held_out_ls: return "held-out-ls";
    }
    return "?";
}

FixtureSplit parse_fixture_split(std::string_view name) {
    if (name == "iid") return FixtureSplit::iid;
    if (name == "template") return FixtureSplit::template_split;
    if (name == "held-out-ls") return FixtureSplit::held_out_ls;
    throw ConfigError("unknown fixture split '" + std::string(name) + "' (iid, template, held-out-ls)");
}

Fixture gen_fixture(const FixtureGrammar& grammar, const FixtureOptions& options) {
    if (options.n_train == 0 || options.n_test == 0) throw ConfigError("fixture needs n_train > 0 and n_test > 0");
    Generator gen(grammar);
    std::mt19937_64 rng(options.seed);

    const std::size_t needed = options.n_train + options.n_test;
    const std::size_t target = options.split == FixtureSplit::iid ? needed : 3 * needed;
    const std::size_t max_attempts = 50 * target;

    std::vector<Generated> pool;
    std::unordered_set<std::string> seen;
    for (std::size_t attempt = 0; attempt < max_attempts && pool.size() < target; ++attempt) {
        Derivation d = gen.derive(rng);
        ProgramAst ast = parse_program(gen.program(d));
        if (grammar.max_symbols > 0 && static_cast<int>(ast.symbol_count()) > grammar.max_symbols) continue;
        std::string program = render(ast);
        if (!seen.insert(program).second) continue;
        ProgramAst anon = anonymize(ast);
        pool.push_back({program, gen.utterance(d), std::move(d),
                        enumerate_local_structures(anon, grammar.planted_size), render(anon)});
    }
    if (pool.size() < needed) {
        throw GenerationError("grammar yields only " + std::to_string(pool.size()) + " distinct programs, need " +
                              std::to_string(needed));
    }

    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    Fixture fx;

    auto sample = [&](std::vector<std::size_t> from, std::size_t n) {
        shuffle_seeded(from, rng);
        from.resize(std::min(n, from.size()));
        std::sort(from.begin(), from.end());
        return from;
    };

    switch (options.split) {
        case FixtureSplit::iid: {
            auto order = iota_n(pool.size());
            shuffle_seeded(order, rng);
            train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(options.n_train));
            test.assign(order.begin() + static_cast<std::ptrdiff_t>(options.n_train),
                        order.begin() + static_cast<std::ptrdiff_t>(needed));
            break;
        }
        case FixtureSplit::template_split: {
            std::map<std::string, std::vector<std::size_t>> by_template;
            for (std::size_t i = 0; i < pool.size(); ++i) by_template[pool[i].tmpl].push_back(i);
            std::vector<const std::vector<std::size_t>*> groups;
            for (const auto& [t, members] : by_template) groups.push_back(&members);
            shuffle_seeded(groups, rng);
            std::vector<std::size_t> test_side;
            std::vector<std::size_t> train_side;
            for (const auto* g : groups) {
                auto& side = test_side.size() < options.n_test ? test_side : train_side;
                side.insert(side.end(), g->begin(), g->end());
            }
            if (test_side.size() < options.n_test || train_side.size() < options.n_train) {
                throw GenerationError("not enough distinct templates for a template split of this size");
            }
            train = sample(train_side, options.n_train);
            test = sample(test_side, options.n_test);
            break;
        }
        case FixtureSplit::held_out_ls: {
            std::vector<std::string> candidates;
            if (!grammar.held_out.empty()) {
                candidates = grammar.held_out;
            } else {
                std::set<std::string> all;
                for (const auto& g : pool) {
                    for (const auto& [canon, e] : g.structures.of_size(grammar.planted_size)) all.insert(canon);
                }
                candidates.assign(all.begin(), all.end());
                shuffle_seeded(candidates, rng);
            }

            std::vector<char> in_test(pool.size(), 0);
            std::size_t n_test_side = 0;
            std::set<std::string> planted;
            // First pass prefers structures that are not too common, so the
            // test side mixes several of them.
            const std::size_t share = std::max<std::size_t>(1, options.n_test / 4);
            for (int pass = 0; pass < 2 && n_test_side < options.n_test; ++pass) {
                for (const auto& c : candidates) {
                    if (n_test_side >= options.n_test) break;
                    if (planted.contains(c)) continue;
                    std::vector<std::size_t> hits;
                    for (std::size_t i = 0; i < pool.size(); ++i) {
                        if (!in_test[i] && pool[i].structures.contains(c)) hits.push_back(i);
                    }
                    if (hits.empty()) continue;
                    if (pass == 0 && hits.size() > share) continue;
                    if (pool.size() - n_test_side - hits.size() < options.n_train) continue;
                    planted.insert(c);
                    for (auto i : hits) in_test[i] = 1;
                    n_test_side += hits.size();
                }
            }
            if (n_test_side < options.n_test) {
                throw GenerationError("could not withhold enough structures of size " +
                                      std::to_string(grammar.planted_size) + " for " +
                                      std::to_string(options.n_test) + " test examples");
            }
            std::vector<std::size_t> test_side;
            std::vector<std::size_t> train_side;
            for (std::size_t i = 0; i < pool.size(); ++i) (in_test[i] ? test_side : train_side).push_back(i);
            train = sample(train_side, options.n_train);
            test = sample(test_side, options.n_test);
            fx.planted.assign(planted.begin(), planted.end());
            break;
        }
    }

    auto width = std::to_string(std::max(options.n_train, options.n_test) - 1).size();
    auto make_id = [&](const char* prefix, std::size_t i) {
        std::string n = std::to_string(i);
        return std::string(prefix) + std::string(width - std::min(width, n.size()), '0') + n;
    };

    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& g = pool[train[i]];
        fx.examples.push_back({make_id("train-", i), g.utterance, g.program, Split::train});
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& g = pool[test[i]];
        std::string id = make_id("test-", i);
        fx.examples.push_back({id, g.utterance, g.program, Split::test});

        if (!fx.planted.empty()) {
            auto& mine = fx.planted_by_test[id];
            for (const auto& p : fx.planted) {
                if (g.structures.contains(p)) mine.push_back(p);
            }
        }

        std::mt19937_64 beam_rng(options.seed ^ stable_hash(id));
        auto& beams = fx.predictions[id];
        for (int b = 0; b < grammar.beams; ++b) {
            beams.push_back(render(parse_program(gen.program(gen.perturb(g.derivation, grammar.beam_noise, beam_rng)))));
        }
    }
    return fx;
}

Corpus fixture_corpus(const Fixture& fixture, const Dialect& dialect) {
    auto prepared = prepare_examples(fixture.examples, dialect);
    if (!prepared.failures.empty()) throw GenerationError("fixture produced unparseable programs: " + prepared.failures.front());
    return Corpus{dialect, std::move(prepared.examples)};
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& corpus_path,
                   const std::filesystem::path& predictions_path, const std::filesystem::path& planted_path) {
    auto open = [](const std::filesystem::path& p) {
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream out(p);
        if (!out) throw IoError("cannot write " + p.string());
        return out;
    };
    {
        auto out = open(corpus_path);
        for (const auto& r : fixture.examples) {
            out << json{{"id", r.id}, {"utterance", r.utterance}, {"program", r.program}, {"split", to_string(r.split)}}
                       .dump()
                << '\n';
        }
    }
    if (!predictions_path.empty()) {
        auto out = open(predictions_path);
        for (const auto& [id, beams] : fixture.predictions) out << json{{"id", id}, {"beams", beams}}.dump() << '\n';
    }
    if (!planted_path.empty()) {
        auto out = open(planted_path);
        json by_test = json::object();
        for (const auto& [id, ls] : fixture.planted_by_test) by_test[id] = ls;
        out << json{{"planted", fixture.planted}, {"by_test", by_test}}.dump(2) << '\n';
    }
}

}  // namespace demosel
