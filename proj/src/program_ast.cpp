#include "demosel/program_ast.hpp"

#include <algorithm>
#include <cctype>

namespace demosel {
namespace {

enum class TokKind { lparen, rparen, comma, string, ident, end };

struct Token {
    TokKind kind;
    std::string text;
    std::size_t pos;
    char quote = 0;
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_quote(char c) { return c == '"' || c == '\''; }
bool is_delim(char c) { return c == '(' || c == ')' || c == ',' || is_quote(c) || is_space(c); }

// [+-]? digits [. digits?] | [+-]? . digits
bool is_number(std::string_view s) {
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
    bool digits = false;
    bool dot = false;
    for (char c : s) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            return false;
        }
    }
    return digits;
}

// Reads a quoted segment starting at `i`; returns the index one past the
// closing quote, or npos when unterminated.
std::size_t read_string(std::string_view text, std::size_t i, std::string& out) {
    char q = text[i];
    for (std::size_t j = i + 1; j < text.size(); ++j) {
        char c = text[j];
        if (c == '\\' && j + 1 < text.size()) {
            out.push_back(text[++j]);
        } else if (c == q) {
            return j + 1;
        } else {
            out.push_back(c);
        }
    }
    return std::string_view::npos;
}

std::vector<Token> lex(std::string_view text, bool lenient) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (is_space(c)) {
            ++i;
        } else if (c == '(') {
            tokens.push_back({TokKind::lparen, "(", i});
            ++i;
        } else if (c == ')') {
            tokens.push_back({TokKind::rparen, ")", i});
            ++i;
        } else if (c == ',') {
            tokens.push_back({TokKind::comma, ",", i});
            ++i;
        } else if (is_quote(c)) {
            std::string body;
            std::size_t next = read_string(text, i, body);
            if (next == std::string_view::npos) {
                if (!lenient) throw SyntaxError("unterminated string literal", i);
                next = text.size();
            }
            tokens.push_back({TokKind::string, std::move(body), i, c});
            i = next;
        } else {
            std::size_t j = i;
            while (j < text.size() && !is_delim(text[j])) ++j;
            tokens.push_back({TokKind::ident, std::string(text.substr(i, j - i)), i});
            i = j;
        }
    }
    tokens.push_back({TokKind::end, "", text.size()});
    return tokens;
}

class Parser {
  public:
    Parser(std::vector<Token> tokens, const Dialect& dialect)
        : tokens_(std::move(tokens)), dialect_(dialect) {}

    AstNode parse() {
        if (peek().kind == TokKind::end) throw SyntaxError("empty program", 0);
        AstNode node = term(false);
        if (peek().kind != TokKind::end) {
            throw SyntaxError("unexpected '" + peek().text + "' after program", peek().pos);
        }
        return node;
    }

  private:
    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    const Token& next() { return tokens_[pos_++]; }

    bool is_keyword(const Token& t) const {
        const auto& sfx = dialect_.keyword_suffix;
        return t.kind == TokKind::ident && !sfx.empty() && t.text.size() > sfx.size() &&
               t.text.ends_with(sfx);
    }

    AstNode leaf(const std::string& text) const {
        AstNode n;
        n.symbol = text;
        if (dialect_.numbers_are_values && is_number(text)) n.kind = NodeKind::value_number;
        return n;
    }

    AstNode term(bool value_slot) {
        const Token& t = peek();
        switch (t.kind) {
            case TokKind::string: {
                next();
                AstNode n;
                n.symbol = t.text;
                if (dialect_.quoted_strings_are_values) n.kind = NodeKind::value_string;
                n.quote = t.quote;
                return n;
            }
            case TokKind::ident:
                break;
            case TokKind::end:
                throw SyntaxError("unexpected end of program", t.pos);
            default:
                throw SyntaxError("expected a term but found '" + t.text + "'", t.pos);
        }

        if (is_keyword(t)) {
            const Token& kw = next();
            const Token& arg = peek();
            if (arg.kind != TokKind::ident && arg.kind != TokKind::string) {
                throw SyntaxError("keyword '" + kw.text + "' has no argument", arg.pos);
            }
            AstNode n;
            n.symbol = kw.text;
            n.keyword = true;
            n.children.push_back(term(value_slot));
            return n;
        }

        if (value_slot) {
            std::size_t run = 0;
            while (peek(run).kind == TokKind::ident && !is_keyword(peek(run))) ++run;
            TokKind after = peek(run).kind;
            if (after != TokKind::lparen && (run > 1 || !is_number(t.text) || !dialect_.numbers_are_values)) {
                AstNode n;
                n.kind = NodeKind::value_string;
                for (std::size_t i = 0; i < run; ++i) {
                    if (i) n.symbol.push_back(' ');
                    n.symbol += next().text;
                }
                return n;
            }
            if (after == TokKind::lparen && run > 1) {
                throw SyntaxError("expected ',' or ')' but found '" + peek(1).text + "'", peek(1).pos);
            }
        }

        const Token& id = next();
        if (peek().kind != TokKind::lparen) return leaf(id.text);

        AstNode n;
        n.symbol = id.text;
        next();  // (
        bool values = dialect_.value_parents.contains(n.symbol);
        while (true) {
            const Token& a = peek();
            if (a.kind == TokKind::comma || a.kind == TokKind::rparen) {
                throw SyntaxError("empty argument slot", a.pos);
            }
            n.children.push_back(term(values));
            const Token& sep = peek();
            if (sep.kind == TokKind::comma) {
                next();
            } else if (sep.kind == TokKind::rparen) {
                next();
                break;
            } else if (sep.kind == TokKind::end) {
                throw SyntaxError("unbalanced parentheses: missing ')'", sep.pos);
            } else {
                throw SyntaxError("expected ',' or ')' but found '" + sep.text + "'", sep.pos);
            }
        }
        return n;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    const Dialect& dialect_;
};

void render_into(const AstNode& node, std::string& out) {
    if (node.quote != 0) {
        out.push_back(node.quote);
        for (char c : node.symbol) {
            if (c == node.quote || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back(node.quote);
        return;
    }
    out += node.symbol;
    if (node.keyword) {
        out.push_back(' ');
        render_into(node.children.front(), out);
        return;
    }
    if (node.children.empty()) return;
    out += " (";
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += ", ";
        render_into(node.children[i], out);
    }
    out.push_back(')');
}

void collect_symbols(const AstNode& node, std::vector<std::string>& out) {
    out.push_back(node.symbol);
    for (const auto& c : node.children) collect_symbols(c, out);
}

std::size_t count_nodes(const AstNode& node) {
    std::size_t n = 1;
    for (const auto& c : node.children) n += count_nodes(c);
    return n;
}

void anonymize_in_place(AstNode& node) {
    if (node.kind == NodeKind::value_string) {
        node.symbol = std::string(kStringConstant);
        node.quote = 0;
    } else if (node.kind == NodeKind::value_number) {
        node.symbol = std::string(kNumberConstant);
    }
    for (auto& c : node.children) anonymize_in_place(c);
}

// Running parenthesis depth over `text`, skipping quoted strings. Returns
// false on a negative depth or an unterminated string.
bool scan_depth(std::string_view text, long& depth) {
    depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (is_quote(c)) {
            std::string ignored;
            std::size_t next = read_string(text, i, ignored);
            if (next == std::string_view::npos) return false;
            i = next - 1;
        } else if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (--depth < 0) return false;
        }
    }
    return true;
}

}  // namespace

Dialect Dialect::preset(std::string_view name) {
    Dialect d;
    d.name = std::string(name);
    if (name == "default" || name == "geoquery" || name == "covr") return d;
    if (name == "smcalflow-simple") {
        d.value_parents = {"LIKE"};
        d.keyword_suffix = "=";
        return d;
    }
    throw ConfigError("unknown dialect '" + std::string(name) + "'");
}

ProgramAst::ProgramAst(AstNode top, std::string source) : source_(std::move(source)) {
    root_.symbol = std::string(kRootSymbol);
    root_.children.push_back(std::move(top));
}

std::vector<std::string> ProgramAst::symbols() const {
    std::vector<std::string> out;
    collect_symbols(top(), out);
    return out;
}

std::size_t ProgramAst::symbol_count() const { return count_nodes(top()); }

ProgramAst parse_program(std::string_view text, const Dialect& dialect) {
    Parser parser(lex(text, false), dialect);
    return ProgramAst(parser.parse(), std::string(text));
}

std::string render(const AstNode& node) {
    std::string out;
    render_into(node, out);
    return out;
}

std::string render(const ProgramAst& ast) { return render(ast.top()); }

ProgramAst anonymize(const ProgramAst& ast) {
    AstNode top = ast.top();
    anonymize_in_place(top);
    std::string text = render(top);
    return ProgramAst(std::move(top), std::move(text));
}

Template to_template(const ProgramAst& ast) { return Template{render(anonymize(ast))}; }

bool parentheses_balanced(std::string_view text) {
    long depth = 0;
    return scan_depth(text, depth) && depth == 0;
}

RepairResult repair_parentheses(std::string_view text, const Dialect& dialect) {
    RepairResult unrepairable{std::string(text), RepairStatus::unrepairable};

    std::size_t cut = text.size();
    std::size_t present = 0;
    while (cut > 0 && (text[cut - 1] == ')' || is_space(text[cut - 1]))) {
        if (text[cut - 1] == ')') ++present;
        --cut;
    }
    std::string_view prefix = text.substr(0, cut);
    long needed = 0;
    if (!scan_depth(prefix, needed)) return unrepairable;

    RepairResult result{std::string(text), RepairStatus::unchanged};
    if (static_cast<std::size_t>(needed) != present) {
        result.text = std::string(prefix) + std::string(static_cast<std::size_t>(needed), ')');
        result.status = RepairStatus::repaired;
    }
    try {
        parse_program(result.text, dialect);
    } catch (const SyntaxError&) {
        return unrepairable;
    }
    return result;
}

std::vector<std::string> scan_symbols(std::string_view text, const Dialect& dialect) {
    std::vector<std::string> out;
    for (const auto& t : lex(text, true)) {
        if (t.kind == TokKind::string) {
            out.emplace_back(dialect.quoted_strings_are_values ? kStringConstant : std::string_view(t.text));
        } else if (t.kind == TokKind::ident) {
            out.push_back(dialect.numbers_are_values && is_number(t.text) ? std::string(kNumberConstant) : t.text);
        }
    }
    return out;
}

std::string_view to_string(RepairStatus status) {
    switch (status) {
        case RepairStatus::unchanged: return "unchanged";
        case RepairStatus::repaired: return "repaired";
        case RepairStatus::unrepairable: return "unrepairable";
    }
    return "?";
}

}  // namespace demosel
