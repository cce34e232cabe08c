#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "demosel/errors.hpp"

namespace demosel {

inline constexpr std::string_view kRootSymbol = "<root>";
inline constexpr std::string_view kStringConstant = "string";
inline constexpr std::string_view kNumberConstant = "number";

enum class NodeKind { function, value_string, value_number };

struct AstNode {
    std::string symbol;
    NodeKind kind = NodeKind::function;
    // Quote character a value string was written with, 0 when bare.
    char quote = 0;
    // `key=` style node whose single child follows it without parentheses.
    bool keyword = false;
    std::vector<AstNode> children;

    bool is_value() const { return kind != NodeKind::function; }
    bool operator==(const AstNode&) const = default;
};

// Per-dataset notation settings. Quoted segments and numerals are the value
// literals every dataset shares; the rest covers dialects such as
// SMCalFlow-Simple where `name= LIKE (David Lax)` carries unquoted values.
struct Dialect {
    std::string name = "default";
    bool quoted_strings_are_values = true;
    bool numbers_are_values = true;
    // Leaf arguments of these functions are value strings; a run of bare
    // words in such an argument slot is joined into one value.
    std::set<std::string> value_parents;
    // When non-empty, an identifier ending in this suffix is a keyword that
    // takes the following term as its single child (`name= LIKE (...)`).
    std::string keyword_suffix;

    static Dialect preset(std::string_view name);
};

class ProgramAst {
  public:
    ProgramAst() = default;
    ProgramAst(AstNode top, std::string source);

    // Synthetic `<root>` node; its single child is the program's top term.
    const AstNode& root() const { return root_; }
    const AstNode& top() const { return root_.children.front(); }
    const std::string& source_text() const { return source_; }

    // Pre-order symbols of the program, excluding the root.
    std::vector<std::string> symbols() const;
    std::size_t symbol_count() const;

    bool operator==(const ProgramAst& other) const { return root_ == other.root_; }

  private:
    AstNode root_;
    std::string source_;
};

ProgramAst parse_program(std::string_view text, const Dialect& dialect = {});

// Canonical rendering: `f (a, b)`, keyword terms as `key= value`.
std::string render(const AstNode& node);
std::string render(const ProgramAst& ast);

ProgramAst anonymize(const ProgramAst& ast);

struct Template {
    std::string text;
    bool operator==(const Template&) const = default;
    auto operator<=>(const Template&) const = default;
};

Template to_template(const ProgramAst& ast);

enum class RepairStatus { unchanged, repaired, unrepairable };

struct RepairResult {
    std::string text;
    RepairStatus status = RepairStatus::unchanged;
    bool usable() const { return status != RepairStatus::unrepairable; }
};

// Fixes an imbalance of closing parentheses confined to the end of the
// program. Anything else comes back unchanged and flagged unrepairable.
RepairResult repair_parentheses(std::string_view text, const Dialect& dialect = {});

// True when parentheses outside of quoted strings are balanced and the
// running depth never goes negative.
bool parentheses_balanced(std::string_view text);

// Symbols found by a lexical scan, anonymized. Used on text that does not
// parse at all.
std::vector<std::string> scan_symbols(std::string_view text, const Dialect& dialect = {});

std::string_view to_string(RepairStatus status);

}  // namespace demosel
