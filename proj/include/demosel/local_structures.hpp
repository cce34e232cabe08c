#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "demosel/program_ast.hpp"

namespace demosel {

inline constexpr std::string_view kChildArrow = " -> ";
inline constexpr std::string_view kSiblingArrow = " <-> ";

// Tree of a program plus edges between consecutive arguments. Node 0 is the
// `<root>` marker; the rest follow pre-order.
struct StructureGraph {
    std::vector<std::string> symbols;
    std::vector<int> depth;
    std::vector<int> parent;  // -1 for the root
    std::vector<std::vector<int>> children;
    std::vector<std::pair<int, int>> tree_edges;
    std::vector<std::pair<int, int>> sibling_edges;

    std::size_t node_count() const { return symbols.size(); }
    bool is_sibling_edge(int a, int b) const;
};

StructureGraph build_structure_graph(const ProgramAst& ast);

// A local structure identified by its canonical linearization.
struct LocalStructure {
    std::string canonical;
    int size = 0;

    bool operator==(const LocalStructure&) const = default;
    auto operator<=>(const LocalStructure&) const = default;
};

// Distinct local structures of one or more programs, with how many times each
// occurs (tf for the tf-idf vectors).
class LsSet {
  public:
    struct Entry {
        int size = 0;
        int occurrences = 0;
    };
    using Map = std::map<std::string, Entry, std::less<>>;

    void add(std::string canonical, int size, int occurrences = 1);
    void merge(const LsSet& other);

    bool contains(std::string_view canonical) const { return map_.find(canonical) != map_.end(); }
    std::size_t size() const { return map_.size(); }
    bool empty() const { return map_.empty(); }
    int size_of(std::string_view canonical) const;
    // Throws std::out_of_range when absent.
    const Entry& at(std::string_view canonical) const;

    LsSet restricted(int max_size) const;
    // Size-1 structures, i.e. the distinct program symbols.
    LsSet symbols() const { return of_size(1); }
    LsSet of_size(int size) const;
    std::vector<LocalStructure> structures() const;

    Map::const_iterator begin() const { return map_.begin(); }
    Map::const_iterator end() const { return map_.end(); }

    bool operator==(const LsSet& other) const;

  private:
    Map map_;
};

inline constexpr int kUnboundedSize = 0;

// Every valid local structure with at most `max_size` nodes (kUnboundedSize
// for no limit). A fragment is valid when its induced subgraph is connected
// and a sibling edge joins two of its nodes iff both are leaves of the
// fragment, which leaves three shapes: a downward path, a downward path
// ending in a consecutive sibling pair, or a bare sibling pair.
LsSet enumerate_local_structures(const StructureGraph& g, int max_size = kUnboundedSize);
LsSet enumerate_local_structures(const ProgramAst& ast, int max_size = kUnboundedSize);

// Canonical strings for the two shapes, given node symbols top-down.
std::string path_canonical(std::span<const std::string> path_symbols);
std::string fork_canonical(std::span<const std::string> path_symbols, std::string_view left,
                           std::string_view right);

// Union of the structures of several (anonymized, repaired) candidate programs.
LsSet ls_union(std::span<const ProgramAst> beams, int max_size = kUnboundedSize);

}  // namespace demosel
