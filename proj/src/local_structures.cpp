#include "demosel/local_structures.hpp"

#include <algorithm>
#include <stdexcept>

namespace demosel {
namespace {

void add_node(StructureGraph& g, const AstNode& node, int parent, int depth) {
    int id = static_cast<int>(g.symbols.size());
    g.symbols.push_back(node.symbol);
    g.depth.push_back(depth);
    g.parent.push_back(parent);
    g.children.emplace_back();
    if (parent >= 0) {
        g.children[parent].push_back(id);
        g.tree_edges.emplace_back(parent, id);
    }
    for (const auto& child : node.children) add_node(g, child, id, depth + 1);
}

}  // namespace

bool StructureGraph::is_sibling_edge(int a, int b) const {
    if (a == b || parent[a] < 0 || parent[a] != parent[b]) return false;
    const auto& kids = children[parent[a]];
    auto ia = std::find(kids.begin(), kids.end(), a) - kids.begin();
    auto ib = std::find(kids.begin(), kids.end(), b) - kids.begin();
    return ia - ib == 1 || ib - ia == 1;
}

StructureGraph build_structure_graph(const ProgramAst& ast) {
    StructureGraph g;
    add_node(g, ast.root(), -1, 0);
    for (const auto& kids : g.children) {
        for (std::size_t i = 1; i < kids.size(); ++i) g.sibling_edges.emplace_back(kids[i - 1], kids[i]);
    }
    return g;
}

void LsSet::add(std::string canonical, int size, int occurrences) {
    auto [it, inserted] = map_.try_emplace(std::move(canonical), Entry{size, 0});
    it->second.occurrences += occurrences;
}

void LsSet::merge(const LsSet& other) {
    for (const auto& [canon, e] : other.map_) add(canon, e.size, e.occurrences);
}

const LsSet::Entry& LsSet::at(std::string_view canonical) const {
    auto it = map_.find(canonical);
    if (it == map_.end()) throw std::out_of_range("no local structure '" + std::string(canonical) + "'");
    return it->second;
}

int LsSet::size_of(std::string_view canonical) const {
    auto it = map_.find(canonical);
    return it == map_.end() ? 0 : it->second.size;
}

LsSet LsSet::restricted(int max_size) const {
    if (max_size == kUnboundedSize) return *this;
    LsSet out;
    for (const auto& [canon, e] : map_) {
        if (e.size <= max_size) out.map_.emplace(canon, e);
    }
    return out;
}

LsSet LsSet::of_size(int size) const {
    LsSet out;
    for (const auto& [canon, e] : map_) {
        if (e.size == size) out.map_.emplace(canon, e);
    }
    return out;
}

std::vector<LocalStructure> LsSet::structures() const {
    std::vector<LocalStructure> out;
    out.reserve(map_.size());
    for (const auto& [canon, e] : map_) out.push_back({canon, e.size});
    return out;
}

bool LsSet::operator==(const LsSet& other) const {
    if (map_.size() != other.map_.size()) return false;
    return std::equal(map_.begin(), map_.end(), other.map_.begin(), [](const auto& a, const auto& b) {
        return a.first == b.first && a.second.size == b.second.size &&
               a.second.occurrences == b.second.occurrences;
    });
}

std::string path_canonical(std::span<const std::string> path_symbols) {
    std::string out;
    for (std::size_t i = 0; i < path_symbols.size(); ++i) {
        if (i) out += kChildArrow;
        out += path_symbols[i];
    }
    return out;
}

std::string fork_canonical(std::span<const std::string> path_symbols, std::string_view left,
                           std::string_view right) {
    std::string out = path_canonical(path_symbols);
    if (!out.empty()) out += kChildArrow;
    out += left;
    out += kSiblingArrow;
    out += right;
    return out;
}

LsSet enumerate_local_structures(const StructureGraph& g, int max_size) {
    LsSet out;
    auto fits = [max_size](std::size_t size) {
        return max_size == kUnboundedSize || size <= static_cast<std::size_t>(max_size);
    };

    // Bare sibling pairs.
    if (fits(2)) {
        for (auto [a, b] : g.sibling_edges) out.add(fork_canonical({}, g.symbols[a], g.symbols[b]), 2);
    }

    // Downward paths from every start node, each optionally closed by a
    // consecutive pair of the last node's children.
    std::vector<std::string> path;
    for (std::size_t start = 0; start < g.node_count(); ++start) {
        // Iterative DFS keeping the current path in `path`.
        struct Frame {
            int node;
            std::size_t next_child;
        };
        std::vector<Frame> frames{{static_cast<int>(start), 0}};
        path.assign(1, g.symbols[start]);
        if (start != 0 && fits(1)) out.add(path.front(), 1);
        while (!frames.empty()) {
            Frame& f = frames.back();
            const auto& kids = g.children[f.node];
            if (f.next_child == 0 && fits(path.size() + 2)) {
                for (std::size_t i = 1; i < kids.size(); ++i) {
                    out.add(fork_canonical(path, g.symbols[kids[i - 1]], g.symbols[kids[i]]),
                            static_cast<int>(path.size() + 2));
                }
            }
            if (f.next_child < kids.size() && fits(path.size() + 1)) {
                int child = kids[f.next_child++];
                path.push_back(g.symbols[child]);
                out.add(path_canonical(path), static_cast<int>(path.size()));
                frames.push_back({child, 0});
            } else {
                frames.pop_back();
                path.pop_back();
            }
        }
    }
    return out;
}

LsSet enumerate_local_structures(const ProgramAst& ast, int max_size) {
    return enumerate_local_structures(build_structure_graph(ast), max_size);
}

LsSet ls_union(std::span<const ProgramAst> beams, int max_size) {
    if (beams.empty()) throw EmptyInput("ls_union needs at least one candidate program");
    LsSet out;
    for (const auto& beam : beams) out.merge(enumerate_local_structures(beam, max_size));
    return out;
}

}  // namespace demosel
