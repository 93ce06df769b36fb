#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nsed/common.hpp"
#include "nsed/rng.hpp"

namespace nsed {

// Sentinel label id for the reserved empty label; never interned.
inline constexpr int kEpsilonLabel = -1;

// Bijective string <-> dense integer id interning for node labels.
class LabelAlphabet {
public:
    int intern(const std::string& name);
    std::optional<int> id_of(const std::string& name) const;
    const std::string& name(int id) const;
    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

// Simple undirected graph with one categorical label per node.
// Immutable after construction; edges are stored both as a sorted set of
// (u < v) pairs and as adjacency lists.
class LabeledGraph {
public:
    LabeledGraph() = default;
    LabeledGraph(std::vector<int> labels, std::vector<std::pair<int, int>> edges,
                 std::string id = {});

    int node_count() const { return static_cast<int>(labels_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int label(int v) const { return labels_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }
    int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }
    bool has_edge(int u, int v) const;

    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    // Original node indices when this graph was extracted from another
    // (k-hop neighborhoods, BFS samples); empty otherwise.
    const std::vector<int>& origin() const { return origin_; }
    void set_origin(std::vector<int> origin) { origin_ = std::move(origin); }

    bool connected() const;

private:
    std::string id_;
    std::vector<int> labels_;
    std::vector<std::pair<int, int>> edges_; // normalized u < v, sorted
    std::vector<std::vector<int>> adj_;
    std::vector<int> origin_;
};

// BFS hop distances from source; unreachable nodes get -1.
std::vector<int> bfs_distances(const LabeledGraph& g, int source);

struct ParseOptions {
    bool allow_disconnected = false; // power-user override
};

// One JSON object per line: {"id": optional, "nodes": [label, ...],
// "edges": [[u, v], ...]}. line_no is used in error messages only.
LabeledGraph parse_graph(const std::string& record, LabelAlphabet& alphabet, int line_no = 0,
                         const ParseOptions& opts = {});

std::string serialize_graph(const LabeledGraph& g, const LabelAlphabet& alphabet);

// Induced subgraph on all nodes within k hops of center. Node indices are
// remapped compactly in ascending original order; origin() records the map.
LabeledGraph khop_neighborhood(const LabeledGraph& g, int center, int k);

// Connected induced subgraph grown by randomized BFS from a uniform root,
// truncated to max_nodes. Frontier order is shuffled so truncation never
// biases toward low node ids. Deterministic given the generator state.
LabeledGraph random_bfs_sample(const LabeledGraph& g, int max_depth, int max_nodes, Rng& rng);

// Upper bound on the edge count of the longest simple path. Defaults to
// node_count - 1; refine_trees switches to the exact diameter when the
// graph is a tree.
int longest_path_upper_bound(const LabeledGraph& g, bool refine_trees = false);

// A shared alphabet plus an id-addressable set of graphs; the on-disk form
// is JSON-lines in the parse_graph format.
class GraphStore {
public:
    LabelAlphabet& alphabet() { return alphabet_; }
    const LabelAlphabet& alphabet() const { return alphabet_; }

    int add(LabeledGraph g); // returns index; id must be unique and nonempty
    const LabeledGraph& by_id(const std::string& id) const;
    const LabeledGraph* find(const std::string& id) const;
    const std::vector<LabeledGraph>& graphs() const { return graphs_; }
    std::size_t size() const { return graphs_.size(); }

    void load(std::istream& in, const ParseOptions& opts = {});
    void save(std::ostream& out) const;
    static GraphStore load_file(const std::string& path, const ParseOptions& opts = {});
    void save_file(const std::string& path) const;

private:
    LabelAlphabet alphabet_;
    std::vector<LabeledGraph> graphs_;
    std::unordered_map<std::string, int> by_id_;
};

} // namespace nsed
