#include "nsed/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>

#include <json.hpp>

namespace nsed {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

int LabelAlphabet::intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
}

std::optional<int> LabelAlphabet::id_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& LabelAlphabet::name(int id) const {
    contract(id >= 0 && id < size(), "label id out of range");
    return names_[static_cast<std::size_t>(id)];
}

LabeledGraph::LabeledGraph(std::vector<int> labels, std::vector<std::pair<int, int>> edges,
                           std::string id)
    : id_(std::move(id)), labels_(std::move(labels)) {
    const int n = node_count();
    adj_.resize(static_cast<std::size_t>(n));
    edges_.reserve(edges.size());
    for (auto [u, v] : edges) {
        contract(u >= 0 && u < n && v >= 0 && v < n, "edge endpoint out of range");
        contract(u != v, "self-loop");
        if (u > v) std::swap(u, v);
        edges_.emplace_back(u, v);
    }
    std::sort(edges_.begin(), edges_.end());
    contract(std::adjacent_find(edges_.begin(), edges_.end()) == edges_.end(), "duplicate edge");
    for (auto [u, v] : edges_) {
        adj_[static_cast<std::size_t>(u)].push_back(v);
        adj_[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
}

bool LabeledGraph::has_edge(int u, int v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(u, v));
}

bool LabeledGraph::connected() const {
    if (node_count() <= 1) return true;
    auto dist = bfs_distances(*this, 0);
    return std::find(dist.begin(), dist.end(), -1) == dist.end();
}

std::vector<int> bfs_distances(const LabeledGraph& g, int source) {
    contract(source >= 0 && source < g.node_count(), "bfs source out of range");
    std::vector<int> dist(static_cast<std::size_t>(g.node_count()), -1);
    std::deque<int> queue{source};
    dist[static_cast<std::size_t>(source)] = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int u : g.neighbors(v)) {
            if (dist[static_cast<std::size_t>(u)] < 0) {
                dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
                queue.push_back(u);
            }
        }
    }
    return dist;
}

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
    throw ValidationError("line " + std::to_string(line_no) + ": " + what);
}

} // namespace

LabeledGraph parse_graph(const std::string& record, LabelAlphabet& alphabet, int line_no,
                         const ParseOptions& opts) {
    json obj = json::parse(record, nullptr, false);
    if (obj.is_discarded()) parse_fail(line_no, "malformed JSON");
    if (!obj.is_object()) parse_fail(line_no, "expected a JSON object");
    if (!obj.contains("nodes") || !obj["nodes"].is_array())
        parse_fail(line_no, "missing \"nodes\" array");
    const auto& nodes = obj["nodes"];
    if (nodes.empty()) parse_fail(line_no, "graph has no nodes");

    std::vector<int> labels;
    labels.reserve(nodes.size());
    for (const auto& lbl : nodes) {
        if (!lbl.is_string()) parse_fail(line_no, "node label must be a string");
        labels.push_back(alphabet.intern(lbl.get<std::string>()));
    }

    const int n = static_cast<int>(labels.size());
    std::vector<std::pair<int, int>> edges;
    if (obj.contains("edges")) {
        if (!obj["edges"].is_array()) parse_fail(line_no, "\"edges\" must be an array");
        std::vector<std::pair<int, int>> seen;
        for (const auto& e : obj["edges"]) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number_integer())
                parse_fail(line_no, "edge must be a pair of integers");
            int u = e[0].get<int>();
            int v = e[1].get<int>();
            if (u < 0 || u >= n || v < 0 || v >= n)
                parse_fail(line_no, "edge endpoint out of range: [" + std::to_string(u) + "," +
                                        std::to_string(v) + "]");
            if (u == v) parse_fail(line_no, "self-loop on node " + std::to_string(u));
            auto key = std::minmax(u, v);
            seen.emplace_back(key.first, key.second);
            edges.emplace_back(u, v);
        }
        std::sort(seen.begin(), seen.end());
        auto dup = std::adjacent_find(seen.begin(), seen.end());
        if (dup != seen.end())
            parse_fail(line_no, "duplicate edge [" + std::to_string(dup->first) + "," +
                                    std::to_string(dup->second) + "]");
    }

    std::string id;
    if (obj.contains("id")) {
        if (!obj["id"].is_string()) parse_fail(line_no, "\"id\" must be a string");
        id = obj["id"].get<std::string>();
    }

    LabeledGraph g(std::move(labels), std::move(edges), std::move(id));
    if (!opts.allow_disconnected && !g.connected())
        parse_fail(line_no, "graph is disconnected (pass allow_disconnected to override)");
    return g;
}

std::string serialize_graph(const LabeledGraph& g, const LabelAlphabet& alphabet) {
    ordered_json obj;
    if (!g.id().empty()) obj["id"] = g.id();
    ordered_json nodes = ordered_json::array();
    for (int v = 0; v < g.node_count(); ++v) nodes.push_back(alphabet.name(g.label(v)));
    obj["nodes"] = std::move(nodes);
    ordered_json edges = ordered_json::array();
    for (auto [u, v] : g.edges()) edges.push_back(ordered_json::array({u, v}));
    obj["edges"] = std::move(edges);
    return obj.dump();
}

LabeledGraph khop_neighborhood(const LabeledGraph& g, int center, int k) {
    require(center >= 0 && center < g.node_count(), "khop center out of range");
    require(k >= 0, "khop count must be nonnegative");
    auto dist = bfs_distances(g, center);

    std::vector<int> kept;
    for (int v = 0; v < g.node_count(); ++v)
        if (dist[static_cast<std::size_t>(v)] >= 0 && dist[static_cast<std::size_t>(v)] <= k)
            kept.push_back(v);

    std::vector<int> remap(static_cast<std::size_t>(g.node_count()), -1);
    std::vector<int> labels;
    labels.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        remap[static_cast<std::size_t>(kept[i])] = static_cast<int>(i);
        labels.push_back(g.label(kept[i]));
    }

    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : g.edges()) {
        int ru = remap[static_cast<std::size_t>(u)];
        int rv = remap[static_cast<std::size_t>(v)];
        if (ru >= 0 && rv >= 0) edges.emplace_back(ru, rv);
    }

    LabeledGraph out(std::move(labels), std::move(edges));
    out.set_origin(std::move(kept));
    return out;
}

LabeledGraph random_bfs_sample(const LabeledGraph& g, int max_depth, int max_nodes, Rng& rng) {
    require(g.node_count() >= 1, "random_bfs_sample needs a nonempty graph");
    require(max_depth >= 0 && max_nodes >= 1, "random_bfs_sample bounds must be positive");

    const int root = static_cast<int>(rng.uniform_u64(static_cast<std::uint64_t>(g.node_count())));
    std::vector<char> taken(static_cast<std::size_t>(g.node_count()), 0);
    std::vector<int> order{root};
    taken[static_cast<std::size_t>(root)] = 1;

    std::vector<int> frontier{root};
    for (int depth = 0; depth < max_depth && static_cast<int>(order.size()) < max_nodes; ++depth) {
        std::vector<int> next;
        std::vector<char> queued(static_cast<std::size_t>(g.node_count()), 0);
        for (int v : frontier)
            for (int u : g.neighbors(v))
                if (!taken[static_cast<std::size_t>(u)] && !queued[static_cast<std::size_t>(u)]) {
                    queued[static_cast<std::size_t>(u)] = 1;
                    next.push_back(u);
                }
        rng.shuffle(next);
        std::vector<int> admitted;
        for (int u : next) {
            if (static_cast<int>(order.size()) >= max_nodes) break;
            taken[static_cast<std::size_t>(u)] = 1;
            order.push_back(u);
            admitted.push_back(u);
        }
        if (admitted.empty()) break;
        frontier = std::move(admitted);
    }

    std::vector<int> kept = order;
    std::sort(kept.begin(), kept.end());
    std::vector<int> remap(static_cast<std::size_t>(g.node_count()), -1);
    std::vector<int> labels;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        remap[static_cast<std::size_t>(kept[i])] = static_cast<int>(i);
        labels.push_back(g.label(kept[i]));
    }
    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : g.edges()) {
        int ru = remap[static_cast<std::size_t>(u)];
        int rv = remap[static_cast<std::size_t>(v)];
        if (ru >= 0 && rv >= 0) edges.emplace_back(ru, rv);
    }
    LabeledGraph out(std::move(labels), std::move(edges));
    out.set_origin(std::move(kept));
    return out;
}

int longest_path_upper_bound(const LabeledGraph& g, bool refine_trees) {
    require(g.connected(), "longest_path_upper_bound requires a connected graph");
    const int n = g.node_count();
    if (n <= 1) return 0;
    if (refine_trees && g.edge_count() == n - 1) {
        // Double BFS gives the exact diameter of a tree, which on a tree is
        // also the longest simple path.
        auto d0 = bfs_distances(g, 0);
        int far = static_cast<int>(std::max_element(d0.begin(), d0.end()) - d0.begin());
        auto d1 = bfs_distances(g, far);
        return *std::max_element(d1.begin(), d1.end());
    }
    return n - 1;
}

int GraphStore::add(LabeledGraph g) {
    require(!g.id().empty(), "graph id must be nonempty");
    require(by_id_.find(g.id()) == by_id_.end(), "duplicate graph id: " + g.id());
    int idx = static_cast<int>(graphs_.size());
    by_id_.emplace(g.id(), idx);
    graphs_.push_back(std::move(g));
    return idx;
}

const LabeledGraph& GraphStore::by_id(const std::string& id) const {
    const LabeledGraph* g = find(id);
    require(g != nullptr, "unknown graph id: " + id);
    return *g;
}

const LabeledGraph* GraphStore::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &graphs_[static_cast<std::size_t>(it->second)];
}

void GraphStore::load(std::istream& in, const ParseOptions& opts) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        LabeledGraph g = parse_graph(line, alphabet_, line_no, opts);
        if (g.id().empty()) g.set_id("g" + std::to_string(line_no));
        add(std::move(g));
    }
}

void GraphStore::save(std::ostream& out) const {
    for (const auto& g : graphs_) out << serialize_graph(g, alphabet_) << '\n';
}

GraphStore GraphStore::load_file(const std::string& path, const ParseOptions& opts) {
    std::ifstream in(path);
    require(in.good(), "cannot open graph file: " + path);
    GraphStore store;
    store.load(in, opts);
    return store;
}

void GraphStore::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write graph file: " + path);
    save(out);
}

} // namespace nsed
