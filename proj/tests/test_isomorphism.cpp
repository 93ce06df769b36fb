#include <doctest.h>

#include "nsed/isomorphism.hpp"
#include "oracles.hpp"

using namespace nsed;

namespace {

LabeledGraph permuted_copy(const LabeledGraph& g, Rng& rng) {
    std::vector<int> perm(static_cast<std::size_t>(g.node_count()));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);
    std::vector<int> labels(static_cast<std::size_t>(g.node_count()));
    for (int v = 0; v < g.node_count(); ++v)
        labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] = g.label(v);
    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : g.edges())
        edges.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
    return LabeledGraph(std::move(labels), std::move(edges));
}

} // namespace

TEST_CASE("graph_isomorphic on permuted copies and near misses") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        LabeledGraph g = testing::random_graph(rng, 8, 3);
        LabeledGraph h = permuted_copy(g, rng);
        CHECK(graph_isomorphic(g, h));
        CHECK(graph_isomorphic(h, g));

        if (g.edge_count() >= 1) {
            // Drop one edge: never isomorphic (edge counts differ).
            auto edges = g.edges();
            edges.pop_back();
            LabeledGraph smaller(std::vector<int>(g.labels()), std::move(edges));
            CHECK_FALSE(graph_isomorphic(g, smaller));
        }
    }

    // Same degree sequence, different labels.
    LabeledGraph t1({0, 0, 0}, {{0, 1}, {1, 2}, {0, 2}});
    LabeledGraph t2({0, 0, 1}, {{0, 1}, {1, 2}, {0, 2}});
    CHECK_FALSE(graph_isomorphic(t1, t2));
}

TEST_CASE("subgraph_isomorphic finds planted subgraphs") {
    Rng rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        LabeledGraph g = testing::random_graph(rng, 10, 3);
        // Any BFS sample is an induced subgraph, hence also a plain subgraph.
        LabeledGraph q = random_bfs_sample(g, 2, 5, rng);
        CHECK(subgraph_isomorphic(q, g));
    }

    // Non-induced case: a 2-node edgeless query inside a single edge.
    LabeledGraph two_nodes({0, 0}, {});
    LabeledGraph one_edge({0, 0}, {{0, 1}});
    CHECK(subgraph_isomorphic(two_nodes, one_edge));
    CHECK_FALSE(subgraph_isomorphic(one_edge, two_nodes));

    // Label mismatch blocks embedding.
    LabeledGraph labeled_q({1}, {});
    CHECK_FALSE(subgraph_isomorphic(labeled_q, one_edge));
}
