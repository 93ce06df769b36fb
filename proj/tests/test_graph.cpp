#include <doctest.h>

#include <sstream>

#include "nsed/graph.hpp"
#include "oracles.hpp"

using namespace nsed;

namespace {

LabeledGraph parse_one(const std::string& record, LabelAlphabet& alphabet) {
    return parse_graph(record, alphabet, 1);
}

} // namespace

TEST_CASE("parse_graph accepts the documented format") {
    LabelAlphabet alphabet;
    auto g = parse_one(R"({"nodes":["a","b"],"edges":[[0,1]]})", alphabet);
    CHECK(g.node_count() == 2);
    CHECK(g.edge_count() == 1);
    CHECK(alphabet.name(g.label(0)) == "a");
    CHECK(alphabet.name(g.label(1)) == "b");
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 0));

    auto single = parse_one(R"({"nodes":["a"],"edges":[]})", alphabet);
    CHECK(single.node_count() == 1);
    CHECK(single.edge_count() == 0);
}

TEST_CASE("parse_graph rejects invalid records with line numbers") {
    LabelAlphabet alphabet;
    CHECK_THROWS_WITH_AS(parse_graph(R"({"nodes":["a"],"edges":[[0,0]]})", alphabet, 7),
                         doctest::Contains("line 7"), ValidationError);
    CHECK_THROWS_AS(parse_one(R"({"nodes":["a","b"],"edges":[[0,2]]})", alphabet),
                    ValidationError);
    CHECK_THROWS_AS(parse_one(R"({"nodes":["a","b"],"edges":[[0,1],[1,0]]})", alphabet),
                    ValidationError);
    CHECK_THROWS_AS(parse_one("{not json", alphabet), ValidationError);
    CHECK_THROWS_AS(parse_one(R"({"nodes":[],"edges":[]})", alphabet), ValidationError);
    // Disconnected rejected unless overridden.
    CHECK_THROWS_AS(parse_one(R"({"nodes":["a","b"],"edges":[]})", alphabet), ValidationError);
    ParseOptions opts;
    opts.allow_disconnected = true;
    auto g = parse_graph(R"({"nodes":["a","b"],"edges":[]})", alphabet, 1, opts);
    CHECK(g.node_count() == 2);
    CHECK_FALSE(g.connected());
}

TEST_CASE("serialize/parse round-trip is structural identity") {
    Rng rng(2024);
    LabelAlphabet alphabet;
    for (int l = 0; l < 4; ++l) alphabet.intern("L" + std::to_string(l));
    for (int trial = 0; trial < 60; ++trial) {
        LabeledGraph g = testing::random_graph(rng, 12, 4);
        g.set_id("g" + std::to_string(trial));
        LabelAlphabet other;
        LabeledGraph back = parse_graph(serialize_graph(g, alphabet), other, 1);
        REQUIRE(back.node_count() == g.node_count());
        CHECK(back.edges() == g.edges());
        CHECK(back.id() == g.id());
        for (int v = 0; v < g.node_count(); ++v)
            CHECK(other.name(back.label(v)) == alphabet.name(g.label(v)));
    }
}

TEST_CASE("khop_neighborhood matches an independent BFS filter") {
    SUBCASE("path center") {
        LabelAlphabet a;
        auto path = parse_one(R"({"nodes":["a","b","c"],"edges":[[0,1],[1,2]]})", a);
        auto hood = khop_neighborhood(path, 1, 1);
        CHECK(hood.node_count() == 3);
        CHECK(hood.edge_count() == 2);
    }
    SUBCASE("k=0 keeps only the center") {
        LabelAlphabet a;
        auto path = parse_one(R"({"nodes":["a","b","c"],"edges":[[0,1],[1,2]]})", a);
        auto hood = khop_neighborhood(path, 2, 0);
        CHECK(hood.node_count() == 1);
        CHECK(a.name(hood.label(0)) == "c");
        CHECK(hood.origin() == std::vector<int>{2});
    }
    SUBCASE("random graphs against the BFS oracle") {
        Rng rng(11);
        for (int trial = 0; trial < 25; ++trial) {
            LabeledGraph g = testing::random_graph(rng, 100, 3, 0.05);
            int center = static_cast<int>(rng.uniform_u64(static_cast<std::uint64_t>(g.node_count())));
            auto hood = khop_neighborhood(g, center, 2);
            auto dist = bfs_distances(g, center);
            std::vector<int> expected;
            for (int v = 0; v < g.node_count(); ++v)
                if (dist[static_cast<std::size_t>(v)] >= 0 && dist[static_cast<std::size_t>(v)] <= 2)
                    expected.push_back(v);
            CHECK(hood.origin() == expected);
            // Every kept edge must exist in g; every g edge inside the set
            // must be kept.
            int inside = 0;
            for (auto [u, v] : g.edges()) {
                bool u_in = dist[static_cast<std::size_t>(u)] >= 0 && dist[static_cast<std::size_t>(u)] <= 2;
                bool v_in = dist[static_cast<std::size_t>(v)] >= 0 && dist[static_cast<std::size_t>(v)] <= 2;
                if (u_in && v_in) ++inside;
            }
            CHECK(hood.edge_count() == inside);
        }
    }
}

TEST_CASE("random_bfs_sample is connected, induced and deterministic") {
    Rng gen(5);
    LabeledGraph g = testing::random_graph(gen, 60, 3, 0.08);

    SUBCASE("single node graph and max_nodes=1") {
        LabelAlphabet a;
        auto one = parse_one(R"({"nodes":["z"],"edges":[]})", a);
        Rng r1(9);
        auto s = random_bfs_sample(one, 3, 5, r1);
        CHECK(s.node_count() == 1);
        Rng r2(9);
        auto root_only = random_bfs_sample(g, 4, 1, r2);
        CHECK(root_only.node_count() == 1);
    }
    SUBCASE("determinism under a fixed seed") {
        Rng r1(42), r2(42);
        auto s1 = random_bfs_sample(g, 3, 10, r1);
        auto s2 = random_bfs_sample(g, 3, 10, r2);
        CHECK(s1.origin() == s2.origin());
        CHECK(s1.edges() == s2.edges());
    }
    SUBCASE("always connected and induced") {
        Rng r(77);
        for (int trial = 0; trial < 40; ++trial) {
            auto s = random_bfs_sample(g, 3, 8, r);
            CHECK(s.connected());
            REQUIRE(static_cast<int>(s.origin().size()) == s.node_count());
            // Induced: edge in sample iff edge in g between origin nodes.
            for (int u = 0; u < s.node_count(); ++u)
                for (int v = u + 1; v < s.node_count(); ++v)
                    CHECK(s.has_edge(u, v) ==
                          g.has_edge(s.origin()[static_cast<std::size_t>(u)],
                                     s.origin()[static_cast<std::size_t>(v)]));
        }
    }
}

TEST_CASE("longest_path_upper_bound") {
    LabelAlphabet a;
    auto path4 = parse_one(R"({"nodes":["a","a","a","a"],"edges":[[0,1],[1,2],[2,3]]})", a);
    CHECK(longest_path_upper_bound(path4) == 3);
    CHECK(longest_path_upper_bound(path4, true) == 3);

    auto triangle = parse_one(R"({"nodes":["a","a","a"],"edges":[[0,1],[1,2],[0,2]]})", a);
    CHECK(longest_path_upper_bound(triangle) == 2);

    auto star5 = parse_one(
        R"({"nodes":["a","a","a","a","a"],"edges":[[0,1],[0,2],[0,3],[0,4]]})", a);
    CHECK(longest_path_upper_bound(star5) == 4);       // loose default
    CHECK(longest_path_upper_bound(star5, true) == 2); // tree diameter

    ParseOptions opts;
    opts.allow_disconnected = true;
    auto disc = parse_graph(R"({"nodes":["a","b"],"edges":[]})", a, 1, opts);
    CHECK_THROWS_AS(longest_path_upper_bound(disc), ValidationError);
}

TEST_CASE("GraphStore load/save round trip") {
    std::string text = R"({"id":"x","nodes":["a","b"],"edges":[[0,1]]})"
                       "\n"
                       R"({"id":"y","nodes":["c"],"edges":[]})"
                       "\n";
    std::istringstream in(text);
    GraphStore store;
    store.load(in);
    CHECK(store.size() == 2);
    CHECK(store.by_id("x").node_count() == 2);
    CHECK(store.find("nope") == nullptr);
    CHECK_THROWS_AS(store.by_id("nope"), ValidationError);

    std::ostringstream out;
    store.save(out);
    CHECK(out.str() == text);
}
