#include "nsed/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <limits>
#include <set>
#include <thread>

namespace nsed {

LabeledGraph synthetic_graph(const SyntheticSpec& spec, LabelAlphabet& alphabet, Rng& rng) {
    require(spec.min_nodes >= 1 && spec.max_nodes >= spec.min_nodes, "bad synthetic size range");
    require(spec.label_count >= 1, "need at least one label");
    std::vector<int> label_ids;
    for (int i = 0; i < spec.label_count; ++i)
        label_ids.push_back(alphabet.intern("L" + std::to_string(i)));

    const int n = spec.min_nodes + static_cast<int>(rng.uniform_u64(
                                       static_cast<std::uint64_t>(spec.max_nodes - spec.min_nodes + 1)));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels)
        l = label_ids[static_cast<std::size_t>(rng.uniform_u64(label_ids.size()))];

    // Random attachment tree keeps everything connected.
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v)
        edges.emplace_back(static_cast<int>(rng.uniform_u64(static_cast<std::uint64_t>(v))), v);

    if (spec.kind == SyntheticSpec::Kind::ErdosRenyi && n >= 3) {
        std::set<std::pair<int, int>> have(edges.begin(), edges.end());
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (!have.count({u, v}) && rng.bernoulli(spec.edge_prob)) edges.emplace_back(u, v);
    }
    return LabeledGraph(std::move(labels), std::move(edges));
}

TargetStore decompose_targets(const LabeledGraph& g, int hops) {
    require(hops >= 0, "hops must be nonnegative");
    TargetStore store;
    store.entries.reserve(static_cast<std::size_t>(g.node_count()));
    for (int v = 0; v < g.node_count(); ++v)
        store.entries.push_back(TargetEntry{v, khop_neighborhood(g, v, hops)});
    return store;
}

std::vector<LabeledPairRecord> label_pairs(
    const GraphStore& store, const std::vector<std::pair<std::string, std::string>>& pairs,
    DistanceMode mode, const SearchLimits& limits, int threads) {
    const DistancePolicy policy =
        mode == DistanceMode::SED ? DistancePolicy::sed() : DistancePolicy::ged();
    std::vector<LabeledPairRecord> out(pairs.size());

    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, 16);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pairs.size()) return;
            const auto& [qid, tid] = pairs[i];
            const LabeledGraph& q = store.by_id(qid);
            const LabeledGraph& t = store.by_id(tid);
            ExactResult r = mode == DistanceMode::SED ? exact_sed(q, t, policy, limits)
                                                      : exact_ged(q, t, policy, limits);
            out[i] = LabeledPairRecord{qid,        tid,          r.bounds.lower,
                                       r.bounds.upper, r.complete, r.expansions};
        }
    };
    if (workers == 1 || pairs.size() < 2) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return out;
}

namespace {

// Connects the node set `nodes` (as a subgraph of g restricted to `edges`)
// by splicing in shortest g-paths between components.
void connect_within(const LabeledGraph& g, std::set<int>& nodes,
                    std::set<std::pair<int, int>>& edges) {
    auto component_of = [&](int start, const std::set<int>& in_set,
                            const std::set<std::pair<int, int>>& in_edges) {
        std::set<int> comp{start};
        std::deque<int> queue{start};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            for (int u : g.neighbors(v)) {
                auto key = std::minmax(u, v);
                if (in_set.count(u) && in_edges.count({key.first, key.second}) && !comp.count(u)) {
                    comp.insert(u);
                    queue.push_back(u);
                }
            }
        }
        return comp;
    };

    for (;;) {
        auto comp = component_of(*nodes.begin(), nodes, edges);
        if (comp.size() == nodes.size()) return;
        // BFS in the full target from the component to the nearest node of
        // another component; splice the path in.
        std::vector<int> parent(static_cast<std::size_t>(g.node_count()), -2);
        std::deque<int> queue;
        for (int v : comp) {
            parent[static_cast<std::size_t>(v)] = -1;
            queue.push_back(v);
        }
        int found = -1;
        while (!queue.empty() && found < 0) {
            int v = queue.front();
            queue.pop_front();
            for (int u : g.neighbors(v)) {
                if (parent[static_cast<std::size_t>(u)] != -2) continue;
                parent[static_cast<std::size_t>(u)] = v;
                if (nodes.count(u) && !comp.count(u)) {
                    found = u;
                    break;
                }
                queue.push_back(u);
            }
        }
        contract(found >= 0, "target graph is disconnected; cannot augment");
        for (int v = found; parent[static_cast<std::size_t>(v)] >= 0;
             v = parent[static_cast<std::size_t>(v)]) {
            int p = parent[static_cast<std::size_t>(v)];
            nodes.insert(v);
            nodes.insert(p);
            auto key = std::minmax(p, v);
            edges.insert({key.first, key.second});
        }
    }
}

} // namespace

std::vector<LabeledGraph> augment(const LabeledGraph& query, const NodeMapping& witness,
                                  bool witness_complete, const LabeledGraph& target, int count,
                                  Rng& rng) {
    require(witness_complete, "augmentation needs a complete witness mapping");
    require(count >= 0, "augment count must be nonnegative");

    LabeledGraph closest = witness_closest_subgraph(query, target, witness);

    std::vector<LabeledGraph> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::set<int> nodes(closest.origin().begin(), closest.origin().end());
        // A fully-deleted query leaves an empty closest subgraph; any
        // nonempty supergraph then preserves the SED, so seed arbitrarily.
        if (nodes.empty())
            nodes.insert(static_cast<int>(rng.uniform_u64(
                static_cast<std::uint64_t>(target.node_count()))));
        std::set<std::pair<int, int>> edges;
        for (auto [u, v] : closest.edges()) {
            auto key = std::minmax(closest.origin()[static_cast<std::size_t>(u)],
                                   closest.origin()[static_cast<std::size_t>(v)]);
            edges.insert({key.first, key.second});
        }

        // Random extra target nodes, then a random subset of target edges
        // available over the grown node set.
        for (int v = 0; v < target.node_count(); ++v)
            if (!nodes.count(v) && rng.bernoulli(0.5)) nodes.insert(v);
        for (auto [u, v] : target.edges())
            if (nodes.count(u) && nodes.count(v) && !edges.count({u, v}) && rng.bernoulli(0.5))
                edges.insert({u, v});

        connect_within(target, nodes, edges);

        std::vector<int> kept(nodes.begin(), nodes.end());
        std::vector<int> remap(static_cast<std::size_t>(target.node_count()), -1);
        std::vector<int> labels;
        for (std::size_t k = 0; k < kept.size(); ++k) {
            remap[static_cast<std::size_t>(kept[k])] = static_cast<int>(k);
            labels.push_back(target.label(kept[k]));
        }
        std::vector<std::pair<int, int>> remapped;
        for (auto [u, v] : edges)
            remapped.emplace_back(remap[static_cast<std::size_t>(u)],
                                  remap[static_cast<std::size_t>(v)]);
        LabeledGraph s(std::move(labels), std::move(remapped));
        s.set_origin(std::move(kept));
        out.push_back(std::move(s));
    }
    return out;
}

std::pair<int, double> min_over_targets(
    const LabeledGraph& query, const TargetStore& targets,
    const std::function<double(const LabeledGraph&, const LabeledGraph&)>& fn) {
    require(!targets.entries.empty(), "target store is empty");
    int best_idx = -1;
    double best = 0.0;
    for (std::size_t i = 0; i < targets.entries.size(); ++i) {
        const double v = fn(query, targets.entries[i].graph);
        if (best_idx < 0 || v < best) {
            best_idx = static_cast<int>(i);
            best = v;
        }
    }
    return {best_idx, best};
}

std::pair<int, double> min_exact_sed_over_targets(const LabeledGraph& query,
                                                  const TargetStore& targets,
                                                  const DistancePolicy& policy,
                                                  const SearchLimits& limits) {
    require(!targets.entries.empty(), "target store is empty");
    contract(policy.mode() == DistanceMode::SED, "needs an SED policy");
    int best_idx = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < targets.entries.size(); ++i) {
        const LabeledGraph& t = targets.entries[i].graph;
        if (best_idx >= 0 && label_multiset_lower_bound(query, t, policy) >= best) continue;
        SearchLimits local = limits;
        if (best_idx >= 0) local.initial_upper = best;
        ExactResult r = exact_sed(query, t, policy, local);
        // With a cutoff the search may stop early; a complete result or one
        // whose bounds collapse below the incumbent updates it.
        if (r.complete && r.bounds.upper < best) {
            best = r.bounds.upper;
            best_idx = static_cast<int>(i);
            if (best == 0.0) break;
        }
    }
    contract(best_idx >= 0, "no target produced a complete exact result");
    return {best_idx, best};
}

void CorpusSpec::validate() const {
    int sources = 0;
    if (!single_graph_path.empty()) ++sources;
    if (!graph_db_path.empty()) ++sources;
    if (synthetic) ++sources;
    require(sources == 1, "corpus spec needs exactly one source");
    require(train_pairs > 0, "train pair count must be positive");
    require(val_pairs >= 0 && test_pairs >= 0, "pair counts must be nonnegative");
    require(related_fraction >= 0.0 && related_fraction <= 1.0, "related_fraction in [0,1]");
    require(query_max_nodes >= 1 && target_max_nodes >= 1, "node caps must be positive");
    require(query_depth >= 0 && target_hops >= 0, "depths must be nonnegative");
    require(oracle_cap >= 2, "oracle cap too small");
}

Corpus build_corpus(const CorpusSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Corpus corpus;
    auto& store = corpus.graphs;

    // Assemble targets.
    std::vector<std::string> target_ids;
    if (spec.synthetic) {
        SyntheticSpec syn = *spec.synthetic;
        syn.max_nodes = std::min(syn.max_nodes, spec.target_max_nodes);
        syn.min_nodes = std::min(syn.min_nodes, syn.max_nodes);
        for (int i = 0; i < syn.graph_count; ++i) {
            LabeledGraph g = synthetic_graph(syn, store.alphabet(), rng);
            g.set_id("t" + std::to_string(i));
            target_ids.push_back(g.id());
            store.add(std::move(g));
        }
    } else if (!spec.single_graph_path.empty()) {
        GraphStore source = GraphStore::load_file(spec.single_graph_path);
        require(source.size() == 1, "single-graph source must contain exactly one graph");
        const LabeledGraph& big = source.graphs()[0];
        // Re-intern labels into the corpus alphabet.
        LabeledGraph copy = parse_graph(serialize_graph(big, source.alphabet()), store.alphabet());
        TargetStore decomposed = decompose_targets(copy, spec.target_hops);
        for (auto& entry : decomposed.entries) {
            if (entry.graph.node_count() > spec.target_max_nodes) continue;
            entry.graph.set_id("t" + std::to_string(entry.center));
            target_ids.push_back(entry.graph.id());
            store.add(std::move(entry.graph));
        }
        require(!target_ids.empty(), "no decomposed target fits target_max_nodes");
    } else {
        GraphStore source = GraphStore::load_file(spec.graph_db_path);
        require(source.size() >= 1, "graph database is empty");
        int idx = 0;
        for (const auto& g : source.graphs()) {
            require(g.node_count() <= spec.target_max_nodes,
                    "database graph " + g.id() + " exceeds target_max_nodes");
            LabeledGraph copy = parse_graph(serialize_graph(g, source.alphabet()), store.alphabet());
            copy.set_id("t" + std::to_string(idx++));
            target_ids.push_back(copy.id());
            store.add(std::move(copy));
        }
    }

    const int total_pairs = spec.train_pairs + spec.val_pairs + spec.test_pairs;

    // Queries and the pair list. GED pairs two database graphs; SED samples
    // a query by random BFS from a chosen target, pairing half with its
    // source ("related") and half with a uniform target.
    std::vector<std::pair<std::string, std::string>> pair_ids;
    std::set<std::pair<std::string, std::string>> seen;
    if (spec.mode == DistanceMode::GED) {
        int guard = 0;
        while (static_cast<int>(pair_ids.size()) < total_pairs && guard < 50 * total_pairs) {
            ++guard;
            const auto& a = target_ids[static_cast<std::size_t>(rng.uniform_u64(target_ids.size()))];
            const auto& b = target_ids[static_cast<std::size_t>(rng.uniform_u64(target_ids.size()))];
            if (store.by_id(a).node_count() + store.by_id(b).node_count() > spec.oracle_cap)
                continue;
            if (!seen.insert({a, b}).second) continue;
            pair_ids.emplace_back(a, b);
        }
        require(static_cast<int>(pair_ids.size()) == total_pairs,
                "could not sample enough distinct GED pairs");
    } else {
        int qi = 0;
        int guard = 0;
        while (static_cast<int>(pair_ids.size()) < total_pairs && guard < 50 * total_pairs) {
            ++guard;
            const auto& source_tid =
                target_ids[static_cast<std::size_t>(rng.uniform_u64(target_ids.size()))];
            const LabeledGraph& source_target = store.by_id(source_tid);
            LabeledGraph q = random_bfs_sample(source_target, spec.query_depth,
                                               spec.query_max_nodes, rng);
            const bool related = rng.uniform_real() < spec.related_fraction;
            const std::string tid =
                related ? source_tid
                        : target_ids[static_cast<std::size_t>(rng.uniform_u64(target_ids.size()))];
            if (q.node_count() + store.by_id(tid).node_count() > spec.oracle_cap) continue;
            q.set_id("q" + std::to_string(qi));
            if (!seen.insert({q.id(), tid}).second) continue;
            ++qi;
            store.add(q);
            pair_ids.emplace_back(q.id(), tid);
        }
        require(static_cast<int>(pair_ids.size()) == total_pairs,
                "could not sample enough distinct SED pairs");
    }

    SearchLimits limits;
    limits.max_expansions = spec.oracle_budget;
    limits.max_total_nodes = spec.oracle_cap;
    auto labeled = label_pairs(store, pair_ids, spec.mode, limits, spec.threads);

    std::vector<TrainSample> samples;
    samples.reserve(labeled.size());
    for (const auto& r : labeled)
        samples.push_back(TrainSample{r.q, r.t, r.lb, r.ub, r.complete});

    // Deterministic split of the (already deduplicated) pair list.
    std::vector<int> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    auto take = [&](int from, int count) {
        std::vector<TrainSample> part;
        part.reserve(static_cast<std::size_t>(count));
        for (int i = from; i < from + count; ++i)
            part.push_back(samples[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        return part;
    };
    corpus.train = take(0, spec.train_pairs);
    corpus.val = take(spec.train_pairs, spec.val_pairs);
    corpus.test = take(spec.train_pairs + spec.val_pairs, spec.test_pairs);

    // Augmentation: supergraph samples of each complete pair's closest
    // subgraph stay in the originating split (no leakage).
    if (spec.augment_per_pair > 0 && spec.mode == DistanceMode::SED) {
        const DistancePolicy policy = DistancePolicy::sed();
        int aug_id = 0;
        auto augment_split = [&](std::vector<TrainSample>& split) {
            std::vector<TrainSample> extra;
            for (const auto& s : split) {
                if (!s.complete) continue;
                const LabeledGraph& q = store.by_id(s.query_id);
                const LabeledGraph& t = store.by_id(s.target_id);
                ExactResult r = exact_sed(q, t, policy, limits);
                if (!r.complete || !r.mapping) continue;
                auto supers = augment(q, *r.mapping, r.complete, t, spec.augment_per_pair, rng);
                for (auto& sg : supers) {
                    sg.set_id("aug" + std::to_string(aug_id++));
                    extra.push_back(TrainSample{s.query_id, sg.id(), s.lb, s.ub, true});
                    store.add(std::move(sg));
                }
            }
            split.insert(split.end(), extra.begin(), extra.end());
        };
        augment_split(corpus.train);
    }

    return corpus;
}

} // namespace nsed
