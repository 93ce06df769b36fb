#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nsed/edit_distance.hpp"
#include "nsed/graph.hpp"
#include "nsed/rng.hpp"
#include "nsed/trainer.hpp"

namespace nsed {

struct SyntheticSpec {
    enum class Kind { ErdosRenyi, RandomTree } kind = Kind::ErdosRenyi;
    int graph_count = 1;
    int min_nodes = 6;
    int max_nodes = 12;
    double edge_prob = 0.25; // extra-edge probability for ErdosRenyi
    int label_count = 3;
};

// Uniform random tree (random attachment) with optional extra edges; always
// connected. Labels drawn uniformly.
LabeledGraph synthetic_graph(const SyntheticSpec& spec, LabelAlphabet& alphabet, Rng& rng);

struct TargetEntry {
    int center = -1; // node of the source graph; -1 for database targets
    LabeledGraph graph;
};

struct TargetStore {
    std::vector<TargetEntry> entries;
};

// One k-hop neighborhood per node of g (deduplicated by center).
TargetStore decompose_targets(const LabeledGraph& g, int hops);

struct LabeledPairRecord {
    std::string q, t;
    double lb = 0.0, ub = 0.0;
    bool complete = false;
    std::uint64_t expansions = 0;
};

// Oracle-labels (query, target) id pairs; budget-truncated pairs keep their
// bounds and are flagged. Deterministic output order regardless of the
// thread count.
std::vector<LabeledPairRecord> label_pairs(
    const GraphStore& store, const std::vector<std::pair<std::string, std::string>>& pairs,
    DistanceMode mode, const SearchLimits& limits, int threads = 0);

// Random supergraphs of the witness's closest subgraph inside the target;
// each keeps the recorded SED exactly. Requires a complete witness. Outputs
// are grown to be connected (paths inside the target are legal additions).
std::vector<LabeledGraph> augment(const LabeledGraph& query, const NodeMapping& witness,
                                  bool witness_complete, const LabeledGraph& target, int count,
                                  Rng& rng);

// Smallest-id minimizer of fn over the store.
std::pair<int, double> min_over_targets(
    const LabeledGraph& query, const TargetStore& targets,
    const std::function<double(const LabeledGraph&, const LabeledGraph&)>& fn);

// Exact-oracle scan with cheap-bound skipping, incumbent cutoffs and an
// early exit at zero. Returns (target index, exact SED).
std::pair<int, double> min_exact_sed_over_targets(const LabeledGraph& query,
                                                  const TargetStore& targets,
                                                  const DistancePolicy& policy,
                                                  const SearchLimits& limits);

struct CorpusSpec {
    std::uint64_t seed = 1;
    DistanceMode mode = DistanceMode::SED;

    // Exactly one source: a file with one large graph, a graph database
    // file, or a synthetic generator.
    std::string single_graph_path;
    std::string graph_db_path;
    std::optional<SyntheticSpec> synthetic;

    int target_hops = 2;
    int query_depth = 3;
    int query_max_nodes = 8;
    int target_max_nodes = 12;

    int train_pairs = 0;
    int val_pairs = 0;
    int test_pairs = 0;
    double related_fraction = 0.5; // SED only: queries paired with their source target

    std::uint64_t oracle_budget = 2'000'000;
    int oracle_cap = 24; // |Vq| + |Vt| guard
    int augment_per_pair = 0;
    int threads = 0;

    void validate() const;
};

struct Corpus {
    GraphStore graphs;
    std::vector<TrainSample> train, val, test;
};

Corpus build_corpus(const CorpusSpec& spec);

} // namespace nsed
