#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nsed/embedding.hpp"

namespace nsed {

// Distance over stored embedding rows; d(query, item) by convention.
// Triangle inequality is required (declared, not checked online); symmetry
// is not.
struct IndexDistance {
    enum class Tag : std::uint8_t { HeadSed = 0, HeadGed = 1, Custom = 2 };
    Tag tag = Tag::HeadSed;
    std::function<double(const float*, const float*, int)> fn;

    static IndexDistance sed();
    static IndexDistance ged();
    static IndexDistance custom(std::function<double(const float*, const float*, int)> fn);

    double operator()(const float* a, const float* b, int dim) const { return fn(a, b, dim); }
};

struct QueryStats {
    std::uint64_t distance_evals = 0;
    std::uint64_t pruned_subtrees = 0; // children skipped by rules (i)/(ii)
    std::uint64_t bulk_accepted = 0;   // items accepted without evaluation by rule (iii)
};

struct KnnResult {
    std::vector<std::pair<int, double>> items; // ascending (distance, id)
    bool k_exceeded_items = false;             // k was larger than the corpus
};

// Four-way metric tree over two pivot medians: m1 = median d(p, y),
// m2 = median d(y, p). Child c holds y with (d(p,y) <=/> m1) x
// (d(y,p) <=/> m2); items at distance exactly equal to a median go to the
// "<=" side. Recursion stops at leaf_cap items, or immediately when every
// distance to the pivot is zero both ways (duplicate embeddings would
// otherwise recurse forever).
class MetricTree {
public:
    static MetricTree build(const EmbeddingMatrix& items, const IndexDistance& dist,
                            int leaf_cap = 8, std::uint64_t seed = 1);

    // Exactly {y : d(q, y) <= r}, as item indices in ascending order.
    std::vector<int> range_query(const EmbeddingMatrix& items, const float* q, double r,
                                 const IndexDistance& dist, QueryStats* stats = nullptr) const;

    // k smallest distances ascending, ties broken by ascending item id.
    KnnResult knn_query(const EmbeddingMatrix& items, const float* q, int k,
                        const IndexDistance& dist, QueryStats* stats = nullptr) const;

    // Audit hook: returns false if any node's child-partition invariant
    // fails when re-verified with direct distance evaluations.
    bool verify_partitions(const EmbeddingMatrix& items, const IndexDistance& dist) const;

    int leaf_cap() const { return leaf_cap_; }
    std::uint64_t seed() const { return seed_; }
    IndexDistance::Tag dist_tag() const { return dist_tag_; }
    std::size_t node_count() const { return nodes_.size(); }

    void save(const std::string& path) const;
    static MetricTree load(const std::string& path);

private:
    struct Node {
        bool leaf = false;
        int pivot = -1; // internal nodes only
        double m1 = 0.0;
        double m2 = 0.0;
        int child[4] = {-1, -1, -1, -1};
        std::vector<int> items; // leaf payload
    };

    int build_rec(const EmbeddingMatrix& items, const IndexDistance& dist,
                  std::vector<int> subset, class Rng& rng);
    void collect_items(int node, std::vector<int>& out) const;
    void range_rec(int node, const EmbeddingMatrix& items, const float* q, double r,
                   const IndexDistance& dist, std::vector<int>& out, QueryStats& stats) const;

    std::vector<Node> nodes_; // index 0 is the root (when nonempty)
    int root_ = -1;
    int leaf_cap_ = 8;
    std::uint64_t seed_ = 1;
    IndexDistance::Tag dist_tag_ = IndexDistance::Tag::HeadSed;
};

// Exhaustive baselines; definitionally correct and used as the oracle for
// the tree paths.
std::vector<int> linear_scan_range(const EmbeddingMatrix& items, const float* q, double r,
                                   const IndexDistance& dist);
KnnResult linear_scan_knn(const EmbeddingMatrix& items, const float* q, int k,
                          const IndexDistance& dist);

} // namespace nsed
