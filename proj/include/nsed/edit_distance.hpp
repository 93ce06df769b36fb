#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "nsed/graph.hpp"

namespace nsed {

enum class DistanceMode { GED, SED };

// Selects edit-distance semantics. GED charges insertions, deletions and
// relabels symmetrically; SED zeroes every insertion cost (the reduction
// that makes subgraph edit distance a plain edit-distance search with a
// modified label distance). The label distance defaults to the binary
// 0/1 function; custom functions take label ids with kEpsilonLabel for the
// empty label.
class DistancePolicy {
public:
    using LabelDistance = std::function<double(int, int)>;

    static DistancePolicy ged() { return DistancePolicy(DistanceMode::GED, nullptr, 0); }
    static DistancePolicy sed() { return DistancePolicy(DistanceMode::SED, nullptr, 0); }
    // Custom label distance over alphabet ids 0..alphabet_size-1 plus
    // kEpsilonLabel. In SED mode, d(l1, l2) <= d(l1, eps) is validated for
    // all real labels; replacement must not beat delete-then-insert.
    static DistancePolicy with_label_distance(DistanceMode mode, LabelDistance d,
                                              int alphabet_size);

    DistanceMode mode() const { return mode_; }
    bool binary() const { return !custom_; }

    // Node label cost after the mode's insertion adjustment.
    double node_cost(int left_label, int right_label) const {
        if (mode_ == DistanceMode::SED && left_label == kEpsilonLabel) return 0.0;
        return raw(left_label, right_label);
    }
    // Unlabeled-edge convention: cost 1 when exactly one side has a real
    // edge, 0 otherwise; SED zeroes the insertion direction.
    double edge_cost(bool left_real, bool right_real) const {
        if (left_real == right_real) return 0.0;
        if (!left_real) return mode_ == DistanceMode::SED ? 0.0 : 1.0;
        return 1.0;
    }
    // Cheapest possible mismatch cost among real labels (used by admissible
    // bounds under custom distances; 1 for the binary default).
    double min_mismatch_cost() const { return min_mismatch_; }

private:
    DistancePolicy(DistanceMode mode, LabelDistance d, int alphabet_size);
    double raw(int l1, int l2) const {
        if (custom_) return custom_(l1, l2);
        return l1 == l2 ? 0.0 : 1.0;
    }

    DistanceMode mode_;
    LabelDistance custom_;
    double min_mismatch_ = 1.0;
};

// Bijection between dummy-padded node sets; -1 stands for a dummy. Pairs
// (v, t) with both real encode relabel/keep, (v, -1) deletes v, (-1, t)
// inserts t. No (-1, -1) pair is allowed.
struct NodeMapping {
    std::vector<std::pair<int, int>> pairs;
    double cost = 0.0;
};

struct DistanceBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct SearchLimits {
    std::uint64_t max_expansions = 10'000'000; // branch-and-bound node budget
    int max_total_nodes = 20;                  // |V1| + |V2| guard
    double initial_upper = -1.0;               // <0: none; else prune at >= this
};

struct ExactResult {
    DistanceBounds bounds;
    std::optional<NodeMapping> mapping; // witness for bounds.upper
    std::uint64_t expansions = 0;
    bool complete = false; // lower == upper == exact value
};

// Cost of a complete mapping, recomputed from its pairs (Eq. 1 semantics).
double ged_under_mapping(const LabeledGraph& g1, const LabeledGraph& g2, const NodeMapping& pi,
                         const DistancePolicy& policy);

// Exact GED by branch-and-bound over assignments of g1 nodes to g2 nodes or
// dummies. Within budget the result is exact with a witness mapping;
// otherwise admissible lower/incumbent upper bounds are returned.
ExactResult exact_ged(const LabeledGraph& g1, const LabeledGraph& g2,
                      const DistancePolicy& policy, const SearchLimits& limits = {});

// Exact SED(query, target): exact_ged under the SED policy adjustment. The
// witness's matched right-side nodes and matched edges form a closest
// subgraph of the target.
ExactResult exact_sed(const LabeledGraph& query, const LabeledGraph& target,
                      const DistancePolicy& policy, const SearchLimits& limits = {});

// Admissible lower bound from label multisets and edge counts; never
// exceeds the exact distance.
double label_multiset_lower_bound(const LabeledGraph& g1, const LabeledGraph& g2,
                                  const DistancePolicy& policy);

// Closest subgraph induced by a complete SED witness: matched target nodes
// plus matched edges only. Second element maps the subgraph's nodes back to
// target indices.
LabeledGraph witness_closest_subgraph(const LabeledGraph& query, const LabeledGraph& target,
                                      const NodeMapping& mapping);

enum class TriangleCheck { Holds, Violated, Inconclusive };

// Property-test helper for SED(g1,g3) <= SED(g1,g2) + SED(g2,g3).
TriangleCheck verify_sed_triangle(const LabeledGraph& g1, const LabeledGraph& g2,
                                  const LabeledGraph& g3, const DistancePolicy& policy,
                                  const SearchLimits& limits = {});

} // namespace nsed
