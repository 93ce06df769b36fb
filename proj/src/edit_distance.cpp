#include "nsed/edit_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nsed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-9;

std::map<int, int> label_counts(const LabeledGraph& g) {
    std::map<int, int> c;
    for (int v = 0; v < g.node_count(); ++v) ++c[g.label(v)];
    return c;
}

} // namespace

DistancePolicy::DistancePolicy(DistanceMode mode, LabelDistance d, int alphabet_size)
    : mode_(mode), custom_(std::move(d)) {
    if (!custom_) return;
    require(alphabet_size >= 1, "custom label distance needs the alphabet size");
    min_mismatch_ = kInf;
    for (int a = 0; a < alphabet_size; ++a) {
        for (int b = -1; b < alphabet_size; ++b) {
            if (a == b) continue;
            double dab = custom_(a, b == -1 ? kEpsilonLabel : b);
            require(dab >= 0.0, "label distance must be nonnegative");
            min_mismatch_ = std::min(min_mismatch_, dab);
        }
        require(std::abs(custom_(a, a)) <= kTieTol, "label distance must vanish on equal labels");
    }
    if (mode_ == DistanceMode::SED) {
        for (int a = 0; a < alphabet_size; ++a) {
            double del = custom_(a, kEpsilonLabel);
            for (int b = 0; b < alphabet_size; ++b)
                require(custom_(a, b) <= del + kTieTol,
                        "SED policy requires d(l1,l2) <= d(l1,eps) for all real labels");
        }
    }
}

DistancePolicy DistancePolicy::with_label_distance(DistanceMode mode, LabelDistance d,
                                                   int alphabet_size) {
    require(static_cast<bool>(d), "label distance function must be set");
    return DistancePolicy(mode, std::move(d), alphabet_size);
}

double ged_under_mapping(const LabeledGraph& g1, const LabeledGraph& g2, const NodeMapping& pi,
                         const DistancePolicy& policy) {
    const int n1 = g1.node_count();
    const int n2 = g2.node_count();
    std::vector<int> image(static_cast<std::size_t>(n1), -2);
    std::vector<int> preimage(static_cast<std::size_t>(n2), -2);

    for (auto [v, t] : pi.pairs) {
        contract(v != -1 || t != -1, "mapping pairs a dummy with a dummy");
        contract(v >= -1 && v < n1 && t >= -1 && t < n2, "mapping endpoint out of range");
        if (v >= 0) {
            contract(image[static_cast<std::size_t>(v)] == -2, "left node mapped twice");
            image[static_cast<std::size_t>(v)] = t;
        }
        if (t >= 0) {
            contract(preimage[static_cast<std::size_t>(t)] == -2, "right node mapped twice");
            preimage[static_cast<std::size_t>(t)] = v;
        }
    }
    for (int v = 0; v < n1; ++v)
        contract(image[static_cast<std::size_t>(v)] != -2, "left node missing from mapping");
    for (int t = 0; t < n2; ++t)
        contract(preimage[static_cast<std::size_t>(t)] != -2, "right node missing from mapping");

    double cost = 0.0;
    for (int v = 0; v < n1; ++v) {
        int t = image[static_cast<std::size_t>(v)];
        cost += policy.node_cost(g1.label(v), t >= 0 ? g2.label(t) : kEpsilonLabel);
    }
    for (int t = 0; t < n2; ++t)
        if (preimage[static_cast<std::size_t>(t)] == -1)
            cost += policy.node_cost(kEpsilonLabel, g2.label(t));

    // Edges of g1 against their images.
    for (auto [u, v] : g1.edges()) {
        int iu = image[static_cast<std::size_t>(u)];
        int iv = image[static_cast<std::size_t>(v)];
        bool right_real = iu >= 0 && iv >= 0 && g2.has_edge(iu, iv);
        cost += policy.edge_cost(true, right_real);
    }
    // Edges of g2 not covered by a g1 edge are insertions.
    for (auto [a, b] : g2.edges()) {
        int pa = preimage[static_cast<std::size_t>(a)];
        int pb = preimage[static_cast<std::size_t>(b)];
        bool covered = pa >= 0 && pb >= 0 && g1.has_edge(pa, pb);
        if (!covered) cost += policy.edge_cost(false, true);
    }
    return cost;
}

double label_multiset_lower_bound(const LabeledGraph& g1, const LabeledGraph& g2,
                                  const DistancePolicy& policy) {
    auto c1 = label_counts(g1);
    auto c2 = label_counts(g2);
    int matched = 0;
    for (auto [label, count] : c1) {
        auto it = c2.find(label);
        if (it != c2.end()) matched += std::min(count, it->second);
    }
    const int n1 = g1.node_count();
    const int n2 = g2.node_count();
    const int m1 = g1.edge_count();
    const int m2 = g2.edge_count();

    if (policy.mode() == DistanceMode::GED) {
        double node_bound = static_cast<double>(std::max(n1, n2) - matched);
        if (!policy.binary()) node_bound *= policy.min_mismatch_cost();
        double edge_bound = static_cast<double>(std::abs(m1 - m2));
        return std::max(node_bound, edge_bound);
    }
    double node_bound = static_cast<double>(n1 - matched);
    if (!policy.binary()) node_bound *= policy.min_mismatch_cost();
    double edge_bound = static_cast<double>(std::max(0, m1 - m2));
    return node_bound + edge_bound;
}

namespace {

// Depth-first branch-and-bound over assignments of g1 nodes (in fail-first
// order) to unused g2 nodes or a dummy. Edge costs are charged as soon as
// both endpoints of an edge are decided; the completion bound covers the
// rest admissibly.
class EditSearch {
public:
    EditSearch(const LabeledGraph& g1, const LabeledGraph& g2, const DistancePolicy& policy,
               const SearchLimits& limits)
        : g1_(g1), g2_(g2), policy_(policy), limits_(limits) {
        order_ = assignment_order();
        image_.assign(static_cast<std::size_t>(g1_.node_count()), -2);
        preimage_.assign(static_cast<std::size_t>(g2_.node_count()), -2);
        for (int v = 0; v < g1_.node_count(); ++v) ++remaining1_[g1_.label(v)];
        for (int t = 0; t < g2_.node_count(); ++t) ++remaining2_[g2_.label(t)];
        edges1_open_ = g1_.edge_count();
        edges2_open_ = g2_.edge_count();
    }

    ExactResult run() {
        best_ = kInf;
        if (limits_.initial_upper >= 0.0) cutoff_ = limits_.initial_upper;
        budget_ = limits_.max_expansions;
        exhausted_ = false;
        min_unexplored_ = kInf;

        dfs(0, 0.0);

        ExactResult res;
        res.expansions = limits_.max_expansions - budget_;
        res.complete = !exhausted_ && best_ < kInf;
        double upper = best_ < kInf ? best_ : trivial_upper();
        double lower;
        if (!exhausted_) {
            // Every subtree was either fully explored or pruned against the
            // incumbent/cutoff, so nothing below min(best, cutoff) remains.
            lower = std::min(upper, cutoff_);
        } else {
            lower = std::min(upper, min_unexplored_);
        }
        lower = std::max(lower, label_multiset_lower_bound(g1_, g2_, policy_));
        res.bounds = DistanceBounds{std::min(lower, upper), upper};
        if (best_ < kInf) res.mapping = build_mapping();
        return res;
    }

private:
    std::vector<int> assignment_order() const {
        std::vector<int> order(static_cast<std::size_t>(g1_.node_count()));
        for (int v = 0; v < g1_.node_count(); ++v) order[static_cast<std::size_t>(v)] = v;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return g1_.degree(a) > g1_.degree(b); });
        return order;
    }

    double trivial_upper() const {
        // Delete all of g1, insert all of g2.
        double c = 0.0;
        for (int v = 0; v < g1_.node_count(); ++v)
            c += policy_.node_cost(g1_.label(v), kEpsilonLabel);
        c += static_cast<double>(g1_.edge_count()) * policy_.edge_cost(true, false);
        for (int t = 0; t < g2_.node_count(); ++t)
            c += policy_.node_cost(kEpsilonLabel, g2_.label(t));
        c += static_cast<double>(g2_.edge_count()) * policy_.edge_cost(false, true);
        return c;
    }

    // Admissible bound on everything not yet charged.
    double completion_bound() const {
        int matched = 0;
        for (auto [label, count] : remaining1_) {
            auto it = remaining2_.find(label);
            if (it != remaining2_.end()) matched += std::min(count, it->second);
        }
        int r1 = 0, r2 = 0;
        for (auto [label, count] : remaining1_) r1 += count;
        for (auto [label, count] : remaining2_) r2 += count;

        double node_part;
        if (policy_.mode() == DistanceMode::GED)
            node_part = static_cast<double>(std::max(r1, r2) - matched);
        else
            node_part = static_cast<double>(r1 - matched);
        if (!policy_.binary()) node_part *= policy_.min_mismatch_cost();

        double edge_part;
        if (policy_.mode() == DistanceMode::GED)
            edge_part = static_cast<double>(std::abs(edges1_open_ - edges2_open_));
        else
            edge_part = static_cast<double>(std::max(0, edges1_open_ - edges2_open_));
        return node_part + edge_part;
    }

    double assign_cost(int v, int target) const {
        double cost = 0.0;
        if (target >= 0) {
            cost += policy_.node_cost(g1_.label(v), g2_.label(target));
            for (int u : g1_.neighbors(v)) {
                int iu = image_[static_cast<std::size_t>(u)];
                if (iu == -2) continue; // undecided
                bool right_real = iu >= 0 && g2_.has_edge(iu, target);
                cost += policy_.edge_cost(true, right_real);
            }
            for (int s : g2_.neighbors(target)) {
                int ps = preimage_[static_cast<std::size_t>(s)];
                if (ps == -2) continue;
                bool covered = ps >= 0 && g1_.has_edge(ps, v);
                if (!covered) cost += policy_.edge_cost(false, true);
            }
        } else {
            cost += policy_.node_cost(g1_.label(v), kEpsilonLabel);
            for (int u : g1_.neighbors(v)) {
                if (image_[static_cast<std::size_t>(u)] == -2) continue;
                cost += policy_.edge_cost(true, false);
            }
        }
        return cost;
    }

    void apply(int v, int target) {
        image_[static_cast<std::size_t>(v)] = target;
        if (target >= 0) {
            preimage_[static_cast<std::size_t>(target)] = v;
            if (--remaining2_[g2_.label(target)] == 0) remaining2_.erase(g2_.label(target));
            for (int s : g2_.neighbors(target))
                if (preimage_[static_cast<std::size_t>(s)] != -2) --edges2_open_;
        }
        if (--remaining1_[g1_.label(v)] == 0) remaining1_.erase(g1_.label(v));
        for (int u : g1_.neighbors(v))
            if (image_[static_cast<std::size_t>(u)] != -2) --edges1_open_;
    }

    void undo(int v, int target) {
        for (int u : g1_.neighbors(v))
            if (image_[static_cast<std::size_t>(u)] != -2 && u != v) ++edges1_open_;
        ++remaining1_[g1_.label(v)];
        if (target >= 0) {
            for (int s : g2_.neighbors(target))
                if (preimage_[static_cast<std::size_t>(s)] != -2 && s != target) ++edges2_open_;
            ++remaining2_[g2_.label(target)];
            preimage_[static_cast<std::size_t>(target)] = -2;
        }
        image_[static_cast<std::size_t>(v)] = -2;
    }

    // Cost still owed at a leaf: unused g2 nodes and their edges.
    double leaf_tail_cost() const {
        double c = 0.0;
        for (int t = 0; t < g2_.node_count(); ++t)
            if (preimage_[static_cast<std::size_t>(t)] == -2)
                c += policy_.node_cost(kEpsilonLabel, g2_.label(t));
        c += static_cast<double>(edges2_open_) * policy_.edge_cost(false, true);
        return c;
    }

    std::vector<int> candidate_targets(int v) const {
        std::vector<int> cands;
        for (int t = 0; t < g2_.node_count(); ++t)
            if (preimage_[static_cast<std::size_t>(t)] == -2) cands.push_back(t);
        std::stable_sort(cands.begin(), cands.end(), [&](int a, int b) {
            bool ma = g2_.label(a) == g1_.label(v);
            bool mb = g2_.label(b) == g1_.label(v);
            if (ma != mb) return ma;
            int da = std::abs(g2_.degree(a) - g1_.degree(v));
            int db = std::abs(g2_.degree(b) - g1_.degree(v));
            if (da != db) return da < db;
            return a < b;
        });
        return cands;
    }

    void dfs(std::size_t depth, double cost_so_far) {
        if (budget_ == 0) {
            exhausted_ = true;
            min_unexplored_ = std::min(min_unexplored_, cost_so_far + completion_bound());
            return;
        }
        --budget_;

        if (depth == order_.size()) {
            double total = cost_so_far + leaf_tail_cost();
            if (total < cutoff_ - kTieTol && total < best_ - kTieTol) {
                best_ = total;
                cutoff_ = std::min(cutoff_, best_);
                best_image_ = image_;
            }
            return;
        }

        const int v = order_[depth];
        auto cands = candidate_targets(v);
        cands.push_back(-1); // deletion branch last
        for (int target : cands) {
            double step = assign_cost(v, target);
            double lower = cost_so_far + step;
            if (lower >= cutoff_ - kTieTol) continue;
            apply(v, target);
            if (lower + completion_bound() < cutoff_ - kTieTol)
                dfs(depth + 1, lower);
            undo(v, target);
            if (budget_ == 0 && exhausted_) {
                // Remaining siblings are unexplored; account for them.
                min_unexplored_ = std::min(min_unexplored_, cost_so_far + completion_bound());
                return;
            }
        }
    }

    NodeMapping build_mapping() const {
        NodeMapping pi;
        for (int v = 0; v < g1_.node_count(); ++v)
            pi.pairs.emplace_back(v, best_image_[static_cast<std::size_t>(v)] >= 0
                                         ? best_image_[static_cast<std::size_t>(v)]
                                         : -1);
        std::vector<char> used(static_cast<std::size_t>(g2_.node_count()), 0);
        for (int t : best_image_)
            if (t >= 0) used[static_cast<std::size_t>(t)] = 1;
        for (int t = 0; t < g2_.node_count(); ++t)
            if (!used[static_cast<std::size_t>(t)]) pi.pairs.emplace_back(-1, t);
        pi.cost = best_;
        return pi;
    }

    const LabeledGraph& g1_;
    const LabeledGraph& g2_;
    const DistancePolicy& policy_;
    const SearchLimits& limits_;

    std::vector<int> order_;
    std::vector<int> image_;    // -2 undecided, -1 dummy, else target
    std::vector<int> preimage_; // -2 unused, else source (no -1 during search)
    std::map<int, int> remaining1_;
    std::map<int, int> remaining2_;
    int edges1_open_ = 0; // edges with an undecided endpoint
    int edges2_open_ = 0;

    double best_ = kInf;
    double cutoff_ = kInf;
    std::vector<int> best_image_;
    std::uint64_t budget_ = 0;
    bool exhausted_ = false;
    double min_unexplored_ = kInf;
};

} // namespace

ExactResult exact_ged(const LabeledGraph& g1, const LabeledGraph& g2,
                      const DistancePolicy& policy, const SearchLimits& limits) {
    require(g1.node_count() + g2.node_count() <= limits.max_total_nodes,
            "graph pair exceeds the exact-search size guard (" +
                std::to_string(limits.max_total_nodes) + " nodes)");
    require(limits.max_expansions > 0, "search budget must be positive");
    EditSearch search(g1, g2, policy, limits);
    return search.run();
}

ExactResult exact_sed(const LabeledGraph& query, const LabeledGraph& target,
                      const DistancePolicy& policy, const SearchLimits& limits) {
    contract(policy.mode() == DistanceMode::SED, "exact_sed requires an SED policy");
    return exact_ged(query, target, policy, limits);
}

LabeledGraph witness_closest_subgraph(const LabeledGraph& query, const LabeledGraph& target,
                                      const NodeMapping& mapping) {
    std::vector<int> image(static_cast<std::size_t>(query.node_count()), -1);
    std::vector<char> matched(static_cast<std::size_t>(target.node_count()), 0);
    for (auto [v, t] : mapping.pairs) {
        if (v >= 0 && t >= 0) {
            image[static_cast<std::size_t>(v)] = t;
            matched[static_cast<std::size_t>(t)] = 1;
        }
    }
    std::vector<int> kept;
    for (int t = 0; t < target.node_count(); ++t)
        if (matched[static_cast<std::size_t>(t)]) kept.push_back(t);

    std::vector<int> remap(static_cast<std::size_t>(target.node_count()), -1);
    std::vector<int> labels;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        remap[static_cast<std::size_t>(kept[i])] = static_cast<int>(i);
        labels.push_back(target.label(kept[i]));
    }
    // Only matched edges: images of query edges that landed on real target
    // edges. Extra target edges between matched nodes would be insertions
    // and do not belong to the closest subgraph.
    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : query.edges()) {
        int iu = image[static_cast<std::size_t>(u)];
        int iv = image[static_cast<std::size_t>(v)];
        if (iu >= 0 && iv >= 0 && target.has_edge(iu, iv))
            edges.emplace_back(remap[static_cast<std::size_t>(iu)],
                               remap[static_cast<std::size_t>(iv)]);
    }
    LabeledGraph out(std::move(labels), std::move(edges));
    out.set_origin(std::move(kept));
    return out;
}

TriangleCheck verify_sed_triangle(const LabeledGraph& g1, const LabeledGraph& g2,
                                  const LabeledGraph& g3, const DistancePolicy& policy,
                                  const SearchLimits& limits) {
    auto d12 = exact_sed(g1, g2, policy, limits);
    auto d23 = exact_sed(g2, g3, policy, limits);
    auto d13 = exact_sed(g1, g3, policy, limits);
    if (!d12.complete || !d23.complete || !d13.complete) return TriangleCheck::Inconclusive;
    return d13.bounds.upper <= d12.bounds.upper + d23.bounds.upper + kTieTol
               ? TriangleCheck::Holds
               : TriangleCheck::Violated;
}

} // namespace nsed
