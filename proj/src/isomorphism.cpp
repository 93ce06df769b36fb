#include "nsed/isomorphism.hpp"

#include <algorithm>
#include <map>

namespace nsed {

namespace {

// Query node order: start anywhere, then always prefer nodes adjacent to the
// already-ordered prefix (keeps the partial mapping constrained), breaking
// ties by descending degree.
std::vector<int> matching_order(const LabeledGraph& q) {
    const int n = q.node_count();
    std::vector<int> order;
    std::vector<char> placed(static_cast<std::size_t>(n), 0);
    auto pick = [&](bool need_adjacent) {
        int best = -1;
        for (int v = 0; v < n; ++v) {
            if (placed[static_cast<std::size_t>(v)]) continue;
            bool adjacent = false;
            for (int u : q.neighbors(v))
                if (placed[static_cast<std::size_t>(u)]) { adjacent = true; break; }
            if (need_adjacent && !adjacent) continue;
            if (best < 0 || q.degree(v) > q.degree(best)) best = v;
        }
        return best;
    };
    while (static_cast<int>(order.size()) < n) {
        int v = pick(true);
        if (v < 0) v = pick(false);
        placed[static_cast<std::size_t>(v)] = 1;
        order.push_back(v);
    }
    return order;
}

struct MatchState {
    const LabeledGraph& q;
    const LabeledGraph& t;
    bool induced_exact; // true: bijection with exact edge match (isomorphism)
    std::vector<int> order;
    std::vector<int> image;   // query node -> target node
    std::vector<char> used;   // target occupancy

    bool feasible(int v, int cand) const {
        if (q.label(v) != t.label(cand)) return false;
        if (induced_exact) {
            if (q.degree(v) != t.degree(cand)) return false;
        } else {
            if (q.degree(v) > t.degree(cand)) return false;
        }
        for (int u : q.neighbors(v)) {
            int iu = image[static_cast<std::size_t>(u)];
            if (iu >= 0 && !t.has_edge(cand, iu)) return false;
        }
        if (induced_exact) {
            // Mapped non-neighbors must stay non-adjacent.
            for (int u = 0; u < q.node_count(); ++u) {
                int iu = image[static_cast<std::size_t>(u)];
                if (iu >= 0 && u != v && !q.has_edge(u, v) && t.has_edge(cand, iu)) return false;
            }
        }
        return true;
    }

    bool extend(std::size_t depth) {
        if (depth == order.size()) return true;
        int v = order[depth];
        for (int cand = 0; cand < t.node_count(); ++cand) {
            if (used[static_cast<std::size_t>(cand)]) continue;
            if (!feasible(v, cand)) continue;
            image[static_cast<std::size_t>(v)] = cand;
            used[static_cast<std::size_t>(cand)] = 1;
            if (extend(depth + 1)) return true;
            image[static_cast<std::size_t>(v)] = -1;
            used[static_cast<std::size_t>(cand)] = 0;
        }
        return false;
    }
};

bool run_match(const LabeledGraph& q, const LabeledGraph& t, bool induced_exact) {
    MatchState state{q, t, induced_exact, matching_order(q),
                     std::vector<int>(static_cast<std::size_t>(q.node_count()), -1),
                     std::vector<char>(static_cast<std::size_t>(t.node_count()), 0)};
    return state.extend(0);
}

std::map<int, int> label_histogram(const LabeledGraph& g) {
    std::map<int, int> h;
    for (int v = 0; v < g.node_count(); ++v) ++h[g.label(v)];
    return h;
}

} // namespace

bool graph_isomorphic(const LabeledGraph& g1, const LabeledGraph& g2) {
    if (g1.node_count() != g2.node_count() || g1.edge_count() != g2.edge_count()) return false;
    if (label_histogram(g1) != label_histogram(g2)) return false;
    std::vector<int> d1, d2;
    for (int v = 0; v < g1.node_count(); ++v) d1.push_back(g1.degree(v));
    for (int v = 0; v < g2.node_count(); ++v) d2.push_back(g2.degree(v));
    std::sort(d1.begin(), d1.end());
    std::sort(d2.begin(), d2.end());
    if (d1 != d2) return false;
    if (g1.node_count() == 0) return true;
    return run_match(g1, g2, /*induced_exact=*/true);
}

bool subgraph_isomorphic(const LabeledGraph& query, const LabeledGraph& target) {
    if (query.node_count() > target.node_count() || query.edge_count() > target.edge_count())
        return false;
    auto hq = label_histogram(query);
    auto ht = label_histogram(target);
    for (auto [label, count] : hq) {
        auto it = ht.find(label);
        if (it == ht.end() || it->second < count) return false;
    }
    if (query.node_count() == 0) return true;
    return run_match(query, target, /*induced_exact=*/false);
}

} // namespace nsed
