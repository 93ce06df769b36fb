#include "nsed/metric_tree.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>

#include "nsed/encoder.hpp"
#include "nsed/io_util.hpp"
#include "nsed/rng.hpp"

namespace nsed {

IndexDistance IndexDistance::sed() {
    return IndexDistance{Tag::HeadSed,
                         [](const float* a, const float* b, int dim) { return head_sed(a, b, dim); }};
}

IndexDistance IndexDistance::ged() {
    return IndexDistance{Tag::HeadGed,
                         [](const float* a, const float* b, int dim) { return head_ged(a, b, dim); }};
}

IndexDistance IndexDistance::custom(std::function<double(const float*, const float*, int)> fn) {
    return IndexDistance{Tag::Custom, std::move(fn)};
}

namespace {

// Lower median of a sorted sample: element at index (n-1)/2.
double lower_median(std::vector<double> v) {
    contract(!v.empty(), "median of empty set");
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

} // namespace

int MetricTree::build_rec(const EmbeddingMatrix& items, const IndexDistance& dist,
                          std::vector<int> subset, Rng& rng) {
    if (subset.empty()) return -1;
    if (static_cast<int>(subset.size()) <= leaf_cap_) {
        Node leaf;
        leaf.leaf = true;
        leaf.items = std::move(subset);
        nodes_.push_back(std::move(leaf));
        return static_cast<int>(nodes_.size() - 1);
    }

    const std::size_t pick = static_cast<std::size_t>(rng.uniform_u64(subset.size()));
    const int pivot = subset[pick];
    subset.erase(subset.begin() + static_cast<std::ptrdiff_t>(pick));

    std::vector<double> d_py(subset.size()), d_yp(subset.size());
    bool zero_spread = true;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        d_py[i] = dist(items.row(pivot), items.row(subset[i]), items.dim);
        d_yp[i] = dist(items.row(subset[i]), items.row(pivot), items.dim);
        if (d_py[i] != 0.0 || d_yp[i] != 0.0) zero_spread = false;
    }
    if (zero_spread) {
        // All remaining items coincide with the pivot under this distance;
        // splitting cannot make progress.
        Node leaf;
        leaf.leaf = true;
        leaf.items = std::move(subset);
        leaf.items.push_back(pivot);
        std::sort(leaf.items.begin(), leaf.items.end());
        nodes_.push_back(std::move(leaf));
        return static_cast<int>(nodes_.size() - 1);
    }

    const double m1 = lower_median(d_py);
    const double m2 = lower_median(d_yp);

    std::vector<int> parts[4];
    for (std::size_t i = 0; i < subset.size(); ++i) {
        const bool gt1 = d_py[i] > m1;
        const bool gt2 = d_yp[i] > m2;
        parts[(gt1 ? 2 : 0) + (gt2 ? 1 : 0)].push_back(subset[i]);
    }

    const int self = static_cast<int>(nodes_.size());
    Node node;
    node.pivot = pivot;
    node.m1 = m1;
    node.m2 = m2;
    nodes_.push_back(std::move(node));
    for (int c = 0; c < 4; ++c) {
        int child = build_rec(items, dist, std::move(parts[c]), rng);
        nodes_[static_cast<std::size_t>(self)].child[c] = child;
    }
    return self;
}

MetricTree MetricTree::build(const EmbeddingMatrix& items, const IndexDistance& dist, int leaf_cap,
                             std::uint64_t seed) {
    require(items.count() > 0, "cannot build an index over zero items");
    require(leaf_cap >= 1, "leaf_cap must be >= 1");
    MetricTree tree;
    tree.leaf_cap_ = leaf_cap;
    tree.seed_ = seed;
    tree.dist_tag_ = dist.tag;
    Rng rng(seed);
    std::vector<int> all(static_cast<std::size_t>(items.count()));
    for (int i = 0; i < items.count(); ++i) all[static_cast<std::size_t>(i)] = i;
    tree.root_ = tree.build_rec(items, dist, std::move(all), rng);
    return tree;
}

void MetricTree::collect_items(int node, std::vector<int>& out) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.leaf) {
        out.insert(out.end(), n.items.begin(), n.items.end());
        return;
    }
    out.push_back(n.pivot);
    for (int c = 0; c < 4; ++c) collect_items(n.child[c], out);
}

void MetricTree::range_rec(int node, const EmbeddingMatrix& items, const float* q, double r,
                           const IndexDistance& dist, std::vector<int>& out,
                           QueryStats& stats) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.leaf) {
        for (int id : n.items) {
            ++stats.distance_evals;
            if (dist(q, items.row(id), items.dim) <= r) out.push_back(id);
        }
        return;
    }

    const double d_pq = dist(items.row(n.pivot), q, items.dim);
    const double d_qp = dist(q, items.row(n.pivot), items.dim);
    stats.distance_evals += 2;
    if (d_qp <= r) out.push_back(n.pivot);

    bool prune[4] = {false, false, false, false};
    if (d_pq <= n.m1 - r) { // solution set lies inside d(p,y) <= m1
        prune[2] = prune[3] = true;
    }
    if (d_qp > n.m2 + r) { // solution set lies inside d(y,p) > m2
        prune[0] = prune[2] = true;
    }
    if (d_qp <= r - n.m1) {
        // Everything with d(p,y) <= m1 is within range; accept t1 and t2
        // wholesale without evaluating their distances.
        std::vector<int> bulk;
        collect_items(n.child[0], bulk);
        collect_items(n.child[1], bulk);
        stats.bulk_accepted += bulk.size();
        out.insert(out.end(), bulk.begin(), bulk.end());
        prune[0] = prune[1] = true;
    }

    for (int c = 0; c < 4; ++c) {
        if (prune[c]) {
            if (n.child[c] >= 0) ++stats.pruned_subtrees;
            continue;
        }
        range_rec(n.child[c], items, q, r, dist, out, stats);
    }
}

std::vector<int> MetricTree::range_query(const EmbeddingMatrix& items, const float* q, double r,
                                         const IndexDistance& dist, QueryStats* stats) const {
    require(r >= 0.0, "range radius must be nonnegative");
    QueryStats local;
    std::vector<int> out;
    range_rec(root_, items, q, r, dist, out, stats ? *stats : local);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Max-heap ordered by (distance, id); top is the current worst of the k
// best.
using HeapEntry = std::pair<double, int>;

double heap_radius(const std::priority_queue<HeapEntry>& heap, int k) {
    return static_cast<int>(heap.size()) < k ? std::numeric_limits<double>::infinity()
                                             : heap.top().first;
}

void heap_offer(std::priority_queue<HeapEntry>& heap, int k, double d, int id) {
    HeapEntry e{d, id};
    if (static_cast<int>(heap.size()) < k) {
        heap.push(e);
    } else if (e < heap.top()) {
        heap.pop();
        heap.push(e);
    }
}

} // namespace

KnnResult MetricTree::knn_query(const EmbeddingMatrix& items, const float* q, int k,
                                const IndexDistance& dist, QueryStats* stats) const {
    require(k >= 1, "k must be >= 1");
    KnnResult res;
    if (k > items.count()) {
        res.k_exceeded_items = true;
        k = items.count();
    }
    QueryStats local;
    QueryStats& st = stats ? *stats : local;
    std::priority_queue<HeapEntry> heap;

    // Recursive branch-and-bound with the shrinking radius r = current k-th
    // best; the two range-pruning rules apply with that radius.
    auto visit = [&](auto&& self, int node) -> void {
        if (node < 0) return;
        const Node& n = nodes_[static_cast<std::size_t>(node)];
        if (n.leaf) {
            for (int id : n.items) {
                ++st.distance_evals;
                heap_offer(heap, k, dist(q, items.row(id), items.dim), id);
            }
            return;
        }
        const double d_qp = dist(q, items.row(n.pivot), items.dim);
        const double d_pq = dist(items.row(n.pivot), q, items.dim);
        st.distance_evals += 2;
        heap_offer(heap, k, d_qp, n.pivot);

        for (int c = 0; c < 4; ++c) {
            const double r = heap_radius(heap, k);
            const bool prune_by_m1 = (c == 2 || c == 3) && d_pq <= n.m1 - r;
            const bool prune_by_m2 = (c == 0 || c == 2) && d_qp > n.m2 + r;
            if (prune_by_m1 || prune_by_m2) {
                if (n.child[c] >= 0) ++st.pruned_subtrees;
                continue;
            }
            self(self, n.child[c]);
        }
    };
    visit(visit, root_);

    res.items.resize(heap.size());
    for (std::size_t i = heap.size(); i > 0; --i) {
        res.items[i - 1] = {heap.top().second, heap.top().first};
        heap.pop();
    }
    return res;
}

bool MetricTree::verify_partitions(const EmbeddingMatrix& items, const IndexDistance& dist) const {
    for (const Node& n : nodes_) {
        if (n.leaf) continue;
        for (int c = 0; c < 4; ++c) {
            std::vector<int> sub;
            collect_items(n.child[c], sub);
            for (int id : sub) {
                const double d_py = dist(items.row(n.pivot), items.row(id), items.dim);
                const double d_yp = dist(items.row(id), items.row(n.pivot), items.dim);
                const bool gt1 = d_py > n.m1;
                const bool gt2 = d_yp > n.m2;
                if (c != (gt1 ? 2 : 0) + (gt2 ? 1 : 0)) return false;
            }
        }
    }
    return true;
}

void MetricTree::save(const std::string& path) const {
    require(dist_tag_ != IndexDistance::Tag::Custom,
            "custom distance functions cannot be serialized");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write index file: " + path);
    out.write("NSIX", 4);
    io::write_u32(out, 1); // format version
    io::write_u8(out, static_cast<std::uint8_t>(dist_tag_));
    io::write_u32(out, static_cast<std::uint32_t>(leaf_cap_));
    io::write_u64(out, seed_);
    io::write_i32(out, root_);
    io::write_u32(out, static_cast<std::uint32_t>(nodes_.size()));
    for (const Node& n : nodes_) {
        io::write_u8(out, n.leaf ? 1 : 0);
        if (n.leaf) {
            io::write_u32(out, static_cast<std::uint32_t>(n.items.size()));
            for (int id : n.items) io::write_i32(out, id);
        } else {
            io::write_i32(out, n.pivot);
            io::write_f64(out, n.m1);
            io::write_f64(out, n.m2);
            for (int c = 0; c < 4; ++c) io::write_i32(out, n.child[c]);
        }
    }
    require(out.good(), "short write to index file: " + path);
}

MetricTree MetricTree::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open index file: " + path);
    char magic[4];
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "NSIX", 4) == 0, "not an NSIX index file: " + path);
    std::uint32_t version = io::read_u32(in);
    require(version == 1, "unsupported NSIX version " + std::to_string(version));

    MetricTree tree;
    tree.dist_tag_ = static_cast<IndexDistance::Tag>(io::read_u8(in));
    tree.leaf_cap_ = static_cast<int>(io::read_u32(in));
    tree.seed_ = io::read_u64(in);
    tree.root_ = io::read_i32(in);
    std::uint32_t count = io::read_u32(in);
    tree.nodes_.resize(count);
    for (auto& n : tree.nodes_) {
        n.leaf = io::read_u8(in) != 0;
        if (n.leaf) {
            std::uint32_t m = io::read_u32(in);
            n.items.resize(m);
            for (auto& id : n.items) id = io::read_i32(in);
        } else {
            n.pivot = io::read_i32(in);
            n.m1 = io::read_f64(in);
            n.m2 = io::read_f64(in);
            for (int c = 0; c < 4; ++c) n.child[c] = io::read_i32(in);
        }
    }
    return tree;
}

std::vector<int> linear_scan_range(const EmbeddingMatrix& items, const float* q, double r,
                                   const IndexDistance& dist) {
    require(r >= 0.0, "range radius must be nonnegative");
    std::vector<int> out;
    for (int i = 0; i < items.count(); ++i)
        if (dist(q, items.row(i), items.dim) <= r) out.push_back(i);
    return out;
}

KnnResult linear_scan_knn(const EmbeddingMatrix& items, const float* q, int k,
                          const IndexDistance& dist) {
    require(k >= 1, "k must be >= 1");
    KnnResult res;
    if (k > items.count()) {
        res.k_exceeded_items = true;
        k = items.count();
    }
    std::vector<std::pair<double, int>> all;
    all.reserve(static_cast<std::size_t>(items.count()));
    for (int i = 0; i < items.count(); ++i)
        all.emplace_back(dist(q, items.row(i), items.dim), i);
    std::sort(all.begin(), all.end());
    res.items.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) res.items.emplace_back(all[static_cast<std::size_t>(i)].second,
                                                       all[static_cast<std::size_t>(i)].first);
    return res;
}

} // namespace nsed
