#include "nsed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace nsed {

double rmse(const ScoredPairs& s) {
    s.check();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.predicted.size(); ++i) {
        const double d = s.predicted[i] - s.truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(s.predicted.size()));
}

double mae(const ScoredPairs& s) {
    s.check();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.predicted.size(); ++i)
        acc += std::abs(s.predicted[i] - s.truth[i]);
    return acc / static_cast<double>(s.predicted.size());
}

double r2(const ScoredPairs& s) {
    s.check();
    const double n = static_cast<double>(s.truth.size());
    const double mean = std::accumulate(s.truth.begin(), s.truth.end(), 0.0) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < s.truth.size(); ++i) {
        ss_res += (s.predicted[i] - s.truth[i]) * (s.predicted[i] - s.truth[i]);
        ss_tot += (s.truth[i] - mean) * (s.truth[i] - mean);
    }
    require(ss_tot > 0.0, "r2 is undefined for constant truths");
    return 1.0 - ss_res / ss_tot;
}

namespace {

// Counts inversions of `v` by merge sort; used for the discordant-pair count
// in Knight's algorithm.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo <= 1) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t count =
        count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            count += mid - i;
            scratch[k++] = v[j++];
        } else {
            scratch[k++] = v[i++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
              scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return count;
}

std::uint64_t tie_pairs(const std::vector<double>& sorted) {
    std::uint64_t total = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const std::uint64_t run = j - i;
        total += run * (run - 1) / 2;
        i = j;
    }
    return total;
}

} // namespace

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "kendall_tau needs equal-length lists");
    require(a.size() >= 2, "kendall_tau needs at least two elements");
    const std::size_t n = a.size();

    // Knight's algorithm: sort by (a, b), count joint ties, then count
    // inversions of b as discordances.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (a[x] != a[y]) return a[x] < a[y];
        return b[x] < b[y];
    });

    std::uint64_t n3 = 0; // pairs tied in both
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && a[order[j]] == a[order[i]] && b[order[j]] == b[order[i]]) ++j;
            const std::uint64_t run = j - i;
            n3 += run * (run - 1) / 2;
            i = j;
        }
    }

    std::vector<double> a_sorted(n), b_by_a(n);
    for (std::size_t i = 0; i < n; ++i) {
        a_sorted[i] = a[order[i]];
        b_by_a[i] = b[order[i]];
    }
    const std::uint64_t n1 = tie_pairs(a_sorted);
    std::vector<double> b_sorted = b;
    std::sort(b_sorted.begin(), b_sorted.end());
    const std::uint64_t n2 = tie_pairs(b_sorted);

    std::vector<double> scratch(n);
    const std::uint64_t discordant = count_inversions(b_by_a, scratch, 0, n);

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    require(n1 < n0, "kendall_tau undefined: first list is all ties");
    require(n2 < n0, "kendall_tau undefined: second list is all ties");

    // Concordant = n0 - n1 - n2 + n3 - discordant; ties within a-groups are
    // never inversions because b is sorted within them.
    const double concordant_minus_discordant =
        static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
        static_cast<double>(n3) - 2.0 * static_cast<double>(discordant);
    const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                         std::sqrt(static_cast<double>(n0 - n2));
    return concordant_minus_discordant / denom;
}

double precision_at_k(const std::vector<double>& pred_dists,
                      const std::vector<double>& true_dists, int k) {
    require(pred_dists.size() == true_dists.size(), "precision_at_k length mismatch");
    require(k >= 1 && static_cast<std::size_t>(k) <= pred_dists.size(),
            "precision_at_k needs 1 <= k <= n");
    auto topk = [&](const std::vector<double>& d) {
        std::vector<std::pair<double, int>> order;
        order.reserve(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) order.emplace_back(d[i], static_cast<int>(i));
        std::sort(order.begin(), order.end());
        std::vector<int> ids(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) ids[static_cast<std::size_t>(i)] =
            order[static_cast<std::size_t>(i)].second;
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    const auto p = topk(pred_dists);
    const auto t = topk(true_dists);
    std::vector<int> both;
    std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
    return static_cast<double>(both.size()) / static_cast<double>(k);
}

RangeF1 range_f1(const std::vector<double>& pred_dists, const std::vector<double>& true_dists,
                 double threshold) {
    require(pred_dists.size() == true_dists.size(), "range_f1 length mismatch");
    require(threshold >= 0.0, "range threshold must be nonnegative");
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred_dists.size(); ++i) {
        const bool pred_pos = pred_dists[i] <= threshold;
        const bool true_pos = true_dists[i] <= threshold;
        if (pred_pos && true_pos) ++tp;
        else if (pred_pos) ++fp;
        else if (true_pos) ++fn;
    }
    RangeF1 out;
    if (tp + fp == 0 || tp + fn == 0) {
        out.degenerate = true;
        return out;
    }
    out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

} // namespace nsed
