#include <doctest.h>

#include <algorithm>

#include "nsed/metrics.hpp"
#include "nsed/rng.hpp"

using namespace nsed;

namespace {

// O(n^2) tau-b straight from the concordance definition.
double brute_tau_b(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) continue;
            if (da == 0.0) { ++ties_a; continue; }
            if (db == 0.0) { ++ties_b; continue; }
            if ((da > 0) == (db > 0)) ++concordant;
            else ++discordant;
        }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    double joint = n0 - concordant - discordant - ties_a - ties_b; // tied in both
    double n1 = ties_a + joint;
    double n2 = ties_b + joint;
    return (concordant - discordant) / std::sqrt((n0 - n1) * (n0 - n2));
}

std::vector<double> random_list(Rng& rng, int n, bool with_ties) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v)
        x = with_ties ? static_cast<double>(rng.uniform_u64(5)) : rng.normal();
    return v;
}

} // namespace

TEST_CASE("regression metrics") {
    ScoredPairs perfect{{1, 2, 3}, {1, 2, 3}};
    CHECK(rmse(perfect) == 0.0);
    CHECK(mae(perfect) == 0.0);
    CHECK(r2(perfect) == doctest::Approx(1.0));

    ScoredPairs offset{{2, 3, 4}, {1, 2, 3}};
    CHECK(rmse(offset) == doctest::Approx(1.0));
    CHECK(mae(offset) == doctest::Approx(1.0));

    ScoredPairs constant{{1, 2}, {5, 5}};
    CHECK_THROWS_AS(r2(constant), ValidationError);

    // Independent 64-bit recomputation on random data.
    Rng rng(3);
    ScoredPairs s;
    for (int i = 0; i < 500; ++i) {
        s.predicted.push_back(rng.normal() * 3.0);
        s.truth.push_back(rng.normal() * 3.0);
    }
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < s.predicted.size(); ++i) {
        se += (s.predicted[i] - s.truth[i]) * (s.predicted[i] - s.truth[i]);
        ae += std::abs(s.predicted[i] - s.truth[i]);
    }
    CHECK(rmse(s) == doctest::Approx(std::sqrt(se / 500.0)));
    CHECK(mae(s) == doctest::Approx(ae / 500.0));
    CHECK(rmse(s) >= mae(s)); // power-mean inequality
}

TEST_CASE("metrics are permutation invariant") {
    Rng rng(17);
    ScoredPairs s;
    for (int i = 0; i < 100; ++i) {
        s.predicted.push_back(rng.normal());
        s.truth.push_back(rng.normal());
    }
    ScoredPairs shuffled = s;
    std::vector<std::size_t> order(s.predicted.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
        shuffled.predicted[i] = s.predicted[order[i]];
        shuffled.truth[i] = s.truth[order[i]];
    }
    CHECK(rmse(shuffled) == doctest::Approx(rmse(s)));
    CHECK(mae(shuffled) == doctest::Approx(mae(s)));
    CHECK(r2(shuffled) == doctest::Approx(r2(s)));
}

TEST_CASE("kendall tau-b") {
    SUBCASE("identical and reversed orders") {
        std::vector<double> x{1, 2, 3, 4, 5};
        std::vector<double> rev{5, 4, 3, 2, 1};
        CHECK(kendall_tau(x, x) == doctest::Approx(1.0));
        CHECK(kendall_tau(x, rev) == doctest::Approx(-1.0));
    }
    SUBCASE("all ties are rejected") {
        std::vector<double> ties{2, 2, 2};
        std::vector<double> x{1, 2, 3};
        CHECK_THROWS_AS(kendall_tau(ties, x), ValidationError);
        CHECK_THROWS_AS(kendall_tau(x, ties), ValidationError);
    }
    SUBCASE("random lists with ties match the O(n^2) definition") {
        Rng rng(29);
        for (int trial = 0; trial < 60; ++trial) {
            int n = 3 + static_cast<int>(rng.uniform_u64(40));
            auto a = random_list(rng, n, trial % 2 == 0);
            auto b = random_list(rng, n, true);
            bool a_const = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; });
            bool b_const = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
            if (a_const || b_const) continue;
            CHECK(kendall_tau(a, b) == doctest::Approx(brute_tau_b(a, b)));
        }
    }
    SUBCASE("antisymmetric under reversal of one list (tie-free)") {
        Rng rng(31);
        auto a = random_list(rng, 30, false);
        auto b = random_list(rng, 30, false);
        std::vector<double> neg_b;
        for (double v : b) neg_b.push_back(-v);
        CHECK(kendall_tau(a, neg_b) == doctest::Approx(-kendall_tau(a, b)));
    }
}

TEST_CASE("precision at k") {
    std::vector<double> d{0.1, 0.2, 0.3, 0.4};
    CHECK(precision_at_k(d, d, 2) == doctest::Approx(1.0));

    std::vector<double> flipped{0.4, 0.3, 0.2, 0.1};
    CHECK(precision_at_k(d, flipped, 2) == doctest::Approx(0.0));

    Rng rng(37);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 5 + static_cast<int>(rng.uniform_u64(20));
        int k = 1 + static_cast<int>(rng.uniform_u64(static_cast<std::uint64_t>(n)));
        std::vector<double> p = random_list(rng, n, true);
        std::vector<double> t = random_list(rng, n, true);
        // Brute-force set intersection with the same tie-breaking.
        auto topk = [&](const std::vector<double>& v) {
            std::vector<std::pair<double, int>> o;
            for (std::size_t i = 0; i < v.size(); ++i) o.emplace_back(v[i], static_cast<int>(i));
            std::sort(o.begin(), o.end());
            std::vector<int> ids;
            for (int i = 0; i < k; ++i) ids.push_back(o[static_cast<std::size_t>(i)].second);
            std::sort(ids.begin(), ids.end());
            return ids;
        };
        auto tp = topk(p);
        auto tt = topk(t);
        std::vector<int> inter;
        std::set_intersection(tp.begin(), tp.end(), tt.begin(), tt.end(),
                              std::back_inserter(inter));
        CHECK(precision_at_k(p, t, k) ==
              doctest::Approx(static_cast<double>(inter.size()) / k));
    }
}

TEST_CASE("range F1") {
    std::vector<double> t{0.5, 1.5, 2.5, 3.5};
    SUBCASE("perfect predictions") {
        auto r = range_f1(t, t, 2.0);
        CHECK_FALSE(r.degenerate);
        CHECK(r.f1 == doctest::Approx(1.0));
    }
    SUBCASE("degenerate when nothing is positive") {
        auto r = range_f1(t, t, 0.1);
        CHECK(r.degenerate);
        CHECK(r.f1 == 0.0);
    }
    SUBCASE("random data matches a confusion-matrix recomputation") {
        Rng rng(41);
        for (int trial = 0; trial < 40; ++trial) {
            int n = 10 + static_cast<int>(rng.uniform_u64(50));
            std::vector<double> pred = random_list(rng, n, false);
            std::vector<double> truth = random_list(rng, n, false);
            for (auto& v : pred) v = std::abs(v);
            for (auto& v : truth) v = std::abs(v);
            double theta = rng.uniform_real() * 1.5;
            int tp = 0, fp = 0, fn = 0;
            for (int i = 0; i < n; ++i) {
                bool pp = pred[static_cast<std::size_t>(i)] <= theta;
                bool ap = truth[static_cast<std::size_t>(i)] <= theta;
                tp += pp && ap;
                fp += pp && !ap;
                fn += !pp && ap;
            }
            auto r = range_f1(pred, truth, theta);
            if (tp + fp == 0 || tp + fn == 0) {
                CHECK(r.degenerate);
            } else {
                double precision = static_cast<double>(tp) / (tp + fp);
                double recall = static_cast<double>(tp) / (tp + fn);
                double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
                CHECK(r.f1 == doctest::Approx(f1));
            }
        }
    }
}
