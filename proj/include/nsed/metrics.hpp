#pragma once

#include <vector>

#include "nsed/common.hpp"

namespace nsed {

// Parallel (predicted, truth) sequences.
struct ScoredPairs {
    std::vector<double> predicted;
    std::vector<double> truth;

    void check() const {
        require(predicted.size() == truth.size(), "predicted/truth length mismatch");
        require(!predicted.empty(), "no scored pairs");
    }
};

double rmse(const ScoredPairs& s);
double mae(const ScoredPairs& s);
// 1 - SSres/SStot; throws on constant truths (SStot = 0).
double r2(const ScoredPairs& s);

// Tie-corrected Kendall tau-b in O(n log n); throws when either list is all
// ties (tau undefined).
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

// |top-k(pred) intersect top-k(true)| / k with (distance, id) tie-breaking
// on both sides.
double precision_at_k(const std::vector<double>& pred_dists,
                      const std::vector<double>& true_dists, int k);

struct RangeF1 {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    bool degenerate = false; // no predicted or no true positives
};

// Binary classification "distance <= threshold" (inclusive) with true_dists
// as labels and pred_dists as decisions.
RangeF1 range_f1(const std::vector<double>& pred_dists, const std::vector<double>& true_dists,
                 double threshold);

} // namespace nsed
