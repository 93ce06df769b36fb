#pragma once

#include "nsed/graph.hpp"

namespace nsed {

// Backtracking testers for labeled graphs. These are deliberately
// independent of the edit-distance search so they can serve as its oracle
// for the zero-distance cases.

// Label-preserving bijection mapping edges onto edges exactly.
bool graph_isomorphic(const LabeledGraph& g1, const LabeledGraph& g2);

// Label-preserving injection mapping every query edge onto a target edge.
// Extra target edges between mapped nodes are allowed (general, non-induced
// subgraph containment).
bool subgraph_isomorphic(const LabeledGraph& query, const LabeledGraph& target);

} // namespace nsed
