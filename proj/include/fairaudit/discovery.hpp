#pragma once

#include <vector>

#include "fairaudit/ci_test.hpp"
#include "fairaudit/dataset.hpp"
#include "fairaudit/graph.hpp"

namespace fairaudit {

// Constraint-based search: adjacency pruning with Fisher-z tests of
// increasing conditioning size, collider orientation from separating
// sets, then Meek closure. Deterministic in schema order.
Cpdag pc_discover(const Dataset& d, double alpha = 0.05);

// Greedy equivalence search with a Gaussian BIC: forward insertions to a
// local optimum, then backward deletions. Deterministic in schema order
// with lowest-index tie-breaks.
Cpdag ges_discover(const Dataset& d);

// Per-node fit score used by ges_discover: -n*ln(RSS/n) - ln(n)*(k+1)
// for a least-squares regression on k parents plus an intercept.
double gaussian_bic_local(const Dataset& d, int node, const std::vector<int>& parents);

}  // namespace fairaudit
