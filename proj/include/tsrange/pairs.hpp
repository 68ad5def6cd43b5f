#pragma once

#include <vector>

namespace tsrange {

/// Unordered node pair stored with i < j (node ids are 1-based).
struct PairIndex {
    int i = 0;
    int j = 0;

    friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

/// Number of unique pairs M = N(N-1)/2.
int pair_count(int nodes);

/// Linear index of pair (i,j) in lexicographic order
/// (1,2),(1,3),...,(1,N),(2,3),...,(N-1,N). Bijective onto [0, M).
/// Throws std::invalid_argument unless 1 <= i < j <= nodes.
int pair_index(int i, int j, int nodes);

/// Inverse of pair_index.
PairIndex pair_from_index(int m, int nodes);

/// All M pairs in lexicographic order.
std::vector<PairIndex> all_pairs(int nodes);

} // namespace tsrange
