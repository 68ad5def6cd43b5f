#include "tsrange/pairs.hpp"

#include <stdexcept>
#include <string>

namespace tsrange {

int pair_count(int nodes) {
    if (nodes < 0) throw std::invalid_argument("pair_count: negative node count");
    return nodes * (nodes - 1) / 2;
}

int pair_index(int i, int j, int nodes) {
    if (i < 1 || i >= j || j > nodes) {
        throw std::invalid_argument("pair_index: need 1 <= i < j <= " +
                                    std::to_string(nodes) + ", got (" + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
    }
    // pairs (1,*) ... (i-1,*) precede block i, which starts at pair (i,i+1)
    const int before = (i - 1) * nodes - (i - 1) * i / 2;
    return before + (j - i - 1);
}

PairIndex pair_from_index(int m, int nodes) {
    const int total = pair_count(nodes);
    if (m < 0 || m >= total) {
        throw std::invalid_argument("pair_from_index: index " + std::to_string(m) +
                                    " outside [0," + std::to_string(total) + ")");
    }
    int i = 1;
    int block = nodes - 1; // pairs anchored at node i
    while (m >= block) {
        m -= block;
        ++i;
        --block;
    }
    return PairIndex{i, i + 1 + m};
}

std::vector<PairIndex> all_pairs(int nodes) {
    std::vector<PairIndex> out;
    out.reserve(static_cast<std::size_t>(pair_count(nodes)));
    for (int i = 1; i <= nodes; ++i)
        for (int j = i + 1; j <= nodes; ++j) out.push_back(PairIndex{i, j});
    return out;
}

} // namespace tsrange
