#pragma once

#include <chrono>
#include <cstddef>

#include "ipcamo/aig.hpp"

namespace ipcamo {

struct GedResult {
    bool timed_out = false;
    std::size_t distance = 0;  // best upper bound found when timed out
};

inline constexpr std::chrono::milliseconds kDefaultGedTimeout{10000};

// Exact graph edit distance with unit costs: node insert/delete/substitute
// (nodes labeled by type) and edge insert/delete/substitute (edges labeled by
// inversion, directed).  Depth-first branch and bound over node mappings.
GedResult graph_edit_distance(const AigGraph& g1, const AigGraph& g2,
                              std::chrono::milliseconds timeout = kDefaultGedTimeout);

}  // namespace ipcamo
