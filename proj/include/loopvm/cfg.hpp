#pragma once

#include <string>
#include <vector>

#include "loopvm/ir.hpp"

namespace loopvm {

struct LoopForest;

// Per-function control flow graph. Adjacency is derived solely from block
// terminators; edge lists are sorted ascending and deduplicated.
struct Cfg {
    int numBlocks = 0;
    int entry = 0;
    std::vector<std::vector<int>> successors;
    std::vector<std::vector<int>> predecessors;
};

Cfg buildCfg(const Function& f);

// Blocks reachable from the entry, sorted ascending. Unreachable blocks stay
// in the Cfg but are excluded from loop analysis.
std::vector<int> reachableBlocks(const Cfg& g);

// Graphviz rendering. When a loop forest is supplied, loops become nested
// clusters and loop headers are drawn double-circled.
std::string exportDot(const Cfg& g, const LoopForest* loops = nullptr,
                      const std::string& name = "cfg");

} // namespace loopvm
