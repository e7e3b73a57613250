#pragma once

#include <string>
#include <variant>
#include <vector>

#include "loopvm/cfg.hpp"

namespace loopvm {

// A reconstructed loop. Ids reflect creation order during the traversal;
// blocks and backedgeSources are sorted ascending.
struct Loop {
    int id = 0;
    int header = 0;
    std::vector<int> blocks;
    std::vector<int> backedgeSources;
};

// Evidence for an irreducible region: the loops still alive at the entry block.
struct IrreducibleInfo {
    std::string reason;
    std::vector<int> entryLoopIds;
};

// Evidence for two loops each containing the other's header.
struct MutualContainmentInfo {
    int first = 0;
    int second = 0;
};

struct FindLoopsOutput {
    std::vector<Loop> loops;                  // creation order
    std::vector<std::vector<int>> blockLoops; // per block: sorted ids of containing loops
};

using FindLoopsResult = std::variant<FindLoopsOutput, IrreducibleInfo>;

// Loop nesting forest. `loops` is sorted inside-out (inner loops before the
// loops containing them); parent/children/roots are indexed by loop id.
struct LoopForest {
    std::vector<Loop> loops;
    std::vector<int> parent;                // -1 for roots
    std::vector<std::vector<int>> children; // direct children, inside-out order
    std::vector<int> roots;

    const Loop* byId(int id) const;
};

using NestingResult = std::variant<LoopForest, MutualContainmentInfo>;

using AnalysisOutcome = std::variant<LoopForest, IrreducibleInfo, MutualContainmentInfo>;

// Depth-first loop reconstruction over the reachable subgraph. Returns the
// detected loops, or bails out when the entry block ends up inside a loop
// (the graph has a multi-entry cycle).
FindLoopsResult findLoops(const Cfg& g);

// Derives the nesting forest from header containment. Bails out when two
// loops mutually contain each other's headers.
NestingResult computeNesting(std::vector<Loop> loops);

// findLoops + computeNesting in one step.
AnalysisOutcome analyzeCfg(const Cfg& g);

} // namespace loopvm
