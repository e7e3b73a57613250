#include "loopvm/extract.hpp"

#include <algorithm>
#include <set>

#include "loopvm/cfg.hpp"
#include "loopvm/errors.hpp"

namespace loopvm {

std::vector<int> loopExitSuccessors(const Loop& loop, const Cfg& g) {
    std::set<int> exits;
    bool memberReturns = false;
    for (int b : loop.blocks) {
        if (b < 0 || b >= g.numBlocks)
            throw InternalError("loop " + std::to_string(loop.id) + " references unknown block " +
                                std::to_string(b));
        if (g.successors[b].empty()) memberReturns = true;
        for (int s : g.successors[b])
            if (!std::binary_search(loop.blocks.begin(), loop.blocks.end(), s)) exits.insert(s);
    }
    std::vector<int> out;
    if (memberReturns) out.push_back(-1);
    out.insert(out.end(), exits.begin(), exits.end());
    return out;
}

ExecutableFunction buildPlain(const Function& f) {
    ExecutableFunction ef;
    ef.fn = &f;
    ef.successorSlot = f.numRegisters;
    ef.units.reserve(f.blocks.size());
    for (const BasicBlock& b : f.blocks) ef.units.emplace_back(BlockUnit{b.index});
    return ef;
}

ExecutableFunction extractLoops(const Function& f, const AnalysisOutcome& outcome) {
    ExecutableFunction ef = buildPlain(f);
    const LoopForest* forest = std::get_if<LoopForest>(&outcome);
    if (forest == nullptr) return ef;  // bailout: keep the flat block array

    Cfg g = buildCfg(f);
    int n = g.numBlocks;
    std::vector<char> consumed(n, 0);
    // Inside-out order guarantees that when a loop claims its member slots,
    // every inner loop has already been folded into a LoopUnit sitting at its
    // own header slot.
    for (const Loop& loop : forest->loops) {
        LoopUnit lu;
        lu.loopId = loop.id;
        lu.header = loop.header;
        lu.members.resize(n);
        for (int b : loop.blocks) {
            if (b < 0 || b >= n)
                throw InternalError("loop " + std::to_string(loop.id) +
                                    " references unknown block " + std::to_string(b));
            if (f.blocks[b].terminator.kind == Terminator::Kind::Ret)
                throw InternalError("loop " + std::to_string(loop.id) + " member block " +
                                    std::to_string(b) + " terminates with ret");
            if (consumed[b]) continue;  // already inside an inner LoopUnit
            lu.members[b] = std::make_unique<ExecUnit>(std::move(ef.units[b]));
            lu.memberIndices.push_back(b);
            consumed[b] = 1;
        }
        if (!lu.hasMember(loop.header))
            throw InternalError("loop " + std::to_string(loop.id) + " header " +
                                std::to_string(loop.header) + " missing from its members");
        lu.constantSuccessors = loopExitSuccessors(loop, g);
        ef.units[loop.header] = ExecUnit(std::move(lu));
        consumed[loop.header] = 0;  // the slot now holds the folded loop
    }
    // Slots whose blocks were folded into a loop keep an identical plain
    // block unit; top-level dispatch can only reach a loop through its header.
    for (int b = 0; b < n; ++b)
        if (consumed[b]) ef.units[b] = ExecUnit(BlockUnit{b});
    ef.extracted = true;
    return ef;
}

} // namespace loopvm
