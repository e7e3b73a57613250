#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "loopvm/ir.hpp"
#include "loopvm/loopfind.hpp"

namespace loopvm {

struct ExecUnit;

// A plain block unit: executing it runs the function's block at `index`.
struct BlockUnit {
    int index = 0;
};

// An extracted loop occupying its header's slot in the block array. Members
// are stored densely (indexed by block) so inner dispatch is O(1); inner
// loops appear as nested LoopUnits at their own header slots.
struct LoopUnit {
    int loopId = 0;
    int header = 0;
    std::vector<std::unique_ptr<ExecUnit>> members;
    std::vector<int> memberIndices;      // ascending
    std::vector<int> constantSuccessors; // ascending; -1 first when a member returns

    bool hasMember(int idx) const {
        return idx >= 0 && idx < static_cast<int>(members.size()) && members[idx] != nullptr;
    }
    const ExecUnit* member(int idx) const { return hasMember(idx) ? members[idx].get() : nullptr; }
};

struct ExecUnit {
    std::variant<BlockUnit, LoopUnit> v;

    ExecUnit() : v(BlockUnit{}) {}
    explicit ExecUnit(BlockUnit b) : v(std::move(b)) {}
    explicit ExecUnit(LoopUnit l) : v(std::move(l)) {}

    bool isLoop() const { return std::holds_alternative<LoopUnit>(v); }
    const LoopUnit& loop() const { return std::get<LoopUnit>(v); }
    const BlockUnit& block() const { return std::get<BlockUnit>(v); }
};

// Executable form of a function: the block array with loops folded into
// LoopUnits at their header slots. Loop exits write their target into
// frame slot `successorSlot` (== numRegisters).
struct ExecutableFunction {
    const Function* fn = nullptr;
    std::vector<ExecUnit> units;
    int successorSlot = 0;
    bool extracted = false;  // false when analysis bailed out or was disabled
};

// Exit targets of a loop, ascending: every block outside the loop reachable
// from a member in one step, with sentinel -1 first iff a member block
// terminates with ret (blocks with no successors).
std::vector<int> loopExitSuccessors(const Loop& loop, const Cfg& g);

// Builds the executable form. Loops are folded inside-out, so inner loops
// become members of the enclosing LoopUnit; on bailout outcomes the block
// array is kept flat.
ExecutableFunction extractLoops(const Function& f, const AnalysisOutcome& outcome);

// Flat form with no loop extraction, regardless of analysis.
ExecutableFunction buildPlain(const Function& f);

} // namespace loopvm
