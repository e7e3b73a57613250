#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "loopvm/extract.hpp"

namespace loopvm {

struct EngineConfig {
    bool osrEnabled = true;
    std::uint64_t osrThreshold = 1000;  // loop iterations before loop promotion
    std::uint64_t funcThreshold = 10;   // calls before whole-function promotion
    bool trace = false;
    bool extractionEnabled = true;
};

// Activation frame: one slot per register plus a trailing slot that receives
// the exit target when a loop finishes.
struct Frame {
    std::vector<Value> slots;
};

// Result of one loop iteration: either continue with the next iteration, or
// exit toward a block index (-1 when a member executed ret).
struct IterationOutcome {
    bool exited = false;
    int target = 0;

    static IterationOutcome cont() { return {false, 0}; }
    static IterationOutcome exitTo(int t) { return {true, t}; }
};

struct PromotionEvent {
    enum class Kind { Loop, Function };
    Kind kind;
    std::string function;
    int loopId;        // -1 for function promotions
    std::uint64_t at;  // counter value when the promotion fired
};

struct TierReport {
    std::vector<PromotionEvent> events;
    std::map<std::string, std::uint64_t> callCounts;
    std::map<std::string, bool> functionCompiled;
    std::map<std::pair<std::string, int>, std::uint64_t> loopIterations;
    std::map<std::pair<std::string, int>, bool> loopCompiled;
    std::uint64_t interpretedInstructions = 0;
};

struct RunResult {
    Value value = 0;
    std::string output;
    TierReport report;
};

namespace detail {
struct CompiledStream;
}

// A single-threaded execution engine over an immutable module. Tier state
// (hotness counters, promotion flags, compiled code) lives here, keyed by
// function and loop, and is cumulative across calls into the engine.
class Engine {
  public:
    Engine(const Module& m, EngineConfig cfg);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    Value call(const std::string& fn, const std::vector<Value>& args);

    // Top-level dispatch loop: run units starting at block 0 until an index
    // of -1 signals return. Interpreted tier; loop units promote on their own.
    Value dispatchFunction(const ExecutableFunction& ef, Frame& frame);

    // Runs a loop unit to completion (many iterations, promoting mid-stream
    // when the threshold is reached) and returns the block index after it.
    int executeLoopUnit(const ExecutableFunction& ef, const LoopUnit& u, Frame& frame,
                        bool compiledContext = false);

    // Runs exactly one iteration in the interpreted tier.
    IterationOutcome executeRepeating(const ExecutableFunction& ef, const LoopUnit& u,
                                      Frame& frame);

    // Reads the successor slot and maps it through the loop's constant exit
    // list; the returned value is the matching build-time constant.
    static int resolveSuccessor(const LoopUnit& u, const Frame& frame);

    Frame makeFrame(const ExecutableFunction& ef, const std::vector<Value>& args) const;

    const ExecutableFunction& executable(const std::string& fn) const;
    const std::string& output() const { return output_; }
    const EngineConfig& config() const { return config_; }
    TierReport report() const;
    void setTraceSink(std::ostream* os) { traceOut_ = os; }

  private:
    struct LoopState {
        std::string function;
        int loopId = 0;
        std::uint64_t iterations = 0;
        bool compiled = false;
        std::shared_ptr<const detail::CompiledStream> stream;
    };
    struct FnState {
        std::uint64_t calls = 0;
        bool compiled = false;
        std::shared_ptr<const detail::CompiledStream> stream;
    };

    Value callByIndex(int fnIdx, const std::vector<Value>& args);
    int execBlock(const ExecutableFunction& ef, const BasicBlock& b, Frame& frame);
    Value execInstr(const Instruction& in, Frame& frame);
    Value runCompiledFunction(const ExecutableFunction& ef, const detail::CompiledStream& cs,
                              Frame& frame);
    IterationOutcome runCompiledIteration(const ExecutableFunction& ef,
                                          const detail::CompiledStream& cs, Frame& frame);
    const detail::CompiledStream& loopStream(const ExecutableFunction& ef, const LoopUnit& u,
                                             LoopState& ls);
    LoopState& loopState(const ExecutableFunction& ef, const LoopUnit& u);
    void promoteLoop(const ExecutableFunction& ef, const LoopUnit& u, LoopState& ls);
    void promoteFunction(int fnIdx);
    void traceLine(const std::string& line);

    const Module& module_;
    EngineConfig config_;
    std::vector<ExecutableFunction> funcs_;  // parallel to module_.functions
    std::vector<FnState> fnStates_;
    std::map<const LoopUnit*, LoopState> loopStates_;
    std::vector<PromotionEvent> events_;
    std::string output_;
    std::ostream* traceOut_ = nullptr;
    std::uint64_t instrCount_ = 0;
    int callDepth_ = 0;
    Value retSlot_ = 0;
};

// Convenience wrapper: fresh engine, run the entry function, collect results.
RunResult runModule(const Module& m, const std::vector<Value>& args,
                    const EngineConfig& cfg = {}, std::ostream* traceSink = nullptr);

} // namespace loopvm
