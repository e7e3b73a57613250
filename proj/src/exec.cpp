#include "loopvm/exec.hpp"

#include <cstdint>
#include <limits>

#include "loopvm/cfg.hpp"
#include "loopvm/errors.hpp"

namespace loopvm {

namespace {

constexpr int kMaxCallDepth = 10000;

Value wrapAdd(Value a, Value b) {
    return static_cast<Value>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
Value wrapSub(Value a, Value b) {
    return static_cast<Value>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
Value wrapMul(Value a, Value b) {
    return static_cast<Value>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}
Value checkedDiv(Value a, Value b) {
    if (b == 0) throw TrapError(TrapError::Kind::DivideByZero, "division by zero");
    if (a == std::numeric_limits<Value>::min() && b == -1) return a;  // wraps
    return a / b;
}
Value checkedMod(Value a, Value b) {
    if (b == 0) throw TrapError(TrapError::Kind::DivideByZero, "modulo by zero");
    if (a == std::numeric_limits<Value>::min() && b == -1) return 0;
    return a % b;
}

Value binEval(BinOp op, Value a, Value b) {
    switch (op) {
        case BinOp::Add: return wrapAdd(a, b);
        case BinOp::Sub: return wrapSub(a, b);
        case BinOp::Mul: return wrapMul(a, b);
        case BinOp::Div: return checkedDiv(a, b);
        case BinOp::Mod: return checkedMod(a, b);
        case BinOp::CmpLt: return a < b ? 1 : 0;
        case BinOp::CmpLe: return a <= b ? 1 : 0;
        case BinOp::CmpEq: return a == b ? 1 : 0;
        case BinOp::CmpNe: return a != b ? 1 : 0;
    }
    throw InternalError("unknown binary op");
}

struct DepthGuard {
    int& depth;
    explicit DepthGuard(int& d) : depth(d) { ++depth; }
    ~DepthGuard() { --depth; }
};

} // namespace

namespace detail {

// Compiled form: a flat, pre-decoded op stream. Jump targets are resolved to
// op offsets at compile time; loop streams additionally encode "finish the
// iteration" and "exit toward block t" outcomes directly in the target field.
enum class COpc : std::uint8_t {
    Const, Move, Add, Sub, Mul, Div, Mod, CLt, CLe, CEq, CNe, Print, Call, Jmp, Br, Ret, Loop
};

struct COp {
    COpc op;
    std::int32_t a = 0, b = 0, c = 0;
    Value imm = 0;
};

constexpr std::int32_t kEncContinue = std::numeric_limits<std::int32_t>::min();
constexpr std::int32_t encodeExit(int target) { return -(target + 2); }
constexpr int decodeExit(std::int32_t enc) { return -enc - 2; }

struct CompiledStream {
    std::vector<COp> ops;
    std::vector<std::int32_t> argPool;
    std::vector<std::int32_t> blockPc;  // function streams: block index -> pc
    std::vector<const LoopUnit*> loopRefs;
    // Loop streams: per Loop op, the exit encoding for each constant
    // successor of the inner loop.
    std::vector<std::vector<std::pair<int, std::int32_t>>> loopExits;
};

namespace {

COpc binOpc(BinOp op) {
    switch (op) {
        case BinOp::Add: return COpc::Add;
        case BinOp::Sub: return COpc::Sub;
        case BinOp::Mul: return COpc::Mul;
        case BinOp::Div: return COpc::Div;
        case BinOp::Mod: return COpc::Mod;
        case BinOp::CmpLt: return COpc::CLt;
        case BinOp::CmpLe: return COpc::CLe;
        case BinOp::CmpEq: return COpc::CEq;
        case BinOp::CmpNe: return COpc::CNe;
    }
    throw InternalError("unknown binary op");
}

void emitInstr(CompiledStream& cs, const Module& m, const Instruction& in) {
    COp o;
    switch (in.kind) {
        case Instruction::Kind::Const:
            o.op = COpc::Const;
            o.a = in.dst;
            o.imm = in.imm;
            break;
        case Instruction::Kind::Move:
            o.op = COpc::Move;
            o.a = in.dst;
            o.b = in.lhs;
            break;
        case Instruction::Kind::Binary:
            o.op = binOpc(in.op);
            o.a = in.dst;
            o.b = in.lhs;
            o.c = in.rhs;
            break;
        case Instruction::Kind::Call: {
            int callee = m.functionIndex(in.callee);
            if (callee < 0) throw InternalError("call to unknown function '" + in.callee + "'");
            o.op = COpc::Call;
            o.a = in.dst;
            o.b = callee;
            o.c = static_cast<std::int32_t>(cs.argPool.size());
            o.imm = static_cast<Value>(in.args.size());
            for (int r : in.args) cs.argPool.push_back(r);
            break;
        }
        case Instruction::Kind::Print:
            o.op = COpc::Print;
            o.a = in.lhs;
            break;
    }
    cs.ops.push_back(o);
}

} // namespace

// Whole-function stream: every slot gets code (plain blocks inline, loop
// units as a single Loop op); blockPc pre-binds block indices to offsets.
std::shared_ptr<const CompiledStream> compileFunction(const Module& m,
                                                      const ExecutableFunction& ef) {
    auto cs = std::make_shared<CompiledStream>();
    const Function& f = *ef.fn;
    int n = static_cast<int>(ef.units.size());
    cs->blockPc.resize(n, 0);
    int pc = 0;
    for (int i = 0; i < n; ++i) {
        cs->blockPc[i] = pc;
        pc += ef.units[i].isLoop() ? 1 : static_cast<int>(f.blocks[i].body.size()) + 1;
    }
    for (int i = 0; i < n; ++i) {
        if (ef.units[i].isLoop()) {
            COp o;
            o.op = COpc::Loop;
            o.a = static_cast<std::int32_t>(cs->loopRefs.size());
            cs->loopRefs.push_back(&ef.units[i].loop());
            cs->ops.push_back(o);
            continue;
        }
        const BasicBlock& b = f.blocks[ef.units[i].block().index];
        for (const Instruction& in : b.body) emitInstr(*cs, m, in);
        COp t;
        switch (b.terminator.kind) {
            case Terminator::Kind::Jump:
                t.op = COpc::Jmp;
                t.a = cs->blockPc[b.terminator.target];
                break;
            case Terminator::Kind::Branch:
                t.op = COpc::Br;
                t.a = b.terminator.cond;
                t.b = cs->blockPc[b.terminator.target];
                t.c = cs->blockPc[b.terminator.altTarget];
                break;
            case Terminator::Kind::Ret:
                t.op = COpc::Ret;
                t.a = b.terminator.src;
                break;
        }
        cs->ops.push_back(t);
    }
    return cs;
}

// Loop stream: one iteration's worth of code. The header's code starts at
// pc 0; terminator targets are pre-bound to member offsets, to the
// "iteration done" marker, or to "exit toward block t" encodings.
std::shared_ptr<const CompiledStream> compileLoop(const Module& m, const ExecutableFunction& ef,
                                                  const LoopUnit& u) {
    auto cs = std::make_shared<CompiledStream>();
    const Function& f = *ef.fn;
    std::vector<int> order{u.header};
    for (int b : u.memberIndices)
        if (b != u.header) order.push_back(b);

    std::vector<std::int32_t> memberPc(u.members.size(), -1);
    int pc = 0;
    for (int b : order) {
        memberPc[b] = pc;
        const ExecUnit& unit = *u.member(b);
        pc += unit.isLoop() ? 1 : static_cast<int>(f.blocks[unit.block().index].body.size()) + 1;
    }
    auto enc = [&](int target) -> std::int32_t {
        if (target == u.header) return kEncContinue;
        if (u.hasMember(target)) return memberPc[target];
        return encodeExit(target);
    };
    for (int bi : order) {
        const ExecUnit& unit = *u.member(bi);
        if (unit.isLoop()) {
            const LoopUnit& inner = unit.loop();
            COp o;
            o.op = COpc::Loop;
            o.a = static_cast<std::int32_t>(cs->loopRefs.size());
            cs->loopRefs.push_back(&inner);
            std::vector<std::pair<int, std::int32_t>> exits;
            for (int t : inner.constantSuccessors) exits.emplace_back(t, enc(t));
            cs->loopExits.push_back(std::move(exits));
            cs->ops.push_back(o);
            continue;
        }
        const BasicBlock& b = f.blocks[unit.block().index];
        for (const Instruction& in : b.body) emitInstr(*cs, m, in);
        COp t;
        switch (b.terminator.kind) {
            case Terminator::Kind::Jump:
                t.op = COpc::Jmp;
                t.a = enc(b.terminator.target);
                break;
            case Terminator::Kind::Branch:
                t.op = COpc::Br;
                t.a = b.terminator.cond;
                t.b = enc(b.terminator.target);
                t.c = enc(b.terminator.altTarget);
                break;
            case Terminator::Kind::Ret:
                t.op = COpc::Ret;
                t.a = b.terminator.src;
                break;
        }
        cs->ops.push_back(t);
    }
    // Loop ops need their exits table index aligned with loopRefs.
    return cs;
}

} // namespace detail

using detail::COp;
using detail::COpc;
using detail::CompiledStream;

Engine::Engine(const Module& m, EngineConfig cfg) : module_(m), config_(cfg) {
    funcs_.reserve(m.functions.size());
    for (const Function& f : m.functions) {
        if (config_.extractionEnabled)
            funcs_.push_back(extractLoops(f, analyzeCfg(buildCfg(f))));
        else
            funcs_.push_back(buildPlain(f));
    }
    fnStates_.resize(m.functions.size());
}

Engine::~Engine() = default;

void Engine::traceLine(const std::string& line) {
    if (traceOut_ != nullptr) *traceOut_ << line << "\n";
}

Frame Engine::makeFrame(const ExecutableFunction& ef, const std::vector<Value>& args) const {
    Frame frame;
    frame.slots.assign(static_cast<size_t>(ef.fn->numRegisters) + 1, 0);
    for (size_t i = 0; i < args.size(); ++i) frame.slots[ef.fn->params[i]] = args[i];
    return frame;
}

const ExecutableFunction& Engine::executable(const std::string& fn) const {
    int idx = module_.functionIndex(fn);
    if (idx < 0) throw InternalError("unknown function '" + fn + "'");
    return funcs_[idx];
}

Value Engine::call(const std::string& fn, const std::vector<Value>& args) {
    int idx = module_.functionIndex(fn);
    if (idx < 0)
        throw TrapError(TrapError::Kind::BadInvocation, "unknown function '" + fn + "'");
    return callByIndex(idx, args);
}

Value Engine::callByIndex(int fnIdx, const std::vector<Value>& args) {
    const ExecutableFunction& ef = funcs_[fnIdx];
    const Function& f = *ef.fn;
    if (args.size() != f.params.size())
        throw TrapError(TrapError::Kind::BadInvocation,
                        "function '" + f.name + "' expects " + std::to_string(f.params.size()) +
                            " arguments, got " + std::to_string(args.size()));
    if (callDepth_ >= kMaxCallDepth)
        throw TrapError(TrapError::Kind::CallDepthExceeded, "call depth limit exceeded");
    DepthGuard guard(callDepth_);

    FnState& fs = fnStates_[fnIdx];
    ++fs.calls;
    if (config_.trace) traceLine("enter fn " + f.name);
    if (!fs.compiled && fs.calls >= config_.funcThreshold) promoteFunction(fnIdx);

    Frame frame = makeFrame(ef, args);
    Value result = fs.compiled ? runCompiledFunction(ef, *fs.stream, frame)
                               : dispatchFunction(ef, frame);
    if (config_.trace) traceLine("exit fn " + f.name + " -> " + std::to_string(result));
    return result;
}

namespace {

// Interpreted-tier register access is bounds-checked on every use; the
// compiled tier relies on the validation done before promotion.
Value& slotAt(Frame& frame, int idx) {
    if (idx < 0 || static_cast<size_t>(idx) >= frame.slots.size())
        throw InternalError("register r" + std::to_string(idx) + " out of frame bounds");
    return frame.slots[idx];
}

} // namespace

Value Engine::execInstr(const Instruction& in, Frame& frame) {
    switch (in.kind) {
        case Instruction::Kind::Const:
            slotAt(frame, in.dst) = in.imm;
            return 0;
        case Instruction::Kind::Move:
            slotAt(frame, in.dst) = slotAt(frame, in.lhs);
            return 0;
        case Instruction::Kind::Binary:
            slotAt(frame, in.dst) = binEval(in.op, slotAt(frame, in.lhs), slotAt(frame, in.rhs));
            return 0;
        case Instruction::Kind::Call: {
            int callee = module_.functionIndex(in.callee);
            if (callee < 0) throw InternalError("call to unknown function '" + in.callee + "'");
            std::vector<Value> args;
            args.reserve(in.args.size());
            for (int r : in.args) args.push_back(slotAt(frame, r));
            slotAt(frame, in.dst) = callByIndex(callee, args);
            return 0;
        }
        case Instruction::Kind::Print:
            output_ += std::to_string(slotAt(frame, in.lhs));
            output_ += '\n';
            return 0;
    }
    throw InternalError("unknown instruction kind");
}

int Engine::execBlock(const ExecutableFunction& ef, const BasicBlock& b, Frame& frame) {
    (void)ef;
    if (config_.trace) traceLine("block " + std::to_string(b.index));
    for (const Instruction& in : b.body) {
        ++instrCount_;
        execInstr(in, frame);
    }
    ++instrCount_;
    const Terminator& t = b.terminator;
    switch (t.kind) {
        case Terminator::Kind::Jump:
            return t.target;
        case Terminator::Kind::Branch:
            return slotAt(frame, t.cond) != 0 ? t.target : t.altTarget;
        case Terminator::Kind::Ret:
            retSlot_ = slotAt(frame, t.src);
            return -1;
    }
    throw InternalError("unknown terminator kind");
}

Value Engine::dispatchFunction(const ExecutableFunction& ef, Frame& frame) {
    int idx = 0;
    while (idx != -1) {
        if (idx < 0 || static_cast<size_t>(idx) >= ef.units.size())
            throw InternalError("dispatch to invalid block index " + std::to_string(idx));
        const ExecUnit& u = ef.units[idx];
        idx = u.isLoop() ? executeLoopUnit(ef, u.loop(), frame)
                         : execBlock(ef, ef.fn->blocks[u.block().index], frame);
    }
    return retSlot_;
}

IterationOutcome Engine::executeRepeating(const ExecutableFunction& ef, const LoopUnit& u,
                                          Frame& frame) {
    int idx = u.header;
    for (;;) {
        const ExecUnit* m = u.member(idx);
        if (m == nullptr)
            throw InternalError("loop " + std::to_string(u.loopId) + " has no member block " +
                                std::to_string(idx));
        int next = m->isLoop() ? executeLoopUnit(ef, m->loop(), frame)
                               : execBlock(ef, ef.fn->blocks[m->block().index], frame);
        if (next == u.header) return IterationOutcome::cont();
        if (!u.hasMember(next)) return IterationOutcome::exitTo(next);
        idx = next;
    }
}

int Engine::resolveSuccessor(const LoopUnit& u, const Frame& frame) {
    Value target = frame.slots.back();
    for (int t : u.constantSuccessors)
        if (t == target) return t;
    throw InternalError("loop " + std::to_string(u.loopId) + " exited toward " +
                        std::to_string(target) + ", not a constant successor");
}

Engine::LoopState& Engine::loopState(const ExecutableFunction& ef, const LoopUnit& u) {
    auto it = loopStates_.find(&u);
    if (it == loopStates_.end()) {
        LoopState ls;
        ls.function = ef.fn->name;
        ls.loopId = u.loopId;
        it = loopStates_.emplace(&u, std::move(ls)).first;
    }
    return it->second;
}

const CompiledStream& Engine::loopStream(const ExecutableFunction& ef, const LoopUnit& u,
                                         LoopState& ls) {
    if (!ls.stream) ls.stream = detail::compileLoop(module_, ef, u);
    return *ls.stream;
}

void Engine::promoteLoop(const ExecutableFunction& ef, const LoopUnit& u, LoopState& ls) {
    ls.compiled = true;
    loopStream(ef, u, ls);
    events_.push_back(
        {PromotionEvent::Kind::Loop, ef.fn->name, u.loopId, ls.iterations});
    if (config_.trace)
        traceLine("promote loop " + std::to_string(u.loopId) + " at " +
                  std::to_string(ls.iterations));
}

void Engine::promoteFunction(int fnIdx) {
    FnState& fs = fnStates_[fnIdx];
    fs.compiled = true;
    if (!fs.stream) fs.stream = detail::compileFunction(module_, funcs_[fnIdx]);
    events_.push_back(
        {PromotionEvent::Kind::Function, funcs_[fnIdx].fn->name, -1, fs.calls});
    if (config_.trace)
        traceLine("promote fn " + funcs_[fnIdx].fn->name + " at " + std::to_string(fs.calls));
}

int Engine::executeLoopUnit(const ExecutableFunction& ef, const LoopUnit& u, Frame& frame,
                            bool compiledContext) {
    LoopState& ls = loopState(ef, u);
    for (;;) {
        IterationOutcome oc;
        if (compiledContext || ls.compiled) {
            oc = runCompiledIteration(ef, loopStream(ef, u, ls), frame);
        } else {
            if (config_.trace)
                traceLine("loop " + std::to_string(u.loopId) + " iter " +
                          std::to_string(ls.iterations + 1));
            oc = executeRepeating(ef, u, frame);
        }
        ++ls.iterations;
        if (config_.osrEnabled && !ls.compiled && ls.iterations >= config_.osrThreshold)
            promoteLoop(ef, u, ls);
        if (oc.exited) {
            frame.slots.back() = oc.target;
            return resolveSuccessor(u, frame);
        }
    }
}

Value Engine::runCompiledFunction(const ExecutableFunction& ef, const CompiledStream& cs,
                                  Frame& frame) {
    const COp* ops = cs.ops.data();
    Value* regs = frame.slots.data();
    int pc = 0;
    for (;;) {
        const COp& o = ops[pc];
        switch (o.op) {
            case COpc::Const: regs[o.a] = o.imm; ++pc; break;
            case COpc::Move: regs[o.a] = regs[o.b]; ++pc; break;
            case COpc::Add: regs[o.a] = wrapAdd(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Sub: regs[o.a] = wrapSub(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Mul: regs[o.a] = wrapMul(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Div: regs[o.a] = checkedDiv(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Mod: regs[o.a] = checkedMod(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::CLt: regs[o.a] = regs[o.b] < regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::CLe: regs[o.a] = regs[o.b] <= regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::CEq: regs[o.a] = regs[o.b] == regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::CNe: regs[o.a] = regs[o.b] != regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::Print:
                output_ += std::to_string(regs[o.a]);
                output_ += '\n';
                ++pc;
                break;
            case COpc::Call: {
                std::vector<Value> args;
                args.reserve(static_cast<size_t>(o.imm));
                for (Value i = 0; i < o.imm; ++i) args.push_back(regs[cs.argPool[o.c + i]]);
                Value v = callByIndex(o.b, args);
                regs = frame.slots.data();  // callee may not alias, but stay safe
                regs[o.a] = v;
                ++pc;
                break;
            }
            case COpc::Jmp: pc = o.a; break;
            case COpc::Br: pc = regs[o.a] != 0 ? o.b : o.c; break;
            case COpc::Ret: return regs[o.a];
            case COpc::Loop: {
                int next = executeLoopUnit(ef, *cs.loopRefs[o.a], frame, true);
                if (next == -1) return retSlot_;
                pc = cs.blockPc[next];
                break;
            }
        }
    }
}

IterationOutcome Engine::runCompiledIteration(const ExecutableFunction& ef,
                                              const CompiledStream& cs, Frame& frame) {
    const COp* ops = cs.ops.data();
    Value* regs = frame.slots.data();
    int pc = 0;
    auto follow = [&](std::int32_t enc, IterationOutcome& out) -> bool {
        if (enc >= 0) {
            pc = enc;
            return false;
        }
        out = enc == detail::kEncContinue ? IterationOutcome::cont()
                                          : IterationOutcome::exitTo(detail::decodeExit(enc));
        return true;
    };
    IterationOutcome done;
    for (;;) {
        const COp& o = ops[pc];
        switch (o.op) {
            case COpc::Const: regs[o.a] = o.imm; ++pc; break;
            case COpc::Move: regs[o.a] = regs[o.b]; ++pc; break;
            case COpc::Add: regs[o.a] = wrapAdd(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Sub: regs[o.a] = wrapSub(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Mul: regs[o.a] = wrapMul(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Div: regs[o.a] = checkedDiv(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::Mod: regs[o.a] = checkedMod(regs[o.b], regs[o.c]); ++pc; break;
            case COpc::CLt: regs[o.a] = regs[o.b] < regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::CLe: regs[o.a] = regs[o.b] <= regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::CEq: regs[o.a] = regs[o.b] == regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::CNe: regs[o.a] = regs[o.b] != regs[o.c] ? 1 : 0; ++pc; break;
            case COpc::Print:
                output_ += std::to_string(regs[o.a]);
                output_ += '\n';
                ++pc;
                break;
            case COpc::Call: {
                std::vector<Value> args;
                args.reserve(static_cast<size_t>(o.imm));
                for (Value i = 0; i < o.imm; ++i) args.push_back(regs[cs.argPool[o.c + i]]);
                Value v = callByIndex(o.b, args);
                regs = frame.slots.data();
                regs[o.a] = v;
                ++pc;
                break;
            }
            case COpc::Jmp:
                if (follow(o.a, done)) return done;
                break;
            case COpc::Br:
                if (follow(regs[o.a] != 0 ? o.b : o.c, done)) return done;
                break;
            case COpc::Ret:
                retSlot_ = regs[o.a];
                return IterationOutcome::exitTo(-1);
            case COpc::Loop: {
                int next = executeLoopUnit(ef, *cs.loopRefs[o.a], frame, true);
                const auto& exits = cs.loopExits[o.a];
                std::int32_t enc = 0;
                bool found = false;
                for (const auto& [t, e] : exits) {
                    if (t == next) {
                        enc = e;
                        found = true;
                        break;
                    }
                }
                if (!found)
                    throw InternalError("inner loop exited toward unmapped block " +
                                        std::to_string(next));
                if (follow(enc, done)) return done;
                break;
            }
        }
    }
}

TierReport Engine::report() const {
    TierReport r;
    r.events = events_;
    for (size_t i = 0; i < funcs_.size(); ++i) {
        const std::string& name = funcs_[i].fn->name;
        r.callCounts[name] = fnStates_[i].calls;
        r.functionCompiled[name] = fnStates_[i].compiled;
    }
    for (const auto& [ptr, ls] : loopStates_) {
        (void)ptr;
        r.loopIterations[{ls.function, ls.loopId}] = ls.iterations;
        r.loopCompiled[{ls.function, ls.loopId}] = ls.compiled;
    }
    r.interpretedInstructions = instrCount_;
    return r;
}

RunResult runModule(const Module& m, const std::vector<Value>& args, const EngineConfig& cfg,
                    std::ostream* traceSink) {
    Engine engine(m, cfg);
    if (traceSink != nullptr) engine.setTraceSink(traceSink);
    RunResult r;
    r.value = engine.call(m.entry, args);
    r.output = engine.output();
    r.report = engine.report();
    return r;
}

} // namespace loopvm
