#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace loopvm {

// All values are signed 64-bit integers with wrapping arithmetic.
using Value = std::int64_t;

enum class BinOp { Add, Sub, Mul, Div, Mod, CmpLt, CmpLe, CmpEq, CmpNe };

const char* binOpName(BinOp op);

// A single non-terminator instruction. Registers are indices into the frame.
struct Instruction {
    enum class Kind { Const, Move, Binary, Call, Print };

    Kind kind;
    int dst = -1;            // Const/Move/Binary/Call: destination register
    int lhs = -1;            // Move: source; Binary: left operand; Print: operand
    int rhs = -1;            // Binary: right operand
    BinOp op = BinOp::Add;   // Binary only
    Value imm = 0;           // Const only
    std::string callee;      // Call only
    std::vector<int> args;   // Call only: argument registers

    static Instruction makeConst(int dst, Value v);
    static Instruction makeMove(int dst, int src);
    static Instruction makeBinary(int dst, BinOp op, int lhs, int rhs);
    static Instruction makeCall(int dst, std::string callee, std::vector<int> args);
    static Instruction makePrint(int src);
};

// Every block ends in exactly one terminator.
struct Terminator {
    enum class Kind { Jump, Branch, Ret };

    Kind kind = Kind::Ret;
    int cond = -1;       // Branch: condition register
    int target = -1;     // Jump: target; Branch: taken when cond != 0
    int altTarget = -1;  // Branch: taken when cond == 0
    int src = -1;        // Ret: result register

    static Terminator jump(int target);
    static Terminator branch(int cond, int target, int altTarget);
    static Terminator ret(int src);
};

struct BasicBlock {
    int index = 0;
    std::string label;
    std::vector<Instruction> body;
    Terminator terminator;
};

struct Function {
    std::string name;
    std::vector<int> params;  // registers that receive the arguments, in order
    int numRegisters = 0;
    std::vector<BasicBlock> blocks;  // blocks[0] is the entry block
};

struct Module {
    std::vector<Function> functions;  // source order
    std::string entry;                // name of the entry function

    const Function* find(const std::string& name) const;
    int functionIndex(const std::string& name) const;  // -1 if absent
};

// Canonical text form; parse(prettyPrint(m)) reproduces m structurally.
std::string prettyPrint(const Module& m);

// Returns all type-invariant violations (empty means the module is valid).
std::vector<std::string> validateModule(const Module& m);

bool structurallyEqual(const Module& a, const Module& b);

} // namespace loopvm
