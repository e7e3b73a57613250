#include "loopvm/ir.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace loopvm {

const char* binOpName(BinOp op) {
    switch (op) {
        case BinOp::Add: return "add";
        case BinOp::Sub: return "sub";
        case BinOp::Mul: return "mul";
        case BinOp::Div: return "div";
        case BinOp::Mod: return "mod";
        case BinOp::CmpLt: return "cmp_lt";
        case BinOp::CmpLe: return "cmp_le";
        case BinOp::CmpEq: return "cmp_eq";
        case BinOp::CmpNe: return "cmp_ne";
    }
    return "?";
}

Instruction Instruction::makeConst(int dst, Value v) {
    Instruction i;
    i.kind = Kind::Const;
    i.dst = dst;
    i.imm = v;
    return i;
}

Instruction Instruction::makeMove(int dst, int src) {
    Instruction i;
    i.kind = Kind::Move;
    i.dst = dst;
    i.lhs = src;
    return i;
}

Instruction Instruction::makeBinary(int dst, BinOp op, int lhs, int rhs) {
    Instruction i;
    i.kind = Kind::Binary;
    i.dst = dst;
    i.op = op;
    i.lhs = lhs;
    i.rhs = rhs;
    return i;
}

Instruction Instruction::makeCall(int dst, std::string callee, std::vector<int> args) {
    Instruction i;
    i.kind = Kind::Call;
    i.dst = dst;
    i.callee = std::move(callee);
    i.args = std::move(args);
    return i;
}

Instruction Instruction::makePrint(int src) {
    Instruction i;
    i.kind = Kind::Print;
    i.lhs = src;
    return i;
}

Terminator Terminator::jump(int target) {
    Terminator t;
    t.kind = Kind::Jump;
    t.target = target;
    return t;
}

Terminator Terminator::branch(int cond, int target, int altTarget) {
    Terminator t;
    t.kind = Kind::Branch;
    t.cond = cond;
    t.target = target;
    t.altTarget = altTarget;
    return t;
}

Terminator Terminator::ret(int src) {
    Terminator t;
    t.kind = Kind::Ret;
    t.src = src;
    return t;
}

const Function* Module::find(const std::string& name) const {
    int idx = functionIndex(name);
    return idx < 0 ? nullptr : &functions[idx];
}

int Module::functionIndex(const std::string& name) const {
    for (size_t i = 0; i < functions.size(); ++i)
        if (functions[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

void printInstruction(std::ostream& os, const Instruction& in) {
    switch (in.kind) {
        case Instruction::Kind::Const:
            os << "r" << in.dst << " = const " << in.imm;
            break;
        case Instruction::Kind::Move:
            os << "r" << in.dst << " = r" << in.lhs;
            break;
        case Instruction::Kind::Binary:
            os << "r" << in.dst << " = " << binOpName(in.op) << " r" << in.lhs << ", r"
               << in.rhs;
            break;
        case Instruction::Kind::Call: {
            os << "r" << in.dst << " = call " << in.callee << "(";
            for (size_t i = 0; i < in.args.size(); ++i) {
                if (i) os << ", ";
                os << "r" << in.args[i];
            }
            os << ")";
            break;
        }
        case Instruction::Kind::Print:
            os << "print r" << in.lhs;
            break;
    }
}

void printTerminator(std::ostream& os, const Terminator& t) {
    switch (t.kind) {
        case Terminator::Kind::Jump:
            os << "jump b" << t.target;
            break;
        case Terminator::Kind::Branch:
            os << "branch r" << t.cond << ", b" << t.target << ", b" << t.altTarget;
            break;
        case Terminator::Kind::Ret:
            os << "ret r" << t.src;
            break;
    }
}

} // namespace

std::string prettyPrint(const Module& m) {
    std::ostringstream os;
    for (size_t fi = 0; fi < m.functions.size(); ++fi) {
        const Function& f = m.functions[fi];
        if (fi) os << "\n";
        os << "fn " << f.name << "(";
        for (size_t i = 0; i < f.params.size(); ++i) {
            if (i) os << ", ";
            os << "r" << f.params[i];
        }
        os << ") {\n";
        for (const BasicBlock& b : f.blocks) {
            os << "b" << b.index << ":\n";
            for (const Instruction& in : b.body) {
                os << "  ";
                printInstruction(os, in);
                os << "\n";
            }
            os << "  ";
            printTerminator(os, b.terminator);
            os << "\n";
        }
        os << "}\n";
    }
    return os.str();
}

namespace {

void checkReg(std::vector<std::string>& out, const Function& f, const BasicBlock& b,
              int reg, const char* what) {
    if (reg < 0 || reg >= f.numRegisters) {
        out.push_back("fn " + f.name + " block " + std::to_string(b.index) + ": " + what +
                      " register r" + std::to_string(reg) + " out of range (have " +
                      std::to_string(f.numRegisters) + ")");
    }
}

void checkTarget(std::vector<std::string>& out, const Function& f, const BasicBlock& b,
                 int target) {
    int n = static_cast<int>(f.blocks.size());
    if (target < 0 || target >= n) {
        out.push_back("fn " + f.name + " block " + std::to_string(b.index) +
                      ": jump target " + std::to_string(target) + " out of range");
    } else if (target == 0) {
        out.push_back("fn " + f.name + " block " + std::to_string(b.index) +
                      ": entry has predecessor (block 0 may not be a jump target)");
    }
}

} // namespace

std::vector<std::string> validateModule(const Module& m) {
    std::vector<std::string> out;
    if (m.functions.empty()) {
        out.push_back("module has no functions");
        return out;
    }
    if (m.find(m.entry) == nullptr)
        out.push_back("entry function '" + m.entry + "' not found");
    std::set<std::string> names;
    for (const Function& f : m.functions) {
        if (!names.insert(f.name).second)
            out.push_back("duplicate function name '" + f.name + "'");
    }
    for (const Function& f : m.functions) {
        if (f.blocks.empty()) {
            out.push_back("fn " + f.name + ": no blocks");
            continue;
        }
        std::set<int> paramSet;
        for (int p : f.params) {
            if (p < 0 || p >= f.numRegisters)
                out.push_back("fn " + f.name + ": parameter register r" + std::to_string(p) +
                              " out of range");
            if (!paramSet.insert(p).second)
                out.push_back("fn " + f.name + ": duplicate parameter register r" +
                              std::to_string(p));
        }
        for (size_t i = 0; i < f.blocks.size(); ++i) {
            const BasicBlock& b = f.blocks[i];
            if (b.index != static_cast<int>(i))
                out.push_back("fn " + f.name + ": block " + std::to_string(i) +
                              " carries index " + std::to_string(b.index));
            for (const Instruction& in : b.body) {
                switch (in.kind) {
                    case Instruction::Kind::Const:
                        checkReg(out, f, b, in.dst, "destination");
                        break;
                    case Instruction::Kind::Move:
                        checkReg(out, f, b, in.dst, "destination");
                        checkReg(out, f, b, in.lhs, "source");
                        break;
                    case Instruction::Kind::Binary:
                        checkReg(out, f, b, in.dst, "destination");
                        checkReg(out, f, b, in.lhs, "operand");
                        checkReg(out, f, b, in.rhs, "operand");
                        break;
                    case Instruction::Kind::Call: {
                        checkReg(out, f, b, in.dst, "destination");
                        for (int a : in.args) checkReg(out, f, b, a, "argument");
                        const Function* callee = m.find(in.callee);
                        if (callee == nullptr) {
                            out.push_back("fn " + f.name + " block " + std::to_string(b.index) +
                                          ": call to unknown function '" + in.callee + "'");
                        } else if (callee->params.size() != in.args.size()) {
                            out.push_back("fn " + f.name + " block " + std::to_string(b.index) +
                                          ": call to '" + in.callee + "' passes " +
                                          std::to_string(in.args.size()) + " args, expects " +
                                          std::to_string(callee->params.size()));
                        }
                        break;
                    }
                    case Instruction::Kind::Print:
                        checkReg(out, f, b, in.lhs, "operand");
                        break;
                }
            }
            const Terminator& t = b.terminator;
            switch (t.kind) {
                case Terminator::Kind::Jump:
                    checkTarget(out, f, b, t.target);
                    break;
                case Terminator::Kind::Branch:
                    checkReg(out, f, b, t.cond, "condition");
                    checkTarget(out, f, b, t.target);
                    checkTarget(out, f, b, t.altTarget);
                    break;
                case Terminator::Kind::Ret:
                    checkReg(out, f, b, t.src, "result");
                    break;
            }
        }
    }
    return out;
}

namespace {

bool sameInstruction(const Instruction& a, const Instruction& b) {
    return a.kind == b.kind && a.dst == b.dst && a.lhs == b.lhs && a.rhs == b.rhs &&
           a.op == b.op && a.imm == b.imm && a.callee == b.callee && a.args == b.args;
}

bool sameTerminator(const Terminator& a, const Terminator& b) {
    return a.kind == b.kind && a.cond == b.cond && a.target == b.target &&
           a.altTarget == b.altTarget && a.src == b.src;
}

} // namespace

bool structurallyEqual(const Module& a, const Module& b) {
    if (a.entry != b.entry || a.functions.size() != b.functions.size()) return false;
    for (size_t i = 0; i < a.functions.size(); ++i) {
        const Function& fa = a.functions[i];
        const Function& fb = b.functions[i];
        if (fa.name != fb.name || fa.params != fb.params ||
            fa.numRegisters != fb.numRegisters || fa.blocks.size() != fb.blocks.size())
            return false;
        for (size_t j = 0; j < fa.blocks.size(); ++j) {
            const BasicBlock& ba = fa.blocks[j];
            const BasicBlock& bb = fb.blocks[j];
            if (ba.index != bb.index || ba.body.size() != bb.body.size()) return false;
            for (size_t k = 0; k < ba.body.size(); ++k)
                if (!sameInstruction(ba.body[k], bb.body[k])) return false;
            if (!sameTerminator(ba.terminator, bb.terminator)) return false;
        }
    }
    return true;
}

} // namespace loopvm
