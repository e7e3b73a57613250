#include "loopvm/parser.hpp"

#include <cctype>
#include <charconv>
#include <map>

#include "loopvm/errors.hpp"

namespace loopvm {

namespace {

constexpr int kMaxRegisterIndex = 1 << 20;

struct Token {
    enum class Kind { Ident, Int, LParen, RParen, LBrace, RBrace, Colon, Comma, Equals, End };
    Kind kind = Kind::End;
    std::string text;
    Value value = 0;
    int line = 1;
};

// Newlines and ';' separate statements but carry no further meaning, so the
// lexer treats them as whitespace; grammar positions keep parsing unambiguous.
class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) { next(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        next();
        return t;
    }

  private:
    void next() {
        for (;;) {
            if (pos_ >= text_.size()) break;
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == ';') {
                ++pos_;
            } else if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
        tok_ = Token{};
        tok_.line = line_;
        if (pos_ >= text_.size()) {
            tok_.kind = Token::Kind::End;
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            tok_.kind = Token::Kind::Ident;
            tok_.text = text_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            size_t start = pos_;
            if (c == '-') ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            Value v = 0;
            auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
            if (res.ec != std::errc())
                throw SyntaxError(line_, "integer literal out of range");
            tok_.kind = Token::Kind::Int;
            tok_.value = v;
            return;
        }
        ++pos_;
        switch (c) {
            case '(': tok_.kind = Token::Kind::LParen; return;
            case ')': tok_.kind = Token::Kind::RParen; return;
            case '{': tok_.kind = Token::Kind::LBrace; return;
            case '}': tok_.kind = Token::Kind::RBrace; return;
            case ':': tok_.kind = Token::Kind::Colon; return;
            case ',': tok_.kind = Token::Kind::Comma; return;
            case '=': tok_.kind = Token::Kind::Equals; return;
            default:
                throw SyntaxError(line_, std::string("unexpected character '") + c + "'");
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
    Token tok_;
};

const char* tokenName(Token::Kind k) {
    switch (k) {
        case Token::Kind::Ident: return "identifier";
        case Token::Kind::Int: return "integer";
        case Token::Kind::LParen: return "'('";
        case Token::Kind::RParen: return "')'";
        case Token::Kind::LBrace: return "'{'";
        case Token::Kind::RBrace: return "'}'";
        case Token::Kind::Colon: return "':'";
        case Token::Kind::Comma: return "','";
        case Token::Kind::Equals: return "'='";
        case Token::Kind::End: return "end of input";
    }
    return "?";
}

bool isRegisterName(const std::string& s) {
    if (s.size() < 2 || s[0] != 'r') return false;
    for (size_t i = 1; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

bool lookupBinOp(const std::string& s, BinOp& op) {
    static const std::map<std::string, BinOp> names = {
        {"add", BinOp::Add},       {"sub", BinOp::Sub},       {"mul", BinOp::Mul},
        {"div", BinOp::Div},       {"mod", BinOp::Mod},       {"cmp_lt", BinOp::CmpLt},
        {"cmp_le", BinOp::CmpLe},  {"cmp_eq", BinOp::CmpEq},  {"cmp_ne", BinOp::CmpNe},
    };
    auto it = names.find(s);
    if (it == names.end()) return false;
    op = it->second;
    return true;
}

class Parser {
  public:
    explicit Parser(const std::string& text) : lx_(text) {}

    Module run() {
        Module m;
        while (lx_.peek().kind != Token::Kind::End) m.functions.push_back(parseFunction(m));
        if (m.functions.empty()) throw SyntaxError(lx_.peek().line, "expected 'fn'");
        m.entry = m.find("main") != nullptr ? "main" : m.functions.front().name;
        auto violations = validateModule(m);
        if (!violations.empty()) throw ValidationError(std::move(violations));
        return m;
    }

  private:
    Token expect(Token::Kind k, const char* context) {
        const Token& t = lx_.peek();
        if (t.kind != k)
            throw SyntaxError(t.line, std::string("expected ") + tokenName(k) + " " + context +
                                          ", got " + describe(t));
        return lx_.take();
    }

    static std::string describe(const Token& t) {
        if (t.kind == Token::Kind::Ident) return "'" + t.text + "'";
        if (t.kind == Token::Kind::Int) return "integer";
        return tokenName(t.kind);
    }

    Token expectKeyword(const char* kw) {
        const Token& t = lx_.peek();
        if (t.kind != Token::Kind::Ident || t.text != kw)
            throw SyntaxError(t.line, std::string("expected '") + kw + "', got " + describe(t));
        return lx_.take();
    }

    int parseRegister() {
        Token t = expect(Token::Kind::Ident, "(register)");
        if (!isRegisterName(t.text))
            throw SyntaxError(t.line, "expected register, got '" + t.text + "'");
        long idx = std::strtol(t.text.c_str() + 1, nullptr, 10);
        if (idx > kMaxRegisterIndex)
            throw SyntaxError(t.line, "register index too large: " + t.text);
        int r = static_cast<int>(idx);
        if (r >= maxReg_) maxReg_ = r + 1;
        return r;
    }

    struct PendingTarget {
        int block;
        int slot;  // 0 = target, 1 = altTarget
        std::string label;
        int line;
    };

    Function parseFunction(const Module& m) {
        (void)m;
        expectKeyword("fn");
        Token name = expect(Token::Kind::Ident, "(function name)");
        expect(Token::Kind::LParen, "after function name");
        Function f;
        f.name = name.text;
        maxReg_ = 0;
        if (lx_.peek().kind == Token::Kind::Ident) {
            f.params.push_back(parseRegister());
            while (lx_.peek().kind == Token::Kind::Comma) {
                lx_.take();
                f.params.push_back(parseRegister());
            }
        }
        expect(Token::Kind::RParen, "after parameter list");
        expect(Token::Kind::LBrace, "to open function body");

        std::map<std::string, int> labels;
        std::vector<PendingTarget> pending;
        while (lx_.peek().kind != Token::Kind::RBrace) {
            Token label = expect(Token::Kind::Ident, "(block label)");
            expect(Token::Kind::Colon, "after block label");
            if (!labels.emplace(label.text, static_cast<int>(f.blocks.size())).second)
                throw SyntaxError(label.line, "duplicate label '" + label.text + "'");
            BasicBlock b;
            b.index = static_cast<int>(f.blocks.size());
            b.label = label.text;
            parseBlockBody(f, b, pending);
            f.blocks.push_back(std::move(b));
        }
        lx_.take();  // '}'
        if (f.blocks.empty())
            throw SyntaxError(name.line, "fn " + f.name + ": function body has no blocks");

        std::vector<std::string> unresolved;
        for (const PendingTarget& p : pending) {
            auto it = labels.find(p.label);
            if (it == labels.end()) {
                unresolved.push_back("fn " + f.name + " block " + std::to_string(p.block) +
                                     ": unknown label '" + p.label + "' (line " +
                                     std::to_string(p.line) + ")");
                continue;
            }
            Terminator& t = f.blocks[p.block].terminator;
            (p.slot == 0 ? t.target : t.altTarget) = it->second;
        }
        if (!unresolved.empty()) throw ValidationError(std::move(unresolved));
        f.numRegisters = maxReg_;
        return f;
    }

    void parseBlockBody(Function& f, BasicBlock& b, std::vector<PendingTarget>& pending) {
        for (;;) {
            const Token& t = lx_.peek();
            if (t.kind != Token::Kind::Ident)
                throw SyntaxError(t.line, "expected instruction or terminator, got " + describe(t));
            if (t.text == "jump") {
                lx_.take();
                Token target = expect(Token::Kind::Ident, "(jump target)");
                b.terminator = Terminator::jump(-1);
                pending.push_back({b.index, 0, target.text, target.line});
                return;
            }
            if (t.text == "branch") {
                lx_.take();
                int cond = parseRegister();
                expect(Token::Kind::Comma, "after branch condition");
                Token tt = expect(Token::Kind::Ident, "(branch target)");
                expect(Token::Kind::Comma, "after branch target");
                Token ft = expect(Token::Kind::Ident, "(branch target)");
                b.terminator = Terminator::branch(cond, -1, -1);
                pending.push_back({b.index, 0, tt.text, tt.line});
                pending.push_back({b.index, 1, ft.text, ft.line});
                return;
            }
            if (t.text == "ret") {
                lx_.take();
                b.terminator = Terminator::ret(parseRegister());
                return;
            }
            if (t.text == "print") {
                lx_.take();
                b.body.push_back(Instruction::makePrint(parseRegister()));
                continue;
            }
            if (!isRegisterName(t.text))
                throw SyntaxError(t.line, "expected instruction or terminator, got " + describe(t));
            int dst = parseRegister();
            expect(Token::Kind::Equals, "after destination register");
            const Token& rhs = lx_.peek();
            if (rhs.kind != Token::Kind::Ident)
                throw SyntaxError(rhs.line, "expected operation after '=', got " + describe(rhs));
            if (rhs.text == "const") {
                lx_.take();
                Token v = expect(Token::Kind::Int, "after 'const'");
                b.body.push_back(Instruction::makeConst(dst, v.value));
                continue;
            }
            if (rhs.text == "call") {
                lx_.take();
                Token callee = expect(Token::Kind::Ident, "(callee name)");
                expect(Token::Kind::LParen, "after callee name");
                std::vector<int> args;
                if (lx_.peek().kind == Token::Kind::Ident) {
                    args.push_back(parseRegister());
                    while (lx_.peek().kind == Token::Kind::Comma) {
                        lx_.take();
                        args.push_back(parseRegister());
                    }
                }
                expect(Token::Kind::RParen, "after call arguments");
                b.body.push_back(Instruction::makeCall(dst, callee.text, std::move(args)));
                continue;
            }
            BinOp op;
            if (lookupBinOp(rhs.text, op)) {
                lx_.take();
                int lhs = parseRegister();
                expect(Token::Kind::Comma, "between operands");
                int r = parseRegister();
                b.body.push_back(Instruction::makeBinary(dst, op, lhs, r));
                continue;
            }
            if (isRegisterName(rhs.text)) {
                b.body.push_back(Instruction::makeMove(dst, parseRegister()));
                continue;
            }
            throw SyntaxError(rhs.line, "unknown operation '" + rhs.text + "'");
        }
        (void)f;
    }

    Lexer lx_;
    int maxReg_ = 0;
};

} // namespace

Module parseModule(const std::string& text) { return Parser(text).run(); }

} // namespace loopvm
