#ifndef UBSYM_IR_HPP
#define UBSYM_IR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ubsym {

using Word = std::int64_t;

/// Register offset holding the frame base pointer. Stack locals are
/// addressed as Add64(Get(kFrameBaseReg), negative constant).
inline constexpr int kFrameBaseReg = 20;

enum class BinOp { Add64, Sub64, Mul64, CmpEQ64, CmpNE64, CmpLT64s, CmpLE64s };
enum class UnOp { Not1, Neg64 };

inline const char* to_string(BinOp op)
{
    switch (op) {
    case BinOp::Add64: return "Add64";
    case BinOp::Sub64: return "Sub64";
    case BinOp::Mul64: return "Mul64";
    case BinOp::CmpEQ64: return "CmpEQ64";
    case BinOp::CmpNE64: return "CmpNE64";
    case BinOp::CmpLT64s: return "CmpLT64s";
    case BinOp::CmpLE64s: return "CmpLE64s";
    }
    return "?";
}

inline const char* to_string(UnOp op)
{
    switch (op) {
    case UnOp::Not1: return "Not1";
    case UnOp::Neg64: return "Neg64";
    }
    return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr
{
    enum class Kind { Const, ConstStr, Tmp, Get, Load, Binop, Unop, StrLen };

    Kind kind;
    Word imm = 0;           // Const
    std::string bytes;      // ConstStr
    int tmp = -1;           // Tmp
    int reg = 0;            // Get
    int size = 8;           // Load size in bytes
    BinOp binop = BinOp::Add64;
    UnOp unop = UnOp::Neg64;
    ExprPtr a, b;           // operands

    static ExprPtr make_const(Word v)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Const;
        e->imm = v;
        return e;
    }
    static ExprPtr make_str(std::string s)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::ConstStr;
        e->bytes = std::move(s);
        return e;
    }
    static ExprPtr make_tmp(int t)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Tmp;
        e->tmp = t;
        return e;
    }
    static ExprPtr make_get(int reg)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Get;
        e->reg = reg;
        return e;
    }
    static ExprPtr make_load(ExprPtr addr, int size)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Load;
        e->a = std::move(addr);
        e->size = size;
        return e;
    }
    static ExprPtr make_binop(BinOp op, ExprPtr lhs, ExprPtr rhs)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Binop;
        e->binop = op;
        e->a = std::move(lhs);
        e->b = std::move(rhs);
        return e;
    }
    static ExprPtr make_unop(UnOp op, ExprPtr arg)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Unop;
        e->unop = op;
        e->a = std::move(arg);
        return e;
    }
    static ExprPtr make_strlen(ExprPtr arg)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::StrLen;
        e->a = std::move(arg);
        return e;
    }
};

/// Store size 0 means "dynamic": the store writes len(data) bytes of a
/// string value. Spelled `len` in the textual form.
inline constexpr int kDynamicSize = 0;

struct Stmt
{
    enum class Kind { WrTmp, Store, Put, Call, Branch, Jump, Ret };

    Kind kind;
    int line = 0;

    int tmp = -1;               // WrTmp destination; Call result (-1 = none)
    ExprPtr e0;                 // WrTmp value / Store addr / Put value / Branch cond / Ret value
    ExprPtr e1;                 // Store data
    int storeSize = 8;
    int reg = 0;                // Put register offset
    std::string callee;
    std::vector<ExprPtr> args;
    std::string target0, target1;   // Branch then/else; Jump target0
    bool hasRetValue = false;
};

struct Block
{
    std::string id;
    std::vector<Stmt> stmts;
};

enum class ParamKind { Int64, Str };

struct Param
{
    std::string name;
    ParamKind kind;
};

/// Parameters of a function are pre-bound to temporaries t0..t{n-1} in
/// declaration order; the body refers to them by those temporaries.
struct Function
{
    std::string name;
    std::vector<Param> params;
    std::vector<Block> blocks;
    std::string entryBlock;
    long frameSize = 0;

    const Block* block(const std::string& id) const
    {
        for (const auto& b : blocks)
            if (b.id == id) return &b;
        return nullptr;
    }
    int block_index(const std::string& id) const
    {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].id == id) return static_cast<int>(i);
        return -1;
    }
};

inline const std::set<std::string>& intrinsics()
{
    static const std::set<std::string> names = {
        "malloc", "free", "memcpy", "strcpy", "strlen",
        "input_int", "input_str", "print",
    };
    return names;
}

struct Program
{
    std::vector<Function> functions;
    std::string entry = "main";
    std::vector<std::pair<std::string, Word>> globals;

    const Function* function(const std::string& name) const
    {
        for (const auto& f : functions)
            if (f.name == name) return &f;
        return nullptr;
    }
};

/// A statement location: function, block id, statement index within block.
struct Site
{
    std::string function;
    std::string block;
    int stmtIndex = 0;

    friend bool operator==(const Site&, const Site&) = default;
    friend auto operator<=>(const Site&, const Site&) = default;
};

inline std::string to_string(const Site& s)
{
    return s.function + " " + s.block + " " + std::to_string(s.stmtIndex);
}

struct Diagnostic
{
    int line = 0;
    int column = 0;
    std::string message;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void collect_tmp_writes(const Stmt& s, std::vector<int>& out)
{
    if ((s.kind == Stmt::Kind::WrTmp || s.kind == Stmt::Kind::Call) && s.tmp >= 0)
        out.push_back(s.tmp);
}

} // namespace detail

inline std::vector<Diagnostic> validate(const Program& p)
{
    std::vector<Diagnostic> diags;
    auto report = [&](int line, const std::string& msg) {
        diags.push_back({line, 1, msg});
    };

    std::set<std::string> names;
    for (const auto& f : p.functions) {
        if (!names.insert(f.name).second)
            report(0, "duplicate function " + f.name);
    }
    if (!p.function(p.entry))
        report(0, "entry function " + p.entry + " is not defined");

    for (const auto& f : p.functions) {
        if (!f.block(f.entryBlock))
            report(0, "entry block " + f.entryBlock + " of " + f.name + " is not defined");
        for (const auto& b : f.blocks) {
            std::set<int> assigned;
            for (const auto& s : b.stmts) {
                std::vector<int> writes;
                detail::collect_tmp_writes(s, writes);
                for (int t : writes) {
                    if (t < static_cast<int>(f.params.size()))
                        report(s.line, "assignment to parameter temporary t" + std::to_string(t) + " in " + f.name);
                    else if (!assigned.insert(t).second)
                        report(s.line, "duplicate assignment of t" + std::to_string(t) + " in block " + b.id + " of " + f.name);
                }
                if (s.kind == Stmt::Kind::Branch) {
                    if (!f.block(s.target0))
                        report(s.line, "undefined block " + s.target0);
                    if (!f.block(s.target1))
                        report(s.line, "undefined block " + s.target1);
                }
                if (s.kind == Stmt::Kind::Jump && !f.block(s.target0))
                    report(s.line, "undefined block " + s.target0);
                if (s.kind == Stmt::Kind::Call) {
                    if (!p.function(s.callee) && !intrinsics().count(s.callee))
                        report(s.line, "call to undefined function " + s.callee);
                }
                if (s.kind == Stmt::Kind::Store &&
                    s.storeSize != kDynamicSize && s.storeSize != 1 && s.storeSize != 8)
                    report(s.line, "store size must be 1, 8 or len");
            }
        }
    }
    return diags;
}

// ---------------------------------------------------------------------------
// Control flow graph

struct Cfg
{
    std::vector<std::string> nodes;
    std::map<std::string, std::vector<std::string>> successors;
};

inline Cfg control_flow_graph(const Function& f)
{
    Cfg g;
    for (const auto& b : f.blocks) {
        g.nodes.push_back(b.id);
        auto& succ = g.successors[b.id];
        for (const auto& s : b.stmts) {
            if (s.kind == Stmt::Kind::Branch) {
                succ.push_back(s.target0);
                succ.push_back(s.target1);
            } else if (s.kind == Stmt::Kind::Jump) {
                succ.push_back(s.target0);
            }
        }
    }
    return g;
}

/// Blocks of f in reverse postorder from the entry block.
inline std::vector<std::string> reverse_postorder(const Function& f)
{
    Cfg g = control_flow_graph(f);
    std::vector<std::string> post;
    std::set<std::string> seen;
    // iterative DFS
    std::vector<std::pair<std::string, std::size_t>> stack;
    if (f.block(f.entryBlock)) {
        stack.push_back({f.entryBlock, 0});
        seen.insert(f.entryBlock);
    }
    while (!stack.empty()) {
        auto& [id, next] = stack.back();
        const auto& succ = g.successors[id];
        if (next < succ.size()) {
            const std::string& t = succ[next++];
            if (!seen.count(t) && f.block(t)) {
                seen.insert(t);
                stack.push_back({t, 0});
            }
        } else {
            post.push_back(id);
            stack.pop_back();
        }
    }
    return {post.rbegin(), post.rend()};
}

// ---------------------------------------------------------------------------
// Printing (canonical textual form; parse . print is identity)

namespace detail {

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c; break;
        }
    }
    return out;
}

inline void print_expr(const Expr& e, std::string& out)
{
    switch (e.kind) {
    case Expr::Kind::Const:
        out += "CONST " + std::to_string(e.imm);
        break;
    case Expr::Kind::ConstStr:
        out += "STR \"" + escape(e.bytes) + "\"";
        break;
    case Expr::Kind::Tmp:
        out += "t" + std::to_string(e.tmp);
        break;
    case Expr::Kind::Get:
        out += "GET(" + std::to_string(e.reg) + ")";
        break;
    case Expr::Kind::Load:
        out += "LOAD(";
        print_expr(*e.a, out);
        out += ", " + std::to_string(e.size) + ")";
        break;
    case Expr::Kind::Binop:
        out += to_string(e.binop);
        out += "(";
        print_expr(*e.a, out);
        out += ", ";
        print_expr(*e.b, out);
        out += ")";
        break;
    case Expr::Kind::Unop:
        out += to_string(e.unop);
        out += "(";
        print_expr(*e.a, out);
        out += ")";
        break;
    case Expr::Kind::StrLen:
        out += "STRLEN(";
        print_expr(*e.a, out);
        out += ")";
        break;
    }
}

inline void print_stmt(const Stmt& s, std::string& out)
{
    switch (s.kind) {
    case Stmt::Kind::WrTmp:
        out += "t" + std::to_string(s.tmp) + " = ";
        print_expr(*s.e0, out);
        break;
    case Stmt::Kind::Store:
        out += "STORE(";
        print_expr(*s.e0, out);
        out += ", ";
        print_expr(*s.e1, out);
        out += ", ";
        out += s.storeSize == kDynamicSize ? "len" : std::to_string(s.storeSize);
        out += ")";
        break;
    case Stmt::Kind::Put:
        out += "PUT(" + std::to_string(s.reg) + ", ";
        print_expr(*s.e0, out);
        out += ")";
        break;
    case Stmt::Kind::Call:
        if (s.tmp >= 0) out += "t" + std::to_string(s.tmp) + " = ";
        out += "CALL " + s.callee + "(";
        for (std::size_t i = 0; i < s.args.size(); ++i) {
            if (i) out += ", ";
            print_expr(*s.args[i], out);
        }
        out += ")";
        break;
    case Stmt::Kind::Branch:
        out += "BR ";
        print_expr(*s.e0, out);
        out += " ? " + s.target0 + " : " + s.target1;
        break;
    case Stmt::Kind::Jump:
        out += "JMP " + s.target0;
        break;
    case Stmt::Kind::Ret:
        out += "RET";
        if (s.hasRetValue) {
            out += " ";
            print_expr(*s.e0, out);
        }
        break;
    }
}

} // namespace detail

inline std::string print_program(const Program& p)
{
    std::string out;
    for (const auto& [name, init] : p.globals)
        out += "global " + name + " " + std::to_string(init) + "\n";
    if (!p.globals.empty()) out += "\n";
    for (const auto& f : p.functions) {
        out += "func " + f.name + "(";
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            if (i) out += ", ";
            out += f.params[i].name + ": ";
            out += f.params[i].kind == ParamKind::Int64 ? "int64" : "string";
        }
        out += ") frame " + std::to_string(f.frameSize) + " {\n";
        for (const auto& b : f.blocks) {
            out += b.id + ":\n";
            for (const auto& s : b.stmts) {
                out += "  ";
                detail::print_stmt(s, out);
                out += "\n";
            }
        }
        out += "}\n\n";
    }
    return out;
}

} // namespace ubsym

#endif
