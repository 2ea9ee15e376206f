#ifndef UBSYM_SYMEXEC_HPP
#define UBSYM_SYMEXEC_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ubsym/constraint.hpp"
#include "ubsym/interp.hpp"
#include "ubsym/ir.hpp"
#include "ubsym/specs.hpp"

namespace ubsym {

/// Linear expression over the unit's symbolic input dimensions.
struct Lin
{
    std::map<std::string, long> coeffs;
    long constant = 0;

    bool is_const() const { return coeffs.empty(); }

    static Lin of_const(long v) { return {{}, v}; }
    static Lin of_var(const std::string& v) { return {{{v, 1}}, 0}; }

    Lin operator+(const Lin& o) const
    {
        Lin r = *this;
        for (const auto& [v, c] : o.coeffs)
            if ((r.coeffs[v] += c) == 0) r.coeffs.erase(v);
        r.constant += o.constant;
        return r;
    }
    Lin operator-(const Lin& o) const
    {
        Lin r = *this;
        for (const auto& [v, c] : o.coeffs)
            if ((r.coeffs[v] -= c) == 0) r.coeffs.erase(v);
        r.constant -= o.constant;
        return r;
    }
    Lin scaled(long k) const
    {
        Lin r;
        if (k == 0) return Lin::of_const(0);
        for (const auto& [v, c] : coeffs) r.coeffs[v] = c * k;
        r.constant = constant * k;
        return r;
    }
};

/// A symbolic runtime value.
struct SymVal
{
    enum class Kind { Int, Str, Ptr, Cond, Opaque };
    enum class PtrBase { Alloc, Frame, Global };

    Kind kind = Kind::Opaque;
    Lin lin;             // Int: the value; Str: the length
    PtrBase ptrBase = PtrBase::Alloc;
    int allocId = -1;    // Ptr into the symbolic heap
    int frameToken = -1; // Ptr into a (possibly inlined) frame
    long ptrOff = 0;
    Atom atom;           // Cond: 1 iff atom holds

    static SymVal of_int(Lin l) { SymVal v; v.kind = Kind::Int; v.lin = std::move(l); return v; }
    static SymVal of_str(Lin len) { SymVal v; v.kind = Kind::Str; v.lin = std::move(len); return v; }
    static SymVal of_cond(Atom a) { SymVal v; v.kind = Kind::Cond; v.atom = std::move(a); return v; }
    static SymVal of_alloc_ptr(int id, long off)
    {
        SymVal v;
        v.kind = Kind::Ptr;
        v.ptrBase = PtrBase::Alloc;
        v.allocId = id;
        v.ptrOff = off;
        return v;
    }
    static SymVal of_frame_ptr(int token, long off)
    {
        SymVal v;
        v.kind = Kind::Ptr;
        v.ptrBase = PtrBase::Frame;
        v.frameToken = token;
        v.ptrOff = off;
        return v;
    }
    static SymVal opaque() { return {}; }
};

/// Result of a single simulation attached to a tree node it covered.
struct Annotation
{
    std::map<std::string, long> dims;  // unit argument vector, one entry per dim
    std::vector<Value> systemInput;    // whole-program input that produced it
    bool vulnerable = false;
};

/// Vulnerability condition discovered on a path: the data constraint under
/// which the statement at `site` corrupts memory. For free/use sequences the
/// condition is structural and therefore constant.
struct VulRecord
{
    Site site;
    OracleEvent::Kind kind;
    Constraint cond;
    bool staticallySafe = false; // constant condition that can never hold
};

struct TreeNode
{
    int id = 0;
    int parent = -1;
    std::string blockId;       // unit block this node covers
    Constraint term;           // branch condition taken to reach this node
    std::vector<int> children;
    std::vector<VulRecord> vuls;
    bool truncated = false;    // path cut by depth or unroll limits
    std::vector<Annotation> annotations;
};

/// How one unit parameter is modeled.
struct ParamBinding
{
    enum class Kind { SymInt, SymStr, FactPtr };
    Kind kind = Kind::SymInt;
    std::string var;   // SymInt: the dim; SymStr: the length dim
    int factIndex = -1;
};

struct ConstraintTree
{
    std::string unit;
    std::vector<TreeNode> nodes; // nodes[0] is the root
    std::vector<std::string> dims;
    std::vector<ParamBinding> params;
    std::vector<BufferFact> facts;
    std::vector<TraceWarning> warnings;

    const TreeNode& root() const { return nodes.front(); }

    Constraint path_const(int nodeId) const
    {
        std::vector<int> chain;
        for (int n = nodeId; n >= 0; n = nodes[static_cast<std::size_t>(n)].parent)
            chain.push_back(n);
        Constraint c;
        for (auto it = chain.rbegin(); it != chain.rend(); ++it)
            c.add_all(nodes[static_cast<std::size_t>(*it)].term);
        return c;
    }

    bool subtree_has_vul(int nodeId) const
    {
        const TreeNode& n = nodes[static_cast<std::size_t>(nodeId)];
        for (const auto& v : n.vuls)
            if (!v.staticallySafe) return true;
        for (int c : n.children)
            if (subtree_has_vul(c)) return true;
        return false;
    }

    /// A node lies on a possibly-vulnerable path when a (non statically safe)
    /// vulnerability condition exists in its subtree or among its ancestors.
    bool possibly_vulnerable(int nodeId) const
    {
        if (subtree_has_vul(nodeId)) return true;
        for (int n = nodes[static_cast<std::size_t>(nodeId)].parent; n >= 0;
             n = nodes[static_cast<std::size_t>(n)].parent)
            for (const auto& v : nodes[static_cast<std::size_t>(n)].vuls)
                if (!v.staticallySafe) return true;
        return false;
    }
};

struct ExecOptions
{
    int maxDepth = 64;
    int maxLoopUnrolls = 8;
    int maxInlineDepth = 8;
};

namespace detail {

class SymExec
{
public:
    SymExec(const Program& p, const TestUnit& unit, ExecOptions opts)
        : p_(p), unit_(unit), opts_(opts)
    {
    }

    ConstraintTree build()
    {
        tree_.unit = unit_.function;
        tree_.facts = unit_.facts;
        const Function* f = p_.function(unit_.function);
        if (!f) return std::move(tree_);

        State st;
        Frame fr;
        fr.fn = f;
        fr.block = f->entryBlock;
        fr.si = 0;
        fr.frameToken = st.nextFrameToken++;
        bind_params(*f, fr, st);
        st.frames.push_back(std::move(fr));

        TreeNode root;
        root.id = 0;
        root.blockId = f->entryBlock;
        tree_.nodes.push_back(std::move(root));
        st.unitVisits[f->entryBlock] = 1;

        run_from(std::move(st), 0, 1);
        return std::move(tree_);
    }

private:
    struct SymAlloc
    {
        std::optional<long> capacity;
        Site site;
    };

    struct Frame
    {
        const Function* fn;
        std::string block;
        std::size_t si;
        std::map<int, SymVal> tmps;
        int retTmp = -1; // caller tmp receiving the return value
        int frameToken = 0;
    };

    struct State
    {
        std::vector<Frame> frames;
        std::vector<SymAlloc> allocs;
        std::set<int> freed;
        std::map<std::string, int> unitVisits;
        int nextFrameToken = 0;
        int inputsRead = 0;
    };

    void bind_params(const Function& f, Frame& fr, State& st)
    {
        for (std::size_t i = 0; i < f.params.size(); ++i) {
            const Param& prm = f.params[i];
            ParamBinding pb;
            // a parameter carrying a traced buffer becomes a bound pointer,
            // not a symbolic input
            int factIdx = -1;
            long off = 0;
            for (std::size_t fi = 0; fi < unit_.facts.size(); ++fi) {
                if (auto o = unit_.facts[fi].carrier_offset(f.name, static_cast<int>(i))) {
                    factIdx = static_cast<int>(fi);
                    off = *o;
                    break;
                }
            }
            if (factIdx >= 0) {
                pb.kind = ParamBinding::Kind::FactPtr;
                pb.factIndex = factIdx;
                int allocId = fact_alloc(st, static_cast<std::size_t>(factIdx));
                fr.tmps[static_cast<int>(i)] = SymVal::of_alloc_ptr(allocId, off);
            } else if (prm.kind == ParamKind::Str) {
                pb.kind = ParamBinding::Kind::SymStr;
                pb.var = length_var(prm.name);
                add_dim(pb.var);
                fr.tmps[static_cast<int>(i)] = SymVal::of_str(Lin::of_var(pb.var));
            } else {
                pb.kind = ParamBinding::Kind::SymInt;
                pb.var = prm.name;
                add_dim(pb.var);
                fr.tmps[static_cast<int>(i)] = SymVal::of_int(Lin::of_var(pb.var));
            }
            tree_.params.push_back(std::move(pb));
        }
    }

    int fact_alloc(State& st, std::size_t factIdx)
    {
        auto it = factAllocIds_.find(factIdx);
        if (it != factAllocIds_.end()) return it->second;
        const BufferFact& fact = unit_.facts[factIdx];
        int id = static_cast<int>(st.allocs.size());
        st.allocs.push_back({fact.capacity, fact.allocSite});
        factAllocIds_[factIdx] = id;
        return id;
    }

    void add_dim(const std::string& var)
    {
        for (const auto& d : tree_.dims)
            if (d == var) return;
        tree_.dims.push_back(var);
    }

    int new_node(int parent, std::string blockId, Constraint term)
    {
        TreeNode n;
        n.id = static_cast<int>(tree_.nodes.size());
        n.parent = parent;
        n.blockId = std::move(blockId);
        n.term = std::move(term);
        tree_.nodes[static_cast<std::size_t>(parent)].children.push_back(n.id);
        tree_.nodes.push_back(std::move(n));
        return tree_.nodes.back().id;
    }

    void record_vul(int nodeId, const Site& site, OracleEvent::Kind kind, Constraint cond)
    {
        VulRecord r;
        r.site = site;
        r.kind = kind;
        bool allConst = true;
        bool value = true;
        for (const auto& a : cond.atoms) {
            if (!a.is_constant()) allConst = false;
            else if (!a.constant_value()) value = false;
        }
        r.staticallySafe = allConst && !value;
        r.cond = std::move(cond);
        tree_.nodes[static_cast<std::size_t>(nodeId)].vuls.push_back(std::move(r));
    }

    // ---- expression evaluation ------------------------------------------

    SymVal eval(const Expr& e, State& st, Frame& fr, int nodeId, const Site& site)
    {
        switch (e.kind) {
        case Expr::Kind::Const:
            return SymVal::of_int(Lin::of_const(e.imm));
        case Expr::Kind::ConstStr:
            return SymVal::of_str(Lin::of_const(static_cast<long>(e.bytes.size())));
        case Expr::Kind::Tmp: {
            auto it = fr.tmps.find(e.tmp);
            return it == fr.tmps.end() ? SymVal::opaque() : it->second;
        }
        case Expr::Kind::Get:
            if (e.reg == kFrameBaseReg) return SymVal::of_frame_ptr(fr.frameToken, 0);
            return SymVal::opaque();
        case Expr::Kind::Load: {
            SymVal addr = eval(*e.a, st, fr, nodeId, site);
            check_use(addr, st, nodeId, site);
            return SymVal::opaque();
        }
        case Expr::Kind::Binop:
            return eval_binop(e, st, fr, nodeId, site);
        case Expr::Kind::Unop: {
            SymVal a = eval(*e.a, st, fr, nodeId, site);
            if (e.unop == UnOp::Not1) {
                if (a.kind == SymVal::Kind::Cond) return SymVal::of_cond(a.atom.negated());
                if (a.kind == SymVal::Kind::Int)
                    return SymVal::of_cond(as_atom(a.lin, Atom::Op::EQ));
                return SymVal::opaque();
            }
            if (e.unop == UnOp::Neg64 && a.kind == SymVal::Kind::Int)
                return SymVal::of_int(a.lin.scaled(-1));
            return SymVal::opaque();
        }
        case Expr::Kind::StrLen: {
            SymVal a = eval(*e.a, st, fr, nodeId, site);
            if (a.kind == SymVal::Kind::Str) return SymVal::of_int(a.lin);
            return SymVal::opaque();
        }
        }
        return SymVal::opaque();
    }

    static Atom as_atom(const Lin& l, Atom::Op op)
    {
        Atom a;
        a.coeffs = l.coeffs;
        a.constant = l.constant;
        a.op = op;
        return a;
    }

    SymVal eval_binop(const Expr& e, State& st, Frame& fr, int nodeId, const Site& site)
    {
        SymVal a = eval(*e.a, st, fr, nodeId, site);
        SymVal b = eval(*e.b, st, fr, nodeId, site);

        // pointer +/- constant keeps the buffer binding
        if (e.binop == BinOp::Add64 || e.binop == BinOp::Sub64) {
            long sign = e.binop == BinOp::Add64 ? 1 : -1;
            if (a.kind == SymVal::Kind::Ptr && b.kind == SymVal::Kind::Int && b.lin.is_const()) {
                SymVal r = a;
                r.ptrOff += sign * b.lin.constant;
                return r;
            }
            if (e.binop == BinOp::Add64 && b.kind == SymVal::Kind::Ptr &&
                a.kind == SymVal::Kind::Int && a.lin.is_const()) {
                SymVal r = b;
                r.ptrOff += a.lin.constant;
                return r;
            }
        }

        if (a.kind != SymVal::Kind::Int || b.kind != SymVal::Kind::Int)
            return SymVal::opaque();

        switch (e.binop) {
        case BinOp::Add64: return SymVal::of_int(a.lin + b.lin);
        case BinOp::Sub64: return SymVal::of_int(a.lin - b.lin);
        case BinOp::Mul64:
            if (a.lin.is_const()) return SymVal::of_int(b.lin.scaled(a.lin.constant));
            if (b.lin.is_const()) return SymVal::of_int(a.lin.scaled(b.lin.constant));
            return SymVal::opaque();
        case BinOp::CmpEQ64: return SymVal::of_cond(as_atom(a.lin - b.lin, Atom::Op::EQ));
        case BinOp::CmpNE64: return SymVal::of_cond(as_atom(a.lin - b.lin, Atom::Op::NE));
        case BinOp::CmpLT64s: return SymVal::of_cond(as_atom(a.lin - b.lin, Atom::Op::LT));
        case BinOp::CmpLE64s: return SymVal::of_cond(as_atom(a.lin - b.lin, Atom::Op::LE));
        }
        return SymVal::opaque();
    }

    // ---- memory events ---------------------------------------------------

    void check_use(const SymVal& addr, State& st, int nodeId, const Site& site)
    {
        if (addr.kind != SymVal::Kind::Ptr || addr.ptrBase != SymVal::PtrBase::Alloc)
            return;
        if (st.freed.count(addr.allocId)) {
            Constraint c;
            Atom t; // structurally true on this path
            t.op = Atom::Op::EQ;
            c.add(t);
            record_vul(nodeId, site, OracleEvent::Kind::UseAfterFree, std::move(c));
        }
    }

    /// A store of `writeLen` bytes through `addr`. Emits the data condition
    /// under which it overruns the destination buffer.
    void check_store(const SymVal& addr, const Lin& writeLen, State& st, int nodeId,
                     const Site& site)
    {
        if (addr.kind != SymVal::Kind::Ptr) return;
        if (addr.ptrBase == SymVal::PtrBase::Alloc) {
            check_use(addr, st, nodeId, site);
            const SymAlloc& a = st.allocs[static_cast<std::size_t>(addr.allocId)];
            if (!a.capacity) {
                tree_.warnings.push_back({site, "store into buffer of unknown capacity"});
                return;
            }
            // off + len > cap  <=>  (cap - off) - len < 0
            Atom atom = as_atom(writeLen.scaled(-1), Atom::Op::LT);
            atom.constant += *a.capacity - addr.ptrOff;
            Constraint c;
            c.add(std::move(atom));
            record_vul(nodeId, site, OracleEvent::Kind::HeapOverflow, std::move(c));
        } else if (addr.ptrBase == SymVal::PtrBase::Frame && addr.ptrOff < 0) {
            // len > |off|  <=>  |off| - len < 0
            Atom atom = as_atom(writeLen.scaled(-1), Atom::Op::LT);
            atom.constant += -addr.ptrOff;
            Constraint c;
            c.add(std::move(atom));
            record_vul(nodeId, site, OracleEvent::Kind::StackFrameClobber, std::move(c));
        }
    }

    std::optional<Lin> value_len(const SymVal& v)
    {
        if (v.kind == SymVal::Kind::Str) return v.lin;
        return std::nullopt;
    }

    // ---- control ---------------------------------------------------------

    void run_from(State st, int nodeId, int depth)
    {
        while (!st.frames.empty()) {
            Frame& fr = st.frames.back();
            const Block* b = fr.fn->block(fr.block);
            if (!b || fr.si >= b->stmts.size()) {
                pop_frame(st, SymVal::of_int(Lin::of_const(0)));
                continue;
            }
            const Stmt& s = b->stmts[fr.si];
            Site site{fr.fn->name, b->id, static_cast<int>(fr.si)};
            ++fr.si;

            switch (s.kind) {
            case Stmt::Kind::WrTmp:
                fr.tmps[s.tmp] = eval(*s.e0, st, fr, nodeId, site);
                break;
            case Stmt::Kind::Put:
                eval(*s.e0, st, fr, nodeId, site);
                break;
            case Stmt::Kind::Store: {
                SymVal addr = eval(*s.e0, st, fr, nodeId, site);
                SymVal data = eval(*s.e1, st, fr, nodeId, site);
                Lin len = Lin::of_const(s.storeSize);
                if (s.storeSize == kDynamicSize) {
                    if (auto l = value_len(data)) len = *l;
                    else break;
                }
                check_store(addr, len, st, nodeId, site);
                break;
            }
            case Stmt::Kind::Call:
                if (!exec_call(s, st, nodeId, site, depth)) return;
                break;
            case Stmt::Kind::Branch: {
                SymVal c = eval(*s.e0, st, fr, nodeId, site);
                Atom atom;
                bool haveAtom = false;
                if (c.kind == SymVal::Kind::Cond) {
                    atom = c.atom;
                    haveAtom = true;
                } else if (c.kind == SymVal::Kind::Int) {
                    atom = as_atom(c.lin, Atom::Op::NE); // taken iff value != 0
                    haveAtom = true;
                }
                if (haveAtom && atom.is_constant()) {
                    // concrete branch: follow one side, still entering a node
                    // when the unit-level block changes
                    const std::string& tgt = atom.constant_value() ? s.target0 : s.target1;
                    if (!goto_block(st, nodeId, tgt, Constraint{}, depth)) return;
                    continue;
                }
                Constraint tTrue, tFalse;
                if (haveAtom) {
                    tTrue.add(atom);
                    tFalse.add(atom.negated());
                }
                // two fresh paths; each gets its own tree node
                fork(st, nodeId, s.target0, std::move(tTrue), depth);
                fork(st, nodeId, s.target1, std::move(tFalse), depth);
                return;
            }
            case Stmt::Kind::Jump:
                if (!goto_block(st, nodeId, s.target0, Constraint{}, depth)) return;
                continue;
            case Stmt::Kind::Ret: {
                SymVal rv = SymVal::of_int(Lin::of_const(0));
                if (s.hasRetValue) rv = eval(*s.e0, st, fr, nodeId, site);
                pop_frame(st, rv);
                break;
            }
            }
        }
    }

    void pop_frame(State& st, const SymVal& rv)
    {
        int retTmp = st.frames.back().retTmp;
        st.frames.pop_back();
        if (!st.frames.empty() && retTmp >= 0) st.frames.back().tmps[retTmp] = rv;
    }

    void fork(const State& st, int nodeId, const std::string& target, Constraint term,
              int depth)
    {
        State copy = st;
        int child = enter_block(copy, nodeId, target, std::move(term), depth);
        if (child < 0) return;
        run_from(std::move(copy), child, depth + 1);
    }

    /// Continue the current path into `target`. Returns false when the path
    /// was truncated.
    bool goto_block(State& st, int& nodeId, const std::string& target, Constraint term,
                    int& depth)
    {
        int child = enter_block(st, nodeId, target, std::move(term), depth);
        if (child < 0) return false;
        nodeId = child;
        ++depth;
        return true;
    }

    /// Transfer control in the top frame; creates the tree node. Branches and
    /// jumps inside inlined callees keep the unit block of the caller path.
    int enter_block(State& st, int nodeId, const std::string& target, Constraint term,
                    int depth)
    {
        Frame& fr = st.frames.back();
        fr.block = target;
        fr.si = 0;
        bool unitLevel = st.frames.size() == 1;
        std::string blockId = unitLevel ? target
                                        : tree_.nodes[static_cast<std::size_t>(nodeId)].blockId;
        if (depth >= opts_.maxDepth) {
            tree_.nodes[static_cast<std::size_t>(nodeId)].truncated = true;
            return -1;
        }
        if (unitLevel && ++st.unitVisits[target] > opts_.maxLoopUnrolls + 1) {
            tree_.nodes[static_cast<std::size_t>(nodeId)].truncated = true;
            return -1;
        }
        return new_node(nodeId, std::move(blockId), std::move(term));
    }

    /// Returns false when the path forked inside the callee (continuations
    /// were spawned recursively) or was truncated.
    bool exec_call(const Stmt& s, State& st, int nodeId, const Site& site, int depth)
    {
        Frame& fr = st.frames.back();
        std::vector<SymVal> args;
        for (const auto& a : s.args) args.push_back(eval(*a, st, fr, nodeId, site));

        if (intrinsics().count(s.callee)) {
            SymVal ret = exec_intrinsic(s.callee, args, st, nodeId, site);
            if (s.tmp >= 0) fr.tmps[s.tmp] = ret;
            return true;
        }
        const Function* g = p_.function(s.callee);
        if (!g) return true;
        if (static_cast<int>(st.frames.size()) > opts_.maxInlineDepth) {
            if (s.tmp >= 0) fr.tmps[s.tmp] = SymVal::opaque();
            return true;
        }
        Frame callee;
        callee.fn = g;
        callee.block = g->entryBlock;
        callee.si = 0;
        callee.retTmp = s.tmp;
        callee.frameToken = st.nextFrameToken++;
        for (std::size_t i = 0; i < args.size() && i < g->params.size(); ++i)
            callee.tmps[static_cast<int>(i)] = args[i];
        st.frames.push_back(std::move(callee));
        return true;
    }

    SymVal exec_intrinsic(const std::string& name, const std::vector<SymVal>& args,
                          State& st, int nodeId, const Site& site)
    {
        if (name == "malloc") {
            std::optional<long> cap;
            if (!args.empty() && args[0].kind == SymVal::Kind::Int && args[0].lin.is_const())
                cap = args[0].lin.constant;
            else
                tree_.warnings.push_back({site, "malloc length is not a constant"});
            int id = static_cast<int>(st.allocs.size());
            st.allocs.push_back({cap, site});
            return SymVal::of_alloc_ptr(id, 0);
        }
        if (name == "free") {
            if (!args.empty() && args[0].kind == SymVal::Kind::Ptr &&
                args[0].ptrBase == SymVal::PtrBase::Alloc) {
                if (!st.freed.insert(args[0].allocId).second) {
                    Constraint c;
                    Atom t;
                    t.op = Atom::Op::EQ; // structurally true on this path
                    c.add(t);
                    record_vul(nodeId, site, OracleEvent::Kind::DoubleFree, std::move(c));
                }
            }
            return SymVal::of_int(Lin::of_const(0));
        }
        if (name == "strcpy") {
            if (args.size() == 2) {
                if (auto len = value_len(args[1]))
                    check_store(args[0], *len, st, nodeId, site);
            }
            return args.empty() ? SymVal::opaque() : args[0];
        }
        if (name == "memcpy") {
            if (args.size() == 3 && args[2].kind == SymVal::Kind::Int)
                check_store(args[0], args[2].lin, st, nodeId, site);
            return args.empty() ? SymVal::opaque() : args[0];
        }
        if (name == "strlen") {
            if (!args.empty())
                if (auto len = value_len(args[0])) return SymVal::of_int(*len);
            return SymVal::opaque();
        }
        if (name == "input_int") {
            std::string var = "in" + std::to_string(st.inputsRead++);
            add_dim(var);
            return SymVal::of_int(Lin::of_var(var));
        }
        if (name == "input_str") {
            std::string var = length_var("in" + std::to_string(st.inputsRead++));
            add_dim(var);
            return SymVal::of_str(Lin::of_var(var));
        }
        return SymVal::of_int(Lin::of_const(0)); // print
    }

    const Program& p_;
    const TestUnit& unit_;
    ExecOptions opts_;
    ConstraintTree tree_;
    std::map<std::size_t, int> factAllocIds_;
};

} // namespace detail

/// Symbolically execute a test unit and build its constraint tree: one node
/// per entered unit block, each carrying the branch term taken to reach it
/// and any vulnerability conditions discovered there.
inline ConstraintTree symbolic_execute(const Program& p, const TestUnit& unit,
                                       ExecOptions opts = {})
{
    return detail::SymExec(p, unit, opts).build();
}

/// Render the tree in an indented outline, one node per line.
inline std::string dump_tree(const ConstraintTree& t)
{
    std::string out;
    std::function<void(int, int)> go = [&](int id, int indent) {
        const TreeNode& n = t.nodes[static_cast<std::size_t>(id)];
        out.append(static_cast<std::size_t>(indent) * 2, ' ');
        out += "Node(" + std::to_string(n.id) + ") block " + n.blockId;
        if (!n.term.empty()) out += " Term {" + to_string(n.term) + "}";
        out += " Const {" + to_string(t.path_const(id)) + "}";
        for (const auto& v : n.vuls) {
            out += " VulConst {" + to_string(v.cond) + "}";
            if (v.staticallySafe) out += " (statically safe)";
        }
        if (n.truncated) out += " (truncated)";
        out += "\n";
        for (int c : n.children) go(c, indent + 1);
    };
    if (!t.nodes.empty()) go(0, 0);
    return out;
}

} // namespace ubsym

#endif
