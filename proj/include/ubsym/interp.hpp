#ifndef UBSYM_INTERP_HPP
#define UBSYM_INTERP_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ubsym/ir.hpp"

namespace ubsym {

struct Value
{
    bool isStr = false;
    Word i = 0;
    std::string s;

    static Value of_int(Word v) { return {false, v, {}}; }
    static Value of_str(std::string v) { return {true, 0, std::move(v)}; }

    friend bool operator==(const Value&, const Value&) = default;
};

struct OracleEvent
{
    enum class Kind { HeapOverflow, StackFrameClobber, DoubleFree, UseAfterFree };

    Kind kind;
    Site site;
    std::uint64_t base = 0; // buffer base address
    long capacity = 0;
    long writeLen = 0;
};

inline const char* to_string(OracleEvent::Kind k)
{
    switch (k) {
    case OracleEvent::Kind::HeapOverflow: return "HeapOverflow";
    case OracleEvent::Kind::StackFrameClobber: return "StackFrameClobber";
    case OracleEvent::Kind::DoubleFree: return "DoubleFree";
    case OracleEvent::Kind::UseAfterFree: return "UseAfterFree";
    }
    return "?";
}

struct Limits
{
    long stepBudget = 1'000'000;
    int callDepth = 64;
};

struct ExecutionTrace
{
    enum class Exit { Ok, StepBudgetExceeded, InputExhausted, Fault };

    std::set<std::pair<std::string, std::string>> coveredBlocks;
    std::vector<std::pair<std::string, std::vector<Value>>> unitEntries;
    std::vector<OracleEvent> events;
    Exit exit = Exit::Ok;
    std::string faultMessage;
    std::vector<std::string> output;

    // on InputExhausted: whether the failing read wanted a string
    std::optional<bool> neededStr;

    // filled when a monitor unit is requested: the argument vector of the
    // first dynamic call to the unit plus the block sequence of that call
    std::optional<std::vector<Value>> monitoredArgs;
    std::vector<std::string> monitoredBlockSeq;

    bool has_event(OracleEvent::Kind k, const Site& site) const
    {
        for (const auto& e : events)
            if (e.kind == k && e.site == site) return true;
        return false;
    }
};

namespace detail {

class Interp
{
public:
    Interp(const Program& p, std::vector<Value> inputs, Limits limits,
           std::string monitorUnit)
        : p_(p), inputs_(std::move(inputs)), limits_(limits),
          monitorUnit_(std::move(monitorUnit))
    {
    }

    ExecutionTrace run_entry()
    {
        init_globals();
        const Function* f = p_.function(p_.entry);
        if (!f) {
            trace_.exit = ExecutionTrace::Exit::Fault;
            trace_.faultMessage = "missing entry function";
            return std::move(trace_);
        }
        try {
            call(*f, {});
        } catch (const Stop&) {
        }
        if (monitorUnit_ == p_.entry && trace_.monitoredArgs) {
            // the entry takes no caller arguments; its effective input vector
            // is the system inputs it consumed
            std::vector<Value> consumed(inputs_.begin(),
                                        inputs_.begin() + static_cast<long>(nextInput_));
            trace_.monitoredArgs = consumed;
        }
        return std::move(trace_);
    }

    /// Run a single function directly. allocParams gives, per parameter, an
    /// optional heap capacity: such parameters receive the address of a fresh
    /// allocation instead of a caller value.
    ExecutionTrace run_unit(const std::string& name, const std::vector<Value>& args,
                            const std::vector<std::optional<long>>& allocParams = {})
    {
        init_globals();
        const Function* f = p_.function(name);
        if (!f) {
            trace_.exit = ExecutionTrace::Exit::Fault;
            trace_.faultMessage = "missing function " + name;
            return std::move(trace_);
        }
        std::vector<Value> actual = args;
        for (std::size_t i = 0; i < allocParams.size() && i < actual.size(); ++i) {
            if (allocParams[i])
                actual[i] = Value::of_int(static_cast<Word>(heap_alloc(*allocParams[i])));
        }
        try {
            call(*f, actual);
        } catch (const Stop&) {
        }
        return std::move(trace_);
    }

private:
    struct Stop {};

    struct Alloc
    {
        std::uint64_t base;
        long capacity;
        bool live;
        std::vector<std::uint8_t> data;
    };

    struct Frame
    {
        const Function* fn;
        std::uint64_t base;     // frame base address; locals live below it
        long size;
        std::vector<std::uint8_t> data; // bytes of [base-size, base)
        std::map<int, Value> tmps;
        std::map<int, Word> regs;
    };

    void init_globals()
    {
        std::uint64_t addr = 0x1000;
        for (const auto& [name, init] : p_.globals) {
            globalAddr_[name] = addr;
            globalVal_[addr] = init;
            addr += 8;
        }
    }

    std::uint64_t heap_alloc(long capacity)
    {
        std::uint64_t base = heapNext_;
        heapNext_ += static_cast<std::uint64_t>((capacity + 15) / 16 * 16 + 16);
        heap_.push_back({base, capacity, true, std::vector<std::uint8_t>(
                                                   static_cast<std::size_t>(capacity), 0)});
        return base;
    }

    Alloc* find_alloc(std::uint64_t addr)
    {
        // latest allocation covering the address wins
        for (auto it = heap_.rbegin(); it != heap_.rend(); ++it)
            if (addr >= it->base && addr < it->base + static_cast<std::uint64_t>(it->capacity))
                return &*it;
        return nullptr;
    }

    Frame* find_frame(std::uint64_t addr)
    {
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
            if (addr >= it->base - static_cast<std::uint64_t>(it->size) && addr < it->base + 8)
                return &*it;
        return nullptr;
    }

    void fault(const std::string& msg)
    {
        trace_.exit = ExecutionTrace::Exit::Fault;
        trace_.faultMessage = msg;
        throw Stop{};
    }

    void step()
    {
        if (--stepsLeft_ < 0) {
            trace_.exit = ExecutionTrace::Exit::StepBudgetExceeded;
            throw Stop{};
        }
    }

    Value eval(const Expr& e, Frame& fr)
    {
        switch (e.kind) {
        case Expr::Kind::Const:
            return Value::of_int(e.imm);
        case Expr::Kind::ConstStr:
            return Value::of_str(e.bytes);
        case Expr::Kind::Tmp: {
            auto it = fr.tmps.find(e.tmp);
            if (it == fr.tmps.end()) fault("use of unassigned t" + std::to_string(e.tmp));
            return it->second;
        }
        case Expr::Kind::Get: {
            auto it = fr.regs.find(e.reg);
            return Value::of_int(it == fr.regs.end() ? 0 : it->second);
        }
        case Expr::Kind::Load: {
            Value addr = eval(*e.a, fr);
            return Value::of_int(load_word(static_cast<std::uint64_t>(addr.i), e.size));
        }
        case Expr::Kind::Binop: {
            Value a = eval(*e.a, fr);
            Value b = eval(*e.b, fr);
            if (a.isStr || b.isStr) fault("binop on string value");
            switch (e.binop) {
            case BinOp::Add64: return Value::of_int(a.i + b.i);
            case BinOp::Sub64: return Value::of_int(a.i - b.i);
            case BinOp::Mul64: return Value::of_int(a.i * b.i);
            case BinOp::CmpEQ64: return Value::of_int(a.i == b.i ? 1 : 0);
            case BinOp::CmpNE64: return Value::of_int(a.i != b.i ? 1 : 0);
            case BinOp::CmpLT64s: return Value::of_int(a.i < b.i ? 1 : 0);
            case BinOp::CmpLE64s: return Value::of_int(a.i <= b.i ? 1 : 0);
            }
            return Value::of_int(0);
        }
        case Expr::Kind::Unop: {
            Value a = eval(*e.a, fr);
            if (a.isStr) fault("unop on string value");
            switch (e.unop) {
            case UnOp::Not1: return Value::of_int(a.i == 0 ? 1 : 0);
            case UnOp::Neg64: return Value::of_int(-a.i);
            }
            return Value::of_int(0);
        }
        case Expr::Kind::StrLen: {
            Value a = eval(*e.a, fr);
            if (!a.isStr) fault("STRLEN of non-string value");
            return Value::of_int(static_cast<Word>(a.s.size()));
        }
        }
        return Value::of_int(0);
    }

    Word load_word(std::uint64_t addr, int size)
    {
        if (Alloc* a = find_alloc(addr)) {
            if (!a->live)
                trace_.events.push_back({OracleEvent::Kind::UseAfterFree, curSite_,
                                         a->base, a->capacity, size});
            std::uint64_t off = addr - a->base;
            Word v = 0;
            for (int i = 0; i < size; ++i) {
                std::uint64_t idx = off + static_cast<std::uint64_t>(i);
                if (idx < a->data.size())
                    v |= static_cast<Word>(static_cast<std::uint64_t>(a->data[idx]) << (8 * i));
            }
            return v;
        }
        if (Frame* f = find_frame(addr)) {
            std::uint64_t lo = f->base - static_cast<std::uint64_t>(f->size);
            Word v = 0;
            for (int i = 0; i < size; ++i) {
                std::uint64_t a2 = addr + static_cast<std::uint64_t>(i);
                if (a2 >= lo && a2 < f->base) {
                    std::size_t idx = static_cast<std::size_t>(a2 - lo);
                    v |= static_cast<Word>(static_cast<std::uint64_t>(f->data[idx]) << (8 * i));
                }
            }
            return v;
        }
        if (auto it = globalVal_.find(addr); it != globalVal_.end()) return it->second;
        fault("load from unmapped address");
        return 0;
    }

    void write_bytes(std::uint64_t addr, const std::uint8_t* data, long len)
    {
        if (Alloc* a = find_alloc(addr)) {
            if (!a->live) {
                trace_.events.push_back({OracleEvent::Kind::UseAfterFree, curSite_,
                                         a->base, a->capacity, len});
            }
            std::uint64_t off = addr - a->base;
            if (static_cast<long>(off) + len > a->capacity) {
                trace_.events.push_back({OracleEvent::Kind::HeapOverflow, curSite_,
                                         a->base, a->capacity,
                                         static_cast<long>(off) + len});
            }
            for (long i = 0; i < len; ++i) {
                std::uint64_t idx = off + static_cast<std::uint64_t>(i);
                if (idx < a->data.size()) a->data[idx] = data[i];
            }
            return;
        }
        if (Frame* f = find_frame(addr)) {
            // a write that reaches the saved frame base clobbers it
            if (addr + static_cast<std::uint64_t>(len) > f->base) {
                trace_.events.push_back({OracleEvent::Kind::StackFrameClobber, curSite_,
                                         addr, static_cast<long>(f->base - addr), len});
            }
            std::uint64_t lo = f->base - static_cast<std::uint64_t>(f->size);
            for (long i = 0; i < len; ++i) {
                std::uint64_t a2 = addr + static_cast<std::uint64_t>(i);
                if (a2 >= lo && a2 < f->base)
                    f->data[static_cast<std::size_t>(a2 - lo)] = data[i];
            }
            return;
        }
        if (auto it = globalVal_.find(addr); it != globalVal_.end() && len == 8) {
            Word v = 0;
            for (int i = 0; i < 8; ++i)
                v |= static_cast<Word>(static_cast<std::uint64_t>(data[i]) << (8 * i));
            it->second = v;
            return;
        }
        fault("store to unmapped address");
    }

    void store_value(std::uint64_t addr, const Value& v, int size)
    {
        if (v.isStr) {
            store_string(addr, v.s, static_cast<long>(v.s.size()));
        } else {
            std::uint8_t buf[8] = {};
            for (int i = 0; i < size && i < 8; ++i)
                buf[i] = static_cast<std::uint8_t>(
                    (static_cast<std::uint64_t>(v.i) >> (8 * i)) & 0xff);
            write_bytes(addr, buf, size);
        }
    }

    void store_string(std::uint64_t addr, const std::string& s, long len)
    {
        std::vector<std::uint8_t> buf(static_cast<std::size_t>(len), 0);
        for (long i = 0; i < len && i < static_cast<long>(s.size()); ++i)
            buf[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(s[static_cast<std::size_t>(i)]);
        write_bytes(addr, buf.data(), len);
    }

    Value call_intrinsic(const std::string& name, const std::vector<Value>& args)
    {
        if (name == "malloc") {
            if (args.size() != 1 || args[0].isStr) fault("malloc expects int length");
            return Value::of_int(static_cast<Word>(heap_alloc(args[0].i)));
        }
        if (name == "free") {
            if (args.size() != 1 || args[0].isStr) fault("free expects an address");
            std::uint64_t addr = static_cast<std::uint64_t>(args[0].i);
            Alloc* a = find_alloc(addr);
            if (!a) {
                fault("free of non-heap address");
            } else if (!a->live) {
                trace_.events.push_back({OracleEvent::Kind::DoubleFree, curSite_,
                                         a->base, a->capacity, 0});
            } else {
                a->live = false;
            }
            return Value::of_int(0);
        }
        if (name == "memcpy") {
            if (args.size() != 3 || args[0].isStr || args[2].isStr)
                fault("memcpy expects (addr, src, int)");
            long n = args[2].i;
            if (n < 0) fault("memcpy with negative length");
            if (args[1].isStr)
                store_string(static_cast<std::uint64_t>(args[0].i), args[1].s, n);
            else
                fault("memcpy source must be a string value");
            return args[0];
        }
        if (name == "strcpy") {
            if (args.size() != 2 || args[0].isStr || !args[1].isStr)
                fault("strcpy expects (addr, string)");
            store_string(static_cast<std::uint64_t>(args[0].i), args[1].s,
                         static_cast<long>(args[1].s.size()));
            return args[0];
        }
        if (name == "strlen") {
            if (args.size() != 1 || !args[0].isStr) fault("strlen expects a string");
            return Value::of_int(static_cast<Word>(args[0].s.size()));
        }
        if (name == "input_int") {
            if (nextInput_ >= inputs_.size() || inputs_[nextInput_].isStr) {
                trace_.exit = ExecutionTrace::Exit::InputExhausted;
                trace_.neededStr = false;
                throw Stop{};
            }
            return inputs_[nextInput_++];
        }
        if (name == "input_str") {
            if (nextInput_ >= inputs_.size() || !inputs_[nextInput_].isStr) {
                trace_.exit = ExecutionTrace::Exit::InputExhausted;
                trace_.neededStr = true;
                throw Stop{};
            }
            return inputs_[nextInput_++];
        }
        if (name == "print") {
            std::string line;
            for (const auto& a : args)
                line += a.isStr ? a.s : std::to_string(a.i);
            trace_.output.push_back(line);
            return Value::of_int(0);
        }
        fault("unknown intrinsic " + name);
        return Value::of_int(0);
    }

    std::optional<Value> call(const Function& f, const std::vector<Value>& args)
    {
        if (static_cast<int>(stack_.size()) >= limits_.callDepth)
            fault("call depth exceeded");

        trace_.unitEntries.push_back({f.name, args});
        bool monitored = false;
        if (!monitorUnit_.empty() && f.name == monitorUnit_ && !trace_.monitoredArgs) {
            trace_.monitoredArgs = args;
            monitored = true;
            monitorDepth_ = static_cast<int>(stack_.size());
        }

        Frame fr;
        fr.fn = &f;
        fr.base = stackNext_;
        fr.size = f.frameSize;
        fr.data.assign(static_cast<std::size_t>(f.frameSize), 0);
        fr.regs[kFrameBaseReg] = static_cast<Word>(fr.base);
        stackNext_ -= static_cast<std::uint64_t>(f.frameSize) + 64;
        for (std::size_t i = 0; i < args.size() && i < f.params.size(); ++i)
            fr.tmps[static_cast<int>(i)] = args[i];
        stack_.push_back(std::move(fr));

        std::optional<Value> result;
        const Block* b = f.block(f.entryBlock);
        while (b) {
            trace_.coveredBlocks.insert({f.name, b->id});
            if (monitored || (monitorActive_ && static_cast<int>(stack_.size()) > monitorDepth_)) {
                // block sequence only for the monitored call itself
                if (monitored) trace_.monitoredBlockSeq.push_back(b->id);
            }
            const Block* next = nullptr;
            bool returned = false;
            for (std::size_t si = 0; si < b->stmts.size(); ++si) {
                const Stmt& s = b->stmts[si];
                step();
                curSite_ = {f.name, b->id, static_cast<int>(si)};
                Frame& cur = stack_.back();
                switch (s.kind) {
                case Stmt::Kind::WrTmp:
                    cur.tmps[s.tmp] = eval(*s.e0, cur);
                    break;
                case Stmt::Kind::Store: {
                    Value addr = eval(*s.e0, cur);
                    Value data = eval(*s.e1, cur);
                    if (addr.isStr) fault("store to string value");
                    if (s.storeSize == kDynamicSize && !data.isStr)
                        fault("dynamic store of non-string value");
                    store_value(static_cast<std::uint64_t>(addr.i), data,
                                s.storeSize == kDynamicSize ? 0 : s.storeSize);
                    break;
                }
                case Stmt::Kind::Put: {
                    Value v = eval(*s.e0, cur);
                    if (v.isStr) fault("PUT of string value");
                    cur.regs[s.reg] = v.i;
                    break;
                }
                case Stmt::Kind::Call: {
                    std::vector<Value> callArgs;
                    for (const auto& a : s.args) callArgs.push_back(eval(*a, cur));
                    Value ret;
                    if (intrinsics().count(s.callee)) {
                        ret = call_intrinsic(s.callee, callArgs);
                    } else {
                        const Function* g = p_.function(s.callee);
                        if (!g) fault("call to undefined function " + s.callee);
                        Site saved = curSite_;
                        auto r = call(*g, callArgs);
                        curSite_ = saved;
                        ret = r.value_or(Value::of_int(0));
                    }
                    if (s.tmp >= 0) stack_.back().tmps[s.tmp] = ret;
                    break;
                }
                case Stmt::Kind::Branch: {
                    Value c = eval(*s.e0, cur);
                    if (c.isStr) fault("branch on string value");
                    next = f.block(c.i != 0 ? s.target0 : s.target1);
                    break;
                }
                case Stmt::Kind::Jump:
                    next = f.block(s.target0);
                    break;
                case Stmt::Kind::Ret:
                    if (s.hasRetValue) result = eval(*s.e0, cur);
                    returned = true;
                    break;
                }
                if (next || returned) break;
            }
            if (returned) break;
            b = next; // falling off a block without terminator ends the call
        }

        stackNext_ += static_cast<std::uint64_t>(f.frameSize) + 64;
        stack_.pop_back();
        return result;
    }

    const Program& p_;
    std::vector<Value> inputs_;
    std::size_t nextInput_ = 0;
    Limits limits_;
    long stepsLeft_ = 0;
    std::string monitorUnit_;
    bool monitorActive_ = false;
    int monitorDepth_ = -1;

    std::vector<Alloc> heap_;
    std::uint64_t heapNext_ = 0x100000;
    std::vector<Frame> stack_;
    std::uint64_t stackNext_ = 0x7fff0000;
    std::map<std::string, std::uint64_t> globalAddr_;
    std::map<std::uint64_t, Word> globalVal_;

    ExecutionTrace trace_;
    Site curSite_;

public:
    void set_steps() { stepsLeft_ = limits_.stepBudget; }
};

} // namespace detail

/// Execute the whole program on the given system inputs. When monitorUnit is
/// nonempty, the trace additionally records the argument vector of the first
/// dynamic call to that unit and the unit block sequence of that call.
inline ExecutionTrace run(const Program& p, const std::vector<Value>& inputs,
                          Limits limits = {}, const std::string& monitorUnit = "")
{
    detail::Interp interp(p, inputs, limits, monitorUnit);
    interp.set_steps();
    return interp.run_entry();
}

/// Execute a single function in isolation. Parameters with an entry in
/// allocParams receive a fresh heap allocation of that capacity.
inline ExecutionTrace run_unit(const Program& p, const std::string& unit,
                               const std::vector<Value>& args,
                               const std::vector<std::optional<long>>& allocParams = {},
                               Limits limits = {}, const std::vector<Value>& inputs = {})
{
    detail::Interp interp(p, inputs, limits, unit);
    interp.set_steps();
    return interp.run_unit(unit, args, allocParams);
}

struct MonitorResult
{
    std::optional<std::vector<Value>> unitArgs;
    std::set<std::string> coveredBlocks;
    std::vector<std::string> blockSeq;
    ExecutionTrace trace;
};

/// Run the program and report the argument vector of the first call to the
/// unit (absent if never reached) plus the unit blocks covered in that call.
inline MonitorResult monitor_unit(const Program& p, const std::string& unit,
                                  const std::vector<Value>& inputs, Limits limits = {})
{
    MonitorResult r;
    r.trace = run(p, inputs, limits, unit);
    r.unitArgs = r.trace.monitoredArgs;
    r.blockSeq = r.trace.monitoredBlockSeq;
    for (const auto& b : r.blockSeq) r.coveredBlocks.insert(b);
    return r;
}

} // namespace ubsym

#endif
