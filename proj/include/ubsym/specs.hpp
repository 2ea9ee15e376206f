#ifndef UBSYM_SPECS_HPP
#define UBSYM_SPECS_HPP

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ubsym/ir.hpp"

namespace ubsym {

enum class VulnClass { HeapOverflow, StackOverflow, DoubleFree, UseAfterFree };

inline const char* to_string(VulnClass c)
{
    switch (c) {
    case VulnClass::HeapOverflow: return "heap";
    case VulnClass::StackOverflow: return "stack";
    case VulnClass::DoubleFree: return "df";
    case VulnClass::UseAfterFree: return "uaf";
    }
    return "?";
}

inline std::optional<VulnClass> vuln_class_from_string(const std::string& s)
{
    if (s == "heap") return VulnClass::HeapOverflow;
    if (s == "stack") return VulnClass::StackOverflow;
    if (s == "df") return VulnClass::DoubleFree;
    if (s == "uaf") return VulnClass::UseAfterFree;
    return std::nullopt;
}

/// One event of a specification: a statement shape with named containers
/// and a guard over containers bound so far.
struct Event
{
    enum class Shape { MallocCall, StoreData, FrameBaseRead, FrameOffsetAdd, FreeCall, LoadOrStoreUse };
    Shape shape;
    std::vector<std::string> containers;
    std::string guard; // "true" or the rule text
};

/// An ordered {CONT, Rule} event-sequence specification of one
/// memory-corruption class.
struct VulnSpec
{
    VulnClass cls;
    std::vector<Event> events;
    std::vector<std::string> rules;

    // The activation rules that are data- rather than order-driven:
    // overflow happens when the copied length exceeds the buffer capacity.
    static bool overflow_rule(long sourceLen, long capacity) { return sourceLen > capacity; }
    static long stack_max_len(long frameOffset) { return frameOffset < 0 ? -frameOffset : 0; }
};

inline std::vector<VulnSpec> builtin_specs()
{
    std::vector<VulnSpec> specs;
    {
        VulnSpec s;
        s.cls = VulnClass::HeapOverflow;
        s.events = {
            {Event::Shape::MallocCall, {"CONT1", "CONT2"}, "true"},
            {Event::Shape::StoreData, {"CONT3", "CONT4"},
             "CONT1 <= CONT3 < CONT1 + CONT2 && len(CONT4) > CONT2"},
        };
        s.rules = {"CONT1 <= CONT3 < CONT1 + CONT2 && len(CONT4) > CONT2"};
        specs.push_back(std::move(s));
    }
    {
        VulnSpec s;
        s.cls = VulnClass::StackOverflow;
        s.events = {
            {Event::Shape::FrameBaseRead, {"CONT1"}, "true"},
            {Event::Shape::FrameOffsetAdd, {"CONT2", "CONT3", "CONT4"},
             "CONT1 == CONT2 && CONT3 < 0"},
            {Event::Shape::StoreData, {"CONT5", "CONT6"},
             "CONT4 <= CONT5 < CONT2 && len(CONT6) > |CONT3|"},
        };
        s.rules = {"CONT1 == CONT2 && CONT3 < 0",
                   "CONT4 <= CONT5 < CONT2 && len(CONT6) > |CONT3|"};
        specs.push_back(std::move(s));
    }
    {
        VulnSpec s;
        s.cls = VulnClass::DoubleFree;
        s.events = {
            {Event::Shape::MallocCall, {"CONT1", "CONT2"}, "true"},
            {Event::Shape::FreeCall, {"CONT3"}, "CONT1 <= CONT3 < CONT1 + CONT2"},
            {Event::Shape::FreeCall, {"CONT4"}, "CONT1 <= CONT4 < CONT1 + CONT2"},
        };
        s.rules = {"CONT1 <= CONT3 < CONT1 + CONT2", "CONT1 <= CONT4 < CONT1 + CONT2"};
        specs.push_back(std::move(s));
    }
    {
        VulnSpec s;
        s.cls = VulnClass::UseAfterFree;
        s.events = {
            {Event::Shape::MallocCall, {"CONT1", "CONT2"}, "true"},
            {Event::Shape::FreeCall, {"CONT3"}, "CONT1 <= CONT3 < CONT1 + CONT2"},
            {Event::Shape::LoadOrStoreUse, {"CONT4", "CONT5"},
             "CONT1 <= CONT4 < CONT1 + CONT2 || CONT1 <= CONT5 < CONT1 + CONT2"},
        };
        s.rules = {"CONT1 <= CONT3 < CONT1 + CONT2",
                   "CONT1 <= CONT4 < CONT1 + CONT2", "CONT1 <= CONT5 < CONT1 + CONT2"};
        specs.push_back(std::move(s));
    }
    return specs;
}

inline const VulnSpec& builtin_spec(VulnClass cls)
{
    static const std::vector<VulnSpec> specs = builtin_specs();
    for (const auto& s : specs)
        if (s.cls == cls) return s;
    return specs.front();
}

// ---------------------------------------------------------------------------
// Buffer facts and cross-call tracing

/// A local slot known to hold (an offset into) a buffer address. Function
/// parameters occupy temporaries t0..t{n-1}, so a tmp id identifies both.
struct Carrier
{
    std::string function;
    int tmp;
    long offset; // byte offset of this slot's value from the buffer base

    friend auto operator<=>(const Carrier&, const Carrier&) = default;
};

struct BufferFact
{
    enum class Origin { Heap, Stack };

    Origin origin;
    Site allocSite;        // malloc call (heap) / the Add64 forming rbp-x (stack)
    std::string homeFunction;
    long frameOffset = 0;  // stack only, negative
    long capacity = 0;     // heap: constant malloc length; stack: |frameOffset|
    std::set<Carrier> carriers;

    bool carries(const std::string& fn, int tmp) const
    {
        for (const auto& c : carriers)
            if (c.function == fn && c.tmp == tmp) return true;
        return false;
    }
    std::optional<long> carrier_offset(const std::string& fn, int tmp) const
    {
        for (const auto& c : carriers)
            if (c.function == fn && c.tmp == tmp) return c.offset;
        return std::nullopt;
    }
};

struct TraceWarning
{
    Site site;
    std::string message;
};

namespace detail {

// address expression resolving against a carrier set: Tmp(c) or
// Add64(Tmp(c), CONST k)
inline std::optional<long> resolve_offset(const Expr& e, const std::string& fn,
                                          const BufferFact& fact)
{
    if (e.kind == Expr::Kind::Tmp) return fact.carrier_offset(fn, e.tmp);
    if (e.kind == Expr::Kind::Binop && e.binop == BinOp::Add64) {
        if (e.a->kind == Expr::Kind::Tmp && e.b->kind == Expr::Kind::Const) {
            if (auto off = fact.carrier_offset(fn, e.a->tmp)) return *off + e.b->imm;
        }
        if (e.b->kind == Expr::Kind::Tmp && e.a->kind == Expr::Kind::Const) {
            if (auto off = fact.carrier_offset(fn, e.b->tmp)) return *off + e.a->imm;
        }
    }
    return std::nullopt;
}

// Flow-insensitive, context-insensitive closure of the carrier set under
// copies, call-argument passing and returns.
inline void propagate_carriers(const Program& p, BufferFact& fact)
{
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& f : p.functions) {
            for (const auto& b : f.blocks) {
                for (const auto& s : b.stmts) {
                    if (s.kind == Stmt::Kind::WrTmp) {
                        if (auto off = resolve_offset(*s.e0, f.name, fact)) {
                            Carrier c{f.name, s.tmp, *off};
                            if (fact.carriers.insert(c).second) changed = true;
                        }
                    } else if (s.kind == Stmt::Kind::Call) {
                        const Function* callee = p.function(s.callee);
                        if (callee) {
                            for (std::size_t i = 0; i < s.args.size(); ++i) {
                                if (auto off = resolve_offset(*s.args[i], f.name, fact)) {
                                    Carrier c{callee->name, static_cast<int>(i), *off};
                                    if (fact.carriers.insert(c).second) changed = true;
                                }
                            }
                            // returning the carrier to the caller's result tmp
                            if (s.tmp >= 0) {
                                for (const auto& cb : callee->blocks) {
                                    for (const auto& cs : cb.stmts) {
                                        if (cs.kind != Stmt::Kind::Ret || !cs.hasRetValue)
                                            continue;
                                        if (auto off = resolve_offset(*cs.e0, callee->name, fact)) {
                                            Carrier c{f.name, s.tmp, *off};
                                            if (fact.carriers.insert(c).second) changed = true;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

inline bool is_frame_base_tmp(const Function& f, int tmp)
{
    for (const auto& b : f.blocks)
        for (const auto& s : b.stmts)
            if (s.kind == Stmt::Kind::WrTmp && s.tmp == tmp &&
                s.e0->kind == Expr::Kind::Get && s.e0->reg == kFrameBaseReg)
                return true;
    return false;
}

} // namespace detail

/// All heap buffer facts of the program, one per malloc call with a constant
/// length; non-constant lengths are skipped with a warning.
inline std::vector<BufferFact> discover_heap_buffers(const Program& p,
                                                     std::vector<TraceWarning>* warnings = nullptr)
{
    std::vector<BufferFact> facts;
    for (const auto& f : p.functions) {
        for (const auto& b : f.blocks) {
            for (std::size_t si = 0; si < b.stmts.size(); ++si) {
                const Stmt& s = b.stmts[si];
                if (s.kind != Stmt::Kind::Call || s.callee != "malloc") continue;
                Site site{f.name, b.id, static_cast<int>(si)};
                if (s.args.size() != 1 || s.args[0]->kind != Expr::Kind::Const) {
                    if (warnings)
                        warnings->push_back({site, "malloc length is not a constant; site skipped"});
                    continue;
                }
                if (s.tmp < 0) continue;
                BufferFact fact;
                fact.origin = BufferFact::Origin::Heap;
                fact.allocSite = site;
                fact.homeFunction = f.name;
                fact.capacity = s.args[0]->imm;
                fact.carriers.insert({f.name, s.tmp, 0});
                detail::propagate_carriers(p, fact);
                facts.push_back(std::move(fact));
            }
        }
    }
    return facts;
}

/// Trace one allocation site's buffer through copies, calls and returns.
inline std::optional<BufferFact> trace_buffer(const Program& p, const Site& allocSite,
                                              std::vector<TraceWarning>* warnings = nullptr)
{
    for (auto& fact : discover_heap_buffers(p, warnings))
        if (fact.allocSite == allocSite) return fact;
    return std::nullopt;
}

/// Stack buffer facts of one function: one per distinct negative constant x
/// added to the frame base that flows into a store address or call argument.
/// Estimated maximum length is |x|.
inline std::vector<BufferFact> estimate_stack_buffer(const Program& p, const Function& f)
{
    // gather candidate rbp-x temporaries
    struct Cand
    {
        long offset;
        int tmp;
        Site site;
    };
    std::vector<Cand> cands;
    for (const auto& b : f.blocks) {
        for (std::size_t si = 0; si < b.stmts.size(); ++si) {
            const Stmt& s = b.stmts[si];
            if (s.kind != Stmt::Kind::WrTmp || s.e0->kind != Expr::Kind::Binop ||
                s.e0->binop != BinOp::Add64)
                continue;
            const Expr& lhs = *s.e0->a;
            const Expr& rhs = *s.e0->b;
            if (lhs.kind == Expr::Kind::Tmp && rhs.kind == Expr::Kind::Const &&
                rhs.imm < 0 && detail::is_frame_base_tmp(f, lhs.tmp)) {
                cands.push_back({rhs.imm, s.tmp, {f.name, b.id, static_cast<int>(si)}});
            }
        }
    }
    // keep those that feed a store address or a call argument
    auto used = [&](int tmp) {
        for (const auto& b : f.blocks) {
            for (const auto& s : b.stmts) {
                auto mentions = [&](const Expr& e) {
                    return e.kind == Expr::Kind::Tmp && e.tmp == tmp;
                };
                if (s.kind == Stmt::Kind::Store && mentions(*s.e0)) return true;
                if (s.kind == Stmt::Kind::Call)
                    for (const auto& a : s.args)
                        if (mentions(*a)) return true;
                if (s.kind == Stmt::Kind::WrTmp && mentions(*s.e0)) return true;
            }
        }
        return false;
    };

    std::vector<BufferFact> facts;
    std::set<long> seen;
    for (const auto& c : cands) {
        if (!used(c.tmp)) continue;
        if (!seen.insert(c.offset).second) {
            // same local addressed twice: extend the existing fact's carriers
            for (auto& fact : facts) {
                if (fact.frameOffset == c.offset) {
                    fact.carriers.insert({f.name, c.tmp, 0});
                    detail::propagate_carriers(p, fact);
                }
            }
            continue;
        }
        BufferFact fact;
        fact.origin = BufferFact::Origin::Stack;
        fact.allocSite = c.site;
        fact.homeFunction = f.name;
        fact.frameOffset = c.offset;
        fact.capacity = VulnSpec::stack_max_len(c.offset);
        fact.carriers.insert({f.name, c.tmp, 0});
        detail::propagate_carriers(p, fact);
        facts.push_back(std::move(fact));
    }
    return facts;
}

inline std::vector<BufferFact> discover_stack_buffers(const Program& p)
{
    std::vector<BufferFact> facts;
    for (const auto& f : p.functions)
        for (auto& fact : estimate_stack_buffer(p, f))
            facts.push_back(std::move(fact));
    return facts;
}

inline std::vector<BufferFact> discover_buffers(const Program& p, VulnClass cls,
                                                std::vector<TraceWarning>* warnings = nullptr)
{
    if (cls == VulnClass::StackOverflow) return discover_stack_buffers(p);
    return discover_heap_buffers(p, warnings);
}

// ---------------------------------------------------------------------------
// Test unit extraction

struct SuspiciousSite
{
    Site site;          // the final-event statement inside the unit
    int factIndex;      // into the fact list used during extraction
    friend auto operator<=>(const SuspiciousSite&, const SuspiciousSite&) = default;
};

struct TestUnit
{
    std::string function;
    VulnClass cls;
    std::vector<SuspiciousSite> suspiciousSites;
    std::vector<BufferFact> facts; // indexed by SuspiciousSite::factIndex
};

namespace detail {

/// True when the statement stores string/sized data through an address that
/// resolves into the fact's range: a raw STORE or a strcpy/memcpy call.
inline bool matches_store_event(const Stmt& s, const std::string& fn, const BufferFact& fact)
{
    if (s.kind == Stmt::Kind::Store) {
        if (auto off = resolve_offset(*s.e0, fn, fact))
            return *off >= 0 && *off < fact.capacity;
        return false;
    }
    if (s.kind == Stmt::Kind::Call && (s.callee == "strcpy" || s.callee == "memcpy")) {
        if (s.args.empty()) return false;
        if (auto off = resolve_offset(*s.args[0], fn, fact))
            return *off >= 0 && *off < fact.capacity;
    }
    return false;
}

enum class EventKind { Alloc, Free, Use };

struct LinearEvent
{
    EventKind kind;
    Site site;     // where the event statement actually lives
    Site topSite;  // the statement in the linearized function (call site when nested)
};

// Statements of f in reverse postorder with non-intrinsic callees spliced in.
inline void linearize_events(const Program& p, const Function& f, const BufferFact& fact,
                             std::vector<LinearEvent>& out, int depth)
{
    if (depth > 8) return;
    for (const auto& bid : reverse_postorder(f)) {
        const Block* b = f.block(bid);
        if (!b) continue;
        for (std::size_t si = 0; si < b->stmts.size(); ++si) {
            const Stmt& s = b->stmts[si];
            Site here{f.name, b->id, static_cast<int>(si)};
            if (s.kind == Stmt::Kind::Call) {
                if (s.callee == "malloc") {
                    if (here == fact.allocSite) out.push_back({EventKind::Alloc, here, here});
                } else if (s.callee == "free") {
                    if (s.args.size() == 1 && resolve_offset(*s.args[0], f.name, fact))
                        out.push_back({EventKind::Free, here, here});
                } else if (s.callee == "strcpy" || s.callee == "memcpy") {
                    if (!s.args.empty() && resolve_offset(*s.args[0], f.name, fact))
                        out.push_back({EventKind::Use, here, here});
                } else if (!intrinsics().count(s.callee)) {
                    if (const Function* g = p.function(s.callee)) {
                        std::vector<LinearEvent> inner;
                        linearize_events(p, *g, fact, inner, depth + 1);
                        for (auto& ev : inner) out.push_back({ev.kind, ev.site, here});
                    }
                }
            }
            // a use: load through the carrier or a store into the range
            bool isUse = false;
            std::function<void(const Expr&)> scan = [&](const Expr& e) {
                if (e.kind == Expr::Kind::Load && resolve_offset(*e.a, f.name, fact))
                    isUse = true;
                if (e.a) scan(*e.a);
                if (e.b) scan(*e.b);
            };
            if (s.kind == Stmt::Kind::WrTmp) scan(*s.e0);
            if (s.kind == Stmt::Kind::Store && resolve_offset(*s.e0, f.name, fact)) isUse = true;
            if (isUse) out.push_back({EventKind::Use, here, here});
        }
    }
}

inline bool contains_sequence(const std::vector<LinearEvent>& evs,
                              const std::vector<EventKind>& seq,
                              std::vector<const LinearEvent*>* matched = nullptr)
{
    std::size_t want = 0;
    std::vector<const LinearEvent*> hit;
    for (const auto& e : evs) {
        if (want < seq.size() && e.kind == seq[want]) {
            hit.push_back(&e);
            ++want;
        }
    }
    if (want == seq.size()) {
        if (matched) *matched = hit;
        return true;
    }
    return false;
}

inline std::set<std::string> callees_of(const Program& p, const Function& f, int depth = 0)
{
    std::set<std::string> out;
    if (depth > 8) return out;
    for (const auto& b : f.blocks) {
        for (const auto& s : b.stmts) {
            if (s.kind != Stmt::Kind::Call || intrinsics().count(s.callee)) continue;
            if (out.insert(s.callee).second) {
                if (const Function* g = p.function(s.callee))
                    for (const auto& n : callees_of(p, *g, depth + 1)) out.insert(n);
            }
        }
    }
    return out;
}

} // namespace detail

/// Match a specification against the program and enumerate test units.
/// Overflow units are the functions performing the final store event onto a
/// traced buffer; free/use sequences pick the least-common-ancestor function
/// whose (callee-expanded) body contains the full event order.
inline std::vector<TestUnit> extract_test_units(const Program& p, const VulnSpec& spec,
                                                std::vector<TraceWarning>* warnings = nullptr)
{
    std::vector<BufferFact> facts = discover_buffers(p, spec.cls, warnings);
    std::map<std::string, TestUnit> units;

    auto add_site = [&](const std::string& fn, const Site& site, const BufferFact& fact) {
        TestUnit& u = units[fn];
        u.function = fn;
        u.cls = spec.cls;
        int idx = -1;
        for (std::size_t i = 0; i < u.facts.size(); ++i)
            if (u.facts[i].allocSite == fact.allocSite &&
                u.facts[i].frameOffset == fact.frameOffset)
                idx = static_cast<int>(i);
        if (idx < 0) {
            idx = static_cast<int>(u.facts.size());
            u.facts.push_back(fact);
        }
        SuspiciousSite ss{site, idx};
        for (const auto& existing : u.suspiciousSites)
            if (existing == ss) return;
        u.suspiciousSites.push_back(ss);
    };

    if (spec.cls == VulnClass::HeapOverflow || spec.cls == VulnClass::StackOverflow) {
        for (const auto& fact : facts) {
            for (const auto& f : p.functions) {
                for (const auto& b : f.blocks) {
                    for (std::size_t si = 0; si < b.stmts.size(); ++si) {
                        if (detail::matches_store_event(b.stmts[si], f.name, fact))
                            add_site(f.name, {f.name, b.id, static_cast<int>(si)}, fact);
                    }
                }
            }
        }
    } else {
        std::vector<detail::EventKind> seq =
            spec.cls == VulnClass::DoubleFree
                ? std::vector<detail::EventKind>{detail::EventKind::Alloc,
                                                 detail::EventKind::Free,
                                                 detail::EventKind::Free}
                : std::vector<detail::EventKind>{detail::EventKind::Alloc,
                                                 detail::EventKind::Free,
                                                 detail::EventKind::Use};
        for (const auto& fact : facts) {
            // all functions containing the full ordered sequence
            std::map<std::string, std::vector<const detail::LinearEvent*>> containing;
            std::map<std::string, std::vector<detail::LinearEvent>> lists;
            for (const auto& f : p.functions) {
                auto& evs = lists[f.name];
                detail::linearize_events(p, f, fact, evs, 0);
                std::vector<const detail::LinearEvent*> matched;
                if (detail::contains_sequence(evs, seq, &matched))
                    containing[f.name] = matched;
            }
            // least common ancestor: drop any whose callee also contains it
            for (const auto& [fn, matched] : containing) {
                bool calleeHasIt = false;
                const Function* f = p.function(fn);
                if (!f) continue;
                for (const auto& callee : detail::callees_of(p, *f))
                    if (containing.count(callee)) calleeHasIt = true;
                if (calleeHasIt) continue;
                add_site(fn, matched.back()->topSite, fact);
            }
        }
    }

    std::vector<TestUnit> out;
    for (auto& [fn, u] : units) out.push_back(std::move(u));
    return out;
}

} // namespace ubsym

#endif
