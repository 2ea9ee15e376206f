#ifndef UBSYM_COVER_HPP
#define UBSYM_COVER_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ubsym/learn.hpp"

namespace ubsym {

/// A satisfiable vulnerability condition, with its confirmation status.
struct Finding
{
    enum class Confirmation { ReplayConfirmed, UnitOnly, Unconfirmed };

    Site site;
    OracleEvent::Kind kind = OracleEvent::Kind::HeapOverflow;
    int nodeId = 0;
    Constraint condition;       // path constraint && vulnerability condition
    Model unitModel;            // unit argument valuation satisfying it
    Confirmation confirmation = Confirmation::Unconfirmed;
    std::vector<Value> witness; // whole-program input, when replay-confirmed
};

struct CoverResult
{
    std::vector<Finding> findings;
    std::vector<Site> staticallySafeSites;
};

struct CoverOptions
{
    std::uint64_t seed = 0;
    int retries = 16;
    int threshold = 30; // ancestor walk-up bound for map inference
    Limits limits{};
    Deadline deadline;
};

namespace detail {

inline bool overflow_kind(OracleEvent::Kind k)
{
    return k == OracleEvent::Kind::HeapOverflow ||
           k == OracleEvent::Kind::StackFrameClobber;
}

inline bool kinds_match(OracleEvent::Kind expect, OracleEvent::Kind got, bool unitIsolated)
{
    if (expect == got) return true;
    // a stack buffer replayed in isolation through a heap stand-in faults as
    // a heap overflow
    return unitIsolated && overflow_kind(expect) && overflow_kind(got);
}

/// Parse the positional index of an inK / inK#len dim.
inline std::optional<std::size_t> input_dim_index(const std::string& dim)
{
    std::string core = dim;
    if (is_length_var(core)) core = core.substr(0, core.size() - 4);
    if (core.size() < 3 || core.compare(0, 2, "in") != 0) return std::nullopt;
    for (std::size_t i = 2; i < core.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(core[i]))) return std::nullopt;
    return static_cast<std::size_t>(std::stoul(core.substr(2)));
}

/// Build an input vector directly from inK dims (entry-style units).
inline std::vector<Value> inputs_from_dims(const std::vector<std::string>& dims,
                                           const Model& model, std::uint64_t seed)
{
    std::size_t n = 0;
    for (const auto& d : dims)
        if (auto k = input_dim_index(d)) n = std::max(n, *k + 1);
    std::vector<Value> inputs(n, Value::of_int(0));
    for (const auto& d : dims) {
        auto k = input_dim_index(d);
        if (!k) continue;
        long v = model.count(d) ? model.at(d) : 0;
        inputs[*k] = is_length_var(d) ? Value::of_str(materialize_string(v, seed))
                                      : Value::of_int(v);
    }
    return inputs;
}

class Coverer
{
public:
    Coverer(const Program& p, const ConstraintTree& tree, const CoverOptions& opts)
        : p_(p), tree_(tree), opts_(opts)
    {
        detect_pass_through();
    }

    CoverResult run()
    {
        CoverResult res;
        std::map<std::pair<Site, int>, Finding> best;
        std::set<Site> safe;

        std::deque<int> queue{0};
        while (!queue.empty()) {
            if (deadline_passed(opts_.deadline)) break;
            int id = queue.front();
            queue.pop_front();
            const TreeNode& n = tree_.nodes[static_cast<std::size_t>(id)];
            for (int c : n.children) queue.push_back(c);
            for (const auto& vul : n.vuls)
                if (vul.staticallySafe) safe.insert(vul.site);
            if (!tree_.possibly_vulnerable(id)) continue;

            for (const auto& vul : n.vuls) {
                if (vul.staticallySafe) continue;
                Constraint cond = tree_.path_const(id);
                cond.add_all(vul.cond);
                auto first = satisfiable(cond, {}, SolveOptions{opts_.seed});
                if (!first.sat()) continue;

                Finding f = confirm(id, vul, cond, first.model);
                auto key = std::make_pair(vul.site, static_cast<int>(vul.kind));
                auto it = best.find(key);
                if (it == best.end() ||
                    static_cast<int>(f.confirmation) < static_cast<int>(it->second.confirmation))
                    best[key] = std::move(f);
            }
        }
        for (auto& [key, f] : best) res.findings.push_back(std::move(f));
        for (const auto& s : safe) {
            bool alsoFound = false;
            for (const auto& f : res.findings)
                if (f.site == s) alsoFound = true;
            if (!alsoFound) res.staticallySafeSites.push_back(s);
        }
        return res;
    }

private:
    void detect_pass_through()
    {
        const auto& anns = tree_.root().annotations;
        if (anns.size() < 3) return;
        std::size_t sample = std::min<std::size_t>(anns.size(), 64);
        for (std::size_t j = 0; j < tree_.dims.size(); ++j) {
            const std::string& dim = tree_.dims[j];
            std::size_t slots = anns[0].systemInput.size();
            for (std::size_t m = 0; m < slots; ++m) {
                bool all = true;
                for (std::size_t k = 0; k < sample; ++k) {
                    const Annotation& a = anns[k];
                    auto it = a.dims.find(dim);
                    std::vector<long> x = numeric_input(a.systemInput);
                    if (it == a.dims.end() || m >= x.size() || it->second != x[m]) {
                        all = false;
                        break;
                    }
                }
                if (all) {
                    passThrough_[dim] = m;
                    break;
                }
            }
        }
    }

    std::vector<std::optional<long>> alloc_params() const
    {
        std::vector<std::optional<long>> ap;
        for (const auto& pb : tree_.params) {
            if (pb.kind == ParamBinding::Kind::FactPtr)
                ap.push_back(tree_.facts[static_cast<std::size_t>(pb.factIndex)].capacity);
            else
                ap.push_back(std::nullopt);
        }
        return ap;
    }

    std::vector<Value> unit_args(const Model& model, std::uint64_t seed) const
    {
        std::vector<Value> args;
        for (const auto& pb : tree_.params) {
            if (pb.kind == ParamBinding::Kind::FactPtr) {
                args.push_back(Value::of_int(0)); // replaced by the allocation
            } else if (pb.kind == ParamBinding::Kind::SymStr) {
                long len = model.count(pb.var) ? model.at(pb.var) : 0;
                args.push_back(Value::of_str(materialize_string(len, seed)));
            } else {
                args.push_back(Value::of_int(model.count(pb.var) ? model.at(pb.var) : 0));
            }
        }
        return args;
    }

    bool unit_replay(const VulRecord& vul, const Model& model, std::uint64_t seed) const
    {
        std::vector<Value> inputs = inputs_from_dims(tree_.dims, model, seed);
        ExecutionTrace t;
        if (tree_.params.empty() && tree_.unit == p_.entry) {
            t = ubsym::run(p_, inputs, opts_.limits);
        } else {
            t = run_unit(p_, tree_.unit, unit_args(model, seed), alloc_params(),
                         opts_.limits, inputs);
        }
        for (const auto& e : t.events)
            if (e.site == vul.site && kinds_match(vul.kind, e.kind, true)) return true;
        return false;
    }

    /// Degree-1 fit driven by exactly one input slot: recover the slot value
    /// that makes the fit hit `target`.
    static std::optional<std::pair<std::size_t, long>> invert_single_slot(
        const PolyFit& fit, long target)
    {
        if (fit.degree != 1) return std::nullopt;
        double c0 = 0.0, a = 0.0;
        std::size_t slot = 0;
        int slots = 0;
        for (std::size_t t = 0; t < fit.exponents.size(); ++t) {
            int total = 0;
            std::size_t where = 0;
            for (std::size_t i = 0; i < fit.exponents[t].size(); ++i)
                if (fit.exponents[t][i] > 0) {
                    total += fit.exponents[t][i];
                    where = i;
                }
            if (total == 0) {
                c0 += fit.coeffs[t];
            } else if (std::fabs(fit.coeffs[t]) > 1e-6) {
                a = fit.coeffs[t];
                slot = where;
                ++slots;
            }
        }
        if (slots != 1 || std::fabs(a) < 1e-6) return std::nullopt;
        double v = (static_cast<double>(target) - c0) / a;
        return std::make_pair(slot, static_cast<long>(std::llround(v)));
    }

    std::optional<std::vector<Value>> system_witness(int nodeId, const Constraint& cond,
                                                     const Model& model, const MapResult& map,
                                                     int attempt, std::uint64_t seed)
    {
        if (tree_.params.empty() && tree_.unit == p_.entry)
            return inputs_from_dims(tree_.dims, model, seed);

        // base: an observed run that got as close to the target as possible
        const std::vector<Annotation>* anns =
            &tree_.nodes[static_cast<std::size_t>(nodeId)].annotations;
        if (anns->empty()) {
            if (map.status == MapResult::Status::Ok) anns = &map.support;
            else anns = &tree_.root().annotations;
        }
        if (anns->empty()) return std::nullopt;

        std::vector<const Annotation*> sorted;
        for (const auto& a : *anns) sorted.push_back(&a);
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](const Annotation* a, const Annotation* b) {
                             return cond.violation(a->dims) < cond.violation(b->dims);
                         });
        const Annotation& base = *sorted[static_cast<std::size_t>(attempt) % sorted.size()];
        std::vector<Value> input = base.systemInput;

        // ranges that drive execution toward the node, used on later attempts
        // to reshape the non-pass-through slots
        if (attempt >= 4 && attempt % 4 == 0) {
            std::vector<Tar3Sample> samples;
            Constraint path = tree_.path_const(nodeId);
            for (const auto& a : tree_.root().annotations)
                samples.push_back({numeric_input(a.systemInput),
                                   path.satisfied_by(a.dims)});
            auto t3 = run_tar3(samples);
            if (t3.status == Tar3Result::Status::Ok) {
                for (const auto& [slot, iv] : t3.ranges) {
                    if (slot >= input.size()) continue;
                    long mid = iv.lo + (iv.hi - iv.lo) / 2;
                    if (input[slot].isStr)
                        input[slot] = Value::of_str(materialize_string(
                            std::clamp(mid, 0L, kMaxStringLength), seed));
                    else
                        input[slot] = Value::of_int(mid);
                }
            }
        }

        // overwrite slots the model constrains: exact pass-through slots
        // first, then slots recovered by inverting the learned input map
        std::set<std::size_t> setSlots;
        auto apply = [&](std::size_t slot, long v) {
            if (slot >= input.size() || setSlots.count(slot)) return;
            if (input[slot].isStr)
                input[slot] = Value::of_str(
                    materialize_string(std::clamp(v, 0L, kMaxStringLength), seed));
            else
                input[slot] = Value::of_int(v);
            setSlots.insert(slot);
        };
        for (const auto& [dim, slot] : passThrough_)
            if (model.count(dim)) apply(slot, model.at(dim));
        if (map.status == MapResult::Status::Ok) {
            for (std::size_t j = 0; j < tree_.dims.size() && j < map.fits.size(); ++j) {
                const std::string& dim = tree_.dims[j];
                if (passThrough_.count(dim) || !model.count(dim)) continue;
                if (auto inv = invert_single_slot(map.fits[j], model.at(dim)))
                    apply(inv->first, inv->second);
            }
        }
        return input;
    }

    Finding confirm(int nodeId, const VulRecord& vul, const Constraint& cond,
                    const Model& firstModel)
    {
        Finding f;
        f.site = vul.site;
        f.kind = vul.kind;
        f.nodeId = nodeId;
        f.condition = cond;
        f.unitModel = firstModel;

        MapResult map = compute_map(tree_, nodeId, cond, opts_.threshold);
        bool unitOk = false;
        for (int k = 0; k < opts_.retries; ++k) {
            Model model = firstModel;
            if (k > 0) {
                auto ans = satisfiable(cond, {}, SolveOptions{opts_.seed + static_cast<std::uint64_t>(k)});
                if (!ans.sat()) break;
                model = ans.model;
            }
            std::uint64_t strSeed = opts_.seed + static_cast<std::uint64_t>(k) * 31 + 5;
            if (!unitOk && unit_replay(vul, model, strSeed)) {
                unitOk = true;
                f.unitModel = model;
            }
            auto input = system_witness(nodeId, cond, model, map, k, strSeed);
            if (input) {
                ExecutionTrace t = ubsym::run(p_, *input, opts_.limits);
                bool hit = false;
                for (const auto& e : t.events)
                    if (e.site == vul.site && kinds_match(vul.kind, e.kind, false)) hit = true;
                if (hit) {
                    f.confirmation = Finding::Confirmation::ReplayConfirmed;
                    f.witness = *input;
                    f.unitModel = model;
                    return f;
                }
            }
        }
        f.confirmation = unitOk ? Finding::Confirmation::UnitOnly
                                : Finding::Confirmation::Unconfirmed;
        return f;
    }

    const Program& p_;
    const ConstraintTree& tree_;
    CoverOptions opts_;
    std::map<std::string, std::size_t> passThrough_;
};

} // namespace detail

/// Walk the annotated constraint tree breadth-first, solve each reachable
/// vulnerability condition, and confirm satisfiable ones by replaying the
/// whole program on a generated witness input.
inline CoverResult cover(const Program& p, const ConstraintTree& tree,
                         const CoverOptions& opts = {})
{
    return detail::Coverer(p, tree, opts).run();
}

// ---------------------------------------------------------------------------
// Whole-pipeline driver

struct AnalyzeOptions
{
    std::uint64_t seed = 0;
    int mcRunsCap = 512;
    int retries = 16;
    int threshold = 30;
    Limits limits{};
    ExecOptions exec{};
    Deadline deadline;
};

struct UnitAnalysis
{
    TestUnit unit;
    ConstraintTree tree;
    CoverResult cover;
};

struct AnalysisResult
{
    VulnClass cls;
    std::vector<UnitAnalysis> units;
    std::vector<TraceWarning> warnings;
    bool timedOut = false;
};

/// Extract test units for the class, build and annotate each unit's tree,
/// and cover it.
inline AnalysisResult analyze(const Program& p, VulnClass cls,
                              const AnalyzeOptions& opts = {})
{
    AnalysisResult res;
    res.cls = cls;
    for (auto& unit : extract_test_units(p, builtin_spec(cls), &res.warnings)) {
        if (deadline_passed(opts.deadline)) {
            res.timedOut = true;
            break;
        }
        UnitAnalysis ua;
        ua.unit = unit;
        ua.tree = symbolic_execute(p, ua.unit, opts.exec);
        McOptions mc;
        mc.runsCap = opts.mcRunsCap;
        mc.seed = opts.seed;
        mc.limits = opts.limits;
        mc.deadline = opts.deadline;
        monte_carlo(p, ua.tree, cls, mc);
        CoverOptions co;
        co.seed = opts.seed;
        co.retries = opts.retries;
        co.threshold = opts.threshold;
        co.limits = opts.limits;
        co.deadline = opts.deadline;
        ua.cover = cover(p, ua.tree, co);
        if (deadline_passed(opts.deadline)) res.timedOut = true;
        for (const auto& w : ua.tree.warnings) res.warnings.push_back(w);
        res.units.push_back(std::move(ua));
    }
    return res;
}

} // namespace ubsym

#endif
