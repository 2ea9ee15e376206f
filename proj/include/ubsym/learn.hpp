#ifndef UBSYM_LEARN_HPP
#define UBSYM_LEARN_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ubsym/covering.hpp"
#include "ubsym/interp.hpp"
#include "ubsym/solver.hpp"
#include "ubsym/symexec.hpp"

namespace ubsym {

inline OracleEvent::Kind event_kind(VulnClass cls)
{
    switch (cls) {
    case VulnClass::HeapOverflow: return OracleEvent::Kind::HeapOverflow;
    case VulnClass::StackOverflow: return OracleEvent::Kind::StackFrameClobber;
    case VulnClass::DoubleFree: return OracleEvent::Kind::DoubleFree;
    case VulnClass::UseAfterFree: return OracleEvent::Kind::UseAfterFree;
    }
    return OracleEvent::Kind::HeapOverflow;
}

// ---------------------------------------------------------------------------
// Monte Carlo simulation

using Deadline = std::optional<std::chrono::steady_clock::time_point>;

inline bool deadline_passed(const Deadline& d)
{
    return d && std::chrono::steady_clock::now() >= *d;
}

struct McOptions
{
    int runsCap = 512;
    int strength = 2;
    std::uint64_t seed = 0;
    Limits limits{};
    Deadline deadline;
};

struct SimRun
{
    std::vector<Value> systemInput;
    std::map<std::string, long> dims; // unit argument valuation
    bool reached = false;
    bool vulnerable = false;
};

struct SimulationSet
{
    std::vector<SimRun> runs;
    std::vector<bool> inputIsStr; // discovered system input signature
};

namespace detail {

/// Run the program, growing the input vector whenever a read outruns it.
inline ExecutionTrace run_adaptive(const Program& p, std::vector<Value>& inputs,
                                   const Limits& limits, const std::string& monitorUnit,
                                   std::mt19937_64& rng)
{
    for (int attempt = 0; attempt < 16; ++attempt) {
        ExecutionTrace t = run(p, inputs, limits, monitorUnit);
        if (t.exit != ExecutionTrace::Exit::InputExhausted || !t.neededStr) return t;
        if (*t.neededStr)
            inputs.push_back(Value::of_str(materialize_string(
                static_cast<long>(rng() % 17), rng())));
        else
            inputs.push_back(Value::of_int(static_cast<Word>(rng() % 129) - 64));
    }
    return run(p, inputs, limits, monitorUnit);
}

inline std::map<std::string, long> unit_dims(const ConstraintTree& tree,
                                             const std::vector<Value>& args)
{
    std::map<std::string, long> dims;
    for (std::size_t i = 0; i < tree.params.size() && i < args.size(); ++i) {
        const ParamBinding& pb = tree.params[i];
        if (pb.kind == ParamBinding::Kind::SymInt)
            dims[pb.var] = args[i].i;
        else if (pb.kind == ParamBinding::Kind::SymStr)
            dims[pb.var] = static_cast<long>(args[i].s.size());
    }
    // input reads inside the unit: inK dims, positional over the arg vector
    // (meaningful for the entry unit, whose args are the consumed inputs)
    if (tree.params.empty()) {
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string var = args[i].isStr ? length_var("in" + std::to_string(i))
                                            : "in" + std::to_string(i);
            dims[var] = args[i].isStr ? static_cast<long>(args[i].s.size()) : args[i].i;
        }
    }
    return dims;
}

} // namespace detail

/// Integer levels for the simulation grid.
inline std::vector<long> mc_int_levels() { return {-64, -16, 16, 64}; }

/// String-length levels derived from the traced buffer capacities.
inline std::vector<long> mc_len_levels(const std::vector<BufferFact>& facts)
{
    std::set<long> lv{0, 1};
    for (const auto& f : facts) {
        long cap = f.capacity;
        if (cap <= 0) continue;
        lv.insert(cap / 2);
        lv.insert(cap);
        lv.insert(std::min(cap + 1, kMaxStringLength));
        lv.insert(std::min(cap * 2, kMaxStringLength));
    }
    if (lv.size() <= 2) {
        lv.insert(8);
        lv.insert(16);
        lv.insert(32);
    }
    return {lv.begin(), lv.end()};
}

/// Simulate the program on a strength-`strength` covering array over the
/// input grid (plus random fill rows), monitor the unit, and annotate every
/// tree node whose path constraint the observed unit arguments satisfy.
inline SimulationSet monte_carlo(const Program& p, ConstraintTree& tree, VulnClass cls,
                                 const McOptions& opts = {})
{
    SimulationSet sim;
    std::mt19937_64 rng(opts.seed * 0x2545f4914f6cdd1dULL + 7);

    // discover the canonical input signature with a neutral probe
    std::vector<Value> probe;
    {
        std::mt19937_64 probeRng(1);
        for (int i = 0; i < 16; ++i) {
            ExecutionTrace t = run(p, probe, opts.limits, tree.unit);
            if (t.exit != ExecutionTrace::Exit::InputExhausted || !t.neededStr) break;
            probe.push_back(*t.neededStr ? Value::of_str("") : Value::of_int(0));
        }
    }
    for (const auto& v : probe) sim.inputIsStr.push_back(v.isStr);

    std::vector<long> intLv = mc_int_levels();
    std::vector<long> lenLv = mc_len_levels(tree.facts);
    std::vector<std::vector<long>> levels;
    for (bool isStr : sim.inputIsStr) levels.push_back(isStr ? lenLv : intLv);

    std::vector<std::vector<long>> rows;
    if (!levels.empty()) rows = covering_array(levels, opts.strength, opts.seed);
    if (static_cast<int>(rows.size()) > opts.runsCap)
        rows.resize(static_cast<std::size_t>(opts.runsCap));
    while (static_cast<int>(rows.size()) < opts.runsCap && !levels.empty()) {
        std::vector<long> row;
        for (bool isStr : sim.inputIsStr) {
            if (isStr) {
                // half grid levels, half uniform lengths
                row.push_back(rng() % 2 ? lenLv[rng() % lenLv.size()]
                                        : static_cast<long>(rng() % 65));
            } else {
                row.push_back(static_cast<long>(rng() % 129) - 64);
            }
        }
        rows.push_back(std::move(row));
    }
    if (levels.empty()) rows.push_back({}); // input-free program: one run

    OracleEvent::Kind kind = event_kind(cls);
    for (const auto& row : rows) {
        if (deadline_passed(opts.deadline)) break;
        SimRun r;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (sim.inputIsStr[i])
                r.systemInput.push_back(Value::of_str(materialize_string(row[i], rng())));
            else
                r.systemInput.push_back(Value::of_int(row[i]));
        }
        ExecutionTrace t =
            detail::run_adaptive(p, r.systemInput, opts.limits, tree.unit, rng);
        r.reached = t.monitoredArgs.has_value();
        for (const auto& e : t.events)
            if (e.kind == kind) r.vulnerable = true;
        if (r.reached) {
            r.dims = detail::unit_dims(tree, *t.monitoredArgs);
            for (auto& n : tree.nodes) {
                if (tree.path_const(n.id).satisfied_by(r.dims))
                    n.annotations.push_back({r.dims, r.systemInput, r.vulnerable});
            }
        }
        sim.runs.push_back(std::move(r));
    }
    return sim;
}

// ---------------------------------------------------------------------------
// Treatment learning

struct Tar3Sample
{
    std::vector<long> x; // numeric view of the system input
    bool positive = false;
};

struct Tar3Options
{
    int bins = 8;
    double minLift = 2.0;
    int maxConjunction = 3;
};

struct Tar3Result
{
    enum class Status { Ok, DegenerateSplit, NoLift };

    Status status = Status::NoLift;
    std::map<std::size_t, Interval> ranges; // dim index -> inclusive range
    double lift = 0.0;
};

namespace detail {

struct DimRange
{
    std::size_t dim;
    Interval iv;
    double lift;
};

inline double treatment_lift(const std::vector<Tar3Sample>& samples,
                             const std::map<std::size_t, Interval>& ranges,
                             double baseRate, std::size_t* support = nullptr)
{
    std::size_t in = 0, pos = 0;
    for (const auto& s : samples) {
        bool inside = true;
        for (const auto& [d, iv] : ranges) {
            long v = d < s.x.size() ? s.x[d] : 0;
            if (v < iv.lo || v > iv.hi) inside = false;
        }
        if (inside) {
            ++in;
            if (s.positive) ++pos;
        }
    }
    if (support) *support = in;
    if (in == 0 || baseRate == 0.0) return 0.0;
    return (static_cast<double>(pos) / static_cast<double>(in)) / baseRate;
}

} // namespace detail

/// TAR3-style treatment learning: find per-dimension value ranges whose
/// conjunction maximizes the lift of the positive class. Bins each dimension
/// and considers contiguous bin runs only, so treatments stay interval-shaped.
inline Tar3Result run_tar3(const std::vector<Tar3Sample>& samples,
                           const Tar3Options& opts = {})
{
    Tar3Result res;
    std::size_t pos = 0;
    for (const auto& s : samples)
        if (s.positive) ++pos;
    if (pos == 0 || pos == samples.size() || samples.empty()) {
        res.status = Tar3Result::Status::DegenerateSplit;
        return res;
    }
    double baseRate = static_cast<double>(pos) / static_cast<double>(samples.size());

    std::size_t dims = 0;
    for (const auto& s : samples) dims = std::max(dims, s.x.size());

    // all contiguous bin runs per dimension
    std::vector<std::vector<Interval>> runs(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        long lo = 0, hi = 0;
        bool first = true;
        for (const auto& s : samples) {
            long v = d < s.x.size() ? s.x[d] : 0;
            if (first || v < lo) lo = v;
            if (first || v > hi) hi = v;
            first = false;
        }
        if (lo == hi) continue;
        long width = (hi - lo + opts.bins) / opts.bins;
        if (width <= 0) width = 1;
        for (int b0 = 0; b0 < opts.bins; ++b0) {
            for (int b1 = b0; b1 < opts.bins; ++b1) {
                Interval iv{lo + width * b0, std::min(hi, lo + width * (b1 + 1) - 1)};
                if (iv.lo > hi || iv.empty()) continue;
                runs[d].push_back(iv);
            }
        }
    }

    std::map<std::size_t, Interval> bestRanges;
    double bestLift = 0.0;
    auto consider = [&](const std::map<std::size_t, Interval>& ranges) {
        if (ranges.empty()) return;
        std::size_t support = 0;
        double lift = detail::treatment_lift(samples, ranges, baseRate, &support);
        if (support >= 2 && lift > bestLift) {
            bestLift = lift;
            bestRanges = ranges;
        }
    };

    // exhaustive treatment search when the space is small, else greedy over
    // the per-dimension best runs
    double space = 1.0;
    for (const auto& r : runs) space *= static_cast<double>(r.size() + 1);
    if (space <= 4096.0) {
        std::map<std::size_t, Interval> cur;
        std::function<void(std::size_t)> go = [&](std::size_t d) {
            if (d == dims) {
                consider(cur);
                return;
            }
            go(d + 1); // dimension not in the treatment
            for (const auto& iv : runs[d]) {
                cur[d] = iv;
                go(d + 1);
            }
            cur.erase(d);
        };
        go(0);
    } else {
        std::vector<detail::DimRange> best;
        for (std::size_t d = 0; d < dims; ++d) {
            detail::DimRange bestRun{d, {0, 0}, 0.0};
            for (const auto& iv : runs[d]) {
                std::size_t support = 0;
                double lift = detail::treatment_lift(samples, {{d, iv}}, baseRate, &support);
                if (support >= 2 && lift > bestRun.lift) bestRun = {d, iv, lift};
            }
            if (bestRun.lift > 1.0) best.push_back(bestRun);
        }
        std::sort(best.begin(), best.end(),
                  [](const auto& a, const auto& b) { return a.lift > b.lift; });
        std::map<std::size_t, Interval> ranges;
        for (const auto& dr : best) {
            if (static_cast<int>(ranges.size()) >= opts.maxConjunction) break;
            auto trial = ranges;
            trial[dr.dim] = dr.iv;
            std::size_t support = 0;
            double lift = detail::treatment_lift(samples, trial, baseRate, &support);
            if (support >= 2 && lift >= bestLift) {
                ranges = trial;
                bestLift = lift;
                bestRanges = ranges;
            }
        }
    }

    if (bestLift < opts.minLift) {
        res.status = Tar3Result::Status::NoLift;
        res.lift = bestLift;
        return res;
    }
    res.status = Tar3Result::Status::Ok;
    res.ranges = bestRanges;
    res.lift = bestLift;
    return res;
}

/// Numeric view of a system input vector: integers as-is, strings by length.
inline std::vector<long> numeric_input(const std::vector<Value>& input)
{
    std::vector<long> x;
    for (const auto& v : input)
        x.push_back(v.isStr ? static_cast<long>(v.s.size()) : v.i);
    return x;
}

// ---------------------------------------------------------------------------
// Curve fitting

/// Multivariate polynomial fit by least squares on the normal equations.
struct PolyFit
{
    std::vector<std::vector<int>> exponents; // one exponent vector per term
    std::vector<double> coeffs;
    int degree = 0;
    double residual = 0.0; // root mean squared error

    double eval(const std::vector<long>& x) const
    {
        double y = 0.0;
        for (std::size_t t = 0; t < exponents.size(); ++t) {
            double term = coeffs[t];
            for (std::size_t i = 0; i < exponents[t].size(); ++i)
                for (int e = 0; e < exponents[t][i]; ++e)
                    term *= i < x.size() ? static_cast<double>(x[i]) : 0.0;
            y += term;
        }
        return y;
    }
};

namespace detail {

inline std::vector<std::vector<int>> monomials(std::size_t dims, int degree)
{
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dims, 0);
    std::function<void(std::size_t, int)> go = [&](std::size_t i, int left) {
        if (i == dims) {
            out.push_back(cur);
            return;
        }
        for (int e = 0; e <= left; ++e) {
            cur[i] = e;
            go(i + 1, left - e);
        }
        cur[i] = 0;
    };
    go(0, degree);
    return out;
}

inline bool gaussian_solve(std::vector<std::vector<double>>& a, std::vector<double>& b)
{
    std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-9) {
            // free column: pin the coefficient to zero
            a[col][col] = 1.0;
            for (std::size_t r = 0; r < n; ++r)
                if (r != col) a[r][col] = 0.0;
            b[col] = 0.0;
            continue;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
    return true;
}

inline PolyFit fit_degree(const std::vector<std::vector<long>>& xs,
                          const std::vector<double>& ys, std::size_t dims, int degree)
{
    PolyFit fit;
    fit.degree = degree;
    fit.exponents = monomials(dims, degree);
    std::size_t terms = fit.exponents.size();

    std::vector<std::vector<double>> basis(xs.size(), std::vector<double>(terms));
    for (std::size_t s = 0; s < xs.size(); ++s) {
        for (std::size_t t = 0; t < terms; ++t) {
            double v = 1.0;
            for (std::size_t i = 0; i < dims; ++i)
                for (int e = 0; e < fit.exponents[t][i]; ++e)
                    v *= i < xs[s].size() ? static_cast<double>(xs[s][i]) : 0.0;
            basis[s][t] = v;
        }
    }
    std::vector<std::vector<double>> ata(terms, std::vector<double>(terms, 0.0));
    std::vector<double> atb(terms, 0.0);
    for (std::size_t s = 0; s < xs.size(); ++s) {
        for (std::size_t i = 0; i < terms; ++i) {
            atb[i] += basis[s][i] * ys[s];
            for (std::size_t j = 0; j < terms; ++j)
                ata[i][j] += basis[s][i] * basis[s][j];
        }
    }
    // ridge damping keeps near-singular systems stable
    for (std::size_t i = 0; i < terms; ++i) ata[i][i] += 1e-9;
    gaussian_solve(ata, atb);
    fit.coeffs = atb;

    double sse = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        double err = fit.eval(xs[s]) - ys[s];
        sse += err * err;
    }
    fit.residual = xs.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(xs.size()));
    return fit;
}

} // namespace detail

/// Fit the lowest-degree polynomial (1..maxDegree) whose residual the next
/// degree fails to improve by at least 5%.
inline PolyFit curve_fit(const std::vector<std::vector<long>>& xs,
                         const std::vector<double>& ys, int maxDegree = 3)
{
    std::size_t dims = 0;
    for (const auto& x : xs) dims = std::max(dims, x.size());
    PolyFit best = detail::fit_degree(xs, ys, dims, 1);
    for (int d = 2; d <= maxDegree; ++d) {
        if (best.residual < 1e-6) break;
        PolyFit next = detail::fit_degree(xs, ys, dims, d);
        if (next.residual < 0.95 * best.residual) best = next;
        else break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Map inference (system input -> unit arguments)

struct MapResult
{
    enum class Status { Ok, NoMapFound };

    Status status = Status::NoMapFound;
    std::vector<std::string> dims;      // unit dims, aligned with fits
    std::vector<PolyFit> fits;          // one per unit dim
    std::vector<Annotation> support;    // annotations the fit was trained on
    int hops = 0;                       // ancestors walked to find samples
};

/// Learn how the system input controls the unit arguments near a target node.
/// Uses the node's own simulation annotations; when too few runs reached the
/// node, walks up the tree (bounded by `threshold` hops) and keeps the 20% of
/// ancestor annotations closest to the target constraint.
inline MapResult compute_map(const ConstraintTree& tree, int nodeId,
                             const Constraint& target, int threshold = 30,
                             std::size_t minSamples = 8)
{
    MapResult res;
    res.dims = tree.dims;

    int node = nodeId;
    int hops = 0;
    std::vector<Annotation> pool;
    while (node >= 0 && hops <= threshold) {
        const auto& anns = tree.nodes[static_cast<std::size_t>(node)].annotations;
        if (anns.size() >= minSamples) {
            pool = anns;
            break;
        }
        if (tree.nodes[static_cast<std::size_t>(node)].parent < 0 && !anns.empty())
            pool = anns;
        node = tree.nodes[static_cast<std::size_t>(node)].parent;
        ++hops;
    }
    if (pool.empty()) return res;
    res.hops = hops;

    // keep the fifth of the pool closest to the target constraint
    std::stable_sort(pool.begin(), pool.end(),
                     [&](const Annotation& a, const Annotation& b) {
                         return target.violation(a.dims) < target.violation(b.dims);
                     });
    std::size_t keep = std::max(minSamples, pool.size() / 5);
    if (keep < pool.size()) pool.resize(keep);

    std::vector<std::vector<long>> xs;
    for (const auto& a : pool) xs.push_back(numeric_input(a.systemInput));
    for (const auto& dim : tree.dims) {
        std::vector<double> ys;
        for (const auto& a : pool) {
            auto it = a.dims.find(dim);
            ys.push_back(it == a.dims.end() ? 0.0 : static_cast<double>(it->second));
        }
        res.fits.push_back(curve_fit(xs, ys));
    }
    res.support = std::move(pool);
    res.status = MapResult::Status::Ok;
    return res;
}

} // namespace ubsym

#endif
