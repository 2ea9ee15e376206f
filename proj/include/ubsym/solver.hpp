#ifndef UBSYM_SOLVER_HPP
#define UBSYM_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ubsym/constraint.hpp"

namespace ubsym {

inline constexpr long kDefaultIntLo = -(1L << 20);
inline constexpr long kDefaultIntHi = 1L << 20;
inline constexpr long kMaxStringLength = 4096;

struct Interval
{
    long lo, hi;
    bool empty() const { return lo > hi; }
    long width() const { return hi - lo; }
};

struct SolveOptions
{
    std::uint64_t seed = 0; // perturbs value preference; 0 = minimize |value|
    long stepsPerLayer = 200'000;
};

using Model = std::map<std::string, long>;

namespace detail {

inline Interval default_domain(const std::string& var)
{
    if (is_length_var(var)) return {0, kMaxStringLength};
    return {kDefaultIntLo, kDefaultIntHi};
}

inline long div_floor(long a, long b)
{
    long q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

inline long div_ceil(long a, long b) { return -div_floor(-a, b); }

// --- preprocessing -------------------------------------------------------

// Substitutes variables defined by unit-coefficient equalities and applies
// the gcd divisibility test. Returns false on definite conflict.
inline bool simplify(Constraint& c)
{
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t i = 0; i < c.atoms.size(); ++i) {
            Atom& a = c.atoms[i];
            // drop zero coefficients
            for (auto it = a.coeffs.begin(); it != a.coeffs.end();)
                it = it->second == 0 ? a.coeffs.erase(it) : std::next(it);
            if (a.is_constant()) {
                if (!a.constant_value()) return false;
                continue;
            }
            if (a.op != Atom::Op::EQ) continue;
            long g = 0;
            for (const auto& [v, cf] : a.coeffs) g = std::gcd(g, std::labs(cf));
            if (g > 1 && a.constant % g != 0) return false;
            // find a +-1 coefficient to substitute away, but never a length
            // variable (their implicit non-negativity must stay visible)
            std::string pivot;
            long pc = 0;
            for (const auto& [v, cf] : a.coeffs) {
                if ((cf == 1 || cf == -1) && !is_length_var(v)) {
                    pivot = v;
                    pc = cf;
                    break;
                }
            }
            if (pivot.empty()) continue;
            // pivot = (-constant - sum others) / pc  substituted into all
            // other atoms: x := pc * (-constant - others)
            Atom def = a; // keep the defining equality itself
            bool used = false;
            for (std::size_t j = 0; j < c.atoms.size(); ++j) {
                if (j == i) continue;
                Atom& b = c.atoms[j];
                auto it = b.coeffs.find(pivot);
                if (it == b.coeffs.end()) continue;
                long k = it->second;
                b.coeffs.erase(it);
                // x = -pc*(constant + others)
                b.constant += k * -pc * def.constant;
                for (const auto& [v, cf] : def.coeffs) {
                    if (v == pivot) continue;
                    b.coeffs[v] += k * -pc * cf;
                }
                used = true;
            }
            if (used) progress = true;
        }
    }
    return true;
}

// Fourier-Motzkin elimination over the rationals; EQ splits into two
// inequalities, NE is ignored. Proving real infeasibility proves integer
// infeasibility; "feasible" is inconclusive.
inline bool fm_real_feasible(const Constraint& c,
                             const std::map<std::string, Interval>& box)
{
    struct Ineq
    {
        std::map<std::string, double> coeffs;
        double constant; // sum coeffs*x + constant <= 0 (strict folded to <=)
    };
    std::vector<Ineq> rows;
    auto push = [&](const std::map<std::string, long>& cf, long k, bool strict, long sign) {
        Ineq r;
        for (const auto& [v, co] : cf) {
            double val = static_cast<double>(sign * co);
            if (val != 0.0) r.coeffs[v] = val;
        }
        // over integers, strict < 0 means <= -1
        r.constant = static_cast<double>(sign * k) + (strict ? 1.0 : 0.0);
        rows.push_back(std::move(r));
    };
    std::vector<std::string> vars;
    for (const auto& a : c.atoms) {
        switch (a.op) {
        case Atom::Op::LT: push(a.coeffs, a.constant, true, 1); break;
        case Atom::Op::LE: push(a.coeffs, a.constant, false, 1); break;
        case Atom::Op::EQ:
            push(a.coeffs, a.constant, false, 1);
            push(a.coeffs, a.constant, false, -1);
            break;
        case Atom::Op::NE: break;
        }
        for (const auto& [v, co] : a.coeffs)
            if (co != 0 && std::find(vars.begin(), vars.end(), v) == vars.end())
                vars.push_back(v);
    }
    for (const auto& v : vars) {
        auto it = box.find(v);
        Interval iv = it != box.end() ? it->second : default_domain(v);
        rows.push_back({{{v, 1.0}}, static_cast<double>(-iv.hi)});
        rows.push_back({{{v, -1.0}}, static_cast<double>(iv.lo)});
    }

    constexpr std::size_t kRowCap = 4000;
    for (const auto& v : vars) {
        std::vector<Ineq> lower, upper, rest;
        for (auto& r : rows) {
            auto it = r.coeffs.find(v);
            double co = it == r.coeffs.end() ? 0.0 : it->second;
            if (co > 0)
                upper.push_back(r);
            else if (co < 0)
                lower.push_back(r);
            else
                rest.push_back(r);
        }
        if (upper.size() * lower.size() + rest.size() > kRowCap)
            return true; // give up, inconclusive
        for (const auto& up : upper) {
            for (const auto& lo : lower) {
                double cu = up.coeffs.at(v), cl = -lo.coeffs.at(v);
                Ineq r;
                r.constant = up.constant * cl + lo.constant * cu;
                for (const auto& [w, co] : up.coeffs)
                    if (w != v) r.coeffs[w] += co * cl;
                for (const auto& [w, co] : lo.coeffs)
                    if (w != v) r.coeffs[w] += co * cu;
                for (auto it2 = r.coeffs.begin(); it2 != r.coeffs.end();)
                    it2 = it2->second == 0.0 ? r.coeffs.erase(it2) : std::next(it2);
                if (r.coeffs.empty()) {
                    if (r.constant > 1e-9) return false;
                } else {
                    rest.push_back(std::move(r));
                }
            }
        }
        rows = std::move(rest);
    }
    for (const auto& r : rows)
        if (r.coeffs.empty() && r.constant > 1e-9) return false;
    return true;
}

// --- interval search -----------------------------------------------------

class BoxSolver
{
public:
    BoxSolver(const Constraint& c, std::map<std::string, Interval> box, SolveOptions opts)
        : c_(c), box_(std::move(box)), opts_(opts)
    {
    }

    std::optional<Model> solve(long steps)
    {
        steps_ = steps;
        auto box = box_;
        if (!propagate(box)) return std::nullopt;
        Model m;
        if (search(box, m)) return m;
        return std::nullopt;
    }

    bool exhausted() const { return steps_ < 0; }

private:
    bool propagate(std::map<std::string, Interval>& box)
    {
        bool changed = true;
        int rounds = 0;
        while (changed && rounds++ < 64) {
            changed = false;
            for (const auto& a : c_.atoms)
                if (!tighten(a, box, changed)) return false;
        }
        return true;
    }

    static long term_min(long c, const Interval& iv) { return c >= 0 ? c * iv.lo : c * iv.hi; }

    bool tighten_upper(const std::map<std::string, long>& coeffs, long constant,
                       long upperBound, std::map<std::string, Interval>& box,
                       bool& changed)
    {
        // sum c_i x_i + constant <= upperBound
        long rest = constant;
        for (const auto& [var, c] : coeffs) rest += term_min(c, box[var]);
        if (coeffs.empty()) return constant <= upperBound;
        for (const auto& [var, c] : coeffs) {
            Interval& iv = box[var];
            long others = rest - term_min(c, iv);
            long budget = upperBound - others; // c*x <= budget
            if (c > 0) {
                long newHi = div_floor(budget, c);
                if (newHi < iv.hi) {
                    iv.hi = newHi;
                    changed = true;
                }
            } else {
                long newLo = div_ceil(budget, c);
                if (newLo > iv.lo) {
                    iv.lo = newLo;
                    changed = true;
                }
            }
            if (iv.empty()) return false;
        }
        return true;
    }

    bool tighten(const Atom& a, std::map<std::string, Interval>& box, bool& changed)
    {
        switch (a.op) {
        case Atom::Op::LT:
            return tighten_upper(a.coeffs, a.constant, -1, box, changed);
        case Atom::Op::LE:
            return tighten_upper(a.coeffs, a.constant, 0, box, changed);
        case Atom::Op::EQ: {
            if (!tighten_upper(a.coeffs, a.constant, 0, box, changed)) return false;
            std::map<std::string, long> neg;
            for (const auto& [v, c] : a.coeffs) neg[v] = -c;
            return tighten_upper(neg, -a.constant, 0, box, changed);
        }
        case Atom::Op::NE: {
            long v = a.constant;
            for (const auto& [var, c] : a.coeffs) {
                const Interval& iv = box[var];
                if (iv.lo != iv.hi) return true;
                v += c * iv.lo;
            }
            return v != 0;
        }
        }
        return true;
    }

    long preferred_value(const std::string& var, const Interval& iv) const
    {
        long target = 0;
        if (opts_.seed != 0) {
            std::uint64_t h = opts_.seed;
            for (char c : var) h = h * 1099511628211ull + static_cast<unsigned char>(c);
            long span = std::min<long>(iv.width(), 97);
            target = iv.lo + static_cast<long>(h % static_cast<std::uint64_t>(span + 1));
        }
        return std::clamp(target, iv.lo, iv.hi);
    }

    // Depth-first over an explicit work list: a recursive version can chain
    // one stack frame per removed point when the preferred value sits on an
    // interval boundary, which overflows the call stack long before the step
    // budget runs out.
    bool search(std::map<std::string, Interval> box, Model& out)
    {
        std::vector<std::map<std::string, Interval>> work;
        work.push_back(std::move(box));
        while (!work.empty()) {
            if (--steps_ < 0) return false;
            auto cur = std::move(work.back());
            work.pop_back();
            if (!propagate(cur)) continue;
            bool allFixed = true;
            std::string pick;
            long bestWidth = 0;
            for (const auto& [v, iv] : cur) {
                if (iv.lo == iv.hi) continue;
                allFixed = false;
                if (pick.empty() || iv.width() < bestWidth) {
                    pick = v;
                    bestWidth = iv.width();
                }
            }
            if (allFixed) {
                Model m;
                for (const auto& [v, iv] : cur) m[v] = iv.lo;
                if (c_.satisfied_by(m)) {
                    out = std::move(m);
                    return true;
                }
                continue;
            }
            Interval iv = cur[pick];
            long v = preferred_value(pick, iv);
            Interval lo{iv.lo, v - 1}, hi{v + 1, iv.hi};
            bool loFirst =
                !lo.empty() && (hi.empty() || std::labs(lo.hi) <= std::labs(hi.lo));
            // pushed in reverse exploration order: preferred point first
            for (const Interval* side : {loFirst ? &hi : &lo, loFirst ? &lo : &hi}) {
                if (side->empty()) continue;
                auto sub = cur;
                sub[pick] = *side;
                work.push_back(std::move(sub));
            }
            cur[pick] = {v, v};
            work.push_back(std::move(cur));
        }
        return false;
    }

    const Constraint& c_;
    std::map<std::string, Interval> box_;
    SolveOptions opts_;
    long steps_ = 0;
};

} // namespace detail

struct SatAnswer
{
    enum class Kind { Sat, Unsat };
    Kind kind;
    Model model;

    bool sat() const { return kind == Kind::Sat; }
};

/// Decide a conjunction of linear atoms over bounded 64-bit integers and
/// produce a model. Length variables default to [0, kMaxStringLength], plain
/// integers to [-2^20, 2^20]; callers may narrow per-variable domains.
///
/// Pipeline: equality substitution + gcd tests, a Fourier-Motzkin real
/// infeasibility check, then interval search over layered boxes (small boxes
/// first, which also keeps found models small and stable).
inline SatAnswer satisfiable(const Constraint& c,
                             const std::map<std::string, Interval>& domains = {},
                             SolveOptions opts = {})
{
    Constraint simplified = c;
    if (!detail::simplify(simplified)) return {SatAnswer::Kind::Unsat, {}};

    auto fullBox = [&](const std::string& v) {
        auto it = domains.find(v);
        return it != domains.end() ? it->second : detail::default_domain(v);
    };
    std::map<std::string, Interval> full;
    for (const auto& v : c.variables()) full[v] = fullBox(v);
    for (const auto& v : simplified.variables())
        if (!full.count(v)) full[v] = fullBox(v);

    if (!detail::fm_real_feasible(simplified, full))
        return {SatAnswer::Kind::Unsat, {}};

    for (long radius : {32L, 512L, 8192L, 0L}) {
        std::map<std::string, Interval> box;
        for (const auto& [v, iv] : full) {
            if (radius == 0) {
                box[v] = iv;
            } else {
                box[v] = {std::max(iv.lo, -radius), std::min(iv.hi, radius)};
                if (is_length_var(v)) box[v].lo = std::max(box[v].lo, 0L);
                if (box[v].empty()) box[v] = iv;
            }
        }
        detail::BoxSolver solver(simplified, box, opts);
        if (auto m = solver.solve(opts.stepsPerLayer)) {
            // complete the model for variables eliminated by substitution
            Model model = *m;
            for (const auto& [v, iv] : full)
                if (!model.count(v)) model[v] = std::clamp(0L, iv.lo, iv.hi);
            // substituted equalities pin the eliminated variables
            for (int round = 0; round < 8 && !c.satisfied_by(model); ++round) {
                for (const auto& a : c.atoms) {
                    if (a.op != Atom::Op::EQ || a.satisfied_by(model)) continue;
                    // solve the equality for one unit-coefficient variable
                    for (const auto& [v, cf] : a.coeffs) {
                        if (cf != 1 && cf != -1) continue;
                        long rest = a.constant;
                        for (const auto& [w, cw] : a.coeffs)
                            if (w != v) rest += cw * model[w];
                        model[v] = cf == 1 ? -rest : rest;
                        break;
                    }
                }
            }
            if (c.satisfied_by(model)) return {SatAnswer::Kind::Sat, model};
            return {SatAnswer::Kind::Sat, *m};
        }
    }
    return {SatAnswer::Kind::Unsat, {}};
}

struct LengthOutOfRange {};

/// Deterministic printable byte sequence of exactly the requested length.
inline std::string materialize_string(long length, std::uint64_t seed = 0)
{
    if (length < 0 || length > kMaxStringLength) throw LengthOutOfRange{};
    std::string s;
    s.reserve(static_cast<std::size_t>(length));
    for (long i = 0; i < length; ++i)
        s += static_cast<char>('a' + (seed + static_cast<std::uint64_t>(i) * 7) % 26);
    return s;
}

} // namespace ubsym

#endif
