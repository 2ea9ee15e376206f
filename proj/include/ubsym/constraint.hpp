#ifndef UBSYM_CONSTRAINT_HPP
#define UBSYM_CONSTRAINT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ubsym {

/// Linear atom over 64-bit integer variables:  sum(coeff * var) + constant OP 0.
/// String lengths appear as ordinary variables named "<param>#len" and are
/// printed as len(<param>).
struct Atom
{
    enum class Op { LT, LE, EQ, NE };

    std::map<std::string, long> coeffs;
    long constant = 0;
    Op op = Op::LE;

    bool is_constant() const { return coeffs.empty(); }

    bool constant_value() const
    {
        switch (op) {
        case Op::LT: return constant < 0;
        case Op::LE: return constant <= 0;
        case Op::EQ: return constant == 0;
        case Op::NE: return constant != 0;
        }
        return false;
    }

    long evaluate_lhs(const std::map<std::string, long>& vals) const
    {
        long v = constant;
        for (const auto& [var, c] : coeffs) {
            auto it = vals.find(var);
            v += c * (it == vals.end() ? 0 : it->second);
        }
        return v;
    }

    bool satisfied_by(const std::map<std::string, long>& vals) const
    {
        long v = evaluate_lhs(vals);
        switch (op) {
        case Op::LT: return v < 0;
        case Op::LE: return v <= 0;
        case Op::EQ: return v == 0;
        case Op::NE: return v != 0;
        }
        return false;
    }

    /// Magnitude by which the atom is violated; 0 when satisfied.
    double violation(const std::map<std::string, long>& vals) const
    {
        long v = evaluate_lhs(vals);
        switch (op) {
        case Op::LT: return v < 0 ? 0.0 : static_cast<double>(v) + 1.0;
        case Op::LE: return v <= 0 ? 0.0 : static_cast<double>(v);
        case Op::EQ: return v == 0 ? 0.0 : static_cast<double>(v < 0 ? -v : v);
        case Op::NE: return v != 0 ? 0.0 : 1.0;
        }
        return 0.0;
    }

    Atom negated() const
    {
        Atom n;
        switch (op) {
        case Op::LT: // !(e < 0)  <=>  -e <= 0
            for (const auto& [k, c] : coeffs) n.coeffs[k] = -c;
            n.constant = -constant;
            n.op = Op::LE;
            break;
        case Op::LE: // !(e <= 0) <=>  -e < 0
            for (const auto& [k, c] : coeffs) n.coeffs[k] = -c;
            n.constant = -constant;
            n.op = Op::LT;
            break;
        case Op::EQ:
            n.coeffs = coeffs;
            n.constant = constant;
            n.op = Op::NE;
            break;
        case Op::NE:
            n.coeffs = coeffs;
            n.constant = constant;
            n.op = Op::EQ;
            break;
        }
        return n;
    }
};

struct Constraint
{
    std::vector<Atom> atoms;

    void add(Atom a) { atoms.push_back(std::move(a)); }
    void add_all(const Constraint& c)
    {
        for (const auto& a : c.atoms) atoms.push_back(a);
    }
    bool empty() const { return atoms.empty(); }

    std::set<std::string> variables() const
    {
        std::set<std::string> vars;
        for (const auto& a : atoms)
            for (const auto& [v, c] : a.coeffs)
                if (c != 0) vars.insert(v);
        return vars;
    }

    bool satisfied_by(const std::map<std::string, long>& vals) const
    {
        for (const auto& a : atoms)
            if (!a.satisfied_by(vals)) return false;
        return true;
    }

    double violation(const std::map<std::string, long>& vals) const
    {
        double total = 0.0;
        for (const auto& a : atoms) {
            double v = a.violation(vals);
            total += v / (v + 1.0); // normalized to [0, 1) per atom
        }
        return total;
    }
};

inline std::string length_var(const std::string& param) { return param + "#len"; }

inline bool is_length_var(const std::string& var)
{
    return var.size() > 4 && var.compare(var.size() - 4, 4, "#len") == 0;
}

inline std::string pretty_var(const std::string& var)
{
    if (is_length_var(var)) return "len(" + var.substr(0, var.size() - 4) + ")";
    return var;
}

/// Renders in the comparison shape used by the tree dumps, e.g. "x >= 10"
/// or "len(str) > 10".
inline std::string to_string(const Atom& a)
{
    // single-variable atoms read better as  var OP const
    if (a.coeffs.size() == 1) {
        auto [var, c] = *a.coeffs.begin();
        if (c == 1 || c == -1) {
            long rhs = -a.constant * c; // move constant across, flip for -1
            const char* op = "?";
            bool flip = c == -1;
            switch (a.op) {
            case Atom::Op::LT: op = flip ? ">" : "<"; break;
            case Atom::Op::LE: op = flip ? ">=" : "<="; break;
            case Atom::Op::EQ: op = "=="; break;
            case Atom::Op::NE: op = "!="; break;
            }
            return pretty_var(var) + " " + op + " " + std::to_string(rhs);
        }
    }
    std::string lhs;
    for (const auto& [var, c] : a.coeffs) {
        if (!lhs.empty()) lhs += c >= 0 ? " + " : " - ";
        else if (c < 0) lhs += "-";
        long mag = c < 0 ? -c : c;
        if (mag != 1) lhs += std::to_string(mag) + "*";
        lhs += pretty_var(var);
    }
    if (lhs.empty()) lhs = "0";
    const char* op = "?";
    switch (a.op) {
    case Atom::Op::LT: op = "<"; break;
    case Atom::Op::LE: op = "<="; break;
    case Atom::Op::EQ: op = "=="; break;
    case Atom::Op::NE: op = "!="; break;
    }
    return lhs + " " + op + " " + std::to_string(-a.constant);
}

inline std::string to_string(const Constraint& c)
{
    if (c.atoms.empty()) return "true";
    std::string out;
    for (std::size_t i = 0; i < c.atoms.size(); ++i) {
        if (i) out += " && ";
        out += to_string(c.atoms[i]);
    }
    return out;
}

} // namespace ubsym

#endif
