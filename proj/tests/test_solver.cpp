#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "ubsym/solver.hpp"

using namespace ubsym;

namespace {

Atom atom(std::map<std::string, long> coeffs, long constant, Atom::Op op)
{
    Atom a;
    a.coeffs = std::move(coeffs);
    a.constant = constant;
    a.op = op;
    return a;
}

// small-box brute force oracle
bool brute_force_sat(const Constraint& c, const std::vector<std::string>& vars,
                     long lo, long hi)
{
    std::map<std::string, long> vals;
    std::function<bool(std::size_t)> go = [&](std::size_t i) {
        if (i == vars.size()) return c.satisfied_by(vals);
        long vlo = is_length_var(vars[i]) ? std::max(0L, lo) : lo;
        for (long v = vlo; v <= hi; ++v) {
            vals[vars[i]] = v;
            if (go(i + 1)) return true;
        }
        return false;
    };
    return go(0);
}

} // namespace

TEST_CASE("fig10-style system has a model")
{
    // x >= 10, x - y == 5, len(str) > 10
    Constraint c;
    c.add(atom({{"x", -1}}, 10, Atom::Op::LE));
    c.add(atom({{"x", 1}, {"y", -1}}, -5, Atom::Op::EQ));
    c.add(atom({{length_var("str"), -1}}, 10, Atom::Op::LT));
    auto ans = satisfiable(c);
    REQUIRE(ans.sat());
    CHECK(c.satisfied_by(ans.model));
    CHECK(ans.model.at("x") >= 10);
    CHECK(ans.model.at("x") - ans.model.at("y") == 5);
    CHECK(ans.model.at(length_var("str")) > 10);
}

TEST_CASE("empty conjunction is satisfiable with an empty model")
{
    auto ans = satisfiable(Constraint{});
    REQUIRE(ans.sat());
    CHECK(ans.model.empty());
}

TEST_CASE("contradiction is unsatisfiable")
{
    Constraint c;
    c.add(atom({{"x", -1}}, 0, Atom::Op::LT)); // x > 0
    c.add(atom({{"x", 1}}, 0, Atom::Op::LT));  // x < 0
    CHECK_FALSE(satisfiable(c).sat());
}

TEST_CASE("length variables are bounded and non-negative")
{
    Constraint c;
    c.add(atom({{length_var("s"), -1}}, 0, Atom::Op::LE)); // len >= 0 implicit anyway
    auto ans = satisfiable(c);
    REQUIRE(ans.sat());
    CHECK(ans.model.at(length_var("s")) >= 0);
    CHECK(ans.model.at(length_var("s")) <= kMaxStringLength);

    Constraint over;
    over.add(atom({{length_var("s"), -1}}, kMaxStringLength + 1, Atom::Op::LE));
    CHECK_FALSE(satisfiable(over).sat());
}

TEST_CASE("atom negation flips satisfaction")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        Atom a;
        int nvars = 1 + static_cast<int>(rng() % 3);
        for (int v = 0; v < nvars; ++v)
            a.coeffs["v" + std::to_string(v)] =
                static_cast<long>(rng() % 9) - 4;
        a.constant = static_cast<long>(rng() % 21) - 10;
        a.op = static_cast<Atom::Op>(rng() % 4);
        std::map<std::string, long> vals;
        for (int v = 0; v < nvars; ++v)
            vals["v" + std::to_string(v)] = static_cast<long>(rng() % 21) - 10;
        CHECK(a.satisfied_by(vals) != a.negated().satisfied_by(vals));
    }
}

TEST_CASE("random systems: models satisfy all atoms, brute-force-sat is never missed")
{
    std::mt19937_64 rng(42);
    int satCount = 0;
    for (int iter = 0; iter < 300; ++iter) {
        int nvars = 1 + static_cast<int>(rng() % 8);
        int natoms = 1 + static_cast<int>(rng() % 16);
        std::vector<std::string> vars;
        for (int v = 0; v < nvars; ++v) vars.push_back("v" + std::to_string(v));

        Constraint c;
        for (int k = 0; k < natoms; ++k) {
            Atom a;
            int terms = 1 + static_cast<int>(rng() % 3);
            for (int t = 0; t < terms; ++t) {
                long coeff = static_cast<long>(rng() % 7) - 3;
                if (coeff != 0) a.coeffs[vars[rng() % vars.size()]] = coeff;
            }
            a.constant = static_cast<long>(rng() % 13) - 6;
            a.op = static_cast<Atom::Op>(rng() % 4);
            c.add(a);
        }

        long bound = nvars <= 4 ? 6 : 2; // keep the enumeration tractable
        bool oracle = brute_force_sat(c, vars, -bound, bound);
        auto ans = satisfiable(c);
        if (ans.sat()) {
            CHECK(c.satisfied_by(ans.model));
        }
        if (oracle) {
            // completeness: anything the small-box oracle can satisfy, the
            // solver (whose boxes contain the oracle box) must satisfy
            CHECK(ans.sat());
            ++satCount;
        }
    }
    CHECK(satCount > 50); // the generator must actually exercise the sat path
}

TEST_CASE("seeded solves stay valid and vary the model")
{
    Constraint c;
    c.add(atom({{"x", -1}}, 10, Atom::Op::LE)); // x >= 10
    c.add(atom({{"x", 1}}, -100, Atom::Op::LE)); // x <= 100
    std::set<long> seen;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto ans = satisfiable(c, {}, SolveOptions{seed});
        REQUIRE(ans.sat());
        CHECK(c.satisfied_by(ans.model));
        seen.insert(ans.model.at("x"));
    }
    CHECK(seen.size() > 1);
}

TEST_CASE("materialize_string")
{
    CHECK(materialize_string(11).size() == 11);
    CHECK(materialize_string(0).empty());
    CHECK(materialize_string(11, 3) == materialize_string(11, 3));
    for (char ch : materialize_string(64, 9))
        CHECK((ch >= 'a' && ch <= 'z'));
    CHECK_THROWS_AS(materialize_string(kMaxStringLength + 1), LengthOutOfRange);
    CHECK_THROWS_AS(materialize_string(-1), LengthOutOfRange);
}
