#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ubsym/learn.hpp"
#include "ubsym/parse.hpp"
#include "test_util.hpp"

using namespace ubsym;

TEST_CASE("covering array hits every pair of levels")
{
    std::vector<std::vector<long>> levels = {
        {1, 2, 3, 4}, {10, 20, 30, 40}, {0, 1, 5, 10, 11, 20}, {-1, 0, 1}};
    auto rows = covering_array(levels, 2, 3);
    REQUIRE(!rows.empty());
    CHECK(rows.size() <= 200);
    for (const auto& row : rows) REQUIRE(row.size() == levels.size());

    for (std::size_t d1 = 0; d1 < levels.size(); ++d1) {
        for (std::size_t d2 = d1 + 1; d2 < levels.size(); ++d2) {
            for (long a : levels[d1]) {
                for (long b : levels[d2]) {
                    bool found = false;
                    for (const auto& row : rows)
                        if (row[d1] == a && row[d2] == b) found = true;
                    INFO("pair (" << d1 << "=" << a << ", " << d2 << "=" << b << ")");
                    CHECK(found);
                }
            }
        }
    }
}

TEST_CASE("covering array is deterministic per seed")
{
    std::vector<std::vector<long>> levels = {{0, 1, 2}, {5, 6}, {7, 8, 9}};
    CHECK(covering_array(levels, 2, 11) == covering_array(levels, 2, 11));
}

TEST_CASE("tar3 recovers the interval that drives the positive class")
{
    std::mt19937_64 rng(5);
    std::vector<Tar3Sample> samples;
    for (int i = 0; i < 400; ++i) {
        long x0 = static_cast<long>(rng() % 129) - 64;
        long x1 = static_cast<long>(rng() % 129) - 64;
        samples.push_back({{x0, x1}, x0 >= 10 && x0 <= 40});
    }
    auto res = run_tar3(samples);
    REQUIRE(res.status == Tar3Result::Status::Ok);
    CHECK(res.lift >= 2.0);
    REQUIRE(res.ranges.count(0) == 1);
    // the learned range must sit inside a bin-widened neighborhood of [10,40]
    CHECK(res.ranges.at(0).lo >= 10 - 17);
    CHECK(res.ranges.at(0).hi <= 40 + 17);
    // and the treatment must actually select mostly positives
    std::size_t in = 0, pos = 0;
    for (const auto& s : samples) {
        bool inside = true;
        for (const auto& [d, iv] : res.ranges)
            if (s.x[d] < iv.lo || s.x[d] > iv.hi) inside = false;
        if (inside) {
            ++in;
            if (s.positive) ++pos;
        }
    }
    REQUIRE(in > 0);
    CHECK(static_cast<double>(pos) / static_cast<double>(in) > 0.6);
}

TEST_CASE("tar3 reports a degenerate split for one-class data")
{
    std::vector<Tar3Sample> allNeg, allPos;
    for (long i = 0; i < 20; ++i) {
        allNeg.push_back({{i}, false});
        allPos.push_back({{i}, true});
    }
    CHECK(run_tar3(allNeg).status == Tar3Result::Status::DegenerateSplit);
    CHECK(run_tar3(allPos).status == Tar3Result::Status::DegenerateSplit);
    CHECK(run_tar3({}).status == Tar3Result::Status::DegenerateSplit);
}

TEST_CASE("curve fit recovers a linear map with degree 1")
{
    std::vector<std::vector<long>> xs;
    std::vector<double> ys;
    for (long x = -20; x <= 20; x += 3) {
        xs.push_back({x});
        ys.push_back(2.0 * static_cast<double>(x) + 1.0);
    }
    auto fit = curve_fit(xs, ys);
    CHECK(fit.degree == 1);
    CHECK(fit.residual < 1e-6);
    CHECK(fit.eval({7}) == Catch::Approx(15.0).margin(1e-6));
}

TEST_CASE("curve fit escalates the degree only when it pays off")
{
    std::vector<std::vector<long>> xs;
    std::vector<double> ys;
    for (long x = -10; x <= 10; ++x) {
        xs.push_back({x});
        ys.push_back(static_cast<double>(x * x) - 3.0);
    }
    auto fit = curve_fit(xs, ys);
    CHECK(fit.degree == 2);
    CHECK(fit.residual < 1e-6);
    CHECK(fit.eval({6}) == Catch::Approx(33.0).margin(1e-4));
}

TEST_CASE("monte carlo annotates the nodes whose constraints the run satisfies")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto units = extract_test_units(p, builtin_spec(VulnClass::HeapOverflow));
    REQUIRE(units.size() == 1);
    ConstraintTree tree = symbolic_execute(p, units[0]);

    McOptions opts;
    opts.runsCap = 64;
    opts.seed = 2;
    auto sim = monte_carlo(p, tree, VulnClass::HeapOverflow, opts);

    REQUIRE(sim.runs.size() == 64);
    CHECK(sim.inputIsStr == std::vector<bool>{false, false, true});

    std::size_t reached = 0, vulnerable = 0;
    for (const auto& r : sim.runs) {
        if (r.reached) ++reached;
        if (r.vulnerable) ++vulnerable;
    }
    CHECK(reached == sim.runs.size()); // main always calls the unit
    CHECK(vulnerable > 0);             // x < 10 rows hit the constant copy

    // root collects every reached run; the x >= 10 node only those runs
    const TreeNode* n1 = nullptr;
    for (const auto& n : tree.nodes)
        if (n.blockId == "n1") n1 = &n;
    REQUIRE(n1 != nullptr);
    CHECK(tree.root().annotations.size() == reached);
    CHECK(!n1->annotations.empty());
    CHECK(n1->annotations.size() < tree.root().annotations.size());
    for (const auto& a : n1->annotations) CHECK(a.dims.at("x") >= 10);
}

TEST_CASE("compute_map walks up from a never-covered node and finds the pass-through")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto units = extract_test_units(p, builtin_spec(VulnClass::HeapOverflow));
    ConstraintTree tree = symbolic_execute(p, units[0]);

    McOptions opts;
    opts.runsCap = 96;
    opts.seed = 4;
    monte_carlo(p, tree, VulnClass::HeapOverflow, opts);

    // n2 requires x - y == 5, which the grid essentially never produces
    const TreeNode* n2 = nullptr;
    for (const auto& n : tree.nodes)
        if (n.blockId == "n2") n2 = &n;
    REQUIRE(n2 != nullptr);

    Constraint target = tree.path_const(n2->id);
    target.add_all(n2->vuls[0].cond);
    auto map = compute_map(tree, n2->id, target);
    REQUIRE(map.status == MapResult::Status::Ok);
    REQUIRE(map.dims == tree.dims);
    REQUIRE(map.fits.size() == 3);

    // x and y pass straight through from the first two system inputs
    CHECK(map.fits[0].eval({30, 7, 5}) == Catch::Approx(30.0).margin(0.5));
    CHECK(map.fits[1].eval({-12, 25, 9}) == Catch::Approx(25.0).margin(0.5));
    CHECK(map.fits[2].eval({0, 0, 17}) == Catch::Approx(17.0).margin(0.5));
}

TEST_CASE("length levels derive from the traced capacities")
{
    BufferFact f;
    f.capacity = 10;
    auto lv = mc_len_levels({f});
    CHECK(lv == std::vector<long>{0, 1, 5, 10, 11, 20});
    CHECK(mc_len_levels({}).size() >= 4);
}
