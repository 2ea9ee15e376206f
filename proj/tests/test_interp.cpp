#include <catch2/catch_amalgamated.hpp>

#include "ubsym/interp.hpp"
#include "ubsym/parse.hpp"
#include "test_util.hpp"

using namespace ubsym;

namespace {

std::vector<Value> fig10_inputs(Word x, Word y, const std::string& s)
{
    return {Value::of_int(x), Value::of_int(y), Value::of_str(s)};
}

} // namespace

TEST_CASE("fig10 overflow triggers at the n2 copy")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto t = run(p, fig10_inputs(10, 5, std::string(11, 'a')));
    REQUIRE(t.exit == ExecutionTrace::Exit::Ok);
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].kind == OracleEvent::Kind::HeapOverflow);
    CHECK(t.events[0].site == Site{"process", "n2", 0});
    CHECK(t.events[0].capacity == 10);
    CHECK(t.events[0].writeLen == 11);
}

TEST_CASE("fig10 no overflow when the string fits")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto t = run(p, fig10_inputs(10, 5, std::string(10, 'a')));
    CHECK(t.events.empty());
}

TEST_CASE("fig10 constant copy in n4 overflows on the short-x path")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto t = run(p, fig10_inputs(3, 0, "s"));
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].kind == OracleEvent::Kind::HeapOverflow);
    CHECK(t.events[0].site == Site{"process", "n4", 0});
}

TEST_CASE("stack writes clobber the saved frame base only past the offset")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 48 {\n"
        "b0:\n"
        "  t0 = CALL input_str()\n"
        "  t1 = GET(20)\n"
        "  t2 = Add64(t1, CONST -32)\n"
        "  CALL strcpy(t2, t0)\n"
        "  RET\n"
        "}\n");

    auto ok = run(p, {Value::of_str(std::string(32, 'a'))});
    CHECK(ok.events.empty());

    auto bad = run(p, {Value::of_str(std::string(33, 'a'))});
    REQUIRE(bad.events.size() == 1);
    CHECK(bad.events[0].kind == OracleEvent::Kind::StackFrameClobber);
    CHECK(bad.events[0].site == Site{"main", "b0", 3});
}

TEST_CASE("double free is reported at the second free")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 16)\n"
        "  CALL free(t0)\n"
        "  CALL free(t0)\n"
        "  RET\n"
        "}\n");
    auto t = run(p, {});
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].kind == OracleEvent::Kind::DoubleFree);
    CHECK(t.events[0].site == Site{"main", "b0", 2});
}

TEST_CASE("use after free on load and on store")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 16)\n"
        "  STORE(t0, CONST 7, 8)\n"
        "  CALL free(t0)\n"
        "  t1 = LOAD(t0, 8)\n"
        "  STORE(t0, CONST 9, 8)\n"
        "  RET\n"
        "}\n");
    auto t = run(p, {});
    REQUIRE(t.events.size() == 2);
    CHECK(t.events[0].kind == OracleEvent::Kind::UseAfterFree);
    CHECK(t.events[0].site == Site{"main", "b0", 3});
    CHECK(t.events[1].kind == OracleEvent::Kind::UseAfterFree);
    CHECK(t.events[1].site == Site{"main", "b0", 4});
}

TEST_CASE("step budget converts loops into a diagnosable exit")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  JMP b0\n"
        "}\n");
    auto t = run(p, {}, Limits{1000, 64});
    CHECK(t.exit == ExecutionTrace::Exit::StepBudgetExceeded);
}

TEST_CASE("missing input is InputExhausted")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_int()\n"
        "  RET\n"
        "}\n");
    auto t = run(p, {});
    CHECK(t.exit == ExecutionTrace::Exit::InputExhausted);
}

TEST_CASE("determinism: identical runs produce identical traces")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto a = run(p, fig10_inputs(12, 7, "abcdefghijkl"));
    auto b = run(p, fig10_inputs(12, 7, "abcdefghijkl"));
    CHECK(a.coveredBlocks == b.coveredBlocks);
    CHECK(a.events.size() == b.events.size());
    CHECK(a.output == b.output);
}

TEST_CASE("monitor_unit records first-call arguments and block sequence")
{
    Program p = testutil::load_fixture("fig10.mir");

    SECTION("unit reached")
    {
        auto m = monitor_unit(p, "process", fig10_inputs(10, 5, "hi"));
        REQUIRE(m.unitArgs.has_value());
        REQUIRE(m.unitArgs->size() == 3);
        CHECK((*m.unitArgs)[0].i == 10);
        CHECK((*m.unitArgs)[2].s == "hi");
        CHECK(m.blockSeq == std::vector<std::string>{"n0", "n1", "n2"});
    }

    SECTION("entry as unit yields the system inputs")
    {
        auto m = monitor_unit(p, "main", fig10_inputs(1, 2, "z"));
        REQUIRE(m.unitArgs.has_value());
        REQUIRE(m.unitArgs->size() == 3);
        CHECK((*m.unitArgs)[0].i == 1);
        CHECK((*m.unitArgs)[2].s == "z");
    }
}

TEST_CASE("monitor_unit absent when a guard blocks the call")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_int()\n"
        "  BR CmpLT64s(t0, CONST 0) ? b1 : b2\n"
        "b1:\n"
        "  CALL unit(t0)\n"
        "  RET\n"
        "b2:\n"
        "  RET\n"
        "}\n"
        "func unit(x: int64) frame 0 {\n"
        "u0:\n"
        "  RET\n"
        "}\n");
    auto blocked = monitor_unit(p, "unit", {Value::of_int(5)});
    CHECK_FALSE(blocked.unitArgs.has_value());
    auto reached = monitor_unit(p, "unit", {Value::of_int(-5)});
    REQUIRE(reached.unitArgs.has_value());
    CHECK((*reached.unitArgs)[0].i == -5);
}

TEST_CASE("run_unit allocates buffers for pointer parameters")
{
    Program p = testutil::parse_or_throw(
        "func sink(buf: int64, s: string) frame 0 {\n"
        "u0:\n"
        "  CALL strcpy(t0, t1)\n"
        "  RET\n"
        "}\n");
    auto t = run_unit(p, "sink", {Value::of_int(0), Value::of_str(std::string(11, 'x'))},
                      {std::optional<long>(10), std::nullopt});
    REQUIRE(t.events.size() == 1);
    CHECK(t.events[0].kind == OracleEvent::Kind::HeapOverflow);
}
