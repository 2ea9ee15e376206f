#include <catch2/catch_amalgamated.hpp>

#include "ubsym/parse.hpp"
#include "ubsym/specs.hpp"
#include "test_util.hpp"

using namespace ubsym;

TEST_CASE("builtin specs cover the four classes with ordered events")
{
    auto specs = builtin_specs();
    REQUIRE(specs.size() == 4);

    const VulnSpec& heap = builtin_spec(VulnClass::HeapOverflow);
    REQUIRE(heap.events.size() == 2);
    CHECK(heap.events[0].shape == Event::Shape::MallocCall);
    CHECK(heap.events[1].shape == Event::Shape::StoreData);

    const VulnSpec& stack = builtin_spec(VulnClass::StackOverflow);
    REQUIRE(stack.events.size() == 3);
    CHECK(stack.events[0].shape == Event::Shape::FrameBaseRead);

    CHECK(builtin_spec(VulnClass::DoubleFree).events.size() == 3);
    CHECK(builtin_spec(VulnClass::UseAfterFree).events.back().shape ==
          Event::Shape::LoadOrStoreUse);

    CHECK(VulnSpec::overflow_rule(11, 10));
    CHECK_FALSE(VulnSpec::overflow_rule(10, 10));
    CHECK(VulnSpec::stack_max_len(-32) == 32);
}

TEST_CASE("trace_buffer follows the pointer through calls and returns")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL make()\n"
        "  t1 = CALL input_str()\n"
        "  CALL fill(t0, t1)\n"
        "  RET\n"
        "}\n"
        "func make() frame 0 {\n"
        "m0:\n"
        "  t0 = CALL malloc(CONST 24)\n"
        "  RET t0\n"
        "}\n"
        "func fill(buf: int64, s: string) frame 0 {\n"
        "f0:\n"
        "  CALL strcpy(t0, t1)\n"
        "  RET\n"
        "}\n");

    auto fact = trace_buffer(p, Site{"make", "m0", 0});
    REQUIRE(fact.has_value());
    CHECK(fact->origin == BufferFact::Origin::Heap);
    CHECK(fact->capacity == 24);
    CHECK(fact->carries("make", 0));  // malloc result
    CHECK(fact->carries("main", 0));  // returned to the caller
    CHECK(fact->carries("fill", 0));  // passed as first argument
    CHECK_FALSE(fact->carries("fill", 1));
}

TEST_CASE("carrier offsets follow constant pointer arithmetic")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 32)\n"
        "  t1 = Add64(t0, CONST 8)\n"
        "  STORE(t1, CONST 1, 8)\n"
        "  RET\n"
        "}\n");
    auto fact = trace_buffer(p, Site{"main", "b0", 0});
    REQUIRE(fact.has_value());
    CHECK(fact->carrier_offset("main", 1) == 8);
}

TEST_CASE("non-constant malloc length produces a warning, not a fact")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_int()\n"
        "  t1 = CALL malloc(t0)\n"
        "  RET\n"
        "}\n");
    std::vector<TraceWarning> warnings;
    auto facts = discover_heap_buffers(p, &warnings);
    CHECK(facts.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].site == Site{"main", "b0", 1});
    CHECK(warnings[0].message.find("constant") != std::string::npos);
}

TEST_CASE("estimate_stack_buffer infers capacity from the frame offset")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 64 {\n"
        "b0:\n"
        "  t0 = CALL input_str()\n"
        "  t1 = GET(20)\n"
        "  t2 = Add64(t1, CONST -48)\n"
        "  CALL strcpy(t2, t0)\n"
        "  RET\n"
        "}\n");
    auto facts = estimate_stack_buffer(p, *p.function("main"));
    REQUIRE(facts.size() == 1);
    CHECK(facts[0].origin == BufferFact::Origin::Stack);
    CHECK(facts[0].frameOffset == -48);
    CHECK(facts[0].capacity == 48);
    CHECK(facts[0].carries("main", 2));
}

TEST_CASE("fig10 heap unit is the copying function")
{
    Program p = testutil::load_fixture("fig10.mir");
    auto units = extract_test_units(p, builtin_spec(VulnClass::HeapOverflow));
    REQUIRE(units.size() == 1);
    CHECK(units[0].function == "process");
    CHECK(units[0].cls == VulnClass::HeapOverflow);
    REQUIRE(units[0].suspiciousSites.size() == 2); // n2 and n4 copies
    std::set<std::string> blocks;
    for (const auto& s : units[0].suspiciousSites) blocks.insert(s.site.block);
    CHECK(blocks == std::set<std::string>{"n2", "n4"});
    REQUIRE(units[0].facts.size() == 1);
    CHECK(units[0].facts[0].capacity == 10);
}

TEST_CASE("double-free unit is the least common ancestor of both frees")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_int()\n"
        "  CALL driver(t0)\n"
        "  RET\n"
        "}\n"
        "func driver(x: int64) frame 0 {\n"
        "d0:\n"
        "  t1 = CALL malloc(CONST 16)\n"
        "  CALL release(t1)\n"
        "  BR CmpLT64s(t0, CONST 0) ? d1 : d2\n"
        "d1:\n"
        "  CALL release(t1)\n"
        "  RET\n"
        "d2:\n"
        "  RET\n"
        "}\n"
        "func release(p: int64) frame 0 {\n"
        "r0:\n"
        "  CALL free(t0)\n"
        "  RET\n"
        "}\n");
    auto units = extract_test_units(p, builtin_spec(VulnClass::DoubleFree));
    REQUIRE(units.size() == 1);
    // driver contains malloc;free;free — main also does, but driver is deeper
    CHECK(units[0].function == "driver");
    REQUIRE(units[0].suspiciousSites.size() == 1);
    // the site is the call that performs the second free, inside the unit
    CHECK(units[0].suspiciousSites[0].site == Site{"driver", "d1", 0});
}

TEST_CASE("use-after-free unit spans the free and the later load")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 8)\n"
        "  t1 = CALL input_int()\n"
        "  BR CmpLT64s(t1, CONST 0) ? b1 : b2\n"
        "b1:\n"
        "  CALL free(t0)\n"
        "  JMP b2\n"
        "b2:\n"
        "  t2 = LOAD(t0, 8)\n"
        "  RET\n"
        "}\n");
    auto units = extract_test_units(p, builtin_spec(VulnClass::UseAfterFree));
    REQUIRE(units.size() == 1);
    CHECK(units[0].function == "main");
    REQUIRE(units[0].suspiciousSites.size() == 1);
    CHECK(units[0].suspiciousSites[0].site == Site{"main", "b2", 0});
}

TEST_CASE("programs without a full event sequence yield no units")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 8)\n"
        "  CALL free(t0)\n"
        "  RET\n"
        "}\n");
    CHECK(extract_test_units(p, builtin_spec(VulnClass::DoubleFree)).empty());
    CHECK(extract_test_units(p, builtin_spec(VulnClass::UseAfterFree)).empty());
}

TEST_CASE("stack overflow unit extraction finds the storing function")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_str()\n"
        "  CALL target(t0)\n"
        "  RET\n"
        "}\n"
        "func target(s: string) frame 48 {\n"
        "u0:\n"
        "  t1 = GET(20)\n"
        "  t2 = Add64(t1, CONST -32)\n"
        "  CALL strcpy(t2, t0)\n"
        "  RET\n"
        "}\n");
    auto units = extract_test_units(p, builtin_spec(VulnClass::StackOverflow));
    REQUIRE(units.size() == 1);
    CHECK(units[0].function == "target");
    REQUIRE(units[0].suspiciousSites.size() == 1);
    CHECK(units[0].suspiciousSites[0].site == Site{"target", "u0", 2});
    CHECK(units[0].facts[0].capacity == 32);
}
