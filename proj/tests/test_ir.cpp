#include <catch2/catch_amalgamated.hpp>

#include "ubsym/ir.hpp"
#include "ubsym/parse.hpp"
#include "test_util.hpp"

using namespace ubsym;

TEST_CASE("minimal program parses")
{
    auto r = parse_program("func main() frame 0 { b0: RET }");
    REQUIRE(r.ok());
    REQUIRE(r.program->functions.size() == 1);
    const Function& f = r.program->functions[0];
    CHECK(f.name == "main");
    CHECK(f.blocks.size() == 1);
    CHECK(f.blocks[0].stmts.size() == 1);
    CHECK(f.blocks[0].stmts[0].kind == Stmt::Kind::Ret);
}

TEST_CASE("empty input is a syntax error at 1:1")
{
    auto r = parse_program("");
    REQUIRE_FALSE(r.ok());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].message == "expected 'func'");
    CHECK(r.diagnostics[0].line == 1);
    CHECK(r.diagnostics[0].column == 1);
}

TEST_CASE("fig10 unit has five blocks")
{
    Program p = testutil::load_fixture("fig10.mir");
    const Function* f = p.function("process");
    REQUIRE(f != nullptr);
    CHECK(f->blocks.size() == 5);
}

TEST_CASE("print/parse round trip")
{
    Program p = testutil::load_fixture("fig10.mir");
    std::string text = print_program(p);
    auto r = parse_program(text);
    REQUIRE(r.ok());
    CHECK(print_program(*r.program) == text);
}

TEST_CASE("validate rejects undefined branch target")
{
    auto r = parse_program(
        "func main() frame 0 {\n"
        "b0:\n"
        "  BR CONST 1 ? b1 : b9\n"
        "b1:\n"
        "  RET\n"
        "}\n");
    REQUIRE_FALSE(r.ok());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].message == "undefined block b9");
}

TEST_CASE("validate rejects call to undefined function")
{
    auto r = parse_program("func main() frame 0 { b0: CALL foo() \n RET }");
    REQUIRE_FALSE(r.ok());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].message.find("foo") != std::string::npos);
}

TEST_CASE("validate rejects duplicate temporary assignment in a block")
{
    auto r = parse_program(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CONST 1\n"
        "  t0 = CONST 2\n"
        "  RET\n"
        "}\n");
    REQUIRE_FALSE(r.ok());
    CHECK(r.diagnostics[0].message.find("duplicate assignment") != std::string::npos);
}

TEST_CASE("cfg of fig10 unit")
{
    Program p = testutil::load_fixture("fig10.mir");
    Cfg g = control_flow_graph(*p.function("process"));
    CHECK(g.nodes.size() == 5);
    REQUIRE(g.successors.count("n0"));
    CHECK(g.successors.at("n0") == std::vector<std::string>{"n4", "n1"});
    CHECK(g.successors.at("n2").empty());
    CHECK(g.successors.at("n3").empty());
    CHECK(g.successors.at("n4").empty());
}

TEST_CASE("cfg of single-block function")
{
    Program p = testutil::parse_or_throw("func main() frame 0 { b0: RET }");
    Cfg g = control_flow_graph(*p.function("main"));
    CHECK(g.nodes.size() == 1);
    CHECK(g.successors.at("b0").empty());
}

TEST_CASE("cfg of diamond has 4 nodes and 4 edges")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_int()\n"
        "  BR t0 ? b1 : b2\n"
        "b1:\n"
        "  JMP b3\n"
        "b2:\n"
        "  JMP b3\n"
        "b3:\n"
        "  RET\n"
        "}\n");
    Cfg g = control_flow_graph(*p.function("main"));
    CHECK(g.nodes.size() == 4);
    std::size_t edges = 0;
    for (const auto& [n, succ] : g.successors) edges += succ.size();
    CHECK(edges == 4);
}

TEST_CASE("parse accepts all statement and expression forms")
{
    auto r = parse_program(
        "global g0 7\n"
        "func main() frame 16 {\n"
        "b0:\n"
        "  t0 = CONST -3\n"
        "  t1 = GET(20)\n"
        "  t2 = Add64(t1, CONST -8)\n"
        "  STORE(t2, CONST 1, 8)\n"
        "  t3 = LOAD(t2, 8)\n"
        "  PUT(16, t3)\n"
        "  t4 = STRLEN(STR \"abc\")\n"
        "  t5 = Not1(CmpEQ64(t4, CONST 3))\n"
        "  STORE(t2, STR \"x\", len)\n"
        "  BR t5 ? b1 : b2\n"
        "b1:\n"
        "  RET t4\n"
        "b2:\n"
        "  RET\n"
        "}\n");
    REQUIRE(r.ok());
    CHECK(r.program->globals.size() == 1);
    std::string text = print_program(*r.program);
    auto again = parse_program(text);
    REQUIRE(again.ok());
    CHECK(print_program(*again.program) == text);
}
