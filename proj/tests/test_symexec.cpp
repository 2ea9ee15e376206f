#include <catch2/catch_amalgamated.hpp>

#include "ubsym/parse.hpp"
#include "ubsym/symexec.hpp"
#include "test_util.hpp"

using namespace ubsym;

namespace {

ConstraintTree tree_for(const Program& p, VulnClass cls, const std::string& fn)
{
    for (const auto& u : extract_test_units(p, builtin_spec(cls)))
        if (u.function == fn) return symbolic_execute(p, u);
    FAIL("no unit extracted for " + fn);
    return {};
}

const TreeNode* node_for_block(const ConstraintTree& t, const std::string& block)
{
    for (const auto& n : t.nodes)
        if (n.blockId == block) return &n;
    return nullptr;
}

} // namespace

TEST_CASE("fig10 tree has one node per executed unit block")
{
    Program p = testutil::load_fixture("fig10.mir");
    ConstraintTree t = tree_for(p, VulnClass::HeapOverflow, "process");

    REQUIRE(t.nodes.size() == 5); // n0 n4 n1 n2 n3
    CHECK(t.root().blockId == "n0");
    CHECK(t.dims == std::vector<std::string>{"x", "y", length_var("str")});
    REQUIRE(t.params.size() == 3);
    CHECK(t.params[0].kind == ParamBinding::Kind::SymInt);
    CHECK(t.params[2].kind == ParamBinding::Kind::SymStr);

    const TreeNode* n2 = node_for_block(t, "n2");
    REQUIRE(n2 != nullptr);
    CHECK(to_string(n2->term) == "x - y == 5");
    CHECK(to_string(t.path_const(n2->id)) == "x >= 10 && x - y == 5");
    REQUIRE(n2->vuls.size() == 1);
    CHECK(to_string(n2->vuls[0].cond) == "len(str) > 10");
    CHECK_FALSE(n2->vuls[0].staticallySafe);
    CHECK(n2->vuls[0].site == Site{"process", "n2", 0});

    const TreeNode* n4 = node_for_block(t, "n4");
    REQUIRE(n4 != nullptr);
    CHECK(to_string(n4->term) == "x < 10");
    REQUIRE(n4->vuls.size() == 1);
    // constant 30-byte copy into a 10-byte buffer: always vulnerable
    CHECK(n4->vuls[0].cond.atoms.size() == 1);
    CHECK(n4->vuls[0].cond.atoms[0].is_constant());
    CHECK(n4->vuls[0].cond.atoms[0].constant_value());
    CHECK_FALSE(n4->vuls[0].staticallySafe);

    const TreeNode* n3 = node_for_block(t, "n3");
    REQUIRE(n3 != nullptr);
    CHECK(n3->vuls.empty());
    CHECK(to_string(n3->term) == "x - y != 5");
}

TEST_CASE("fig10 dump shows the outline with path constraints")
{
    Program p = testutil::load_fixture("fig10.mir");
    ConstraintTree t = tree_for(p, VulnClass::HeapOverflow, "process");
    std::string d = dump_tree(t);
    CHECK(d.find("Node(0) block n0 Const {true}") != std::string::npos);
    CHECK(d.find("Const {x >= 10 && x - y == 5} VulConst {len(str) > 10}") !=
          std::string::npos);
    CHECK(d.find("Term {x < 10}") != std::string::npos);
}

TEST_CASE("possibly_vulnerable marks the spine, not safe siblings")
{
    Program p = testutil::load_fixture("fig10.mir");
    ConstraintTree t = tree_for(p, VulnClass::HeapOverflow, "process");
    const TreeNode* n2 = node_for_block(t, "n2");
    const TreeNode* n3 = node_for_block(t, "n3");
    const TreeNode* n1 = node_for_block(t, "n1");
    CHECK(t.possibly_vulnerable(0));
    CHECK(t.possibly_vulnerable(n1->id));
    CHECK(t.possibly_vulnerable(n2->id));
    CHECK_FALSE(t.possibly_vulnerable(n3->id));
}

TEST_CASE("pointer parameters bound to a traced buffer are not symbolic dims")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 12)\n"
        "  t1 = CALL input_str()\n"
        "  CALL sink(t0, t1)\n"
        "  RET\n"
        "}\n"
        "func sink(buf: int64, s: string) frame 0 {\n"
        "u0:\n"
        "  CALL strcpy(t0, t1)\n"
        "  RET\n"
        "}\n");
    ConstraintTree t = tree_for(p, VulnClass::HeapOverflow, "sink");
    CHECK(t.dims == std::vector<std::string>{length_var("s")});
    REQUIRE(t.params.size() == 2);
    CHECK(t.params[0].kind == ParamBinding::Kind::FactPtr);
    CHECK(t.params[0].factIndex == 0);
    REQUIRE(t.root().vuls.size() == 1);
    CHECK(to_string(t.root().vuls[0].cond) == "len(s) > 12");
}

TEST_CASE("stack store through rbp-offset yields a frame-relative condition")
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
    ConstraintTree t = tree_for(p, VulnClass::StackOverflow, "target");
    REQUIRE(t.root().vuls.size() == 1);
    CHECK(t.root().vuls[0].kind == OracleEvent::Kind::StackFrameClobber);
    CHECK(to_string(t.root().vuls[0].cond) == "len(s) > 32");
}

TEST_CASE("guarded copy marks the safe branch statically safe")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 16)\n"
        "  CALL sink(t0)\n"
        "  RET\n"
        "}\n"
        "func sink(buf: int64) frame 0 {\n"
        "u0:\n"
        "  CALL strcpy(t0, STR \"short\")\n"
        "  RET\n"
        "}\n");
    ConstraintTree t = tree_for(p, VulnClass::HeapOverflow, "sink");
    REQUIRE(t.root().vuls.size() == 1);
    CHECK(t.root().vuls[0].staticallySafe);
    CHECK_FALSE(t.possibly_vulnerable(0));
}

TEST_CASE("double free on one branch is recorded as structurally true")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL input_int()\n"
        "  CALL unit(t0)\n"
        "  RET\n"
        "}\n"
        "func unit(x: int64) frame 0 {\n"
        "u0:\n"
        "  t1 = CALL malloc(CONST 8)\n"
        "  CALL free(t1)\n"
        "  BR CmpLT64s(t0, CONST 0) ? u1 : u2\n"
        "u1:\n"
        "  CALL free(t1)\n"
        "  RET\n"
        "u2:\n"
        "  RET\n"
        "}\n");
    ConstraintTree t = tree_for(p, VulnClass::DoubleFree, "unit");
    const TreeNode* u1 = node_for_block(t, "u1");
    REQUIRE(u1 != nullptr);
    REQUIRE(u1->vuls.size() == 1);
    CHECK(u1->vuls[0].kind == OracleEvent::Kind::DoubleFree);
    CHECK(u1->vuls[0].cond.satisfied_by({}));
    CHECK(to_string(u1->term) == "x < 0");
    const TreeNode* u2 = node_for_block(t, "u2");
    REQUIRE(u2 != nullptr);
    CHECK(u2->vuls.empty());
}

TEST_CASE("use after free via load is detected on the reaching path only")
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
    ConstraintTree t = tree_for(p, VulnClass::UseAfterFree, "main");
    // two b2 nodes: one below the freeing branch, one on the clean branch
    std::vector<const TreeNode*> b2s;
    for (const auto& n : t.nodes)
        if (n.blockId == "b2") b2s.push_back(&n);
    REQUIRE(b2s.size() == 2);
    int withVul = 0;
    for (const auto* n : b2s)
        if (!n->vuls.empty()) {
            ++withVul;
            CHECK(n->vuls[0].kind == OracleEvent::Kind::UseAfterFree);
            CHECK(to_string(t.path_const(n->id)).find("in0 < 0") != std::string::npos);
        }
    CHECK(withVul == 1);
}

TEST_CASE("branches inside an inlined callee fork nodes under the same unit block")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 8)\n"
        "  t1 = CALL input_int()\n"
        "  CALL unit(t0, t1)\n"
        "  RET\n"
        "}\n"
        "func unit(buf: int64, x: int64) frame 0 {\n"
        "u0:\n"
        "  CALL helper(t0, t1)\n"
        "  t2 = LOAD(t0, 8)\n"
        "  RET\n"
        "}\n"
        "func helper(p: int64, y: int64) frame 0 {\n"
        "h0:\n"
        "  BR CmpLT64s(t1, CONST 0) ? h1 : h2\n"
        "h1:\n"
        "  CALL free(t0)\n"
        "  RET\n"
        "h2:\n"
        "  RET\n"
        "}\n");
    // the allocation lives in main, so main is the least common ancestor unit
    ConstraintTree t = tree_for(p, VulnClass::UseAfterFree, "main");
    // the branch nested two calls deep splits the path while staying in b0
    REQUIRE(t.root().children.size() == 2);
    for (int c : t.root().children)
        CHECK(t.nodes[static_cast<std::size_t>(c)].blockId == "b0");
    int withVul = 0;
    for (const auto& n : t.nodes)
        if (!n.vuls.empty()) {
            ++withVul;
            CHECK(to_string(t.path_const(n.id)) == "in0 < 0");
        }
    CHECK(withVul == 1);
}

TEST_CASE("loops are unrolled up to the limit and marked truncated")
{
    Program p = testutil::parse_or_throw(
        "func main() frame 0 {\n"
        "b0:\n"
        "  t0 = CALL malloc(CONST 8)\n"
        "  CALL unit(t0)\n"
        "  RET\n"
        "}\n"
        "func unit(buf: int64) frame 0 {\n"
        "u0:\n"
        "  STORE(t0, CONST 1, 8)\n"
        "  JMP u0\n"
        "}\n");
    TestUnit u;
    u.function = "unit";
    u.cls = VulnClass::HeapOverflow;
    u.facts = discover_heap_buffers(p);
    ConstraintTree t = symbolic_execute(p, u);
    CHECK(t.nodes.size() == static_cast<std::size_t>(ExecOptions{}.maxLoopUnrolls) + 1);
    bool anyTruncated = false;
    for (const auto& n : t.nodes) anyTruncated |= n.truncated;
    CHECK(anyTruncated);
}

TEST_CASE("unknown-capacity stores produce a warning instead of a condition")
{
    Program p = testutil::parse_or_throw(
        "func unit(n: int64, s: string) frame 0 {\n"
        "u0:\n"
        "  t2 = CALL malloc(t0)\n"
        "  CALL strcpy(t2, t1)\n"
        "  RET\n"
        "}\n");
    TestUnit u;
    u.function = "unit";
    u.cls = VulnClass::HeapOverflow;
    ConstraintTree t = symbolic_execute(p, u);
    CHECK(t.root().vuls.empty());
    REQUIRE(t.warnings.size() >= 2); // non-constant malloc + unknown-capacity store
}
