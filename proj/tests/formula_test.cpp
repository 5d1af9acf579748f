#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dibi/formula.hpp"
#include "support/builders.hpp"

using namespace dibi;
using dibitest::vs;

TEST_CASE("the documented example string parses to the expected tree") {
  auto f = parse_formula("(<{}|>{z}> ; (<{z}|>{z,x}> * <{z}|>{z,y}>))");
  REQUIRE(f->kind == Formula::Kind::Fatsemi);
  REQUIRE(f->lhs->kind == Formula::Kind::Atom);
  CHECK(f->lhs->s.empty());
  CHECK(f->lhs->t == vs({"z"}));
  REQUIRE(f->rhs->kind == Formula::Kind::Star);
  CHECK(f->rhs->lhs->s == vs({"z"}));
  CHECK(f->rhs->lhs->t == vs({"x", "z"}));
  CHECK(f->rhs->rhs->t == vs({"y", "z"}));
}

TEST_CASE("keywords and precedence") {
  CHECK(parse_formula("top")->kind == Formula::Kind::Top);
  CHECK(parse_formula("emp")->kind == Formula::Kind::Emp);
  CHECK(parse_formula("  top  ")->kind == Formula::Kind::Top);

  // & binds tighter than *, which binds tighter than ; — so a & b * c ; d
  // reads as ((a & b) * c) ; d.
  auto f = parse_formula("<{}|>{a}> & <{}|>{b}> * <{}|>{c}> ; <{}|>{d}>");
  REQUIRE(f->kind == Formula::Kind::Fatsemi);
  REQUIRE(f->lhs->kind == Formula::Kind::Star);
  REQUIRE(f->lhs->lhs->kind == Formula::Kind::And);
  CHECK(f->lhs->lhs->lhs->t == vs({"a"}));
  CHECK(f->lhs->lhs->rhs->t == vs({"b"}));
  CHECK(f->lhs->rhs->t == vs({"c"}));
  CHECK(f->rhs->t == vs({"d"}));

  // Right associativity.
  auto g = parse_formula("top ; emp ; top");
  REQUIRE(g->kind == Formula::Kind::Fatsemi);
  CHECK(g->lhs->kind == Formula::Kind::Top);
  CHECK(g->rhs->kind == Formula::Kind::Fatsemi);
}

TEST_CASE("parse errors carry positions and expectations") {
  try {
    parse_formula("<{z}|>{z,x}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.column >= 11);
    CHECK(e.expected == "'>'");
  }
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("tops"), ParseError);
  CHECK_THROWS_AS(parse_formula("top extra"), ParseError);
  CHECK_THROWS_AS(parse_formula("<{1bad}|>{x}>"), ShapeError);
}

namespace {

FormulaPtr random_formula(std::mt19937_64& rng, int depth) {
  std::vector<std::string> pool = {"a", "b", "c", "x1", "x2", "x10", "y", "z"};
  auto random_set = [&]() {
    VarSet s;
    std::size_t n = rng() % 3;
    for (std::size_t i = 0; i < n; ++i) s.insert(VarName(pool[rng() % pool.size()]));
    return s;
  };
  if (depth == 0 || rng() % 3 == 0) {
    switch (rng() % 3) {
      case 0: return f_top();
      case 1: return f_emp();
      default: return f_atom(random_set(), random_set());
    }
  }
  auto l = random_formula(rng, depth - 1);
  auto r = random_formula(rng, depth - 1);
  switch (rng() % 3) {
    case 0: return f_and(l, r);
    case 1: return f_star(l, r);
    default: return f_fatsemi(l, r);
  }
}

}  // namespace

TEST_CASE("parse is a left inverse of pretty on generated formulas") {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 1000; ++i) {
    FormulaPtr f = random_formula(rng, 4);
    std::string text = pretty(f);
    FormulaPtr back = parse_formula(text);
    INFO(text);
    CHECK(formula_equal(f, back));
  }
}
