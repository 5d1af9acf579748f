#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dibi/finrel.hpp"
#include "dibi/satisfy.hpp"
#include "support/builders.hpp"

using namespace dibi;
using namespace dibitest;

namespace {

const SatStrategy<FinStoch> kExact{};

bool sat(const Category<FinStoch>& cat, const Kernel<FinStoch>& k, const std::string& text) {
  return satisfies(cat, k, parse_formula(text), kExact);
}

}  // namespace

TEST_CASE("atoms hold exactly when a subkernel covers them") {
  auto cat = cat01();
  auto f = example_f(cat);
  // x is determined from z through the projection g1.
  CHECK(sat_atomic(cat, f, vs({"z"}), vs({"x"})));
  CHECK(sat_atomic(cat, f, vs({"z"}), vs({"x", "z"})));
  // Without conditioning on z there is no subkernel producing x.
  CHECK_FALSE(sat_atomic(cat, f, VarSet{}, vs({"x"})));
  // Every kernel is its own witness with an empty target.
  CHECK(sat_atomic(cat, f, f.dom, VarSet{}));
  // Asking for variables outside the codomain fails.
  CHECK_FALSE(sat_atomic(cat, f, vs({"z"}), vs({"q"})));
}

TEST_CASE("units hold everywhere") {
  auto cat = cat01();
  auto f = example_f(cat);
  CHECK(sat(cat, f, "top"));
  CHECK(sat(cat, f, "emp"));
  CHECK(sat(cat, f, "top & emp"));
}

TEST_CASE("the CI-shaped sequencing formula holds of the composed state") {
  auto cat = cat01();
  auto h = seq(cat, example_h0(cat), example_f(cat));
  CHECK(sat(cat, h, "<{}|>{z}> ; (<{z}|>{z,x}> * <{z}|>{z,y}>)"));
  // Equivalent phrasing without the conditioned variable in the targets.
  CHECK(sat(cat, h, "<{}|>{z}> ; (<{z}|>{x}> * <{z}|>{y}>)"));

  SECTION("a coupled variant is refuted") {
    // y copies x given either z: no independent split exists.
    auto coupled = stoch_kernel(
        cat, {}, vl({"x", "y", "z"}),
        {{stoch::Memory{},
          {{mem({{"x", "0"}, {"y", "0"}, {"z", "0"}}), Q(1, 4)},
           {mem({{"x", "1"}, {"y", "1"}, {"z", "0"}}), Q(1, 4)},
           {mem({{"x", "0"}, {"y", "0"}, {"z", "1"}}), Q(1, 4)},
           {mem({{"x", "1"}, {"y", "1"}, {"z", "1"}}), Q(1, 4)}}}});
    CHECK_FALSE(sat(cat, coupled, "<{}|>{z}> ; (<{z}|>{z,x}> * <{z}|>{z,y}>)"));
    CHECK(sat(cat, coupled, "<{}|>{z}> ; (<{z}|>{z,x,y}> * <{z}|>{z}>)"));
  }
}

TEST_CASE("product states split under the separating conjunction") {
  auto cat = cat01();
  auto p = stoch_kernel(cat, {}, vl({"x"}),
                        {{stoch::Memory{},
                          {{mem({{"x", "0"}}), Q(1, 3)}, {mem({{"x", "1"}}), Q(2, 3)}}}});
  auto q = stoch_kernel(cat, {}, vl({"y"}),
                        {{stoch::Memory{},
                          {{mem({{"y", "0"}}), Q(1, 5)}, {mem({{"y", "1"}}), Q(4, 5)}}}});
  auto joint = par(cat, p, q);
  CHECK(sat(cat, joint, "<{}|>{x}> * <{}|>{y}>"));
  CHECK(sat(cat, joint, "top * <{}|>{y}>"));

  // A correlated pair does not split.
  auto corr = stoch_kernel(cat, {}, vl({"x", "y"}),
                           {{stoch::Memory{},
                             {{mem({{"x", "0"}, {"y", "0"}}), Q(1, 2)},
                              {mem({{"x", "1"}, {"y", "1"}}), Q(1, 2)}}}});
  CHECK_FALSE(sat(cat, corr, "<{}|>{x}> * <{}|>{y}>"));
}

TEST_CASE("conjunction is evaluated clause-wise") {
  auto cat = cat01();
  auto f = example_f(cat);
  std::mt19937_64 rng(5);
  std::vector<std::string> clauses = {"top", "emp", "<{z}|>{x}>", "<{}|>{x}>", "<{z}|>{x,y,z}>"};
  for (int t = 0; t < 40; ++t) {
    const auto& a = clauses[rng() % clauses.size()];
    const auto& b = clauses[rng() % clauses.size()];
    bool expect = sat(cat, f, a) && sat(cat, f, b);
    CHECK(sat(cat, f, a + " & " + b) == expect);
  }
}

TEST_CASE("atoms are monotone along the subkernel order") {
  auto cat = cat01();
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    // k1 below k2 := (k1 + id_u) ; h by construction.
    auto core = [&](const VarSet& dom, const VarSet& cod) {
      VarList dl = set_to_list(dom), nl = set_to_list(cod - dom);
      Morphism<FinStoch> c{dl, nl, {cat.object_of(dl), cat.object_of(nl), {}}};
      for (auto& in : FinStoch::enumerate(c.payload.dom)) {
        auto outs = FinStoch::enumerate(c.payload.cod);
        std::vector<int> w(outs.size());
        int sum = 0;
        for (auto& wi : w) {
          wi = static_cast<int>(rng() % 3);
          sum += wi;
        }
        if (!sum) {
          w[0] = 1;
          sum = 1;
        }
        FinStoch::SparseDist d;
        for (std::size_t i = 0; i < outs.size(); ++i)
          if (w[i]) d[outs[i]] = Q(w[i], sum);
        c.payload.rows[in] = std::move(d);
      }
      return make_kernel(cat, dom, cod, std::move(c));
    };
    auto k1 = core(vs({"a"}), vs({"a", "b"}));
    auto h = core(vs({"a", "b", "c"}), vs({"a", "b", "c", "d"}));
    auto k2 = seq(cat, par(cat, k1, identity_kernel(cat, vs({"c"}))), h);
    for (const auto& t_set : {vs({"b"}), vs({"a", "b"}), VarSet{}}) {
      if (sat_atomic(cat, k1, vs({"a"}), t_set)) {
        CHECK(sat_atomic(cat, k2, vs({"a"}), t_set));
      }
    }
  }
}

TEST_CASE("witness-supplied mode replays the given pair") {
  auto cat = cat01();
  auto g1 = example_g(cat, "x");
  auto g2 = example_g(cat, "y");
  auto f = example_f(cat);
  auto formula = parse_formula("<{z}|>{x}> * <{z}|>{y}>");

  SatStrategy<FinStoch> strat;
  strat.mode = SatMode::WitnessSupplied;
  strat.witnesses = {g1, g2};
  CHECK(satisfies(cat, f, formula, strat));

  // A wrong witness pair fails even though the formula is satisfiable.
  auto wrong = stoch_kernel(cat, vl({"z"}), vl({"x", "z"}),
                            {{mem({{"z", "0"}}), {{mem({{"x", "0"}, {"z", "0"}}), Q(1)}}},
                             {mem({{"z", "1"}}), {{mem({{"x", "1"}, {"z", "1"}}), Q(1)}}}});
  strat.witnesses = {wrong, g2};
  CHECK_FALSE(satisfies(cat, f, formula, strat));
}

TEST_CASE("unsupported combinations raise typed errors") {
  auto cat = cat01();
  auto f = example_f(cat);
  SatStrategy<FinStoch> strat;
  CHECK_THROWS_AS(
      satisfies(cat, f, parse_formula("(<{z}|>{x}> ; <{x,z}|>{y}>) * top"), strat),
      Unsupported);

  FinRel::Theta rtheta;
  rtheta.fallback = stoch::make_alphabet({"0", "1"});
  Category<FinRel> rcat(rtheta);
  Morphism<FinRel> m{{}, vl({"x"}), {{}, rcat.object_of(vl({"x"})), {}}};
  m.payload.rows[stoch::Tuple{}] = FinRel::TupleSet{{"1"}};
  auto rk = kernel_from_morphism(rcat, m);
  SatStrategy<FinRel> rstrat;
  CHECK_THROWS_AS(satisfies(rcat, rk, parse_formula("<{}|>{x}>"), rstrat), Unsupported);
}

TEST_CASE("structural satisfaction decides the syntactic instance") {
  Category<SynVar> scat{std::monostate{}};
  auto term = syn::parse_term(
      "seq(gen c0 [] [w],"
      " seq(copy [w],"
      "  seq(par(id [w], copy [w]),"
      "   seq(par(id [w], par(gen c1 [w] [x], gen c2 [w] [y])),"
      "    seq(par(id [w], par(copy [x], copy [y])),"
      "     seq(par(id [w], par(id [x], par(swap [x] [y], id [y]))),"
      "      par(id [w,x,y], gen d [x,y] [u1,u2])))))))");
  auto m = syn::elaborate(scat, term);
  m = scat.permute_cod(m, set_to_list(list_to_set(m.cod)));
  auto k = kernel_from_morphism(scat, m);

  SatStrategy<SynVar> strat;
  strat.mode = SatMode::BoundedStructural;
  CHECK(satisfies(scat, k, parse_formula("top"), strat));
  CHECK(satisfies(scat, k, parse_formula("<{}|>{w}>"), strat));
  CHECK(satisfies(scat, k, parse_formula("<{}|>{w,x}>"), strat));
  CHECK(satisfies(scat, k, parse_formula("<{}|>{z}>"), strat) == false);
  CHECK(satisfies(scat, k, parse_formula("<{}|>{w}> ; (<{w}|>{w,x}> * <{w}|>{w,y}>)"), strat));
  // u1 and u2 come jointly from one generator, so they do not separate.
  CHECK_FALSE(satisfies(scat, k, parse_formula("<{}|>{w}> ; (<{w}|>{u1}> * <{w}|>{u2}>)"), strat));
}
