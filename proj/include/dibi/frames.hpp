#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dibi/ci.hpp"
#include "dibi/errors.hpp"
#include "dibi/finrel.hpp"
#include "dibi/finstoch.hpp"
#include "dibi/kernels.hpp"
#include "dibi/markov.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// The twelve frame conditions, checked by randomized trials. Conditions
// about the subkernel order are verified constructively: the witness the
// existence proof prescribes is built explicitly and the defining equation
// is checked by instance equality, so the suite runs on every instance,
// including those without a subkernel decision procedure.
enum class FrameCondition {
  PlusCom,
  PlusUnitExist,
  PlusAssoc,
  SeqUnitExistL,
  SeqUnitExistR,
  SeqAssoc,
  PlusUnitCoh,
  SeqUnitCohR,
  UnitClosure,
  PlusDownClosed,
  SeqUpClosed,
  RevExchange,
};

inline const std::vector<FrameCondition>& all_frame_conditions() {
  static const std::vector<FrameCondition> all = {
      FrameCondition::PlusCom,       FrameCondition::PlusUnitExist,
      FrameCondition::PlusAssoc,     FrameCondition::SeqUnitExistL,
      FrameCondition::SeqUnitExistR, FrameCondition::SeqAssoc,
      FrameCondition::PlusUnitCoh,   FrameCondition::SeqUnitCohR,
      FrameCondition::UnitClosure,   FrameCondition::PlusDownClosed,
      FrameCondition::SeqUpClosed,   FrameCondition::RevExchange,
  };
  return all;
}

inline std::string to_string(FrameCondition c) {
  switch (c) {
    case FrameCondition::PlusCom: return "par-com";
    case FrameCondition::PlusUnitExist: return "par-unit-exist";
    case FrameCondition::PlusAssoc: return "par-assoc";
    case FrameCondition::SeqUnitExistL: return "seq-unit-exist-l";
    case FrameCondition::SeqUnitExistR: return "seq-unit-exist-r";
    case FrameCondition::SeqAssoc: return "seq-assoc";
    case FrameCondition::PlusUnitCoh: return "par-unit-coh";
    case FrameCondition::SeqUnitCohR: return "seq-unit-coh-r";
    case FrameCondition::UnitClosure: return "unit-closure";
    case FrameCondition::PlusDownClosed: return "par-down-closed";
    case FrameCondition::SeqUpClosed: return "seq-up-closed";
    case FrameCondition::RevExchange: return "rev-exchange";
  }
  return "?";
}

inline std::optional<FrameCondition> frame_condition_from_string(const std::string& s) {
  for (FrameCondition c : all_frame_conditions())
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct ConditionReport {
  std::string condition;
  int trials = 0;
  int passes = 0;
  int failures = 0;
  std::string counterexample;  // serialized description of the first failure
};

struct FrameSuiteReport {
  std::string instance;
  std::uint64_t seed = 0;
  std::vector<ConditionReport> conditions;

  bool all_pass() const {
    for (const auto& c : conditions)
      if (c.failures > 0) return false;
    return true;
  }
};

namespace detail {

// Random core tables per instance.
template <class I>
struct RandomCore;

template <>
struct RandomCore<FinStoch> {
  static void fill(FinStoch::Payload& p, Rng& rng) {
    for (auto& in : FinStoch::enumerate(p.dom)) {
      auto outs = FinStoch::enumerate(p.cod);
      std::vector<int> w(outs.size());
      int sum = 0;
      for (auto& wi : w) {
        wi = static_cast<int>(rng.below(4));
        sum += wi;
      }
      if (sum == 0) {
        w[rng.below(w.size())] = 1;
        sum = 1;
      }
      FinStoch::SparseDist d;
      for (std::size_t i = 0; i < outs.size(); ++i)
        if (w[i]) d[outs[i]] = Q(w[i], sum);
      p.rows[in] = std::move(d);
    }
  }
};

template <>
struct RandomCore<FinRel> {
  static void fill(FinRel::Payload& p, Rng& rng) {
    for (auto& in : FinRel::enumerate(p.dom)) {
      auto outs = FinRel::enumerate(p.cod);
      FinRel::TupleSet s;
      for (const auto& o : outs)
        if (rng.below(2)) s.insert(o);
      if (s.empty()) s.insert(outs[rng.below(outs.size())]);
      p.rows[in] = std::move(s);
    }
  }
};

template <class I>
Kernel<I> random_kernel(const Category<I>& cat, Rng& rng, const VarSet& dom, const VarSet& cod) {
  VarList dl = set_to_list(dom);
  VarList nl = set_to_list(cod - dom);
  Morphism<I> core{dl, nl, {cat.object_of(dl), cat.object_of(nl), {}}};
  RandomCore<I>::fill(core.payload, rng);
  return make_kernel(cat, dom, cod, std::move(core));
}

// Fresh, pairwise-disjoint variable sets drawn from a fixed pool, so
// composability side conditions are met by construction.
struct VarPool {
  std::vector<VarName> vars;
  std::size_t used = 0;

  explicit VarPool(const std::vector<std::string>& names) {
    for (const auto& n : names) vars.emplace_back(n);
  }

  VarSet take(Rng& rng, std::size_t max_size) {
    VarSet out;
    std::size_t want = rng.below(max_size + 1);
    while (out.size() < want && used < vars.size()) out.insert(vars[used++]);
    return out;
  }
};

template <class I>
bool run_frame_trial(const Category<I>& cat, FrameCondition cond, Rng& rng, std::string* note) {
  VarPool pool({"a", "b", "c", "d", "e", "f", "g", "h"});
  auto fail = [&](const std::string& msg) {
    if (note) *note = msg;
    return false;
  };
  switch (cond) {
    case FrameCondition::PlusCom: {
      VarSet shared = pool.take(rng, 1);
      VarSet d1 = shared | pool.take(rng, 1);
      VarSet d2 = shared | pool.take(rng, 1);
      VarSet n1 = pool.take(rng, 1), n2 = pool.take(rng, 1);
      auto f = random_kernel(cat, rng, d1, d1 | n1);
      auto g = random_kernel(cat, rng, d2, d2 | n2);
      if (!kernel_equal(cat, par(cat, f, g), par(cat, g, f))) return fail("par(f,g) != par(g,f)");
      return true;
    }
    case FrameCondition::PlusUnitExist: {
      VarSet d = pool.take(rng, 2);
      auto f = random_kernel(cat, rng, d, d | pool.take(rng, 2));
      auto e = identity_kernel(cat, VarSet{});
      if (!kernel_equal(cat, par(cat, e, f), f)) return fail("par(id_{},f) != f");
      return true;
    }
    case FrameCondition::PlusAssoc: {
      VarSet shared = pool.take(rng, 1);
      VarSet d1 = shared | pool.take(rng, 1);
      VarSet d2 = shared | pool.take(rng, 1);
      VarSet d3 = shared | pool.take(rng, 1);
      auto f = random_kernel(cat, rng, d1, d1 | pool.take(rng, 1));
      auto g = random_kernel(cat, rng, d2, d2 | pool.take(rng, 1));
      auto h = random_kernel(cat, rng, d3, d3 | pool.take(rng, 1));
      auto lhs = par(cat, par(cat, f, g), h);  // definedness must propagate
      auto rhs = par(cat, f, par(cat, g, h));
      if (!kernel_equal(cat, lhs, rhs)) return fail("(f+g)+h != f+(g+h)");
      return true;
    }
    case FrameCondition::SeqUnitExistL: {
      VarSet d = pool.take(rng, 2);
      auto f = random_kernel(cat, rng, d, d | pool.take(rng, 2));
      if (!kernel_equal(cat, seq(cat, identity_kernel(cat, f.dom), f), f))
        return fail("id;f != f");
      return true;
    }
    case FrameCondition::SeqUnitExistR: {
      VarSet d = pool.take(rng, 2);
      auto f = random_kernel(cat, rng, d, d | pool.take(rng, 2));
      if (!kernel_equal(cat, seq(cat, f, identity_kernel(cat, f.cod)), f))
        return fail("f;id != f");
      return true;
    }
    case FrameCondition::SeqAssoc: {
      VarSet s0 = pool.take(rng, 1);
      VarSet s1 = s0 | pool.take(rng, 1);
      VarSet s2 = s1 | pool.take(rng, 1);
      VarSet s3 = s2 | pool.take(rng, 1);
      auto a = random_kernel(cat, rng, s0, s1);
      auto b = random_kernel(cat, rng, s1, s2);
      auto c = random_kernel(cat, rng, s2, s3);
      if (!kernel_equal(cat, seq(cat, seq(cat, a, b), c), seq(cat, a, seq(cat, b, c))))
        return fail("(a;b);c != a;(b;c)");
      return true;
    }
    case FrameCondition::PlusUnitCoh: {
      // Units are all kernels: any defined par must extend the left factor.
      VarSet shared = pool.take(rng, 1);
      VarSet d1 = shared | pool.take(rng, 1);
      VarSet d2 = shared | pool.take(rng, 1);
      auto f = random_kernel(cat, rng, d1, d1 | pool.take(rng, 1));
      auto e = random_kernel(cat, rng, d2, d2 | pool.take(rng, 1));
      auto combined = par(cat, f, e);
      VarSet ext = e.dom - f.dom;
      auto witness = seq(cat, par(cat, f, identity_kernel(cat, ext)),
                         par(cat, identity_kernel(cat, f.cod), e));
      if (!kernel_equal(cat, combined, witness)) return fail("par(f,e) lacks the subkernel witness");
      return true;
    }
    case FrameCondition::SeqUnitCohR: {
      VarSet d = pool.take(rng, 1);
      VarSet mid = d | pool.take(rng, 1);
      auto a = random_kernel(cat, rng, d, mid);
      auto e = random_kernel(cat, rng, mid, mid | pool.take(rng, 1));
      auto combined = seq(cat, a, e);
      auto witness = seq(cat, par(cat, a, identity_kernel(cat, VarSet{})), e);
      if (!kernel_equal(cat, combined, witness)) return fail("seq(a,e) lacks the subkernel witness");
      return true;
    }
    case FrameCondition::UnitClosure: {
      // Anything above a unit is a unit: extensions must revalidate as kernels.
      VarSet d = pool.take(rng, 1);
      auto e = random_kernel(cat, rng, d, d | pool.take(rng, 1));
      VarSet ext = pool.take(rng, 1);
      auto h = random_kernel(cat, rng, e.cod | ext, e.cod | ext | pool.take(rng, 1));
      auto above = seq(cat, par(cat, e, identity_kernel(cat, ext)), h);
      kernel_from_morphism(cat, embed(cat, above));  // throws on violation
      return true;
    }
    case FrameCondition::PlusDownClosed: {
      VarSet shared = pool.take(rng, 1);
      VarSet da = shared | pool.take(rng, 1);
      VarSet db = shared | pool.take(rng, 1);
      auto a1 = random_kernel(cat, rng, da, da | pool.take(rng, 1));
      auto b1 = random_kernel(cat, rng, db, db | pool.take(rng, 1));
      VarSet s = pool.take(rng, 1);
      VarSet t = pool.take(rng, 1);
      auto h1 = random_kernel(cat, rng, a1.cod | s, a1.cod | s | pool.take(rng, 1));
      auto h2 = random_kernel(cat, rng, b1.cod | t, b1.cod | t | pool.take(rng, 1));
      auto a = seq(cat, par(cat, a1, identity_kernel(cat, s)), h1);
      auto b = seq(cat, par(cat, b1, identity_kernel(cat, t)), h2);
      auto whole = par(cat, a, b);          // must be defined
      auto small = par(cat, a1, b1);        // down-closure: also defined
      auto witness = seq(cat, par(cat, small, identity_kernel(cat, s | t)), par(cat, h1, h2));
      if (!kernel_equal(cat, whole, witness)) return fail("par(a,b) does not extend par(a',b')");
      return true;
    }
    case FrameCondition::SeqUpClosed: {
      VarSet s0 = pool.take(rng, 1);
      VarSet s1 = s0 | pool.take(rng, 1);
      VarSet s2 = s1 | pool.take(rng, 1);
      auto a = random_kernel(cat, rng, s0, s1);
      auto b = random_kernel(cat, rng, s1, s2);
      VarSet u = pool.take(rng, 1);
      auto hh = random_kernel(cat, rng, s2 | u, s2 | u | pool.take(rng, 1));
      auto c = seq(cat, par(cat, seq(cat, a, b), identity_kernel(cat, u)), hh);
      // The proof's splits: a' = a + id_u, b' = (b + id_u) ; hh.
      auto a2 = par(cat, a, identity_kernel(cat, u));
      auto b2 = seq(cat, par(cat, b, identity_kernel(cat, u)), hh);
      if (!kernel_equal(cat, seq(cat, a2, b2), c)) return fail("up-closure splits miss c'");
      return true;
    }
    case FrameCondition::RevExchange: {
      VarSet shared = pool.take(rng, 1);
      VarSet xa = shared | pool.take(rng, 1);
      VarSet xb = shared | pool.take(rng, 1);
      VarSet ya = xa | pool.take(rng, 1);
      VarSet yb = xb | pool.take(rng, 1);
      auto a1 = random_kernel(cat, rng, xa, ya);
      auto a2 = random_kernel(cat, rng, ya, ya | pool.take(rng, 1));
      auto b1 = random_kernel(cat, rng, xb, yb);
      auto b2 = random_kernel(cat, rng, yb, yb | pool.take(rng, 1));
      auto lhs = par(cat, seq(cat, a1, a2), seq(cat, b1, b2));
      auto rhs = seq(cat, par(cat, a1, b1), par(cat, a2, b2));
      if (!kernel_equal(cat, lhs, rhs)) return fail("(a1;a2)+(b1;b2) != (a1+b1);(a2+b2)");
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Runs `trials` randomized instances of one condition. Failures are data,
// not errors; the first failing trial is described in the report.
template <class I>
ConditionReport frame_check(const Category<I>& cat, FrameCondition cond, std::uint64_t seed,
                            int trials) {
  ConditionReport rep;
  rep.condition = to_string(cond);
  detail::Rng rng(seed ^ (static_cast<std::uint64_t>(cond) * 0x9e3779b97f4a7c15ull));
  for (int t = 0; t < trials; ++t) {
    ++rep.trials;
    std::string note;
    bool ok = false;
    try {
      ok = detail::run_frame_trial(cat, cond, rng, &note);
    } catch (const Error& e) {
      note = e.what();
    }
    if (ok) {
      ++rep.passes;
    } else {
      ++rep.failures;
      if (rep.counterexample.empty())
        rep.counterexample = "trial " + std::to_string(t) + ": " + note;
    }
  }
  return rep;
}

template <class I>
FrameSuiteReport frame_suite(const Category<I>& cat, const std::string& instance_name,
                             std::uint64_t seed, int trials) {
  FrameSuiteReport rep;
  rep.instance = instance_name;
  rep.seed = seed;
  for (FrameCondition c : all_frame_conditions())
    rep.conditions.push_back(frame_check(cat, c, seed, trials));
  return rep;
}

}  // namespace dibi
