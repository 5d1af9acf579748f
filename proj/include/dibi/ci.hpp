#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/finrel.hpp"
#include "dibi/finstoch.hpp"
#include "dibi/formula.hpp"
#include "dibi/gauss.hpp"
#include "dibi/kernels.hpp"
#include "dibi/satisfy.hpp"
#include "dibi/synvar.hpp"
#include "dibi/synvar_search.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

enum class CIFlavor { Dibi, Plain, Markov, Superset, ExtSuperset };

inline std::string to_string(CIFlavor f) {
  switch (f) {
    case CIFlavor::Dibi: return "dibi";
    case CIFlavor::Plain: return "plain";
    case CIFlavor::Markov: return "markov";
    case CIFlavor::Superset: return "superset";
    case CIFlavor::ExtSuperset: return "ext-superset";
  }
  return "?";
}

inline CIFlavor ci_flavor_from_string(const std::string& s) {
  if (s == "dibi") return CIFlavor::Dibi;
  if (s == "plain") return CIFlavor::Plain;
  if (s == "markov") return CIFlavor::Markov;
  if (s == "superset") return CIFlavor::Superset;
  if (s == "ext-superset") return CIFlavor::ExtSuperset;
  throw ShapeError("unknown CI flavor: " + s);
}

// A conditional-independence query: X and Y given W, with extra output
// variables U carried by the state.
struct CIQuery {
  VarSet w, x, y, u;
  CIFlavor flavor = CIFlavor::Dibi;
};

template <class I>
void validate_ci_query(const Kernel<I>& k, const CIQuery& q) {
  if (!k.dom.empty()) throw ShapeError("CI queries apply to states (empty-domain kernels)");
  if (!(q.w & q.x).empty() || !(q.w & q.y).empty() || !(q.w & q.u).empty() ||
      !(q.x & q.y).empty() || !(q.x & q.u).empty() || !(q.y & q.u).empty())
    throw ShapeError("CI query sets must be mutually disjoint");
  if ((q.w | q.x | q.y | q.u) != k.cod)
    throw ShapeError("CI query sets must cover the state's codomain exactly");
  if (q.flavor == CIFlavor::Plain && !q.u.empty())
    throw ShapeError("plain CI requires no extra variables");
}

// The sequencing/star formula whose satisfaction defines the logical CI.
inline FormulaPtr ci_formula(const VarSet& w, const VarSet& x, const VarSet& y) {
  return f_fatsemi(f_atom(VarSet{}, w), f_star(f_atom(w, w | x), f_atom(w, w | y)));
}

namespace detail {

// --- FinStoch: exact factorization checks over memory spaces ----------------

inline Q mass(const stoch::Dist& d, const stoch::Memory& m) {
  auto it = d.find(m);
  return it == d.end() ? Q(0) : it->second;
}

inline stoch::Memory merge_mem(const stoch::Memory& a, const stoch::Memory& b) {
  stoch::Memory m = a;
  m.insert(b.begin(), b.end());
  return m;
}

inline std::vector<stoch::Memory> memory_space(const Category<FinStoch>& cat, const VarSet& vars) {
  VarList l = set_to_list(vars);
  std::vector<stoch::Memory> out;
  for (auto& t : FinStoch::enumerate(cat.object_of(l))) out.push_back(stoch::to_memory(l, t));
  return out;
}

// p(w,x,y) * p(w) == p(w,x) * p(w,y) over the full product space.
inline bool finstoch_factorizes(const Category<FinStoch>& cat, const stoch::Dist& joint,
                                const VarSet& w, const VarSet& x, const VarSet& y) {
  stoch::Dist pw = stoch::marginalize(joint, w);
  stoch::Dist pwx = stoch::marginalize(joint, w | x);
  stoch::Dist pwy = stoch::marginalize(joint, w | y);
  for (const auto& mw : memory_space(cat, w)) {
    for (const auto& mx : memory_space(cat, x)) {
      for (const auto& my : memory_space(cat, y)) {
        stoch::Memory mwx = merge_mem(mw, mx);
        stoch::Memory mwy = merge_mem(mw, my);
        stoch::Memory all = merge_mem(mwx, my);
        if (mass(joint, all) * mass(pw, mw) != mass(pwx, mwx) * mass(pwy, mwy)) return false;
      }
    }
  }
  return true;
}

inline bool finstoch_markov(const Category<FinStoch>& cat, const Kernel<FinStoch>& k,
                            const CIQuery& q) {
  stoch::Dist joint = stoch::state_dist(embed(cat, k));
  stoch::Dist projected = stoch::marginalize(joint, q.w | q.x | q.y);
  return finstoch_factorizes(cat, projected, q.w, q.x, q.y);
}

// Enumerates ordered three-way partitions of U and tests the exact product
// form p(all) * p(w)^2 == p(w,u0) * p(w,x,u1) * p(w,y,u2).
inline bool finstoch_superset(const Category<FinStoch>& cat, const Kernel<FinStoch>& k,
                              const CIQuery& q) {
  VarList uvars = set_to_list(q.u);
  if (uvars.size() > 8)
    throw BudgetExceeded("superset CI: more than 8 extra variables");
  stoch::Dist joint = stoch::state_dist(embed(cat, k));
  stoch::Dist pw = stoch::marginalize(joint, q.w);
  std::size_t parts = 1;
  for (std::size_t i = 0; i < uvars.size(); ++i) parts *= 3;
  for (std::size_t code = 0; code < parts; ++code) {
    VarSet u0, u1, u2;
    std::size_t c = code;
    for (const auto& v : uvars) {
      switch (c % 3) {
        case 0: u0.insert(v); break;
        case 1: u1.insert(v); break;
        default: u2.insert(v); break;
      }
      c /= 3;
    }
    stoch::Dist pwu0 = stoch::marginalize(joint, q.w | u0);
    stoch::Dist pwxu1 = stoch::marginalize(joint, q.w | q.x | u1);
    stoch::Dist pwyu2 = stoch::marginalize(joint, q.w | q.y | u2);
    bool ok = true;
    for (const auto& all : memory_space(cat, k.cod)) {
      stoch::Memory mw = stoch::marginalize(stoch::dirac(all), q.w).begin()->first;
      stoch::Memory m0 = stoch::marginalize(stoch::dirac(all), q.w | u0).begin()->first;
      stoch::Memory m1 = stoch::marginalize(stoch::dirac(all), q.w | q.x | u1).begin()->first;
      stoch::Memory m2 = stoch::marginalize(stoch::dirac(all), q.w | q.y | u2).begin()->first;
      Q lhs = mass(joint, all) * mass(pw, mw) * mass(pw, mw);
      Q rhs = mass(pwu0, m0) * mass(pwxu1, m1) * mass(pwyu2, m2);
      if (lhs != rhs) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

// --- Gauss: conditional cross-covariance ------------------------------------

inline bool gauss_markov(const Category<Gauss>& cat, const Kernel<Gauss>& k, const CIQuery& q) {
  // Reorder the state's output as [w | x | y], dropping u.
  VarList order = set_to_list(q.w);
  VarList xs = set_to_list(q.x), ys = set_to_list(q.y);
  order.insert(order.end(), xs.begin(), xs.end());
  order.insert(order.end(), ys.begin(), ys.end());
  Morphism<Gauss> full = embed(cat, k);
  Morphism<Gauss> proj = cat.marginal_to(full, q.w | q.x | q.y);
  Morphism<Gauss> s = cat.permute_cod(proj, order);
  Eigen::Index dw = 0, dx = 0, dy = 0;
  const auto& obj = s.payload.cod;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < q.w.size()) dw += obj[i];
    else if (i < q.w.size() + xs.size()) dx += obj[i];
    else dy += obj[i];
  }
  const Eigen::MatrixXd& cov = s.payload.cov;
  Eigen::MatrixXd sww = cov.topLeftCorner(dw, dw);
  Eigen::MatrixXd sxyw = cov.block(dw, 0, dx + dy, dw);
  Eigen::MatrixXd sxy = cov.block(dw, dw, dx + dy, dx + dy);
  Eigen::MatrixXd conditional = sxy;
  if (dw > 0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> dec(sww);
    conditional = sxy - sxyw * dec.pseudoInverse() * sxyw.transpose();
  }
  Eigen::MatrixXd cross = conditional.block(0, dx, dx, dy);
  return cross.size() == 0 || cross.cwiseAbs().maxCoeff() <= Gauss::kTol;
}

// --- FinRel: join dependency -------------------------------------------------

inline bool finrel_markov(const Category<FinRel>& cat, const Kernel<FinRel>& k, const CIQuery& q) {
  Kernel<FinRel> projected = marginal_kernel(cat, k, q.w | q.x | q.y);
  rel::MemorySet r = rel::flat_view(cat, projected);
  rel::MemorySet joined =
      rel::natural_join(rel::project(r, q.w | q.x), rel::project(r, q.w | q.y));
  return r == joined;
}

// --- generic: extended superset via explicit witness construction -----------

// Builds the witness (s0, g1, g2, trailing h) from marginals and
// conditionals (with the extra variables all computed by h) and accepts iff
// the replay reproduces the state. On instances with conditionals this is
// equivalent to Markov CI, but it runs through an independent route.
template <class I>
bool ext_superset_by_witness(const Category<I>& cat, const Kernel<I>& k, const CIQuery& q) {
  Capabilities c = cat.caps();
  if (!c.has_conditionals || !c.del_cancellative)
    throw Unsupported("extended superset CI needs conditionals on this instance");
  Kernel<I> s0 = marginal_kernel(cat, k, q.w);
  Kernel<I> g1, g2, h;
  try {
    g1 = conditional_kernel(cat, marginal_kernel(cat, k, q.w | q.x), q.w);
    g2 = conditional_kernel(cat, marginal_kernel(cat, k, q.w | q.y), q.w);
    h = conditional_kernel(cat, k, q.w | q.x | q.y);
  } catch (const ReassemblyFailed&) {
    return false;
  }
  Kernel<I> first = seq(cat, s0, par(cat, g1, g2));
  Kernel<I> replay = seq(cat, first, h);
  return kernel_equal(cat, replay, k);
}

}  // namespace detail

// --- per-instance decision front ends ----------------------------------------

inline bool ci_holds(const Category<FinStoch>& cat, const Kernel<FinStoch>& k, const CIQuery& q) {
  validate_ci_query(k, q);
  switch (q.flavor) {
    case CIFlavor::Dibi: {
      SatStrategy<FinStoch> strat;
      return satisfies(cat, k, ci_formula(q.w, q.x, q.y), strat);
    }
    case CIFlavor::Plain:
    case CIFlavor::Markov:
      return detail::finstoch_markov(cat, k, q);
    case CIFlavor::Superset:
      return detail::finstoch_superset(cat, k, q);
    case CIFlavor::ExtSuperset:
      return detail::ext_superset_by_witness(cat, k, q);
  }
  return false;
}

inline bool ci_holds(const Category<Gauss>& cat, const Kernel<Gauss>& k, const CIQuery& q) {
  validate_ci_query(k, q);
  switch (q.flavor) {
    case CIFlavor::Dibi: {
      SatStrategy<Gauss> strat;
      return satisfies(cat, k, ci_formula(q.w, q.x, q.y), strat);
    }
    case CIFlavor::Plain:
    case CIFlavor::Markov:
      return detail::gauss_markov(cat, k, q);
    case CIFlavor::Superset:
      throw Unsupported("superset CI is not decided on the gaussian instance");
    case CIFlavor::ExtSuperset:
      return detail::ext_superset_by_witness(cat, k, q);
  }
  return false;
}

inline bool ci_holds(const Category<FinRel>& cat, const Kernel<FinRel>& k, const CIQuery& q) {
  validate_ci_query(k, q);
  switch (q.flavor) {
    case CIFlavor::Plain:
    case CIFlavor::Markov:
      return detail::finrel_markov(cat, k, q);
    default:
      throw Unsupported("the relational instance decides plain and markov CI (join dependency) only");
  }
}

inline bool ci_holds(const Category<SynVar>& cat, const Kernel<SynVar>& k, const CIQuery& q) {
  validate_ci_query(k, q);
  switch (q.flavor) {
    case CIFlavor::Dibi: {
      SatStrategy<SynVar> strat;
      strat.mode = SatMode::BoundedStructural;
      return satisfies(cat, k, ci_formula(q.w, q.x, q.y), strat);
    }
    case CIFlavor::Plain:
      return syn::decompose_search(cat, k, q.w, q.x, q.y, q.u, syn::Flavor::Plain).holds();
    case CIFlavor::Markov:
      return syn::decompose_search(cat, k, q.w, q.x, q.y, q.u, syn::Flavor::Markov).holds();
    case CIFlavor::Superset:
      return syn::decompose_search(cat, k, q.w, q.x, q.y, q.u, syn::Flavor::Superset).holds();
    case CIFlavor::ExtSuperset:
      return syn::decompose_search(cat, k, q.w, q.x, q.y, q.u, syn::Flavor::ExtSuperset).holds();
  }
  return false;
}

// --- randomized theorem cross-check harness ----------------------------------

struct HarnessCheck {
  std::string name;
  int trials = 0;
  int failures = 0;
  std::vector<std::string> notes;
};

struct HarnessReport {
  std::uint64_t seed = 0;
  int states = 0;
  std::vector<HarnessCheck> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (c.failures > 0) return false;
    return true;
  }
};

namespace detail {

// Deterministic generator independent of standard-library distributions.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next() {
    // xorshift64*
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return state * 0x2545f4914f6cdd1dull;
  }

  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
};

inline stoch::Dist random_dist(const Category<FinStoch>& cat, Rng& rng, const VarSet& vars,
                               int max_weight = 4) {
  std::vector<stoch::Memory> space = memory_space(cat, vars);
  std::vector<int> w(space.size());
  int sum = 0;
  for (auto& wi : w) {
    wi = static_cast<int>(rng.below(static_cast<std::size_t>(max_weight + 1)));
    sum += wi;
  }
  if (sum == 0) {
    w[rng.below(w.size())] = 1;
    sum = 1;
  }
  stoch::Dist d;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (w[i] > 0) d[space[i]] = Q(w[i], sum);
  return d;
}

inline Kernel<FinStoch> state_of_dist(const Category<FinStoch>& cat, const stoch::Dist& d,
                                      const VarSet& vars) {
  VarList cod = set_to_list(vars);
  Morphism<FinStoch> m{{}, cod, {{}, cat.object_of(cod), {}}};
  FinStoch::SparseDist row;
  for (const auto& [mem, p] : d) row[stoch::to_tuple(cod, mem)] = p;
  m.payload.rows[stoch::Tuple{}] = std::move(row);
  return kernel_from_morphism(cat, m);
}

// Random state over (w, x, y, u) drawn from a family that mixes generic
// distributions with constructed positives so every implication gets
// exercised in both directions.
inline Kernel<FinStoch> random_ci_state(const Category<FinStoch>& cat, Rng& rng, const VarSet& w,
                                        const VarSet& x, const VarSet& y, const VarSet& u) {
  VarSet all = w | x | y | u;
  switch (rng.below(4)) {
    case 0:
      // Generic joint.
      return state_of_dist(cat, random_dist(cat, rng, all), all);
    case 1: {
      // Markov-true by construction: p(w) p(x|w) p(y|w) p(u|w,x,y).
      stoch::Dist joint;
      for (const auto& [mw, pw] : random_dist(cat, rng, w)) {
        stoch::Dist px = random_dist(cat, rng, x);
        stoch::Dist py = random_dist(cat, rng, y);
        for (const auto& [mx, qx] : px)
          for (const auto& [my, qy] : py) {
            stoch::Memory wxy = merge_mem(merge_mem(mw, mx), my);
            if (u.empty()) {
              joint[wxy] += pw * qx * qy;
            } else {
              for (const auto& [mu, qu] : random_dist(cat, rng, u))
                joint[merge_mem(wxy, mu)] += pw * qx * qy * qu;
            }
          }
      }
      return state_of_dist(cat, joint, all);
    }
    case 2: {
      // Superset-true by construction: split u into u0,u1,u2 and make the
      // factor rows depend on w only.
      VarSet u0, u1, u2;
      for (const auto& v : u) {
        switch (rng.below(3)) {
          case 0: u0.insert(v); break;
          case 1: u1.insert(v); break;
          default: u2.insert(v); break;
        }
      }
      std::map<stoch::Memory, stoch::Dist> p1w, p2w;
      for (const auto& mw : memory_space(cat, w)) {
        p1w[mw] = random_dist(cat, rng, x | u1);
        p2w[mw] = random_dist(cat, rng, y | u2);
      }
      stoch::Dist joint;
      for (const auto& [mw0, p0] : random_dist(cat, rng, w | u0)) {
        stoch::Memory mw = rel::restrict_mem(mw0, w);
        for (const auto& [m1, q1] : p1w.at(mw))
          for (const auto& [m2, q2] : p2w.at(mw))
            joint[merge_mem(merge_mem(mw0, m1), m2)] += p0 * q1 * q2;
      }
      return state_of_dist(cat, joint, all);
    }
    default: {
      // Coupled negative: y copies x regardless of w, u random.
      stoch::Dist joint;
      VarList xl = set_to_list(x), yl = set_to_list(y);
      for (const auto& [mw, pw] : random_dist(cat, rng, w)) {
        for (const auto& [mx, qx] : random_dist(cat, rng, x)) {
          stoch::Memory my;
          for (std::size_t i = 0; i < yl.size() && i < xl.size(); ++i) my[yl[i]] = mx.at(xl[i]);
          for (std::size_t i = xl.size(); i < yl.size(); ++i) my[yl[i]] = "0";
          stoch::Memory wxy = merge_mem(merge_mem(mw, mx), my);
          if (u.empty()) {
            joint[wxy] += pw * qx;
          } else {
            for (const auto& [mu, qu] : random_dist(cat, rng, u))
              joint[merge_mem(wxy, mu)] += pw * qx * qu;
          }
        }
      }
      return state_of_dist(cat, joint, all);
    }
  }
}

}  // namespace detail

// Randomized cross-checks of the equivalences and implications between the
// CI notions on the exact discrete instance, plus the fixed syntactic
// separating example.
inline HarnessReport theorem_harness(std::uint64_t seed, int trials) {
  HarnessReport report;
  report.seed = seed;
  detail::Rng rng(seed);

  FinStoch::Theta theta;
  theta.fallback = stoch::make_alphabet({"0", "1"});
  Category<FinStoch> cat(theta);

  HarnessCheck markov_iff_dibi{"markov <=> dibi", 0, 0, {}};
  HarnessCheck superset_implies_dibi{"superset => dibi", 0, 0, {}};
  HarnessCheck superset_implies_markov{"superset => markov", 0, 0, {}};
  HarnessCheck plain_iff_dibi{"plain <=> dibi (U empty)", 0, 0, {}};
  HarnessCheck ext_iff_markov{"ext-superset <=> markov", 0, 0, {}};

  VarSet w = {VarName("w")}, x = {VarName("x")}, y = {VarName("y")};
  std::vector<VarSet> u_choices = {VarSet{}, {VarName("u1")}, {VarName("u1"), VarName("u2")}};

  for (int t = 0; t < trials; ++t) {
    const VarSet& u = u_choices[rng.below(u_choices.size())];
    Kernel<FinStoch> k = detail::random_ci_state(cat, rng, w, x, y, u);
    ++report.states;

    auto query = [&](CIFlavor fl) { return CIQuery{w, x, y, u, fl}; };
    bool dibi = ci_holds(cat, k, query(CIFlavor::Dibi));
    bool markov = ci_holds(cat, k, query(CIFlavor::Markov));
    bool superset = ci_holds(cat, k, query(CIFlavor::Superset));
    bool ext = ci_holds(cat, k, query(CIFlavor::ExtSuperset));

    ++markov_iff_dibi.trials;
    if (dibi != markov) {
      ++markov_iff_dibi.failures;
      markov_iff_dibi.notes.push_back("state #" + std::to_string(t));
    }
    ++superset_implies_dibi.trials;
    if (superset && !dibi) {
      ++superset_implies_dibi.failures;
      superset_implies_dibi.notes.push_back("state #" + std::to_string(t));
    }
    ++superset_implies_markov.trials;
    if (superset && !markov) {
      ++superset_implies_markov.failures;
      superset_implies_markov.notes.push_back("state #" + std::to_string(t));
    }
    if (u.empty()) {
      bool plain = ci_holds(cat, k, query(CIFlavor::Plain));
      ++plain_iff_dibi.trials;
      if (plain != dibi) {
        ++plain_iff_dibi.failures;
        plain_iff_dibi.notes.push_back("state #" + std::to_string(t));
      }
    }
    ++ext_iff_markov.trials;
    if (ext != markov) {
      ++ext_iff_markov.failures;
      ext_iff_markov.notes.push_back("state #" + std::to_string(t));
    }
  }

  // The fixed syntactic separating example: one root variable, two
  // independent mid variables, and one joint generator downstream of both.
  HarnessCheck separating{"syntactic separating example", 0, 0, {}};
  {
    Category<SynVar> scat{std::monostate{}};
    auto term = syn::parse_term(
        "seq(gen c0 [] [w],"
        " seq(copy [w],"
        "  seq(par(id [w], copy [w]),"
        "   seq(par(id [w], par(gen c1 [w] [x], gen c2 [w] [y])),"
        "    seq(par(id [w], par(copy [x], copy [y])),"
        "     seq(par(id [w], par(id [x], par(swap [x] [y], id [y]))),"
        "      par(id [w,x,y], gen d [x,y] [u1,u2])))))))");
    Morphism<SynVar> m = syn::elaborate(scat, term);
    m = scat.permute_cod(m, set_to_list(list_to_set(m.cod)));
    Kernel<SynVar> k = kernel_from_morphism(scat, m);
    VarSet su = {VarName("u1"), VarName("u2")};
    ++separating.trials;
    bool dibi = ci_holds(scat, k, CIQuery{w, x, y, su, CIFlavor::Dibi});
    bool markov = ci_holds(scat, k, CIQuery{w, x, y, su, CIFlavor::Markov});
    bool superset = ci_holds(scat, k, CIQuery{w, x, y, su, CIFlavor::Superset});
    bool ext = ci_holds(scat, k, CIQuery{w, x, y, su, CIFlavor::ExtSuperset});
    if (!(dibi && markov && ext && !superset)) {
      ++separating.failures;
      separating.notes.push_back("expected dibi/markov/ext true and superset false");
    }
  }

  report.checks = {markov_iff_dibi, superset_implies_dibi, superset_implies_markov,
                   plain_iff_dibi, ext_iff_markov, separating};
  return report;
}

}  // namespace dibi
