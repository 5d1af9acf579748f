#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/markov.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// An input-preserving kernel X -> Y with X <= Y, stored as its nontrivial
// part: a morphism from the canonical list of X to the canonical list of
// Y \ X. Input preservation holds by construction; the embedded morphism
// copies the input verbatim into the output.
template <class I>
struct Kernel {
  VarSet dom;
  VarSet cod;
  Morphism<I> core;  // list(dom) -> list(cod \ dom)
};

template <class I>
Kernel<I> make_kernel(const Category<I>&, VarSet dom, VarSet cod, Morphism<I> core) {
  if (!dom.subset_of(cod)) throw ShapeError("kernel domain must be contained in its codomain");
  if (core.dom != set_to_list(dom) || core.cod != set_to_list(cod - dom))
    throw ShapeError("kernel core endpoints do not match dom/cod");
  return Kernel<I>{std::move(dom), std::move(cod), std::move(core)};
}

template <class I>
Kernel<I> identity_kernel(const Category<I>& cat, const VarSet& on) {
  Morphism<I> core = cat.del(set_to_list(on));
  return Kernel<I>{on, on, std::move(core)};
}

// The full morphism of the kernel: copy the input, run the nontrivial part
// on one leg, and rewire the combined output into canonical order.
template <class I>
Morphism<I> embed(const Category<I>& cat, const Kernel<I>& k) {
  VarList lx = set_to_list(k.dom);
  VarList ly = set_to_list(k.cod);
  Morphism<I> fan = cat.compose(cat.copy(lx), cat.tensor(cat.identity(lx), k.core));
  return cat.permute_cod(fan, ly);
}

// Extracts the nontrivial part of an input-preserving morphism between
// canonical lists; validates the fan shape by re-embedding.
template <class I>
Kernel<I> kernel_from_morphism(const Category<I>& cat, const Morphism<I>& full) {
  if (!is_canonical(full.dom) || !is_canonical(full.cod))
    throw ShapeError("kernel endpoints must be canonical variable lists");
  VarSet x = list_to_set(full.dom);
  VarSet y = list_to_set(full.cod);
  if (!x.subset_of(y)) throw ShapeError("kernel domain must be contained in its codomain");
  Morphism<I> core = cat.marginal_to(full, y - x);
  Kernel<I> k{x, y, std::move(core)};
  if (!cat.equal(embed(cat, k), full)) throw ShapeError("morphism is not input-preserving");
  return k;
}

template <class I>
bool kernel_equal(const Category<I>& cat, const Kernel<I>& a, const Kernel<I>& b) {
  return a.dom == b.dom && a.cod == b.cod && cat.equal(a.core, b.core);
}

// Sequential composition: defined when cod(f) = dom(g); the composite is
// input-preserving again, so the core is recovered exactly.
template <class I>
Kernel<I> seq(const Category<I>& cat, const Kernel<I>& f, const Kernel<I>& g) {
  if (f.cod != g.dom)
    throw SeqUndefined("seq: cod " + to_string(f.cod) + " vs dom " + to_string(g.dom));
  Morphism<I> composite = cat.compose(embed(cat, f), embed(cat, g));
  Morphism<I> core = cat.marginal_to(composite, g.cod - f.dom);
  return Kernel<I>{f.dom, g.cod, std::move(core)};
}

// Parallel composition: defined when dom(f) & dom(g) = cod(f) & cod(g). The
// shared wires are copied, each side's nontrivial part consumes its own
// input set, and everything is rewired into canonical order.
template <class I>
Kernel<I> par(const Category<I>& cat, const Kernel<I>& f, const Kernel<I>& g) {
  const VarSet& x = f.dom;
  const VarSet& u = g.dom;
  if ((x & u) != (f.cod & g.cod))
    throw ParUndefined("par undefined: dom overlap " + to_string(x & u) + " vs cod overlap " +
                       to_string(f.cod & g.cod));
  VarSet shared = x & u;
  VarList l1 = set_to_list(x - shared);
  VarList l = set_to_list(shared);
  VarList l2 = set_to_list(u - shared);
  VarList lx = set_to_list(x);
  VarList lu = set_to_list(u);
  VarList lin = set_to_list(x | u);

  VarList blocks = l1;
  blocks.insert(blocks.end(), l.begin(), l.end());
  blocks.insert(blocks.end(), l2.begin(), l2.end());
  Morphism<I> sigma1 = cat.rewiring(rewiring_between(lin, blocks));

  Morphism<I> duplicate =
      cat.tensor(cat.tensor(cat.identity(l1), cat.copy(l)), cat.identity(l2));

  // [l1 | l | l | l2]  ->  [list(x) | list(u)], positionally.
  auto index_of = [](const VarList& list, const VarName& v) {
    return static_cast<std::size_t>(std::find(list.begin(), list.end(), v) - list.begin());
  };
  std::vector<std::size_t> perm;
  perm.reserve(l1.size() + 2 * l.size() + l2.size());
  for (const auto& v : l1) perm.push_back(index_of(lx, v));
  for (const auto& v : l) perm.push_back(index_of(lx, v));
  for (const auto& v : l) perm.push_back(lx.size() + index_of(lu, v));
  for (const auto& v : l2) perm.push_back(lx.size() + index_of(lu, v));
  Morphism<I> route = cat.permute(duplicate.cod, perm);

  Morphism<I> cores = cat.tensor(f.core, g.core);
  VarSet fresh = (f.cod - x) | (g.cod - u);
  Morphism<I> assembled =
      cat.compose(cat.compose(cat.compose(sigma1, duplicate), route), cores);
  Morphism<I> core = cat.permute_cod(assembled, set_to_list(fresh));
  return Kernel<I>{x | u, f.cod | g.cod, std::move(core)};
}

enum class SubkernelRefutal {
  TypeMismatch,
  CompletionDependence,
  MarginalMismatch,
  ReplayFailure,
};

inline std::string to_string(SubkernelRefutal r) {
  switch (r) {
    case SubkernelRefutal::TypeMismatch: return "type-mismatch";
    case SubkernelRefutal::CompletionDependence: return "completion-dependence";
    case SubkernelRefutal::MarginalMismatch: return "marginal-mismatch";
    case SubkernelRefutal::ReplayFailure: return "replay-failure";
  }
  return "?";
}

// Witness for f <= g: g replays exactly as (f (+) id_extension) (;) continuation.
template <class I>
struct SubkernelWitness {
  VarSet extension;
  Kernel<I> continuation;
};

template <class I>
struct SubkernelResult {
  std::optional<SubkernelWitness<I>> witness;
  std::optional<SubkernelRefutal> refutal;
  // When the search succeeds this is the unique subkernel of the queried
  // type (unique by del-cancellativity).
  std::optional<Kernel<I>> found;

  bool holds() const { return witness.has_value(); }
};

namespace detail {

template <class I>
SubkernelResult<I> find_subkernel_impl(const Category<I>& cat, const Kernel<I>& g,
                                       const VarSet& dom, const VarSet& cod) {
  SubkernelResult<I> res;
  VarSet ext = g.dom - dom;
  if (!dom.subset_of(cod) || !dom.subset_of(g.dom) || !cod.subset_of(g.cod) ||
      !(ext & cod).empty()) {
    res.refutal = SubkernelRefutal::TypeMismatch;
    return res;
  }
  Morphism<I> g_full = embed(cat, g);

  // Candidate nontrivial part: marginal onto cod, factored through deleting
  // the extra inputs.
  Morphism<I> mar = cat.marginal_to(g_full, cod);
  VarList gdom_list = set_to_list(g.dom);
  std::vector<bool> drop(gdom_list.size(), false);
  for (std::size_t i = 0; i < gdom_list.size(); ++i) drop[i] = ext.contains(gdom_list[i]);
  auto factored = I::factor_input(mar.payload, drop);
  if (!factored) {
    res.refutal = SubkernelRefutal::CompletionDependence;
    return res;
  }
  Morphism<I> candidate_full{set_to_list(dom), set_to_list(cod), std::move(*factored)};
  Kernel<I> cand;
  try {
    cand = kernel_from_morphism(cat, candidate_full);
  } catch (const ShapeError&) {
    res.refutal = SubkernelRefutal::CompletionDependence;
    return res;
  }

  // Continuation: condition g on the outputs cod | ext.
  VarSet a = cod | ext;
  VarSet b = g.cod - a;
  VarList mid = set_to_list(a);
  VarList rest = set_to_list(b);
  VarList target = mid;
  target.insert(target.end(), rest.begin(), rest.end());
  Morphism<I> reordered = cat.permute_cod(g_full, target);
  Kernel<I> h;
  try {
    Morphism<I> cond = cat.conditional(reordered, mid.size()).second;
    h = make_kernel(cat, a, g.cod, std::move(cond));
  } catch (const ReassemblyFailed&) {
    res.refutal = SubkernelRefutal::ReplayFailure;
    return res;
  }

  Kernel<I> replay = seq(cat, par(cat, cand, identity_kernel(cat, ext)), h);
  if (!kernel_equal(cat, replay, g)) {
    res.refutal = SubkernelRefutal::ReplayFailure;
    return res;
  }
  res.witness = SubkernelWitness<I>{ext, std::move(h)};
  res.found = std::move(cand);
  return res;
}

}  // namespace detail

// Searches for a subkernel of g with domain exactly `dom` and codomain
// exactly `cod`. The candidate is forced: it must be the marginal of g onto
// `cod`, independent of how the extra inputs are completed; the continuation
// comes from the instance conditional; acceptance requires an exact replay.
// Requires conditionals and del-cancellativity.
template <class I>
SubkernelResult<I> find_subkernel(const Category<I>& cat, const Kernel<I>& g, const VarSet& dom,
                                  const VarSet& cod) {
  constexpr bool kDecidable = requires(const typename I::Payload& p, std::vector<bool> mask) {
    I::factor_input(p, mask);
    I::conditional(p, std::size_t{0});
  };
  Capabilities c = cat.caps();
  if (!c.has_conditionals || !c.del_cancellative || !kDecidable)
    throw Unsupported("subkernel decision needs conditionals and del-cancellativity");
  if constexpr (kDecidable) {
    return detail::find_subkernel_impl(cat, g, dom, cod);
  } else {
    return SubkernelResult<I>{};
  }
}

// Decides f <= g. Sound and complete on instances whose conditionals are
// exact (the candidate of f's type is unique by del-cancellativity, so it
// must equal f).
template <class I>
SubkernelResult<I> subkernel(const Category<I>& cat, const Kernel<I>& f, const Kernel<I>& g) {
  SubkernelResult<I> res = find_subkernel(cat, g, f.dom, f.cod);
  if (!res.holds()) return res;
  if (!kernel_equal(cat, *res.found, f)) {
    res.witness.reset();
    res.found.reset();
    res.refutal = SubkernelRefutal::MarginalMismatch;
  }
  return res;
}

// Marginal kernel of k onto the variable set `onto` (which must contain the
// domain): dom(k) -> onto.
template <class I>
Kernel<I> marginal_kernel(const Category<I>& cat, const Kernel<I>& k, const VarSet& onto) {
  if (!k.dom.subset_of(onto) || !onto.subset_of(k.cod))
    throw NotASubset("marginal_kernel: target must sit between dom and cod");
  Morphism<I> full = cat.marginal_to(embed(cat, k), onto);
  return kernel_from_morphism(cat, full);
}

// Conditional kernel of k given the intermediate set mid: mid -> cod(k),
// input-preserving, such that seq(marginal_kernel(k, mid), result) replays k
// whenever k is conditionable at this split.
template <class I>
Kernel<I> conditional_kernel(const Category<I>& cat, const Kernel<I>& k, const VarSet& mid) {
  if (!k.dom.subset_of(mid) || !mid.subset_of(k.cod))
    throw NotASubset("conditional_kernel: split must sit between dom and cod");
  VarList mid_list = set_to_list(mid);
  VarList rest = set_to_list(k.cod - mid);
  VarList target = mid_list;
  target.insert(target.end(), rest.begin(), rest.end());
  Morphism<I> reordered = cat.permute_cod(embed(cat, k), target);
  Morphism<I> cond = cat.conditional(reordered, mid_list.size()).second;
  return make_kernel(cat, mid, k.cod, std::move(cond));
}

}  // namespace dibi
