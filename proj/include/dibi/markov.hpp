#pragma once

#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// What an instance can promise beyond the plain Markov structure. Decision
// procedures that need conditionals or del-cancellativity check these flags
// and refuse with Unsupported instead of approximating.
struct Capabilities {
  bool has_conditionals = false;
  bool del_cancellative = false;
  bool equality_exact = true;
  double tolerance = 0.0;
};

// Total assignment of an instance object descriptor to every variable.
// A uniform assignment maps everything to the fallback.
template <class Desc>
struct Assignment {
  Desc fallback{};
  std::map<VarName, Desc> overrides;

  const Desc& operator()(const VarName& v) const {
    auto it = overrides.find(v);
    return it == overrides.end() ? fallback : it->second;
  }
};

// A morphism of the variable-list category over an instance: endpoints are
// variable lists, the payload is the instance representation.
template <class I>
struct Morphism {
  VarList dom;
  VarList cod;
  typename I::Payload payload;
};

namespace detail {

inline std::vector<std::size_t> identity_perm(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

}  // namespace detail

// Binds an assignment theta and exposes the symmetric-monoidal + comonoid
// structure over variable lists. Pure; safe to share across threads.
template <class I>
class Category {
  typename I::Theta theta_{};

 public:
  using Object = typename I::Object;

  Category() = default;
  explicit Category(typename I::Theta theta) : theta_(std::move(theta)) {}

  const typename I::Theta& theta() const { return theta_; }

  Object object_of(const VarList& l) const { return I::object_of(theta_, l); }

  Morphism<I> identity(const VarList& o) const {
    return {o, o, I::identity(object_of(o))};
  }

  Morphism<I> copy(const VarList& o) const {
    VarList cod = o;
    cod.insert(cod.end(), o.begin(), o.end());
    return {o, cod, I::copy(object_of(o))};
  }

  Morphism<I> del(const VarList& o) const {
    return {o, {}, I::del(object_of(o))};
  }

  Morphism<I> swap(const VarList& a, const VarList& b) const {
    VarList dom = a;
    dom.insert(dom.end(), b.begin(), b.end());
    VarList cod = b;
    cod.insert(cod.end(), a.begin(), a.end());
    std::vector<std::size_t> perm(dom.size());
    for (std::size_t i = 0; i < a.size(); ++i) perm[i] = b.size() + i;
    for (std::size_t i = 0; i < b.size(); ++i) perm[a.size() + i] = i;
    return {dom, cod, I::rewire(object_of(dom), perm)};
  }

  // Permutation morphism for explicit positions: position i of dom goes to
  // position perm[i] of cod.
  Morphism<I> permute(const VarList& dom, const std::vector<std::size_t>& perm) const {
    if (perm.size() != dom.size()) throw NotAPermutation("permutation arity mismatch");
    VarList cod(dom.size());
    std::vector<bool> used(dom.size(), false);
    for (std::size_t i = 0; i < dom.size(); ++i) {
      if (perm[i] >= dom.size() || used[perm[i]]) throw NotAPermutation("bad permutation");
      used[perm[i]] = true;
      cod[perm[i]] = dom[i];
    }
    return {dom, cod, I::rewire(object_of(dom), perm)};
  }

  Morphism<I> rewiring(const Rewiring& r) const {
    return {r.src, r.dst, I::rewire(object_of(r.src), r.perm)};
  }

  Morphism<I> compose(const Morphism<I>& f, const Morphism<I>& g) const {
    if (f.cod != g.dom)
      throw EndpointMismatch("compose: " + to_string(f.cod) + " vs " + to_string(g.dom));
    return {f.dom, g.cod, I::compose(f.payload, g.payload)};
  }

  Morphism<I> tensor(const Morphism<I>& f, const Morphism<I>& g) const {
    VarList dom = f.dom;
    dom.insert(dom.end(), g.dom.begin(), g.dom.end());
    VarList cod = f.cod;
    cod.insert(cod.end(), g.cod.begin(), g.cod.end());
    return {std::move(dom), std::move(cod), I::tensor(f.payload, g.payload)};
  }

  bool equal(const Morphism<I>& f, const Morphism<I>& g) const {
    return f.dom == g.dom && f.cod == g.cod && I::equal(f.payload, g.payload);
  }

  Capabilities caps() const { return I::caps(); }

  // f followed by the rewiring of its codomain onto dst (name-based; cod must
  // be duplicate-free).
  Morphism<I> permute_cod(const Morphism<I>& f, const VarList& dst) const {
    if (f.cod == dst) return f;
    return compose(f, rewiring(rewiring_between(f.cod, dst)));
  }

  // Keeps the given codomain positions (in the listed order) and deletes the
  // rest: f ; sigma ; (id_keep (x) del_drop).
  Morphism<I> marginal(const Morphism<I>& f, const std::vector<std::size_t>& keep) const {
    std::vector<bool> kept(f.cod.size(), false);
    VarList kept_list;
    for (std::size_t i : keep) {
      kept[i] = true;
      kept_list.push_back(f.cod[i]);
    }
    std::vector<std::size_t> perm(f.cod.size());
    std::size_t next_drop = keep.size();
    std::map<std::size_t, std::size_t> slot;  // cod position -> slot among kept
    for (std::size_t r = 0; r < keep.size(); ++r) slot[keep[r]] = r;
    VarList drop_list;
    for (std::size_t i = 0; i < f.cod.size(); ++i) {
      if (kept[i]) {
        perm[i] = slot[i];
      } else {
        perm[i] = next_drop++;
        drop_list.push_back(f.cod[i]);
      }
    }
    Morphism<I> sigma = {f.cod, {}, I::rewire(object_of(f.cod), perm)};
    VarList mid = kept_list;
    mid.insert(mid.end(), drop_list.begin(), drop_list.end());
    sigma.cod = mid;
    Morphism<I> proj = tensor(identity(kept_list), del(drop_list));
    return compose(compose(f, sigma), proj);
  }

  // Marginal keeping exactly the codomain positions of variables in `keep`,
  // in canonical order. Codomain must be duplicate-free.
  Morphism<I> marginal_to(const Morphism<I>& f, const VarSet& keep) const {
    std::vector<std::size_t> idx;
    for (const auto& v : keep) {
      auto it = std::find(f.cod.begin(), f.cod.end(), v);
      if (it == f.cod.end()) throw NotASubset("marginal: " + v.str() + " not in codomain");
      idx.push_back(static_cast<std::size_t>(it - f.cod.begin()));
    }
    return marginal(f, idx);
  }

  // Splits f : A -> X ++ Y at position k into (marginal f_X, conditional
  // f_|X) with f = copy ; (f_X (x) id) ... reassembly checked by the
  // instance. Requires the conditionals capability.
  std::pair<Morphism<I>, Morphism<I>> conditional(const Morphism<I>& f, std::size_t k) const {
    if constexpr (requires(const typename I::Payload& p) { I::conditional(p, k); }) {
      if (!I::caps().has_conditionals) throw Unsupported("instance has no conditionals");
      auto [mp, cp] = I::conditional(f.payload, k);
      VarList x(f.cod.begin(), f.cod.begin() + static_cast<std::ptrdiff_t>(k));
      VarList y(f.cod.begin() + static_cast<std::ptrdiff_t>(k), f.cod.end());
      return {Morphism<I>{f.dom, x, std::move(mp)}, Morphism<I>{x, y, std::move(cp)}};
    } else {
      throw Unsupported("instance has no conditionals");
    }
  }
};

}  // namespace dibi
