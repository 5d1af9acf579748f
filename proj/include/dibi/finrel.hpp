#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/finstoch.hpp"
#include "dibi/kernels.hpp"
#include "dibi/markov.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// The finite relational instance: Kleisli maps of the nonempty powerset
// monad. A morphism is a total table from input tuples to nonempty sets of
// output tuples. Every row nonempty makes del natural, hence Markov.
struct FinRel {
  using Value = stoch::Value;
  using Alphabet = stoch::Alphabet;
  using Object = std::vector<Alphabet>;
  using Theta = Assignment<Alphabet>;
  using Tuple = stoch::Tuple;
  using TupleSet = std::set<Tuple>;

  struct Payload {
    Object dom;
    Object cod;
    std::map<Tuple, TupleSet> rows;
  };

  static Object object_of(const Theta& theta, const VarList& l) {
    return FinStoch::object_of(theta, l);
  }

  static std::vector<Tuple> enumerate(const Object& o) { return FinStoch::enumerate(o); }

  static Payload identity(const Object& o) {
    Payload p{o, o, {}};
    for (auto& t : enumerate(o)) p.rows[t] = TupleSet{t};
    return p;
  }

  static Payload copy(const Object& o) {
    Object cod = o;
    cod.insert(cod.end(), o.begin(), o.end());
    Payload p{o, std::move(cod), {}};
    for (auto& t : enumerate(o)) {
      Tuple tt = t;
      tt.insert(tt.end(), t.begin(), t.end());
      p.rows[t] = TupleSet{std::move(tt)};
    }
    return p;
  }

  static Payload del(const Object& o) {
    Payload p{o, {}, {}};
    for (auto& t : enumerate(o)) p.rows[t] = TupleSet{Tuple{}};
    return p;
  }

  static Payload rewire(const Object& o, const std::vector<std::size_t>& perm) {
    Object cod(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) cod[perm[i]] = o[i];
    Payload p{o, std::move(cod), {}};
    for (auto& t : enumerate(o)) {
      Tuple out(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) out[perm[i]] = t[i];
      p.rows[t] = TupleSet{std::move(out)};
    }
    return p;
  }

  static Payload compose(const Payload& f, const Payload& g) {
    if (f.cod != g.dom) throw EndpointMismatch("finrel compose: object mismatch");
    Payload p{f.dom, g.cod, {}};
    for (const auto& [a, bs] : f.rows) {
      TupleSet out;
      for (const auto& b : bs) {
        const auto& cs = g.rows.at(b);
        out.insert(cs.begin(), cs.end());
      }
      if (out.empty()) throw EmptyImage("finrel compose produced an empty row");
      p.rows[a] = std::move(out);
    }
    return p;
  }

  static Payload tensor(const Payload& f, const Payload& g) {
    Object dom = f.dom, cod = f.cod;
    dom.insert(dom.end(), g.dom.begin(), g.dom.end());
    cod.insert(cod.end(), g.cod.begin(), g.cod.end());
    Payload p{std::move(dom), std::move(cod), {}};
    for (const auto& [a1, s1] : f.rows) {
      for (const auto& [a2, s2] : g.rows) {
        Tuple a = a1;
        a.insert(a.end(), a2.begin(), a2.end());
        TupleSet out;
        for (const auto& b1 : s1)
          for (const auto& b2 : s2) {
            Tuple b = b1;
            b.insert(b.end(), b2.begin(), b2.end());
            out.insert(std::move(b));
          }
        p.rows[std::move(a)] = std::move(out);
      }
    }
    return p;
  }

  static bool equal(const Payload& f, const Payload& g) {
    return f.dom == g.dom && f.cod == g.cod && f.rows == g.rows;
  }

  static Capabilities caps() {
    // No conditionals claimed, and del is not cancellative: procedures that
    // need them must refuse on this instance.
    return Capabilities{false, false, true, 0.0};
  }

  static void validate(const Payload& f) {
    auto all = enumerate(f.dom);
    if (f.rows.size() != all.size()) throw ShapeError("finrel table is not total over its domain");
    for (const auto& a : all) {
      auto it = f.rows.find(a);
      if (it == f.rows.end()) throw ShapeError("finrel table misses an input row");
      if (it->second.empty()) throw EmptyImage("finrel row with empty output set");
      for (const auto& b : it->second) {
        if (b.size() != f.cod.size()) throw ShapeError("finrel output arity mismatch");
        for (std::size_t i = 0; i < b.size(); ++i)
          if (!std::binary_search(f.cod[i].begin(), f.cod[i].end(), b[i]))
            throw ShapeError("finrel output value '" + b[i] + "' outside alphabet");
      }
    }
  }
};

namespace rel {

using Memory = stoch::Memory;
using MemorySet = std::set<Memory>;

// Monadic bind of the nonempty powerset monad: union of images.
template <class K>
MemorySet rel_bind(const MemorySet& s, K&& k) {
  MemorySet out;
  for (const auto& m : s) {
    MemorySet im = k(m);
    if (im.empty()) throw EmptyImage("rel_bind: empty image");
    out.insert(im.begin(), im.end());
  }
  return out;
}

inline Memory restrict_mem(const Memory& m, const VarSet& u) {
  Memory out;
  for (const auto& v : u) out[v] = m.at(v);
  return out;
}

// Applies a relational kernel row-wise via its full (input-preserving) form.
inline MemorySet kernel_row(const Category<FinRel>& cat, const Kernel<FinRel>& k,
                            const Memory& input) {
  Morphism<FinRel> full = embed(cat, k);
  MemorySet out;
  for (const auto& t : full.payload.rows.at(stoch::to_tuple(full.dom, input)))
    out.insert(stoch::to_memory(full.cod, t));
  return out;
}

// The joint output row of two relational kernels on one combined input:
// all memories whose projections land in each factor's row. Mirrors the
// product formula of the probabilistic model with conjunction in place of
// multiplication.
inline MemorySet rel_parallel_row(const Category<FinRel>& cat, const Memory& input,
                                  const Kernel<FinRel>& f, const Kernel<FinRel>& g) {
  if ((f.dom & g.dom) != (f.cod & g.cod))
    throw OverlapViolation("rel_parallel_row: dom overlap " + to_string(f.dom & g.dom) +
                           " differs from cod overlap " + to_string(f.cod & g.cod));
  MemorySet fs = kernel_row(cat, f, restrict_mem(input, f.dom));
  MemorySet gs = kernel_row(cat, g, restrict_mem(input, g.dom));
  VarSet joint_vars = f.cod | g.cod;
  // Enumerate candidates as compatible unions of one memory from each side.
  MemorySet out;
  for (const auto& mf : fs) {
    for (const auto& mg : gs) {
      bool compatible = true;
      Memory joined = mf;
      for (const auto& [var, val] : mg) {
        auto it = joined.find(var);
        if (it != joined.end() && it->second != val) {
          compatible = false;
          break;
        }
        joined[var] = val;
      }
      if (compatible && joined.size() == joint_vars.size()) out.insert(std::move(joined));
    }
  }
  return out;
}

// Flat-relation view of a kernel: the union of its full rows, one tuple per
// (input, output) pair; the input part is already preserved inside each
// output memory.
inline MemorySet flat_view(const Category<FinRel>& cat, const Kernel<FinRel>& k) {
  Morphism<FinRel> full = embed(cat, k);
  MemorySet out;
  for (const auto& [a, bs] : full.payload.rows)
    for (const auto& b : bs) out.insert(stoch::to_memory(full.cod, b));
  return out;
}

// Imports a flat relation as a kernel dom -> cod. Every input row must be
// inhabited (nonempty powerset); inputs are grouped from the tuples.
inline Kernel<FinRel> from_flat(const Category<FinRel>& cat, const VarSet& dom, const VarSet& cod,
                                const MemorySet& tuples) {
  VarList dl = set_to_list(dom);
  VarList cl = set_to_list(cod);
  Morphism<FinRel> full{dl, cl, {cat.object_of(dl), cat.object_of(cl), {}}};
  for (auto& a : FinRel::enumerate(full.payload.dom)) full.payload.rows[a] = {};
  for (const auto& m : tuples) {
    Memory in = restrict_mem(m, dom);
    full.payload.rows.at(stoch::to_tuple(dl, in)).insert(stoch::to_tuple(cl, m));
  }
  for (const auto& [a, bs] : full.payload.rows)
    if (bs.empty()) throw EmptyImage("from_flat: input row with no tuples");
  return kernel_from_morphism(cat, full);
}

// Projection of a flat relation onto a variable subset.
inline MemorySet project(const MemorySet& r, const VarSet& onto) {
  MemorySet out;
  for (const auto& m : r) out.insert(restrict_mem(m, onto));
  return out;
}

// Natural join of two flat relations.
inline MemorySet natural_join(const MemorySet& a, const MemorySet& b) {
  MemorySet out;
  for (const auto& ma : a) {
    for (const auto& mb : b) {
      bool compatible = true;
      Memory joined = ma;
      for (const auto& [var, val] : mb) {
        auto it = joined.find(var);
        if (it != joined.end() && it->second != val) {
          compatible = false;
          break;
        }
        joined[var] = val;
      }
      if (compatible) out.insert(std::move(joined));
    }
  }
  return out;
}

}  // namespace rel

}  // namespace dibi
