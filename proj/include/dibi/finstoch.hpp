#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/markov.hpp"
#include "dibi/rational.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

namespace stoch {

using Value = std::string;

// A finite value alphabet; canonically sorted and duplicate-free.
using Alphabet = std::vector<Value>;

inline Alphabet make_alphabet(std::vector<Value> vals) {
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  if (vals.empty()) throw ShapeError("alphabet must be nonempty");
  return vals;
}

// A memory: an assignment of values to finitely many variables.
using Memory = std::map<VarName, Value>;

// A discrete distribution over memories. Weights are positive exact
// rationals summing to one; zero-weight entries are never stored.
using Dist = std::map<Memory, Q>;

inline Dist dirac(const Memory& m) { return Dist{{m, Q(1)}}; }

inline void check_normalized(const Dist& d) {
  Q total(0);
  for (const auto& [m, q] : d) {
    if (q <= 0) throw ShapeError("distribution with nonpositive weight");
    total += q;
  }
  if (total != 1) throw ShapeError("distribution does not sum to 1 (got " + to_string(total) + ")");
}

// Monadic bind for the discrete distribution monad.
template <class K>
Dist kleisli_bind(const Dist& d, K&& k) {
  Dist out;
  for (const auto& [m, q] : d) {
    for (const auto& [n, p] : k(m)) {
      out[n] += q * p;
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    it = it->second == 0 ? out.erase(it) : std::next(it);
  }
  return out;
}

// Projects a distribution over memories on X to one over the subset u.
inline Dist marginalize(const Dist& d, const VarSet& u) {
  Dist out;
  for (const auto& [m, q] : d) {
    Memory restricted;
    for (const auto& v : u) {
      auto it = m.find(v);
      if (it == m.end()) throw NotASubset("marginalize: " + v.str() + " unbound in support memory");
      restricted[v] = it->second;
    }
    out[restricted] += q;
  }
  return out;
}

using Tuple = std::vector<Value>;
using SparseDist = std::map<Tuple, Q>;

}  // namespace stoch

// The finite exact-rational stochastic instance: morphisms between lists of
// variables are total tables from input tuples to distributions over output
// tuples, over per-variable alphabets.
struct FinStoch {
  using Value = stoch::Value;
  using Alphabet = stoch::Alphabet;
  using Object = std::vector<Alphabet>;
  using Theta = Assignment<Alphabet>;
  using Tuple = stoch::Tuple;
  using SparseDist = stoch::SparseDist;

  struct Payload {
    Object dom;
    Object cod;
    std::map<Tuple, SparseDist> rows;  // total over the dom product space
  };

  static Object object_of(const Theta& theta, const VarList& l) {
    Object o;
    o.reserve(l.size());
    for (const auto& v : l) o.push_back(theta(v));
    return o;
  }

  static std::vector<Tuple> enumerate(const Object& o) {
    std::vector<Tuple> out{Tuple{}};
    for (const auto& alpha : o) {
      std::vector<Tuple> next;
      next.reserve(out.size() * alpha.size());
      for (const auto& t : out) {
        for (const auto& v : alpha) {
          Tuple e = t;
          e.push_back(v);
          next.push_back(std::move(e));
        }
      }
      out = std::move(next);
    }
    return out;
  }

  static Payload identity(const Object& o) {
    Payload p{o, o, {}};
    for (auto& t : enumerate(o)) p.rows[t] = SparseDist{{t, Q(1)}};
    return p;
  }

  static Payload copy(const Object& o) {
    Object cod = o;
    cod.insert(cod.end(), o.begin(), o.end());
    Payload p{o, std::move(cod), {}};
    for (auto& t : enumerate(o)) {
      Tuple tt = t;
      tt.insert(tt.end(), t.begin(), t.end());
      p.rows[t] = SparseDist{{std::move(tt), Q(1)}};
    }
    return p;
  }

  static Payload del(const Object& o) {
    Payload p{o, {}, {}};
    for (auto& t : enumerate(o)) p.rows[t] = SparseDist{{Tuple{}, Q(1)}};
    return p;
  }

  static Payload rewire(const Object& o, const std::vector<std::size_t>& perm) {
    Object cod(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) cod[perm[i]] = o[i];
    Payload p{o, std::move(cod), {}};
    for (auto& t : enumerate(o)) {
      Tuple out(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) out[perm[i]] = t[i];
      p.rows[t] = SparseDist{{std::move(out), Q(1)}};
    }
    return p;
  }

  static Payload compose(const Payload& f, const Payload& g) {
    if (f.cod != g.dom) throw EndpointMismatch("finstoch compose: object mismatch");
    Payload p{f.dom, g.cod, {}};
    for (const auto& [a, db] : f.rows) {
      SparseDist out;
      for (const auto& [b, q] : db) {
        auto it = g.rows.find(b);
        if (it == g.rows.end()) throw ShapeError("finstoch compose: missing row");
        for (const auto& [c, r] : it->second) out[c] += q * r;
      }
      prune(out);
      p.rows[a] = std::move(out);
    }
    return p;
  }

  static Payload tensor(const Payload& f, const Payload& g) {
    Object dom = f.dom, cod = f.cod;
    dom.insert(dom.end(), g.dom.begin(), g.dom.end());
    cod.insert(cod.end(), g.cod.begin(), g.cod.end());
    Payload p{std::move(dom), std::move(cod), {}};
    for (const auto& [a1, d1] : f.rows) {
      for (const auto& [a2, d2] : g.rows) {
        Tuple a = a1;
        a.insert(a.end(), a2.begin(), a2.end());
        SparseDist out;
        for (const auto& [b1, q1] : d1)
          for (const auto& [b2, q2] : d2) {
            Tuple b = b1;
            b.insert(b.end(), b2.begin(), b2.end());
            out[std::move(b)] = q1 * q2;
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
    return Capabilities{true, true, true, 0.0};
  }

  // Splits f : A -> X ++ Y (at position k of the codomain) into the marginal
  // A -> X and a conditional X -> Y with exact reassembly. Conditional rows
  // are pooled across input rows; where the marginal carries no mass the row
  // defaults to the point mass on the least Y-tuple. Throws ReassemblyFailed
  // when no single conditional table reproduces f.
  static std::pair<Payload, Payload> conditional(const Payload& f, std::size_t k) {
    Object xo(f.cod.begin(), f.cod.begin() + static_cast<std::ptrdiff_t>(k));
    Object yo(f.cod.begin() + static_cast<std::ptrdiff_t>(k), f.cod.end());
    Payload marg{f.dom, xo, {}};
    for (const auto& [a, d] : f.rows) {
      SparseDist out;
      for (const auto& [xy, q] : d) out[Tuple(xy.begin(), xy.begin() + static_cast<std::ptrdiff_t>(k))] += q;
      marg.rows[a] = std::move(out);
    }
    Payload cond{xo, yo, {}};
    for (auto& x : enumerate(xo)) {
      std::optional<SparseDist> row;
      for (const auto& [a, d] : f.rows) {
        const auto& mx = marg.rows.at(a);
        auto it = mx.find(x);
        if (it == mx.end() || it->second == 0) continue;
        SparseDist r;
        for (const auto& [xy, q] : d) {
          if (!std::equal(x.begin(), x.end(), xy.begin())) continue;
          r[Tuple(xy.begin() + static_cast<std::ptrdiff_t>(k), xy.end())] = q / it->second;
        }
        row = std::move(r);
        break;
      }
      if (!row) row = SparseDist{{least_tuple(yo), Q(1)}};
      cond.rows[x] = std::move(*row);
    }
    // Reassembly must reproduce f exactly.
    for (const auto& [a, d] : f.rows) {
      SparseDist re;
      for (const auto& [x, qx] : marg.rows.at(a)) {
        for (const auto& [y, qy] : cond.rows.at(x)) {
          Tuple xy = x;
          xy.insert(xy.end(), y.begin(), y.end());
          re[std::move(xy)] += qx * qy;
        }
      }
      prune(re);
      if (re != d) throw ReassemblyFailed("finstoch conditional: table is not conditionable at this split");
    }
    return {std::move(marg), std::move(cond)};
  }

  // Attempts to factor f through deleting the masked input positions: the
  // rows must not depend on them. Returns the factored payload or nullopt.
  static std::optional<Payload> factor_input(const Payload& f, const std::vector<bool>& drop) {
    Object kept;
    for (std::size_t i = 0; i < f.dom.size(); ++i)
      if (!drop[i]) kept.push_back(f.dom[i]);
    Payload out{kept, f.cod, {}};
    for (const auto& [a, d] : f.rows) {
      Tuple key;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (!drop[i]) key.push_back(a[i]);
      auto [it, inserted] = out.rows.emplace(std::move(key), d);
      if (!inserted && it->second != d) return std::nullopt;
    }
    return out;
  }

  static Tuple least_tuple(const Object& o) {
    Tuple t;
    t.reserve(o.size());
    for (const auto& alpha : o) t.push_back(alpha.front());
    return t;
  }

  static void prune(SparseDist& d) {
    for (auto it = d.begin(); it != d.end();) {
      it = it->second == 0 ? d.erase(it) : std::next(it);
    }
  }

  // Validates table invariants: totality over the dom product, support inside
  // the cod alphabets, rows normalized.
  static void validate(const Payload& f) {
    auto all = enumerate(f.dom);
    if (f.rows.size() != all.size()) throw ShapeError("finstoch table is not total over its domain");
    for (const auto& a : all) {
      auto it = f.rows.find(a);
      if (it == f.rows.end()) throw ShapeError("finstoch table misses an input row");
      Q total(0);
      for (const auto& [b, q] : it->second) {
        if (q <= 0 || q > 1) throw ShapeError("finstoch weight outside (0,1]");
        if (b.size() != f.cod.size()) throw ShapeError("finstoch output arity mismatch");
        for (std::size_t i = 0; i < b.size(); ++i) {
          if (!std::binary_search(f.cod[i].begin(), f.cod[i].end(), b[i]))
            throw ShapeError("finstoch output value '" + b[i] + "' outside alphabet");
        }
        total += q;
      }
      if (total != 1) throw ShapeError("finstoch row does not sum to 1");
    }
  }
};

namespace stoch {

inline Memory to_memory(const VarList& vars, const Tuple& t) {
  Memory m;
  for (std::size_t i = 0; i < vars.size(); ++i) m[vars[i]] = t[i];
  return m;
}

inline Tuple to_tuple(const VarList& vars, const Memory& m) {
  Tuple t;
  t.reserve(vars.size());
  for (const auto& v : vars) t.push_back(m.at(v));
  return t;
}

// The distribution of a state (a morphism from the empty list), keyed by
// memories over its codomain variables.
inline Dist state_dist(const Morphism<FinStoch>& s) {
  if (!s.dom.empty()) throw ShapeError("state_dist: morphism has nonempty domain");
  Dist d;
  for (const auto& [t, q] : s.payload.rows.at(Tuple{})) d[to_memory(s.cod, t)] = q;
  return d;
}

}  // namespace stoch

}  // namespace dibi
