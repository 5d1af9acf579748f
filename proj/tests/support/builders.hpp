#pragma once

// Shared literal builders for the test suites.

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "dibi/finstoch.hpp"
#include "dibi/kernels.hpp"
#include "dibi/markov.hpp"
#include "dibi/varspace.hpp"

namespace dibitest {

using namespace dibi;

inline VarName v(const char* s) { return VarName(s); }

inline VarList vl(std::initializer_list<const char*> names) {
  VarList l;
  for (const char* n : names) l.emplace_back(n);
  return l;
}

inline VarSet vs(std::initializer_list<const char*> names) {
  VarSet s;
  for (const char* n : names) s.insert(VarName(n));
  return s;
}

inline stoch::Memory mem(std::initializer_list<std::pair<const char*, const char*>> bindings) {
  stoch::Memory m;
  for (const auto& [var, val] : bindings) m[VarName(var)] = val;
  return m;
}

inline Category<FinStoch> cat01() {
  FinStoch::Theta theta;
  theta.fallback = stoch::make_alphabet({"0", "1"});
  return Category<FinStoch>(theta);
}

struct RowSpec {
  stoch::Memory given;
  std::vector<std::pair<stoch::Memory, Q>> out;
};

// Builds a full input-preserving morphism from memory-keyed rows and wraps it
// as a kernel (validating the fan shape).
inline Kernel<FinStoch> stoch_kernel(const Category<FinStoch>& cat, const VarList& dom,
                                     const VarList& cod, const std::vector<RowSpec>& rows) {
  Morphism<FinStoch> m{dom, cod, {}};
  m.payload.dom = cat.object_of(dom);
  m.payload.cod = cat.object_of(cod);
  for (const auto& r : rows) {
    FinStoch::SparseDist d;
    for (const auto& [out_mem, q] : r.out) d[stoch::to_tuple(cod, out_mem)] = q;
    m.payload.rows[stoch::to_tuple(dom, r.given)] = std::move(d);
  }
  FinStoch::validate(m.payload);
  return kernel_from_morphism(cat, m);
}

// The running three-variable example: f : {z} -> {x,y,z} and its two
// projections g1 : {z} -> {x,z}, g2 : {z} -> {y,z}.
inline Kernel<FinStoch> example_f(const Category<FinStoch>& cat) {
  return stoch_kernel(
      cat, vl({"z"}), vl({"x", "y", "z"}),
      {{mem({{"z", "0"}}),
        {{mem({{"x", "0"}, {"y", "0"}, {"z", "0"}}), Q(1, 4)},
         {mem({{"x", "0"}, {"y", "1"}, {"z", "0"}}), Q(1, 4)},
         {mem({{"x", "1"}, {"y", "0"}, {"z", "0"}}), Q(1, 4)},
         {mem({{"x", "1"}, {"y", "1"}, {"z", "0"}}), Q(1, 4)}}},
       {mem({{"z", "1"}}),
        {{mem({{"x", "0"}, {"y", "0"}, {"z", "1"}}), Q(1, 16)},
         {mem({{"x", "0"}, {"y", "1"}, {"z", "1"}}), Q(3, 16)},
         {mem({{"x", "1"}, {"y", "0"}, {"z", "1"}}), Q(3, 16)},
         {mem({{"x", "1"}, {"y", "1"}, {"z", "1"}}), Q(9, 16)}}}});
}

inline Kernel<FinStoch> example_g(const Category<FinStoch>& cat, const char* out) {
  return stoch_kernel(cat, vl({"z"}), VarList{VarName(out), VarName("z")},
                      {{mem({{"z", "0"}}),
                        {{mem({{out, "0"}, {"z", "0"}}), Q(1, 2)},
                         {mem({{out, "1"}, {"z", "0"}}), Q(1, 2)}}},
                       {mem({{"z", "1"}}),
                        {{mem({{out, "0"}, {"z", "1"}}), Q(1, 4)},
                         {mem({{out, "1"}, {"z", "1"}}), Q(3, 4)}}}});
}

// Uniform state on z.
inline Kernel<FinStoch> example_h0(const Category<FinStoch>& cat) {
  return stoch_kernel(cat, {}, vl({"z"}),
                      {{stoch::Memory{},
                        {{mem({{"z", "0"}}), Q(1, 2)}, {mem({{"z", "1"}}), Q(1, 2)}}}});
}

}  // namespace dibitest
