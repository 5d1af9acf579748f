#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/kernels.hpp"
#include "dibi/synvar.hpp"
#include "dibi/varspace.hpp"

namespace dibi {
namespace syn {

enum class Flavor { Plain, Markov, Dibi, Superset, ExtSuperset };

inline std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::Plain: return "plain";
    case Flavor::Markov: return "markov";
    case Flavor::Dibi: return "dibi";
    case Flavor::Superset: return "superset";
    case Flavor::ExtSuperset: return "ext-superset";
  }
  return "?";
}

// A decomposition of a state diagram into the blocks of one of the
// conditional-independence shapes: block 0 produces W (and its share of the
// extra variables), blocks 1 and 2 produce X and Y from copies of the W
// wires, block 3 (extended flavor only) is the trailing kernel.
struct DecomposeWitness {
  std::vector<int> block;  // per node of the normalized (possibly U-marginalized) graph
  VarSet u0, u1, u2, u3;   // how the extra variables distribute over blocks
};

struct DecomposeResult {
  std::optional<DecomposeWitness> witness;
  std::size_t search_size = 0;

  bool holds() const { return witness.has_value(); }
};

namespace detail {

// Exhaustive assignment of generator nodes to blocks, with wiring rules:
//   - wires may cross 0->1 and 0->2 only when they carry a W variable that
//     also reaches its boundary port (they are the copied W interface);
//   - in the extended flavor wires may additionally cross into block 3 when
//     they reach some boundary port (the trailing kernel reads only
//     preserved outputs);
//   - a boundary port's wire must come from the block that owns the
//     variable: W from 0, X from 1, Y from 2, extra variables from any block
//     the flavor allows.
inline DecomposeResult block_search(const SynVar::Payload& graph, const VarSet& w, const VarSet& x,
                                    const VarSet& y, const VarSet& u, bool with_h) {
  const std::size_t n = graph.nodes.size();
  DecomposeResult result;

  // Wire bookkeeping: for each node out port, its boundary ports and node sinks.
  struct Wire {
    int node;
    int port;
    VarName label;
    bool has_boundary = false;
    std::vector<int> node_sinks;
  };
  std::vector<Wire> wires;
  for (std::size_t i = 0; i < n; ++i) {
    for (int q = 0; q < static_cast<int>(graph.nodes[i].cod.size()); ++q) {
      Wire wr{static_cast<int>(i), q, graph.nodes[i].cod[static_cast<std::size_t>(q)], false, {}};
      SynVar::Source s{static_cast<int>(i), q};
      for (std::size_t j = 0; j < graph.out_src.size(); ++j)
        if (graph.out_src[j] == s) wr.has_boundary = true;
      for (std::size_t m = 0; m < n; ++m)
        for (const auto& src : graph.node_in[m])
          if (src == s) wr.node_sinks.push_back(static_cast<int>(m));
      wires.push_back(std::move(wr));
    }
  }

  auto cross_ok = [&](int from, int to, const Wire& wr) {
    if (from == to) return true;
    if (from == 0 && (to == 1 || to == 2)) return w.contains(wr.label) && wr.has_boundary;
    if (with_h && to == 3) return wr.has_boundary;
    return false;
  };

  auto boundary_ok = [&](int b, const VarName& v) {
    if (w.contains(v)) return b == 0;
    if (x.contains(v)) return b == 1;
    if (y.contains(v)) return b == 2;
    return with_h ? b >= 0 && b <= 3 : b >= 0 && b <= 2;
  };

  std::vector<int> block(n, -1);
  const int max_block = with_h ? 3 : 2;

  std::function<bool(std::size_t)> go = [&](std::size_t i) -> bool {
    if (i == n) return true;
    for (int b = 0; b <= max_block; ++b) {
      ++result.search_size;
      bool ok = true;
      // Boundary rule and cross rules for wires sourced at i.
      for (const auto& wr : wires) {
        if (!ok) break;
        if (wr.node == static_cast<int>(i)) {
          if (wr.has_boundary && !boundary_ok(b, wr.label)) ok = false;
          for (int m : wr.node_sinks) {
            if (block[static_cast<std::size_t>(m)] != -1 &&
                !cross_ok(b, block[static_cast<std::size_t>(m)], wr))
              ok = false;
          }
        } else if (block[static_cast<std::size_t>(wr.node)] != -1) {
          for (int m : wr.node_sinks)
            if (m == static_cast<int>(i) && !cross_ok(block[static_cast<std::size_t>(wr.node)], b, wr))
              ok = false;
        }
      }
      if (!ok) continue;
      block[i] = b;
      if (go(i + 1)) return true;
      block[i] = -1;
    }
    return false;
  };

  if (go(0)) {
    DecomposeWitness wit;
    wit.block = block;
    for (std::size_t j = 0; j < graph.out_src.size(); ++j) {
      const VarName& v = graph.cod[j];
      if (!u.contains(v)) continue;
      SynVar::Source s = graph.out_src[j];
      int b = block[static_cast<std::size_t>(s.node)];
      if (b == 0) wit.u0.insert(v);
      if (b == 1) wit.u1.insert(v);
      if (b == 2) wit.u2.insert(v);
      if (b == 3) wit.u3.insert(v);
    }
    result.witness = std::move(wit);
  }
  return result;
}

}  // namespace detail

// Decides whether a state diagram can be rewritten into the block shape of
// the requested flavor. Sound and complete for the free category at this
// node count because morphism equality is structural. The dibi flavor is
// decided through the markov route (delete the extra outputs, then search
// the plain shape); the two are equivalent for states of any Markov
// category.
inline DecomposeResult decompose_search(const Category<SynVar>& cat, const Kernel<SynVar>& k,
                                        const VarSet& w, const VarSet& x, const VarSet& y,
                                        const VarSet& u, Flavor flavor,
                                        std::size_t node_budget = 20) {
  if (!k.dom.empty())
    throw ShapeError("decompose_search: unsupported shape, kernel must have empty domain");
  if (!(w | x | y | u).subset_of(k.cod) || !k.cod.subset_of(w | x | y | u))
    throw ShapeError("decompose_search: W,X,Y,U must partition the codomain");

  if (flavor == Flavor::Markov || flavor == Flavor::Dibi) {
    Kernel<SynVar> projected = marginal_kernel(cat, k, w | x | y);
    return decompose_search(cat, projected, w, x, y, VarSet{}, Flavor::Plain, node_budget);
  }
  if (flavor == Flavor::Plain && !u.empty())
    throw ShapeError("plain decomposition requires no extra variables");

  SynVar::Payload graph = SynVar::normalize(embed(cat, k).payload);
  if (graph.nodes.size() > node_budget)
    throw BudgetExceeded("decompose_search: " + std::to_string(graph.nodes.size()) +
                         " generator nodes exceed the budget of " + std::to_string(node_budget));
  return detail::block_search(graph, w, x, y, u, flavor == Flavor::ExtSuperset);
}

// Subkernel-shaped search on states: does k contain a subkernel with empty
// domain whose codomain covers `want`? Splits the nodes into the subkernel
// block and a trailing kernel that may only read boundary-reaching wires.
inline bool state_covers(const Category<SynVar>& cat, const Kernel<SynVar>& k, const VarSet& want) {
  if (!k.dom.empty()) throw ShapeError("state_covers needs an empty-domain kernel");
  if (!want.subset_of(k.cod)) return false;
  if (want.empty()) return true;
  SynVar::Payload graph = SynVar::normalize(embed(cat, k).payload);
  const std::size_t n = graph.nodes.size();

  struct Wire {
    int node;
    VarName label;
    bool has_boundary = false;
    std::vector<int> node_sinks;
    std::vector<VarName> boundary_vars;
  };
  std::vector<Wire> wires;
  for (std::size_t i = 0; i < n; ++i) {
    for (int q = 0; q < static_cast<int>(graph.nodes[i].cod.size()); ++q) {
      Wire wr{static_cast<int>(i), graph.nodes[i].cod[static_cast<std::size_t>(q)], false, {}, {}};
      SynVar::Source s{static_cast<int>(i), q};
      for (std::size_t j = 0; j < graph.out_src.size(); ++j)
        if (graph.out_src[j] == s) {
          wr.has_boundary = true;
          wr.boundary_vars.push_back(graph.cod[j]);
        }
      for (std::size_t m = 0; m < n; ++m)
        for (const auto& src : graph.node_in[m])
          if (src == s) wr.node_sinks.push_back(static_cast<int>(m));
      wires.push_back(std::move(wr));
    }
  }

  // block 0 = subkernel part, block 1 = trailing kernel.
  std::vector<int> block(n, -1);
  std::function<bool(std::size_t)> go = [&](std::size_t i) -> bool {
    if (i == n) {
      // Every wanted variable's port must be fed from block 0.
      for (std::size_t j = 0; j < graph.out_src.size(); ++j) {
        if (!want.contains(graph.cod[j])) continue;
        if (block[static_cast<std::size_t>(graph.out_src[j].node)] != 0) return false;
      }
      return true;
    }
    for (int b = 0; b <= 1; ++b) {
      bool ok = true;
      for (const auto& wr : wires) {
        if (!ok) break;
        int from = wr.node == static_cast<int>(i) ? b : block[static_cast<std::size_t>(wr.node)];
        if (from == -1) continue;
        for (int m : wr.node_sinks) {
          int to = m == static_cast<int>(i) ? b : block[static_cast<std::size_t>(m)];
          if (to == -1 || from == to) continue;
          // Only 0 -> 1 crossings of boundary-reaching wires are allowed.
          if (!(from == 0 && to == 1 && wr.has_boundary)) ok = false;
        }
      }
      if (!ok) continue;
      block[i] = b;
      if (go(i + 1)) return true;
      block[i] = -1;
    }
    return false;
  };
  return go(0);
}

}  // namespace syn
}  // namespace dibi
