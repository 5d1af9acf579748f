#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/markov.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// Signature of a generating morphism: one generator exists per signature;
// names are cosmetic and live outside the payload.
struct GenSig {
  VarList dom;
  VarList cod;

  friend bool operator==(const GenSig& a, const GenSig& b) {
    return a.dom == b.dom && a.cod == b.cod;
  }
  friend bool operator<(const GenSig& a, const GenSig& b) {
    if (a.dom != b.dom) return std::lexicographical_compare(a.dom.begin(), a.dom.end(),
                                                            b.dom.begin(), b.dom.end());
    return std::lexicographical_compare(a.cod.begin(), a.cod.end(), b.cod.begin(), b.cod.end());
  }
};

// The free syntactic instance: morphisms are port graphs over generator
// occurrences. Every wire has one source; fan-out is the number of sinks
// sharing a source (zero encodes deletion, two or more encode copying), so
// the comonoid laws hold by construction and only naturality of deletion
// needs rewriting (dead-node elimination).
struct SynVar {
  using Object = VarList;
  using Theta = std::monostate;

  struct Source {
    int node;  // -1 marks a boundary input
    int port;

    friend bool operator==(const Source& a, const Source& b) {
      return a.node == b.node && a.port == b.port;
    }
    friend bool operator<(const Source& a, const Source& b) {
      return a.node != b.node ? a.node < b.node : a.port < b.port;
    }
  };

  struct Payload {
    VarList dom;
    VarList cod;
    std::vector<GenSig> nodes;
    std::vector<std::vector<Source>> node_in;  // per node, per input port
    std::vector<Source> out_src;               // per boundary output port

    VarName label(const Source& s) const {
      return s.node < 0 ? dom[static_cast<std::size_t>(s.port)]
                        : nodes[static_cast<std::size_t>(s.node)].cod[static_cast<std::size_t>(s.port)];
    }
  };

  static Object object_of(const Theta&, const VarList& l) { return l; }

  static Payload identity(const Object& o) {
    Payload p{o, o, {}, {}, {}};
    for (int i = 0; i < static_cast<int>(o.size()); ++i) p.out_src.push_back({-1, i});
    return p;
  }

  static Payload copy(const Object& o) {
    Payload p{o, o, {}, {}, {}};
    p.cod.insert(p.cod.end(), o.begin(), o.end());
    int n = static_cast<int>(o.size());
    for (int i = 0; i < n; ++i) p.out_src.push_back({-1, i});
    for (int i = 0; i < n; ++i) p.out_src.push_back({-1, i});
    return p;
  }

  static Payload del(const Object& o) { return Payload{o, {}, {}, {}, {}}; }

  static Payload rewire(const Object& o, const std::vector<std::size_t>& perm) {
    Payload p{o, VarList(o.size()), {}, {}, {}};
    p.out_src.resize(o.size(), Source{-1, 0});
    for (std::size_t i = 0; i < o.size(); ++i) {
      p.cod[perm[i]] = o[i];
      p.out_src[perm[i]] = {-1, static_cast<int>(i)};
    }
    return p;
  }

  static Payload generator(const GenSig& sig) {
    Payload p{sig.dom, sig.cod, {sig}, {}, {}};
    std::vector<Source> ins;
    for (int i = 0; i < static_cast<int>(sig.dom.size()); ++i) ins.push_back({-1, i});
    p.node_in.push_back(std::move(ins));
    for (int i = 0; i < static_cast<int>(sig.cod.size()); ++i) p.out_src.push_back({0, i});
    return p;
  }

  static Payload tensor(const Payload& f, const Payload& g) {
    Payload p = f;
    p.dom.insert(p.dom.end(), g.dom.begin(), g.dom.end());
    p.cod.insert(p.cod.end(), g.cod.begin(), g.cod.end());
    int node_off = static_cast<int>(f.nodes.size());
    int in_off = static_cast<int>(f.dom.size());
    auto shift = [&](Source s) {
      if (s.node < 0) return Source{-1, s.port + in_off};
      return Source{s.node + node_off, s.port};
    };
    p.nodes.insert(p.nodes.end(), g.nodes.begin(), g.nodes.end());
    for (const auto& ins : g.node_in) {
      std::vector<Source> shifted;
      shifted.reserve(ins.size());
      for (const auto& s : ins) shifted.push_back(shift(s));
      p.node_in.push_back(std::move(shifted));
    }
    for (const auto& s : g.out_src) p.out_src.push_back(shift(s));
    return p;
  }

  static Payload compose(const Payload& f, const Payload& g) {
    if (f.cod != g.dom) throw EndpointMismatch("synvar compose: boundary labels differ");
    Payload p{f.dom, g.cod, f.nodes, f.node_in, {}};
    int node_off = static_cast<int>(f.nodes.size());
    auto resolve = [&](Source s) {
      if (s.node < 0) return f.out_src[static_cast<std::size_t>(s.port)];
      return Source{s.node + node_off, s.port};
    };
    p.nodes.insert(p.nodes.end(), g.nodes.begin(), g.nodes.end());
    for (const auto& ins : g.node_in) {
      std::vector<Source> resolved;
      resolved.reserve(ins.size());
      for (const auto& s : ins) resolved.push_back(resolve(s));
      p.node_in.push_back(std::move(resolved));
    }
    for (const auto& s : g.out_src) p.out_src.push_back(resolve(s));
    return normalize(p);
  }

  // Deletes generators none of whose outputs reach a sink, to a fixpoint
  // (naturality of deletion), and compacts indices. Idempotent.
  static Payload normalize(const Payload& p) {
    std::size_t n = p.nodes.size();
    std::vector<bool> alive(n, true);
    bool changed = true;
    while (changed) {
      changed = false;
      std::set<Source> used;
      for (const auto& s : p.out_src)
        if (s.node >= 0) used.insert(s);
      for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        for (const auto& s : p.node_in[i])
          if (s.node >= 0) used.insert(s);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (!alive[i]) continue;
        bool any = false;
        for (int q = 0; q < static_cast<int>(p.nodes[i].cod.size()) && !any; ++q)
          any = used.count(Source{static_cast<int>(i), q}) > 0;
        if (!any) {
          alive[i] = false;
          changed = true;
        }
      }
    }
    std::vector<int> remap(n, -1);
    Payload out{p.dom, p.cod, {}, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i]) {
        remap[i] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(p.nodes[i]);
      }
    }
    auto fix = [&](Source s) {
      if (s.node < 0) return s;
      return Source{remap[static_cast<std::size_t>(s.node)], s.port};
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      std::vector<Source> ins;
      ins.reserve(p.node_in[i].size());
      for (const auto& s : p.node_in[i]) ins.push_back(fix(s));
      out.node_in.push_back(std::move(ins));
    }
    for (const auto& s : p.out_src) out.out_src.push_back(fix(s));
    return out;
  }

  // Equality of the free category: isomorphism of normalized graphs that
  // fixes the boundary, preserves generator signatures and port order, and
  // matches every sink's source. Decided by refinement plus backtracking.
  static bool equal(const Payload& fa, const Payload& fb) {
    Payload a = normalize(fa), b = normalize(fb);
    if (a.dom != b.dom || a.cod != b.cod) return false;
    if (a.nodes.size() != b.nodes.size()) return false;
    std::size_t n = a.nodes.size();
    if (n == 0) return a.out_src == b.out_src;

    // Iterated refinement computed on both graphs at once, with color ids
    // drawn from one shared table per round so they are comparable.
    auto signature = [](const Payload& p, const std::vector<std::size_t>& c, std::size_t i) {
      std::vector<long> s;
      s.push_back(static_cast<long>(c[i]));
      for (const auto& src : p.node_in[i]) {
        if (src.node < 0) {
          s.push_back(-1000 - src.port);
        } else {
          s.push_back(static_cast<long>(c[static_cast<std::size_t>(src.node)]) * 1000 + src.port);
        }
      }
      for (int q = 0; q < static_cast<int>(p.nodes[i].cod.size()); ++q) {
        std::vector<long> sinks;
        for (std::size_t j = 0; j < p.out_src.size(); ++j)
          if (p.out_src[j] == Source{static_cast<int>(i), q})
            sinks.push_back(-2000 - static_cast<long>(j));
        for (std::size_t m = 0; m < p.nodes.size(); ++m)
          for (std::size_t pp = 0; pp < p.node_in[m].size(); ++pp)
            if (p.node_in[m][pp] == Source{static_cast<int>(i), q})
              sinks.push_back(static_cast<long>(c[m]) * 1000 + static_cast<long>(pp));
        std::sort(sinks.begin(), sinks.end());
        s.push_back(-3000 - q);
        s.insert(s.end(), sinks.begin(), sinks.end());
      }
      return s;
    };
    std::vector<std::size_t> ca(n), cb(n);
    {
      std::map<GenSig, std::size_t> sig_ids;
      for (std::size_t i = 0; i < n; ++i) ca[i] = sig_ids.emplace(a.nodes[i], sig_ids.size()).first->second;
      for (std::size_t i = 0; i < n; ++i) cb[i] = sig_ids.emplace(b.nodes[i], sig_ids.size()).first->second;
    }
    for (std::size_t round = 0; round < n; ++round) {
      std::map<std::vector<long>, std::size_t> ids;
      std::vector<std::size_t> na(n), nb(n);
      for (std::size_t i = 0; i < n; ++i) na[i] = ids.emplace(signature(a, ca, i), ids.size()).first->second;
      for (std::size_t i = 0; i < n; ++i) nb[i] = ids.emplace(signature(b, cb, i), ids.size()).first->second;
      if (na == ca && nb == cb) break;
      ca = std::move(na);
      cb = std::move(nb);
    }
    {
      // Color multisets must agree or the graphs cannot match.
      std::vector<std::size_t> sa = ca, sb = cb;
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      if (sa != sb) return false;
    }

    std::vector<std::vector<int>> cands(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (a.nodes[i] == b.nodes[j] && ca[i] == cb[j]) cands[i].push_back(static_cast<int>(j));

    std::vector<int> map_ab(n, -1), map_ba(n, -1);
    auto src_matches = [&](const Source& sa, const Source& sb) {
      if (sa.node < 0 || sb.node < 0) return sa == sb;
      if (sa.port != sb.port) return false;
      int m = map_ab[static_cast<std::size_t>(sa.node)];
      return m == -1 || m == sb.node;
    };

    // Order nodes to assign: prefer those adjacent to already-decided ones.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    std::function<bool(std::size_t)> go = [&](std::size_t k) -> bool {
      if (k == n) {
        // Full verification of every sink.
        for (std::size_t i = 0; i < a.out_src.size(); ++i) {
          Source sa = a.out_src[i], sb = b.out_src[i];
          if (sa.node < 0 || sb.node < 0) {
            if (!(sa == sb)) return false;
          } else if (map_ab[static_cast<std::size_t>(sa.node)] != sb.node || sa.port != sb.port) {
            return false;
          }
        }
        for (std::size_t i = 0; i < n; ++i) {
          int j = map_ab[i];
          for (std::size_t p = 0; p < a.node_in[i].size(); ++p) {
            Source sa = a.node_in[i][p], sb = b.node_in[static_cast<std::size_t>(j)][p];
            if (sa.node < 0 || sb.node < 0) {
              if (!(sa == sb)) return false;
            } else if (map_ab[static_cast<std::size_t>(sa.node)] != sb.node || sa.port != sb.port) {
              return false;
            }
          }
        }
        return true;
      }
      std::size_t i = order[k];
      for (int j : cands[i]) {
        if (map_ba[static_cast<std::size_t>(j)] != -1) continue;
        // Incremental consistency on input sources.
        bool ok = true;
        for (std::size_t p = 0; p < a.node_in[i].size() && ok; ++p)
          ok = src_matches(a.node_in[i][p], b.node_in[static_cast<std::size_t>(j)][p]);
        if (!ok) continue;
        map_ab[i] = j;
        map_ba[static_cast<std::size_t>(j)] = static_cast<int>(i);
        if (go(k + 1)) return true;
        map_ab[i] = -1;
        map_ba[static_cast<std::size_t>(j)] = -1;
      }
      return false;
    };
    return go(0);
  }

  static Capabilities caps() {
    return Capabilities{false, false, true, 0.0};
  }
};

namespace syn {

// ---------------------------------------------------------------------------
// Term language for building diagrams.

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum class Kind { Gen, Id, Copy, Del, Swap, Seq, Par };
  Kind kind;
  std::string name;  // generator label, cosmetic
  VarList a, b;      // Gen: dom/cod; Swap: both; Id/Copy/Del: a
  TermPtr lhs, rhs;  // Seq/Par
};

inline VarList term_dom(const TermPtr& t);
inline VarList term_cod(const TermPtr& t);

inline std::string print_term(const TermPtr& t);

inline TermPtr term_gen(std::string name, VarList dom, VarList cod) {
  if (!is_canonical(dom) || !is_canonical(cod))
    throw TypeError("generator '" + name + "' needs strictly increasing, duplicate-free lists");
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Gen;
  t->name = std::move(name);
  t->a = std::move(dom);
  t->b = std::move(cod);
  return t;
}

inline TermPtr term_id(VarList o) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Id;
  t->a = std::move(o);
  return t;
}

inline TermPtr term_copy(VarList o) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Copy;
  t->a = std::move(o);
  return t;
}

inline TermPtr term_del(VarList o) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Del;
  t->a = std::move(o);
  return t;
}

inline TermPtr term_swap(VarList a, VarList b) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Swap;
  t->a = std::move(a);
  t->b = std::move(b);
  return t;
}

inline TermPtr term_seq(TermPtr l, TermPtr r) {
  if (term_cod(l) != term_dom(r))
    throw TypeError("seq endpoints differ: " + print_term(l) + " ends in " +
                    to_string(term_cod(l)) + " but " + print_term(r) + " starts from " +
                    to_string(term_dom(r)));
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Seq;
  t->lhs = std::move(l);
  t->rhs = std::move(r);
  return t;
}

inline TermPtr term_par(TermPtr l, TermPtr r) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Par;
  t->lhs = std::move(l);
  t->rhs = std::move(r);
  return t;
}

inline VarList term_dom(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Gen: return t->a;
    case Term::Kind::Id:
    case Term::Kind::Copy:
    case Term::Kind::Del: return t->a;
    case Term::Kind::Swap: {
      VarList l = t->a;
      l.insert(l.end(), t->b.begin(), t->b.end());
      return l;
    }
    case Term::Kind::Seq: return term_dom(t->lhs);
    case Term::Kind::Par: {
      VarList l = term_dom(t->lhs);
      VarList r = term_dom(t->rhs);
      l.insert(l.end(), r.begin(), r.end());
      return l;
    }
  }
  return {};
}

inline VarList term_cod(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Gen: return t->b;
    case Term::Kind::Id: return t->a;
    case Term::Kind::Copy: {
      VarList l = t->a;
      l.insert(l.end(), t->a.begin(), t->a.end());
      return l;
    }
    case Term::Kind::Del: return {};
    case Term::Kind::Swap: {
      VarList l = t->b;
      l.insert(l.end(), t->a.begin(), t->a.end());
      return l;
    }
    case Term::Kind::Seq: return term_cod(t->rhs);
    case Term::Kind::Par: {
      VarList l = term_cod(t->lhs);
      VarList r = term_cod(t->rhs);
      l.insert(l.end(), r.begin(), r.end());
      return l;
    }
  }
  return {};
}

// Compiles a term to its graph. Comonoid constructors dissolve into fan-out
// degrees during composition.
inline Morphism<SynVar> elaborate(const Category<SynVar>& cat, const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Gen: {
      SynVar::Payload p = SynVar::generator(GenSig{t->a, t->b});
      return {p.dom, p.cod, std::move(p)};
    }
    case Term::Kind::Id: return cat.identity(t->a);
    case Term::Kind::Copy: return cat.copy(t->a);
    case Term::Kind::Del: return cat.del(t->a);
    case Term::Kind::Swap: return cat.swap(t->a, t->b);
    case Term::Kind::Seq: {
      auto l = elaborate(cat, t->lhs);
      auto r = elaborate(cat, t->rhs);
      try {
        return cat.compose(l, r);
      } catch (const EndpointMismatch&) {
        throw TypeError("ill-typed seq at " + print_term(t));
      }
    }
    case Term::Kind::Par: return cat.tensor(elaborate(cat, t->lhs), elaborate(cat, t->rhs));
  }
  throw TypeError("unreachable term kind");
}

inline std::string print_list(const VarList& l) {
  std::string out = "[";
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (i) out += ",";
    out += l[i].str();
  }
  return out + "]";
}

inline std::string print_term(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Gen:
      return "gen " + (t->name.empty() ? std::string("g") : t->name) + " " + print_list(t->a) +
             " " + print_list(t->b);
    case Term::Kind::Id: return "id " + print_list(t->a);
    case Term::Kind::Copy: return "copy " + print_list(t->a);
    case Term::Kind::Del: return "del " + print_list(t->a);
    case Term::Kind::Swap: return "swap " + print_list(t->a) + " " + print_list(t->b);
    case Term::Kind::Seq: return "seq(" + print_term(t->lhs) + ", " + print_term(t->rhs) + ")";
    case Term::Kind::Par: return "par(" + print_term(t->lhs) + ", " + print_term(t->rhs) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Term DSL parser.
//
//   term    := 'seq' '(' term ',' term ')' | 'par' '(' term ',' term ')'
//            | 'id' varlist | 'copy' varlist | 'del' varlist
//            | 'swap' varlist varlist | 'gen' IDENT varlist varlist
//   varlist := '[' [ IDENT { ',' IDENT } ] ']'

class TermParser {
 public:
  explicit TermParser(std::string text) : text_(std::move(text)) {}

  TermPtr parse(std::map<std::string, GenSig>* registry) {
    registry_ = registry;
    TermPtr t = term();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return t;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::map<std::string, GenSig>* registry_ = nullptr;

  [[noreturn]] void fail(const std::string& expected) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError("term syntax error", line, col, expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("'") + c + "'");
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                (ch >= '0' && ch <= '9') || ch == '_';
      if (!ok) break;
      ++pos_;
    }
    if (start == pos_) fail("identifier");
    return text_.substr(start, pos_ - start);
  }

  VarList varlist() {
    expect('[');
    VarList out;
    skip_ws();
    if (eat(']')) return out;
    out.emplace_back(ident());
    while (eat(',')) out.emplace_back(ident());
    expect(']');
    return out;
  }

  TermPtr term() {
    std::string head = ident();
    if (head == "seq" || head == "par") {
      expect('(');
      TermPtr l = term();
      expect(',');
      TermPtr r = term();
      expect(')');
      return head == "seq" ? term_seq(l, r) : term_par(l, r);
    }
    if (head == "id") return term_id(varlist());
    if (head == "copy") return term_copy(varlist());
    if (head == "del") return term_del(varlist());
    if (head == "swap") {
      VarList a = varlist();
      VarList b = varlist();
      return term_swap(std::move(a), std::move(b));
    }
    if (head == "gen") {
      std::string name = ident();
      VarList dom = varlist();
      VarList cod = varlist();
      GenSig sig{dom, cod};
      if (registry_) {
        auto it = registry_->find(name);
        if (it != registry_->end()) {
          if (!(it->second == sig))
            throw TypeError("generator name '" + name + "' reused with a different signature");
        } else {
          registry_->emplace(name, sig);
        }
      }
      return term_gen(std::move(name), std::move(dom), std::move(cod));
    }
    fail("seq, par, id, copy, del, swap or gen");
  }
};

inline TermPtr parse_term(const std::string& text, std::map<std::string, GenSig>* registry = nullptr) {
  return TermParser(text).parse(registry);
}

// ---------------------------------------------------------------------------
// Graph -> term extraction (used to serialize composed diagrams). The
// resulting term elaborates back to an isomorphic graph.

inline TermPtr fold_par(std::vector<TermPtr> parts, const VarList& fallback) {
  if (parts.empty()) return term_id(fallback);
  TermPtr t = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) t = term_par(t, parts[i]);
  return t;
}

// k-fold copy of a single wire: [v] -> [v, ..., v] (k >= 0 legs).
inline TermPtr copy_tree(const VarName& v, std::size_t legs) {
  VarList one{v};
  if (legs == 0) return term_del(one);
  if (legs == 1) return term_id(one);
  TermPtr t = term_copy(one);  // 2 legs
  for (std::size_t have = 2; have < legs; ++have) {
    // Extend by one more leg: copy the first wire again.
    VarList rest(have - 1, v);
    TermPtr step = rest.empty() ? TermPtr(term_copy(one)) : term_par(term_copy(one), term_id(rest));
    t = term_seq(t, step);
  }
  return t;
}

inline TermPtr to_term(const SynVar::Payload& raw,
                       const std::map<std::string, GenSig>* names = nullptr) {
  SynVar::Payload p = SynVar::normalize(raw);
  auto name_of = [&](const GenSig& sig) {
    if (names)
      for (const auto& [n, s] : *names)
        if (s == sig) return n;
    std::string n = "g";
    for (const auto& v : sig.dom) n += "_" + v.str();
    n += "__";
    for (const auto& v : sig.cod) n += "_" + v.str();
    return n;
  };

  std::size_t n = p.nodes.size();
  // Topological order: a node is ready when all node-sourced inputs come from
  // emitted nodes.
  std::vector<bool> emitted(n, false);
  std::vector<std::size_t> topo;
  while (topo.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (emitted[i]) continue;
      bool ready = true;
      for (const auto& s : p.node_in[i])
        if (s.node >= 0 && !emitted[static_cast<std::size_t>(s.node)]) ready = false;
      if (ready) {
        emitted[i] = true;
        topo.push_back(i);
        progressed = true;
      }
    }
    if (!progressed) throw ShapeError("cyclic diagram");
  }

  // Remaining uses of each source after a given stage: recomputed per stage.
  auto uses_after = [&](const SynVar::Source& s, std::size_t stage_idx,
                        const std::vector<std::size_t>& order) {
    std::size_t count = 0;
    for (std::size_t k = stage_idx; k < order.size(); ++k)
      for (const auto& t : p.node_in[order[k]])
        if (t == s) ++count;
    for (const auto& t : p.out_src)
      if (t == s) ++count;
    return count;
  };

  std::vector<SynVar::Source> avail;
  for (int i = 0; i < static_cast<int>(p.dom.size()); ++i) avail.push_back({-1, i});
  TermPtr acc = term_id(p.dom);

  for (std::size_t k = 0; k < topo.size(); ++k) {
    std::size_t node = topo[k];
    const GenSig& sig = p.nodes[node];
    // Stage 1: per available wire, fan out enough legs: the legs consumed by
    // this node plus one spare if the wire is needed later.
    std::vector<TermPtr> fans;
    std::vector<SynVar::Source> expanded;
    VarList expanded_labels;
    for (const auto& s : avail) {
      std::size_t consumed = 0;
      for (const auto& t : p.node_in[node])
        if (t == s) ++consumed;
      std::size_t later = uses_after(s, k + 1, topo);
      std::size_t legs = consumed + (later > 0 ? 1 : 0);
      fans.push_back(copy_tree(p.label(s), legs));
      for (std::size_t leg = 0; leg < legs; ++leg) {
        expanded.push_back(s);
        expanded_labels.push_back(p.label(s));
      }
    }
    acc = term_seq(acc, fold_par(fans, {}));
    // Stage 2: permute so the node's inputs sit at the end, in port order;
    // keepers stay in front in their current order. Consume one expanded leg
    // per (source, occurrence).
    std::vector<bool> taken(expanded.size(), false);
    std::vector<std::size_t> input_slots;
    for (const auto& t : p.node_in[node]) {
      for (std::size_t i = 0; i < expanded.size(); ++i) {
        if (!taken[i] && expanded[i] == t) {
          // Keep one spare leg for later use: prefer the last matching leg.
          // Any matching leg works since legs of one source are identical.
          taken[i] = true;
          input_slots.push_back(i);
          break;
        }
      }
    }
    std::vector<std::size_t> keepers;
    for (std::size_t i = 0; i < expanded.size(); ++i)
      if (!taken[i]) keepers.push_back(i);
    std::vector<std::size_t> perm(expanded.size());
    for (std::size_t r = 0; r < keepers.size(); ++r) perm[keepers[r]] = r;
    for (std::size_t r = 0; r < input_slots.size(); ++r)
      perm[input_slots[r]] = keepers.size() + r;
    // Realize the permutation with a rewiring built from adjacent swaps via a
    // direct permutation term: express as seq of swaps is unnecessary; use a
    // chain of par/swap produced by selection sort.
    {
      std::vector<std::size_t> cur(expanded.size());
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = i;
      VarList labels = expanded_labels;
      // Bubble positions into place; each adjacent transposition is a swap.
      for (std::size_t target = 0; target < cur.size(); ++target) {
        std::size_t at = target;
        while (at < cur.size() && perm[cur[at]] != target) ++at;
        for (std::size_t i = at; i > target; --i) {
          VarList before(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(i - 1));
          VarList after(labels.begin() + static_cast<std::ptrdiff_t>(i + 1), labels.end());
          VarList lone{labels[i - 1]}, ltwo{labels[i]};
          std::vector<TermPtr> parts;
          if (!before.empty()) parts.push_back(term_id(before));
          parts.push_back(term_swap(lone, ltwo));
          if (!after.empty()) parts.push_back(term_id(after));
          acc = term_seq(acc, fold_par(parts, {}));
          std::swap(labels[i - 1], labels[i]);
          std::swap(cur[i - 1], cur[i]);
        }
      }
    }
    // Stage 3: id on keepers, generator on the inputs.
    VarList keeper_labels;
    std::vector<SynVar::Source> next_avail;
    for (std::size_t r = 0; r < keepers.size(); ++r) {
      keeper_labels.push_back(expanded_labels[keepers[r]]);
      next_avail.push_back(expanded[keepers[r]]);
    }
    std::vector<TermPtr> stage3;
    if (!keeper_labels.empty()) stage3.push_back(term_id(keeper_labels));
    stage3.push_back(term_gen(name_of(sig), sig.dom, sig.cod));
    acc = term_seq(acc, fold_par(stage3, {}));
    for (int q = 0; q < static_cast<int>(sig.cod.size()); ++q)
      next_avail.push_back({static_cast<int>(node), q});
    avail = std::move(next_avail);
  }

  // Final stage: fan each available wire to its boundary uses and order them.
  std::vector<TermPtr> fans;
  std::vector<std::size_t> expanded_out;  // boundary port served per leg
  VarList labels;
  for (const auto& s : avail) {
    std::vector<std::size_t> ports;
    for (std::size_t i = 0; i < p.out_src.size(); ++i)
      if (p.out_src[i] == s) ports.push_back(i);
    fans.push_back(copy_tree(p.label(s), ports.size()));
    for (std::size_t port : ports) {
      expanded_out.push_back(port);
      labels.push_back(p.label(s));
    }
  }
  acc = term_seq(acc, fold_par(fans, {}));
  // Sort legs to boundary order with adjacent swaps.
  for (std::size_t target = 0; target < expanded_out.size(); ++target) {
    std::size_t best = target;
    for (std::size_t i = target; i < expanded_out.size(); ++i)
      if (expanded_out[i] < expanded_out[best]) best = i;
    for (std::size_t i = best; i > target; --i) {
      VarList before(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(i - 1));
      VarList after(labels.begin() + static_cast<std::ptrdiff_t>(i + 1), labels.end());
      VarList lone{labels[i - 1]}, ltwo{labels[i]};
      std::vector<TermPtr> parts;
      if (!before.empty()) parts.push_back(term_id(before));
      parts.push_back(term_swap(lone, ltwo));
      if (!after.empty()) parts.push_back(term_id(after));
      acc = term_seq(acc, fold_par(parts, {}));
      std::swap(labels[i - 1], labels[i]);
      std::swap(expanded_out[i - 1], expanded_out[i]);
    }
  }
  return acc;
}

}  // namespace syn

}  // namespace dibi
