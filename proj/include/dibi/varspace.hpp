#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dibi/errors.hpp"

namespace dibi {

// A variable name: letters, digits, underscore; must not start with a digit.
// Names are ordered by the fixed total order used everywhere in the library:
// lexicographic on the base name, with a trailing run of digits compared as a
// number, so x1 < x2 < x10. Names without a numeric suffix come before
// suffixed ones with the same base (x < x1). Case-sensitive.
class VarName {
 public:
  VarName() = default;

  explicit VarName(std::string name) : name_(std::move(name)) {
    if (!valid(name_)) throw ShapeError("invalid variable name: '" + name_ + "'");
    split();
  }

  const std::string& str() const { return name_; }

  static bool valid(const std::string& s) {
    if (s.empty()) return false;
    if (s[0] >= '0' && s[0] <= '9') return false;
    for (char c : s) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
      if (!ok) return false;
    }
    return true;
  }

  friend bool operator==(const VarName& a, const VarName& b) { return a.name_ == b.name_; }

  friend bool operator<(const VarName& a, const VarName& b) {
    if (a.name_ == b.name_) return false;
    if (a.base_len_ != b.base_len_ ||
        a.name_.compare(0, a.base_len_, b.name_, 0, b.base_len_) != 0) {
      return a.name_.compare(0, a.base_len_, b.name_, 0, b.base_len_) < 0;
    }
    // Same base: no-suffix first, then numeric order, then raw text.
    bool sa = a.base_len_ < a.name_.size();
    bool sb = b.base_len_ < b.name_.size();
    if (sa != sb) return !sa;
    if (sa && sb) {
      int c = compare_numeric(a.suffix(), b.suffix());
      if (c != 0) return c < 0;
    }
    return a.name_ < b.name_;
  }

  friend bool operator!=(const VarName& a, const VarName& b) { return !(a == b); }
  friend bool operator>(const VarName& a, const VarName& b) { return b < a; }
  friend bool operator<=(const VarName& a, const VarName& b) { return !(b < a); }
  friend bool operator>=(const VarName& a, const VarName& b) { return !(a < b); }

 private:
  std::string name_;
  std::size_t base_len_ = 0;

  std::string suffix() const { return name_.substr(base_len_); }

  void split() {
    std::size_t i = name_.size();
    while (i > 0 && name_[i - 1] >= '0' && name_[i - 1] <= '9') --i;
    base_len_ = i;
  }

  static int compare_numeric(const std::string& a, const std::string& b) {
    auto strip = [](const std::string& s) {
      std::size_t i = 0;
      while (i + 1 < s.size() && s[i] == '0') ++i;
      return s.substr(i);
    };
    std::string sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size() ? -1 : 1;
    return sa.compare(sb);
  }
};

// A finite sequence of variables. General category objects may repeat a
// variable (copy has codomain [x, x]); the canonical form of a set never does.
using VarList = std::vector<VarName>;

// A finite set of variables; iteration follows the global order.
class VarSet {
 public:
  VarSet() = default;
  explicit VarSet(std::set<VarName> elems) : elems_(std::move(elems)) {}
  VarSet(std::initializer_list<VarName> elems) : elems_(elems) {}

  static VarSet of_list(const VarList& l) {
    return VarSet(std::set<VarName>(l.begin(), l.end()));
  }

  bool contains(const VarName& v) const { return elems_.count(v) > 0; }
  bool empty() const { return elems_.empty(); }
  std::size_t size() const { return elems_.size(); }
  void insert(const VarName& v) { elems_.insert(v); }
  void erase(const VarName& v) { elems_.erase(v); }

  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }

  bool subset_of(const VarSet& other) const {
    return std::includes(other.elems_.begin(), other.elems_.end(), elems_.begin(), elems_.end());
  }

  friend bool operator==(const VarSet& a, const VarSet& b) { return a.elems_ == b.elems_; }
  friend bool operator!=(const VarSet& a, const VarSet& b) { return !(a == b); }
  friend bool operator<(const VarSet& a, const VarSet& b) { return a.elems_ < b.elems_; }

  friend VarSet operator|(const VarSet& a, const VarSet& b) {
    std::set<VarName> r = a.elems_;
    r.insert(b.elems_.begin(), b.elems_.end());
    return VarSet(std::move(r));
  }

  friend VarSet operator&(const VarSet& a, const VarSet& b) {
    std::set<VarName> r;
    for (const auto& v : a.elems_)
      if (b.contains(v)) r.insert(v);
    return VarSet(std::move(r));
  }

  friend VarSet operator-(const VarSet& a, const VarSet& b) {
    std::set<VarName> r;
    for (const auto& v : a.elems_)
      if (!b.contains(v)) r.insert(v);
    return VarSet(std::move(r));
  }

  bool disjoint(const VarSet& other) const { return (*this & other).empty(); }

 private:
  std::set<VarName> elems_;
};

// The canonical list form of a set: strictly increasing enumeration.
inline VarList set_to_list(const VarSet& s) { return VarList(s.begin(), s.end()); }

inline VarSet list_to_set(const VarList& l) { return VarSet::of_list(l); }

inline bool is_canonical(const VarList& l) {
  for (std::size_t i = 1; i < l.size(); ++i)
    if (!(l[i - 1] < l[i])) return false;
  return true;
}

inline std::string to_string(const VarName& v) { return v.str(); }

inline std::string to_string(const VarList& l) {
  std::string out = "[";
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (i) out += ",";
    out += l[i].str();
  }
  return out + "]";
}

inline std::string to_string(const VarSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& v : s) {
    if (!first) out += ",";
    out += v.str();
    first = false;
  }
  return out + "}";
}

// A permutation of wires: dst is a rearrangement of src and perm maps each
// src position to its dst position.
struct Rewiring {
  VarList src;
  VarList dst;
  std::vector<std::size_t> perm;

  Rewiring inverse() const {
    Rewiring inv;
    inv.src = dst;
    inv.dst = src;
    inv.perm.resize(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv.perm[perm[i]] = i;
    return inv;
  }
};

// The unique position permutation carrying src to dst. Requires dst to be a
// permutation of src; duplicates in src are rejected since the permutation
// would not be unique.
inline Rewiring rewiring_between(const VarList& src, const VarList& dst) {
  std::set<VarName> seen;
  for (const auto& v : src) {
    if (!seen.insert(v).second) throw DuplicateVariable("duplicate variable in rewiring source: " + v.str());
  }
  if (src.size() != dst.size()) throw NotAPermutation("rewiring endpoints differ in length");
  Rewiring r;
  r.src = src;
  r.dst = dst;
  r.perm.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto it = std::find(dst.begin(), dst.end(), src[i]);
    if (it == dst.end()) throw NotAPermutation("rewiring target misses variable " + src[i].str());
    r.perm[i] = static_cast<std::size_t>(it - dst.begin());
  }
  return r;
}

// Splits two sets into (only in s, in both, only in t).
struct Split {
  VarSet only_s;
  VarSet both;
  VarSet only_t;
};

inline Split split(const VarSet& s, const VarSet& t) {
  return Split{s - t, s & t, t - s};
}

}  // namespace dibi
