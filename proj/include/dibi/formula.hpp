#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dibi/errors.hpp"
#include "dibi/varspace.hpp"

namespace dibi {

// Formula AST for the conjunctive fragment: top, the unit, dependence atoms
// <S |> T>, conjunction, separating conjunction and sequencing.
struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Kind { Top, Emp, Atom, And, Star, Fatsemi };
  Kind kind;
  VarSet s, t;       // Atom
  FormulaPtr lhs, rhs;
};

inline FormulaPtr f_top() {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Top;
  return f;
}

inline FormulaPtr f_emp() {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Emp;
  return f;
}

inline FormulaPtr f_atom(VarSet s, VarSet t) {
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Atom;
  f->s = std::move(s);
  f->t = std::move(t);
  return f;
}

inline FormulaPtr f_binary(Formula::Kind k, FormulaPtr l, FormulaPtr r) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->lhs = std::move(l);
  f->rhs = std::move(r);
  return f;
}

inline FormulaPtr f_and(FormulaPtr l, FormulaPtr r) {
  return f_binary(Formula::Kind::And, std::move(l), std::move(r));
}
inline FormulaPtr f_star(FormulaPtr l, FormulaPtr r) {
  return f_binary(Formula::Kind::Star, std::move(l), std::move(r));
}
inline FormulaPtr f_fatsemi(FormulaPtr l, FormulaPtr r) {
  return f_binary(Formula::Kind::Fatsemi, std::move(l), std::move(r));
}

inline bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Formula::Kind::Top:
    case Formula::Kind::Emp: return true;
    case Formula::Kind::Atom: return a->s == b->s && a->t == b->t;
    default: return formula_equal(a->lhs, b->lhs) && formula_equal(a->rhs, b->rhs);
  }
}

namespace detail {

inline std::string varset_text(const VarSet& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& v : s) {
    if (!first) out += ",";
    out += v.str();
    first = false;
  }
  return out + "}";
}

// Precedence: & binds tightest, then *, then ;.
inline int formula_prec(Formula::Kind k) {
  switch (k) {
    case Formula::Kind::Fatsemi: return 0;
    case Formula::Kind::Star: return 1;
    case Formula::Kind::And: return 2;
    default: return 3;
  }
}

inline std::string pretty_at(const FormulaPtr& f, int level) {
  int p = formula_prec(f->kind);
  std::string out;
  switch (f->kind) {
    case Formula::Kind::Top: return "top";
    case Formula::Kind::Emp: return "emp";
    case Formula::Kind::Atom: return "<" + varset_text(f->s) + "|>" + varset_text(f->t) + ">";
    case Formula::Kind::And:
      out = pretty_at(f->lhs, p + 1) + " & " + pretty_at(f->rhs, p);
      break;
    case Formula::Kind::Star:
      out = pretty_at(f->lhs, p + 1) + " * " + pretty_at(f->rhs, p);
      break;
    case Formula::Kind::Fatsemi:
      out = pretty_at(f->lhs, p + 1) + " ; " + pretty_at(f->rhs, p);
      break;
  }
  return p < level ? "(" + out + ")" : out;
}

}  // namespace detail

inline std::string pretty(const FormulaPtr& f) { return detail::pretty_at(f, 0); }

// Recursive-descent parser for the grammar
//   formula := fatsemi
//   fatsemi := star  { ";" star }   (right associative)
//   star    := conj  { "*" conj }   (right associative)
//   conj    := unit  { "&" unit }   (right associative)
//   unit    := "top" | "emp" | atom | "(" formula ")"
//   atom    := "<" varset "|>" varset ">"
//   varset  := "{" [ ident { "," ident } ] "}"
class FormulaParser {
 public:
  explicit FormulaParser(std::string text) : text_(std::move(text)) {}

  FormulaPtr parse() {
    FormulaPtr f = fatsemi();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return f;
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;

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
    throw ParseError("formula syntax error", line, col, expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' ||
                                   text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool eat(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("'") + c + "'");
  }

  bool eat_word(const std::string& w) {
    skip_ws();
    if (text_.compare(pos_, w.size(), w) != 0) return false;
    std::size_t after = pos_ + w.size();
    if (after < text_.size()) {
      char ch = text_[after];
      bool wordy = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                   (ch >= '0' && ch <= '9') || ch == '_';
      if (wordy) return false;
    }
    pos_ = after;
    return true;
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

  VarSet varset() {
    expect('{');
    VarSet out;
    skip_ws();
    if (eat('}')) return out;
    out.insert(VarName(ident()));
    while (eat(',')) out.insert(VarName(ident()));
    expect('}');
    return out;
  }

  FormulaPtr unit() {
    if (eat_word("top")) return f_top();
    if (eat_word("emp")) return f_emp();
    if (eat('(')) {
      FormulaPtr f = fatsemi();
      expect(')');
      return f;
    }
    if (eat('<')) {
      VarSet s = varset();
      skip_ws();
      if (text_.compare(pos_, 2, "|>") != 0) fail("'|>'");
      pos_ += 2;
      VarSet t = varset();
      expect('>');
      return f_atom(std::move(s), std::move(t));
    }
    fail("'top', 'emp', '<' or '('");
  }

  FormulaPtr conj() {
    FormulaPtr l = unit();
    if (eat('&')) return f_and(std::move(l), conj());
    return l;
  }

  FormulaPtr star() {
    FormulaPtr l = conj();
    if (eat('*')) return f_star(std::move(l), star());
    return l;
  }

  FormulaPtr fatsemi() {
    FormulaPtr l = star();
    if (eat(';')) return f_fatsemi(std::move(l), fatsemi());
    return l;
  }
};

inline FormulaPtr parse_formula(const std::string& text) { return FormulaParser(text).parse(); }

}  // namespace dibi
