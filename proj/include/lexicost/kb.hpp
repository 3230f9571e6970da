#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lexicost/errors.hpp"

// Logic core: function-free terms, atoms, definite rules and programs, the
// task/bias readers and the canonical printer.

namespace lexicost {

struct Term {
  enum class Kind : unsigned char { variable, constant };

  Kind kind = Kind::constant;
  std::string name;

  static Term var(std::string name) { return {Kind::variable, std::move(name)}; }
  static Term constant(std::string name) { return {Kind::constant, std::move(name)}; }

  bool is_var() const noexcept { return kind == Kind::variable; }

  auto operator<=>(const Term&) const = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const noexcept { return args.size(); }
  bool is_ground() const noexcept {
    return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_var(); });
  }

  auto operator<=>(const Atom&) const = default;
};

struct Rule {
  Atom head;
  std::vector<Atom> body;

  std::size_t size() const noexcept { return 1 + body.size(); }

  auto operator<=>(const Rule&) const = default;
};

struct PredicateSig {
  std::string name;
  std::size_t arity = 0;

  auto operator<=>(const PredicateSig&) const = default;
};

/// Canonical variable name for position `i` in first-occurrence order.
inline std::string var_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "V" + std::to_string(i);
}

inline std::string render_atom(const Atom& a) {
  std::string out = a.predicate;
  if (!a.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) out += ',';
      out += a.args[i].name;
    }
    out += ')';
  }
  return out;
}

namespace detail {

// An atom seen through a partial variable numbering. Variables sort before
// constants; unnumbered variables take the next free indices in argument order.
struct LiteralKey {
  std::string predicate;
  std::vector<std::pair<std::size_t, std::string>> args;

  auto operator<=>(const LiteralKey&) const = default;
};

using VarNumbering = std::map<std::string, std::size_t>;

inline LiteralKey literal_key(const Atom& a, const VarNumbering& numbering) {
  LiteralKey key{a.predicate, {}};
  std::size_t next = numbering.size();
  std::map<std::string, std::size_t> fresh;
  for (const auto& t : a.args) {
    if (!t.is_var()) {
      key.args.emplace_back(std::numeric_limits<std::size_t>::max(), t.name);
      continue;
    }
    if (auto it = numbering.find(t.name); it != numbering.end()) {
      key.args.emplace_back(it->second, std::string{});
    } else {
      auto [f, inserted] = fresh.try_emplace(t.name, next);
      if (inserted) ++next;
      key.args.emplace_back(f->second, std::string{});
    }
  }
  return key;
}

inline void number_vars(const Atom& a, VarNumbering& numbering) {
  for (const auto& t : a.args)
    if (t.is_var()) numbering.try_emplace(t.name, numbering.size());
}

struct BodyOrder {
  std::vector<LiteralKey> keys;
  std::vector<std::size_t> order;
  VarNumbering numbering;
};

// Finds the body ordering whose key sequence is lexicographically smallest.
// Only literals tied on the minimal key are branched on.
inline BodyOrder best_body_order(const std::vector<Atom>& body,
                                 std::vector<bool>& used, BodyOrder prefix) {
  if (prefix.order.size() == body.size()) return prefix;
  std::optional<LiteralKey> min_key;
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (used[i]) continue;
    auto key = literal_key(body[i], prefix.numbering);
    if (!min_key || key < *min_key) {
      min_key = std::move(key);
      ties.assign(1, i);
    } else if (key == *min_key) {
      ties.push_back(i);
    }
  }
  std::optional<BodyOrder> best;
  for (auto i : ties) {
    BodyOrder next = prefix;
    next.keys.push_back(*min_key);
    next.order.push_back(i);
    number_vars(body[i], next.numbering);
    used[i] = true;
    auto candidate = best_body_order(body, used, std::move(next));
    used[i] = false;
    if (!best || candidate.keys < best->keys) best = std::move(candidate);
  }
  return *best;
}

inline Atom rename_atom(const Atom& a, const VarNumbering& numbering) {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args)
    out.args.push_back(t.is_var() ? Term::var(var_name(numbering.at(t.name))) : t);
  return out;
}

}  // namespace detail

/// Renames variables to A, B, C, ... in first-occurrence order (head first)
/// after choosing a body order that makes the result independent of both the
/// original variable names and the original body order. Duplicate body
/// literals collapse.
inline Rule canonical(const Rule& rule) {
  std::vector<Atom> body = rule.body;
  std::sort(body.begin(), body.end());
  body.erase(std::unique(body.begin(), body.end()), body.end());

  detail::BodyOrder start;
  detail::number_vars(rule.head, start.numbering);
  std::vector<bool> used(body.size(), false);
  auto best = detail::best_body_order(body, used, std::move(start));

  Rule out;
  out.head = detail::rename_atom(rule.head, best.numbering);
  out.body.reserve(body.size());
  for (auto i : best.order) out.body.push_back(detail::rename_atom(body[i], best.numbering));
  return out;
}

inline bool equivalent_up_to_renaming(const Rule& a, const Rule& b) {
  return canonical(a) == canonical(b);
}

inline std::string render_rule(const Rule& rule) {
  std::string out = render_atom(rule.head);
  if (!rule.body.empty()) {
    out += ":- ";
    for (std::size_t i = 0; i < rule.body.size(); ++i) {
      if (i) out += ", ";
      out += render_atom(rule.body[i]);
    }
  }
  out += '.';
  return out;
}

/// A set of definite rules. Rules are stored canonically, deduplicated
/// modulo variable renaming, and ordered by size then rendered text.
class Program {
 public:
  Program() = default;
  explicit Program(std::vector<Rule> rules) {
    std::set<Rule> seen;
    for (const auto& r : rules) {
      auto c = canonical(r);
      if (seen.insert(c).second) rules_.push_back(std::move(c));
    }
    std::vector<std::pair<std::pair<std::size_t, std::string>, Rule>> keyed;
    keyed.reserve(rules_.size());
    for (auto& r : rules_) {
      auto text = render_rule(r);
      keyed.push_back({{r.size(), std::move(text)}, std::move(r)});
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    rules_.clear();
    for (auto& [key, r] : keyed) rules_.push_back(std::move(r));
  }

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  bool empty() const noexcept { return rules_.empty(); }
  std::size_t rule_count() const noexcept { return rules_.size(); }

  /// Union of two programs (deduplicated).
  friend Program operator|(const Program& a, const Program& b) {
    std::vector<Rule> all = a.rules_;
    all.insert(all.end(), b.rules_.begin(), b.rules_.end());
    return Program(std::move(all));
  }

  bool operator==(const Program&) const = default;
  auto operator<=>(const Program& other) const { return rules_ <=> other.rules_; }

 private:
  std::vector<Rule> rules_;
};

/// Number of literals: each rule contributes its head plus its body.
inline std::size_t program_size(const Program& p) {
  std::size_t n = 0;
  for (const auto& r : p.rules()) n += r.size();
  return n;
}

/// One rule per line, in the program's canonical order.
inline std::string render_program(const Program& p) {
  std::string out;
  for (const auto& r : p.rules()) {
    out += render_rule(r);
    out += '\n';
  }
  return out;
}

/// True when some body literal uses a predicate defined by the program.
inline bool is_recursive(const Program& p) {
  std::set<std::string> heads;
  for (const auto& r : p.rules()) heads.insert(r.head.predicate);
  for (const auto& r : p.rules())
    for (const auto& b : r.body)
      if (heads.count(b.predicate)) return true;
  return false;
}

struct Bias {
  std::set<PredicateSig> head_preds;
  std::set<PredicateSig> body_preds;
  std::size_t max_vars = 4;
  std::size_t max_body = 3;
  std::size_t max_clauses = 2;
  bool enable_recursion = false;

  /// Largest program the bias admits.
  std::size_t max_program_size() const noexcept { return max_clauses * (1 + max_body); }
};

struct Task {
  std::vector<Atom> bk_facts;  // sorted, unique, ground
  std::vector<Atom> pos;
  std::vector<Atom> neg;
  Bias bias;
};

struct Examples {
  std::vector<Atom> pos;
  std::vector<Atom> neg;
};

namespace detail {

struct Token {
  enum class Kind { ident, lparen, rparen, comma, dot, neck, end };
  Kind kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    Token tok{Token::Kind::end, {}, line_, column_};
    if (pos_ >= text_.size()) return tok;
    char c = text_[pos_];
    if (is_ident_char(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) advance();
      tok.kind = Token::Kind::ident;
      tok.text = std::string(text_.substr(start, pos_ - start));
      return tok;
    }
    if (c == ':' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
      advance();
      advance();
      tok.kind = Token::Kind::neck;
      return tok;
    }
    advance();
    switch (c) {
      case '(': tok.kind = Token::Kind::lparen; return tok;
      case ')': tok.kind = Token::Kind::rparen; return tok;
      case ',': tok.kind = Token::Kind::comma; return tok;
      case '.': tok.kind = Token::Kind::dot; return tok;
      default:
        throw ParseError(ParseErrorKind::syntax_error,
                         std::string("unexpected character '") + c + "'", tok.line,
                         tok.column);
    }
  }

 private:
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

// Untyped parse tree: name(children...). Compound children are rejected when
// converted to atoms, except inside pos/neg wrappers.
struct Node {
  std::string name;
  std::vector<Node> args;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Clause {
  Node head;
  std::vector<Node> body;
  std::size_t line = 0;
  std::size_t column = 0;
};

class ClauseParser {
 public:
  explicit ClauseParser(std::string_view text) : lexer_(text) { tok_ = lexer_.next(); }

  std::vector<Clause> parse_all() {
    std::vector<Clause> out;
    while (tok_.kind != Token::Kind::end) out.push_back(parse_clause());
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(ParseErrorKind::syntax_error, what, tok_.line, tok_.column);
  }

  void expect(Token::Kind kind, const char* what) {
    if (tok_.kind != kind) fail(std::string("expected ") + what);
    tok_ = lexer_.next();
  }

  Node parse_term() {
    if (tok_.kind != Token::Kind::ident) fail("expected a name");
    Node n{tok_.text, {}, tok_.line, tok_.column};
    tok_ = lexer_.next();
    if (tok_.kind == Token::Kind::lparen) {
      tok_ = lexer_.next();
      n.args.push_back(parse_term());
      while (tok_.kind == Token::Kind::comma) {
        tok_ = lexer_.next();
        n.args.push_back(parse_term());
      }
      expect(Token::Kind::rparen, "')'");
    }
    return n;
  }

  Clause parse_clause() {
    Clause c;
    c.line = tok_.line;
    c.column = tok_.column;
    c.head = parse_term();
    if (tok_.kind == Token::Kind::neck) {
      tok_ = lexer_.next();
      c.body.push_back(parse_term());
      while (tok_.kind == Token::Kind::comma) {
        tok_ = lexer_.next();
        c.body.push_back(parse_term());
      }
    }
    expect(Token::Kind::dot, "'.' at end of clause");
    return c;
  }

  Lexer lexer_;
  Token tok_;
};

inline bool starts_upper(std::string_view s) {
  return !s.empty() && (std::isupper(static_cast<unsigned char>(s[0])) || s[0] == '_');
}

inline Term node_to_term(const Node& n) {
  if (!n.args.empty())
    throw ParseError(ParseErrorKind::syntax_error,
                     "compound term '" + n.name + "(...)' is not function-free", n.line,
                     n.column);
  return starts_upper(n.name) ? Term::var(n.name) : Term::constant(n.name);
}

inline Atom node_to_atom(const Node& n) {
  if (starts_upper(n.name))
    throw ParseError(ParseErrorKind::syntax_error,
                     "predicate symbol '" + n.name + "' must start with a lowercase letter",
                     n.line, n.column);
  Atom a{n.name, {}};
  a.args.reserve(n.args.size());
  for (const auto& arg : n.args) a.args.push_back(node_to_term(arg));
  return a;
}

// Tracks predicate arities across all files of one task.
class ArityTable {
 public:
  void check(const std::string& pred, std::size_t arity, std::size_t line,
             std::size_t column) {
    auto [it, inserted] = arities_.try_emplace(pred, arity);
    if (!inserted && it->second != arity)
      throw ParseError(ParseErrorKind::arity_mismatch,
                       "predicate '" + pred + "' used with arity " + std::to_string(arity) +
                           " but earlier with arity " + std::to_string(it->second),
                       line, column);
  }

 private:
  std::map<std::string, std::size_t> arities_;
};

inline std::size_t parse_count(const Node& n) {
  const std::string& text = n.name;
  if (text.empty() || !std::all_of(text.begin(), text.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw ParseError(ParseErrorKind::invalid_value, "expected a non-negative integer, got '" + text + "'",
                     n.line, n.column);
  try {
    return static_cast<std::size_t>(std::stoull(text));
  } catch (const std::exception&) {
    throw ParseError(ParseErrorKind::invalid_value, "integer out of range: '" + text + "'",
                     n.line, n.column);
  }
}

}  // namespace detail

/// Reads a program of definite rules (`h :- b1, b2.` or facts `h.`).
inline Program parse_program(std::string_view text) {
  std::vector<Rule> rules;
  for (const auto& c : detail::ClauseParser(text).parse_all()) {
    Rule r{detail::node_to_atom(c.head), {}};
    for (const auto& b : c.body) r.body.push_back(detail::node_to_atom(b));
    rules.push_back(std::move(r));
  }
  return Program(std::move(rules));
}

/// Reads ground facts, one `pred(c1,...,cn).` per clause.
inline std::vector<Atom> parse_facts(std::string_view text) {
  std::vector<Atom> facts;
  detail::ArityTable arities;
  for (const auto& c : detail::ClauseParser(text).parse_all()) {
    if (!c.body.empty())
      throw ParseError(ParseErrorKind::syntax_error, "background knowledge must be ground facts",
                       c.line, c.column);
    auto a = detail::node_to_atom(c.head);
    if (!a.is_ground())
      throw ParseError(ParseErrorKind::non_ground_fact, "fact '" + render_atom(a) + "' has variables",
                       c.line, c.column);
    arities.check(a.predicate, a.arity(), c.line, c.column);
    facts.push_back(std::move(a));
  }
  return facts;
}

/// Reads `pos(atom).` / `neg(atom).` lines. Order is preserved.
inline Examples parse_examples(std::string_view text) {
  Examples out;
  detail::ArityTable arities;
  for (const auto& c : detail::ClauseParser(text).parse_all()) {
    const auto& h = c.head;
    if (!c.body.empty() || (h.name != "pos" && h.name != "neg") || h.args.size() != 1)
      throw ParseError(ParseErrorKind::syntax_error, "expected pos(atom). or neg(atom).", c.line,
                       c.column);
    auto a = detail::node_to_atom(h.args[0]);
    if (!a.is_ground())
      throw ParseError(ParseErrorKind::non_ground_fact,
                       "example '" + render_atom(a) + "' has variables", c.line, c.column);
    arities.check(a.predicate, a.arity(), c.line, c.column);
    (h.name == "pos" ? out.pos : out.neg).push_back(std::move(a));
  }
  return out;
}

inline Bias parse_bias(std::string_view text) {
  Bias bias;
  bool saw_head = false;
  for (const auto& c : detail::ClauseParser(text).parse_all()) {
    const auto& h = c.head;
    if (!c.body.empty())
      throw ParseError(ParseErrorKind::syntax_error, "bias directives are facts", c.line, c.column);
    auto positive = [&](std::size_t v) {
      if (v < 1)
        throw ParseError(ParseErrorKind::invalid_value, h.name + " must be at least 1", c.line,
                         c.column);
      return v;
    };
    if ((h.name == "head_pred" || h.name == "body_pred") && h.args.size() == 2) {
      const auto& name = h.args[0];
      if (!name.args.empty() || detail::starts_upper(name.name))
        throw ParseError(ParseErrorKind::invalid_value, "expected a predicate name", name.line,
                         name.column);
      PredicateSig sig{name.name, detail::parse_count(h.args[1])};
      if (h.name == "head_pred") {
        bias.head_preds.insert(sig);
        saw_head = true;
      } else {
        bias.body_preds.insert(sig);
      }
    } else if (h.name == "max_vars" && h.args.size() == 1) {
      bias.max_vars = positive(detail::parse_count(h.args[0]));
    } else if (h.name == "max_body" && h.args.size() == 1) {
      bias.max_body = positive(detail::parse_count(h.args[0]));
    } else if (h.name == "max_clauses" && h.args.size() == 1) {
      bias.max_clauses = positive(detail::parse_count(h.args[0]));
    } else if (h.name == "enable_recursion" && h.args.empty()) {
      bias.enable_recursion = true;
    } else {
      throw ParseError(ParseErrorKind::unknown_bias_directive,
                       "unknown directive '" + h.name + "/" + std::to_string(h.args.size()) + "'",
                       c.line, c.column);
    }
  }
  if (!saw_head)
    throw ParseError(ParseErrorKind::invalid_value, "bias declares no head_pred");
  return bias;
}

/// Cross-file validation: consistent arities, declared example predicates,
/// disjoint and nonempty positives.
inline Task make_task(std::vector<Atom> facts, Examples exs, Bias bias) {
  detail::ArityTable arities;
  for (const auto& s : bias.head_preds) arities.check(s.name, s.arity, 0, 0);
  for (const auto& s : bias.body_preds) arities.check(s.name, s.arity, 0, 0);
  for (const auto& f : facts) arities.check(f.predicate, f.arity(), 0, 0);

  std::set<PredicateSig> heads = bias.head_preds;
  auto check_example = [&](const Atom& a) {
    arities.check(a.predicate, a.arity(), 0, 0);
    if (!heads.count(PredicateSig{a.predicate, a.arity()}))
      throw ParseError(ParseErrorKind::undeclared_predicate,
                       "example '" + render_atom(a) + "' does not use a head_pred");
  };
  for (const auto& a : exs.pos) check_example(a);
  for (const auto& a : exs.neg) check_example(a);

  if (exs.pos.empty())
    throw ParseError(ParseErrorKind::no_positive_examples, "no pos(...) examples given");
  std::set<Atom> pos_set(exs.pos.begin(), exs.pos.end());
  for (const auto& a : exs.neg)
    if (pos_set.count(a))
      throw ParseError(ParseErrorKind::conflicting_examples,
                       "'" + render_atom(a) + "' is both positive and negative");

  std::sort(facts.begin(), facts.end());
  facts.erase(std::unique(facts.begin(), facts.end()), facts.end());
  return Task{std::move(facts), std::move(exs.pos), std::move(exs.neg), std::move(bias)};
}

inline Task parse_task(std::string_view bk_text, std::string_view exs_text,
                       std::string_view bias_text) {
  return make_task(parse_facts(bk_text), parse_examples(exs_text), parse_bias(bias_text));
}

}  // namespace lexicost
