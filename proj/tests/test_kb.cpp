#include <gtest/gtest.h>

#include <random>

#include "lexicost/generator.hpp"
#include "lexicost/kb.hpp"
#include "support/toys.hpp"

using namespace lexicost;

namespace {

ParseErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ParseError thrown";
  return ParseErrorKind::syntax_error;
}

Rule rule(std::string_view text) { return parse_program(text).rules().front(); }

}  // namespace

TEST(ParseTask, MinimalTask) {
  auto t = parse_task("edge(a,b).", "pos(path(a,b)).",
                      "head_pred(path,2). body_pred(edge,2). max_vars(3). max_body(2). max_clauses(1).");
  EXPECT_EQ(t.bk_facts.size(), 1u);
  EXPECT_EQ(t.pos.size(), 1u);
  EXPECT_EQ(t.neg.size(), 0u);
  EXPECT_EQ(t.bias.max_vars, 3u);
  EXPECT_EQ(t.bias.max_body, 2u);
  EXPECT_EQ(t.bias.max_clauses, 1u);
  EXPECT_FALSE(t.bias.enable_recursion);
  EXPECT_TRUE(t.bias.head_preds.count(PredicateSig{"path", 2}));
}

TEST(ParseTask, OnlyNegativesIsRejected) {
  EXPECT_EQ(kind_of([] { parse_task("e(a).", "neg(p(a)).", "head_pred(p,1). body_pred(e,1)."); }),
            ParseErrorKind::no_positive_examples);
}

TEST(ParseTask, ZeroLimitIsInvalid) {
  EXPECT_EQ(kind_of([] { parse_bias("head_pred(p,1). max_vars(0)."); }), ParseErrorKind::invalid_value);
  EXPECT_EQ(kind_of([] { parse_bias("head_pred(p,1). max_body(0)."); }), ParseErrorKind::invalid_value);
  EXPECT_EQ(kind_of([] { parse_bias("head_pred(p,1). max_clauses(0)."); }), ParseErrorKind::invalid_value);
}

TEST(ParseTask, ErrorKinds) {
  EXPECT_EQ(kind_of([] { parse_facts("edge(a,b"); }), ParseErrorKind::syntax_error);
  EXPECT_EQ(kind_of([] { parse_facts("edge(a,f(b))."); }), ParseErrorKind::syntax_error);
  EXPECT_EQ(kind_of([] { parse_facts("edge(a,b). edge(a)."); }), ParseErrorKind::arity_mismatch);
  EXPECT_EQ(kind_of([] { parse_facts("edge(X,b)."); }), ParseErrorKind::non_ground_fact);
  EXPECT_EQ(kind_of([] { parse_bias("head_pred(p,1). mode(p)."); }), ParseErrorKind::unknown_bias_directive);
  EXPECT_EQ(kind_of([] { parse_bias("body_pred(e,1)."); }), ParseErrorKind::invalid_value);
  EXPECT_EQ(kind_of([] { parse_task("e(a).", "pos(q(a)).", "head_pred(p,1). body_pred(e,1)."); }),
            ParseErrorKind::undeclared_predicate);
  EXPECT_EQ(kind_of([] { parse_task("e(a).", "pos(p(a)). neg(p(a)).", "head_pred(p,1)."); }),
            ParseErrorKind::conflicting_examples);
  EXPECT_EQ(kind_of([] { parse_task("e(a,b).", "pos(p(a)).", "head_pred(p,1). body_pred(e,1)."); }),
            ParseErrorKind::arity_mismatch);
  EXPECT_EQ(kind_of([] { parse_examples("maybe(p(a))."); }), ParseErrorKind::syntax_error);
}

TEST(ParseTask, ErrorsCarryPositions) {
  try {
    parse_facts("e(a).\n% comment\ne(a,b).");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::arity_mismatch);
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(ParseTask, CommentsAndWhitespace) {
  auto facts = parse_facts("% header\n  e( a , b ) .  % trailing\n\n e(b,c).");
  ASSERT_EQ(facts.size(), 2u);
  EXPECT_EQ(render_atom(facts[0]), "e(a,b)");
}

TEST(ParseTask, FactsAreDeduplicated) {
  auto t = parse_task("e(a). e(a). e(b).", "pos(p(a)).", "head_pred(p,1). body_pred(e,1).");
  EXPECT_EQ(t.bk_facts.size(), 2u);
}

TEST(ParseTask, BiasDefaultsAndRecursionFlag) {
  auto b = parse_bias("head_pred(p,2). enable_recursion.");
  EXPECT_TRUE(b.enable_recursion);
  EXPECT_EQ(b.max_vars, 4u);
  EXPECT_EQ(b.max_body, 3u);
  EXPECT_EQ(b.max_clauses, 2u);
  EXPECT_EQ(b.max_program_size(), 8u);
}

TEST(ProgramSize, Examples) {
  EXPECT_EQ(program_size(parse_program("h(X) :- b1(X), b2(X).")), 3u);
  EXPECT_EQ(program_size(parse_program("h(X) :- b1(X), b2(X). g(X) :- b1(X), b2(X), b3(X).")), 7u);
  EXPECT_EQ(program_size(Program{}), 0u);
}

TEST(ProgramSize, InvariantUnderRenamingAndReordering) {
  auto a = parse_program("h(X) :- b(X,Y), c(Y). g(Z) :- c(Z).");
  auto b = parse_program("g(Q) :- c(Q). h(P) :- c(R), b(P,R).");
  EXPECT_EQ(program_size(a), program_size(b));
  EXPECT_EQ(a, b);
}

TEST(Render, Examples) {
  EXPECT_EQ(render_program(parse_program("f(X) :- g(X).")), "f(A):- g(A).\n");
  EXPECT_EQ(render_program(Program{}), "");
  auto two = render_program(parse_program("f(X) :- g(X,Y), h(Y). f(X) :- k(X)."));
  EXPECT_EQ(two, "f(A):- k(A).\nf(A):- g(A,B), h(B).\n");
}

TEST(Render, CanonicalVariableNames) {
  EXPECT_EQ(render_rule(rule("p(Z,Y) :- q(Y,W), r(W,Z).")), "p(A,B):- q(B,C), r(C,A).");
  EXPECT_EQ(render_rule(rule("p(X) :- r(X,Y), q(Y).")), render_rule(rule("p(K) :- q(J), r(K,J).")));
}

TEST(Canonical, DuplicatesCollapse) {
  auto r = rule("f(X) :- g(X), g(X).");
  EXPECT_EQ(r.body.size(), 1u);
  auto p = parse_program("f(X) :- g(X). f(Y) :- g(Y).");
  EXPECT_EQ(p.rule_count(), 1u);
}

TEST(Canonical, EquivalenceUpToRenaming) {
  EXPECT_TRUE(equivalent_up_to_renaming(rule("f(X):-g(X,Y),h(Y)."), rule("f(A):-h(B),g(A,B).")));
  EXPECT_FALSE(equivalent_up_to_renaming(rule("f(X):-g(X,Y)."), rule("f(X):-g(Y,X).")));
}

TEST(Canonical, BodyOrderIndependent) {
  // Symmetric bodies where a naive sort would depend on the input names.
  auto a = rule("p(X) :- e(X,Y), e(X,Z), f(Y), g(Z).");
  auto b = rule("p(X) :- g(Q), f(W), e(X,Q), e(X,W).");
  EXPECT_EQ(a, b);
  EXPECT_EQ(canonical(a), a);
}

TEST(RoundTrip, ParseOfRenderIsIdentityOnGeneratedPrograms) {
  for (const auto& t : {toys::trains(), toys::path(), toys::noisy_trains()}) {
    Generator gen(t.bias, Ordering::by_size);
    std::size_t n = 0;
    while (auto p = gen.next()) {
      ASSERT_EQ(parse_program(render_program(*p)), *p) << render_program(*p);
      ++n;
    }
    EXPECT_GT(n, 0u);
  }
}

TEST(RoundTrip, RandomRenamingsAndShuffles) {
  std::mt19937_64 rng(7);
  Generator gen(toys::trains().bias, Ordering::by_size);
  while (auto p = gen.next()) {
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<Rule> rules;
      for (auto r : p->rules()) {
        std::map<std::string, std::string> ren;
        auto rename = [&](Atom& a) {
          for (auto& t : a.args)
            if (t.is_var()) {
              auto [it, fresh] = ren.emplace(t.name, "");
              if (fresh) it->second = "V" + std::to_string(rng() % 1000) + "_" + t.name;
              t.name = it->second;
            }
        };
        rename(r.head);
        for (auto& b : r.body) rename(b);
        std::shuffle(r.body.begin(), r.body.end(), rng);
        rules.push_back(r);
      }
      std::shuffle(rules.begin(), rules.end(), rng);
      EXPECT_EQ(Program(rules), *p);
    }
  }
}

TEST(Program, UnionDeduplicates) {
  auto a = parse_program("f(X) :- g(X).");
  auto b = parse_program("f(Y) :- g(Y). f(X) :- h(X).");
  auto u = a | b;
  EXPECT_EQ(u.rule_count(), 2u);
  EXPECT_EQ(program_size(u), 4u);
}

TEST(Program, Recursion) {
  EXPECT_TRUE(is_recursive(parse_program("p(X,Y):-e(X,Y). p(X,Y):-e(X,Z),p(Z,Y).")));
  EXPECT_FALSE(is_recursive(parse_program("p(X,Y):-e(X,Y). q(X):-e(X,X).")));
}
