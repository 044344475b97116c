#pragma once

// Shared fixtures: the toy TLS system, its three reference languages, the
// two-state hypothesis, and the small observation tree used across the
// worked examples.

#include "errlearn/experiment.hpp"
#include "errlearn/io.hpp"

namespace fixtures {

using namespace errlearn;

inline ErrorAlias err_alias() { return ErrorAlias{"err"}; }

// q0 -h/ok-> q1 -k/ok-> q2 -d/ok-> q3 (d/letter self-loop); everything else
// errs into an absorbing sink.
inline MealyMachine toy_tls() {
  Alphabet in({"h", "k", "d", "c"});
  MealyMachine m(in);
  int q0 = m.add_state("q0"), q1 = m.add_state("q1"), q2 = m.add_state("q2"),
      q3 = m.add_state("q3"), qe = m.add_state("qe");
  m.set_initial(q0);
  auto err_row = [&](int s, std::initializer_list<const char*> except_inputs) {
    for (int i = 0; i < in.size(); ++i) {
      bool skip = false;
      for (const char* e : except_inputs)
        if (in.name(i) == e) skip = true;
      if (!skip) m.set_transition(s, i, qe, "err");
    }
  };
  m.set_transition(q0, in.at("h"), q1, "ok");
  err_row(q0, {"h"});
  m.set_transition(q1, in.at("k"), q2, "ok");
  err_row(q1, {"k"});
  m.set_transition(q2, in.at("d"), q3, "ok");
  err_row(q2, {"d"});
  m.set_transition(q3, in.at("d"), q3, "letter");
  err_row(q3, {"d"});
  err_row(qe, {});
  return m;
}

inline std::string toy_tls_dot() {
  return R"(digraph m {
  __start0 [label="" shape=none];
  __start0 -> q0;
  q0 -> q1 [label="h/ok"];
  q0 -> qe [label="k/err"];
  q0 -> qe [label="d/err"];
  q0 -> qe [label="c/err"];
  q1 -> q2 [label="k/ok"];
  q1 -> qe [label="h/err"];
  q1 -> qe [label="d/err"];
  q1 -> qe [label="c/err"];
  q2 -> q3 [label="d/ok"];
  q2 -> qe [label="h/err"];
  q2 -> qe [label="k/err"];
  q2 -> qe [label="c/err"];
  q3 -> q3 [label="d/letter"];
  q3 -> qe [label="h/err"];
  q3 -> qe [label="k/err"];
  q3 -> qe [label="c/err"];
  qe -> qe [label="h/err"];
  qe -> qe [label="k/err"];
  qe -> qe [label="d/err"];
  qe -> qe [label="c/err"];
})";
}

// Sound but incomplete for the toy system: r1 loops on h, r2 loops on h,d.
inline Dfa reference_l0() {
  Alphabet in({"h", "k", "d", "c"});
  Dfa d(in);
  int r0 = d.add_state(true, "r0"), r1 = d.add_state(true, "r1"), r2 = d.add_state(true, "r2");
  d.set_initial(r0);
  d.set_transition(r0, in.at("h"), r1);
  d.set_transition(r1, in.at("h"), r1);
  d.set_transition(r1, in.at("k"), r2);
  d.set_transition(r2, in.at("h"), r2);
  d.set_transition(r2, in.at("d"), r2);
  d.complete_with_sink();
  return d;
}

// Sound and complete: exactly h k d* .. the prefix-closed hull of hkd*.
inline Dfa reference_l1() {
  Alphabet in({"h", "k", "d", "c"});
  Dfa d(in);
  int p0 = d.add_state(true, "p0"), p1 = d.add_state(true, "p1"), p2 = d.add_state(true, "p2");
  d.set_initial(p0);
  d.set_transition(p0, in.at("h"), p1);
  d.set_transition(p1, in.at("k"), p2);
  d.set_transition(p2, in.at("d"), p2);
  d.complete_with_sink();
  return d;
}

inline std::string reference_l1_dot() {
  return R"(digraph l1 {
  __start0 [label="" shape=none];
  __start0 -> p0;
  p0 [shape=doublecircle];
  p1 [shape=doublecircle];
  p2 [shape=doublecircle];
  p0 -> p1 [label="h"];
  p1 -> p2 [label="k"];
  p2 -> p2 [label="d"];
})";
}

// Neither sound nor complete: accepts hkk, rejects hkdd.
inline Dfa reference_l2() {
  Alphabet in({"h", "k", "d", "c"});
  Dfa d(in);
  int s0 = d.add_state(true, "s0"), s1 = d.add_state(true, "s1"), s2 = d.add_state(true, "s2"),
      s3 = d.add_state(true, "s3");
  d.set_initial(s0);
  d.set_transition(s0, in.at("h"), s1);
  d.set_transition(s1, in.at("k"), s2);
  d.set_transition(s2, in.at("k"), s2);
  d.set_transition(s2, in.at("d"), s3);
  d.complete_with_sink();
  return d;
}

// Two states: h succeeds once, everything else (and everything after) errs.
inline MealyMachine toy_hypothesis() {
  Alphabet in({"h", "k", "d", "c"});
  MealyMachine m(in);
  int h0 = m.add_state("h0"), he = m.add_state("he");
  m.set_initial(h0);
  m.set_transition(h0, in.at("h"), he, "ok");
  m.set_transition(h0, in.at("k"), he, "err");
  m.set_transition(h0, in.at("d"), he, "err");
  m.set_transition(h0, in.at("c"), he, "err");
  for (int i = 0; i < in.size(); ++i) m.set_transition(he, i, he, "err");
  return m;
}

// The small worked-example tree: h/ok then k/ok then d/ok below it, plus
// the two error observations d/err (root) and h/err (below h).
// Node ids in insertion order: 0=root, 1=h, 2=d(err), 3=hk, 4=hh(err), 5=hkd.
struct ExampleTree {
  ObservationTree tree;
  int q0, q1, q2, q3, q4, q5;
};

inline ExampleTree example_tree(bool with_hkd = true) {
  Alphabet in({"h", "k", "d", "c"});
  ObservationTree t(in, err_alias());
  int q0 = t.root();
  int q1 = t.extend(q0, in.at("h"), "ok");
  int q5 = t.extend(q0, in.at("d"), "err");
  int q3 = t.extend(q1, in.at("k"), "ok");
  int q2 = t.extend(q1, in.at("h"), "err");
  int q4 = ObservationTree::kNone;
  if (with_hkd) q4 = t.extend(q3, in.at("d"), "ok");
  t.promote(q1);
  return ExampleTree{std::move(t), q0, q1, q2, q3, q4, q5};
}

}  // namespace fixtures
