#pragma once

// The learning algorithms: one rule engine driving five variants
//
//   Lsharp     plain L# baseline (no error handling at all)
//   LsharpE    error-persistent L#: truncated queries, error sink folding
//   ALsharpE   adaptive variant guided by an arbitrary reference
//   LsharpES   sound-reference variant (sound apartness, language-limited
//              queries, hypothesis soundness check)
//   LsharpESC  sound-and-complete variant (seeded basis, sound-complete
//              apartness, completeness-violation detection)
//
// plus hypothesis construction, consistency and soundness checks,
// counterexample processing and the match-degree computation.

#include "errlearn/testing.hpp"

namespace errlearn {

enum class Algorithm { Lsharp, LsharpE, ALsharpE, LsharpES, LsharpESC };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Lsharp: return "lsharp";
    case Algorithm::LsharpE: return "lsharp-e";
    case Algorithm::ALsharpE: return "alsharp-e";
    case Algorithm::LsharpES: return "lsharp-es";
    case Algorithm::LsharpESC: return "lsharp-esc";
  }
  return "?";
}

inline std::optional<Algorithm> algorithm_from_string(std::string_view s) {
  for (Algorithm a : {Algorithm::Lsharp, Algorithm::LsharpE, Algorithm::ALsharpE,
                      Algorithm::LsharpES, Algorithm::LsharpESC})
    if (to_string(a) == s) return a;
  return std::nullopt;
}

/// True for the algorithms that must be given a reference.
inline bool algorithm_needs_reference(Algorithm a) {
  return a == Algorithm::ALsharpE || a == Algorithm::LsharpES || a == Algorithm::LsharpESC;
}

struct LearnerConfig {
  Algorithm algorithm = Algorithm::LsharpE;
  std::optional<Dfa> reference;  // minimal, total, error-persistent when present
  EqOracle oracle;
  std::optional<int> max_eq;     // optional hard stop on failed EQs
  bool collect_rule_trace = false;
  bool check_norm = false;       // assert the instrumented norm rises per rule
};

enum class RunOutcome { Correct, Incorrect, ViolationDetected, BudgetExceeded };

inline std::string to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Correct: return "correct";
    case RunOutcome::Incorrect: return "incorrect";
    case RunOutcome::ViolationDetected: return "violation-detected";
    case RunOutcome::BudgetExceeded: return "budget-exceeded";
  }
  return "?";
}

struct RunReport {
  MealyMachine learned;
  RunOutcome outcome = RunOutcome::Incorrect;
  int eq_count = 0;  // equivalence queries that returned a counterexample
  long long learn_symbols = 0;
  long long test_symbols = 0;
  long long total_symbols = 0;
  int learned_states = 0;
  std::vector<std::string> rule_trace;
  std::optional<Word> violation_witness;
  int norm_violations = 0;
  int cex_query_bound_violations = 0;  // instrumented runs only
  long long rule_applications = 0;
};

/// Hypothesis plus the mapping from its states back to tree nodes.
struct HypothesisBuild {
  MealyMachine machine;
  std::vector<int> state_nodes;  // machine state -> tree node; -1 for the error sink
  int error_state = -1;          // index of the synthetic sink, -1 when absent/merged
};

/// Folds an adequate observation tree into a complete, error-persistent
/// hypothesis: basis states plus an error sink that absorbs every observed
/// error and every unobserved transition. A basis state all of whose
/// observed outputs are errors takes over the sink's role.
inline HypothesisBuild build_hypothesis_e(const ObservationTree& t, const ApartnessMode& mode) {
  mode.validate();
  const auto& basis = t.basis();
  const int k = t.inputs().size();
  const ErrorAlias& alias = t.alias();

  std::map<int, int> node_to_state;
  for (size_t idx = 0; idx < basis.size(); ++idx) node_to_state[basis[idx]] = static_cast<int>(idx);
  if (!node_to_state.count(t.root())) throw std::logic_error("basis must contain the root");

  // Identification of frontier children, demanded lazily.
  auto identify = [&](int node) {
    auto cls = t.classify(node, mode);
    if (cls.kind != ObservationTree::FrontierClass::Kind::Identified)
      throw std::logic_error("hypothesis requires an adequate basis: frontier node " +
                             std::to_string(node) +
                             (cls.kind == ObservationTree::FrontierClass::Kind::Isolated
                                  ? " is isolated"
                                  : " is undecided"));
    return cls.identified_with;
  };

  // A non-initial basis state whose every input is an observed error takes
  // over the error sink's role; the synthetic sink would just duplicate it.
  int merged_sink = -1;
  if (!alias.empty()) {
    for (size_t idx = 0; idx < basis.size() && merged_sink < 0; ++idx) {
      if (basis[idx] == t.root()) continue;
      bool all_err = true;
      for (int i = 0; i < k && all_err; ++i) {
        int c = t.child(basis[idx], i);
        all_err = c != ObservationTree::kNone && t.output_is_error(t.incoming_output(c));
      }
      if (all_err) merged_sink = static_cast<int>(idx);
    }
  }

  HypothesisBuild out;
  MealyMachine& h = out.machine;
  h = MealyMachine(t.inputs());
  for (size_t idx = 0; idx < basis.size(); ++idx) h.add_state("q" + std::to_string(idx));
  out.state_nodes.assign(basis.size(), ObservationTree::kNone);
  for (size_t idx = 0; idx < basis.size(); ++idx) out.state_nodes[idx] = basis[idx];
  h.set_initial(node_to_state.at(t.root()));

  bool any_sink_edge = false;
  for (size_t idx = 0; idx < basis.size() && !any_sink_edge; ++idx)
    for (int i = 0; i < k && !any_sink_edge; ++i) {
      int c = t.child(basis[idx], i);
      any_sink_edge =
          c == ObservationTree::kNone || t.output_is_error(t.incoming_output(c));
    }
  int sink_state = merged_sink;
  if (any_sink_edge && merged_sink < 0) {
    sink_state = h.add_state("q_err");
    out.state_nodes.push_back(ObservationTree::kNone);
    out.error_state = sink_state;
  }

  for (size_t idx = 0; idx < basis.size(); ++idx) {
    int b = basis[idx];
    for (int i = 0; i < k; ++i) {
      int c = t.child(b, i);
      if (c == ObservationTree::kNone) {
        if (alias.empty())
          throw std::logic_error("hypothesis requires all basis transitions observed");
        h.set_transition(static_cast<int>(idx), i, sink_state, alias.canonical());
      } else if (t.output_is_error(t.incoming_output(c))) {
        h.set_transition(static_cast<int>(idx), i, sink_state,
                         t.output_name(t.incoming_output(c)));
      } else if (t.in_basis(c)) {
        h.set_transition(static_cast<int>(idx), i, node_to_state.at(c),
                         t.output_name(t.incoming_output(c)));
      } else {
        h.set_transition(static_cast<int>(idx), i, node_to_state.at(identify(c)),
                         t.output_name(t.incoming_output(c)));
      }
    }
  }
  if (out.error_state >= 0)
    for (int i = 0; i < k; ++i)
      h.set_transition(out.error_state, i, out.error_state, alias.canonical());
  return out;
}

/// Shortest stored word on which the hypothesis disagrees with the tree
/// (outputs compared modulo the alias), or nothing.
inline std::optional<Word> check_consistency(const MealyMachine& h, const ObservationTree& t) {
  if (!h.is_complete()) throw std::invalid_argument("check_consistency requires a complete machine");
  const ErrorAlias& alias = t.alias();
  struct Item {
    int node, state;
    Word w;
  };
  std::queue<Item> q;
  q.push({t.root(), h.initial(), {}});
  while (!q.empty()) {
    Item it = q.front();
    q.pop();
    for (int i = 0; i < t.inputs().size(); ++i) {
      int c = t.child(it.node, i);
      if (c == ObservationTree::kNone) continue;
      auto edge = *h.transition(it.state, i);
      Word w2 = it.w;
      w2.push_back(i);
      if (!alias.outputs_equal(h.output_name(edge.output),
                               t.output_name(t.incoming_output(c))))
        return w2;
      q.push({c, edge.target, std::move(w2)});
    }
  }
  return std::nullopt;
}

/// Shortest word outside the reference language the hypothesis answers
/// without a trailing error, or nothing; the hypothesis-specialized half of
/// classify_reference.
inline std::optional<Word> check_soundness_hyp(const Dfa& l, const MealyMachine& h,
                                               const ErrorAlias& e) {
  auto res = classify_reference(l, h, e);
  return res.sound_cex;
}

/// Exact fraction; 0/0 counts as zero.
struct Ratio {
  long long num = 0;
  long long den = 0;
  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
  friend bool operator==(const Ratio& a, const Ratio& b) {
    long long an = a.den == 0 ? 0 : a.num, ad = a.den == 0 ? 1 : a.den;
    long long bn = b.den == 0 ? 0 : b.num, bd = b.den == 0 ? 1 : b.den;
    return an * bd == bn * ad;
  }
  friend bool operator<(const Ratio& a, const Ratio& b) {
    long long an = a.den == 0 ? 0 : a.num, ad = a.den == 0 ? 1 : a.den;
    long long bn = b.den == 0 ? 0 : b.num, bd = b.den == 0 ? 1 : b.den;
    return an * bd < bn * ad;
  }
};

/// Match degree of tree state b against reference state q: the fraction of
/// observed words below b whose error behavior agrees with the reference's
/// acceptance, over all defined (w, i) pairs below b.
inline Ratio mdeg(const ObservationTree& t, int b, const Dfa& r, int q, const ErrorAlias& e) {
  auto tr = detail::input_translation(t.inputs(), r.inputs());
  long long agree = 0, total = 0;
  struct Item {
    int node, rstate;
  };
  std::vector<Item> stack{{b, q}};
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    for (int i = 0; i < t.inputs().size(); ++i) {
      int c = t.child(it.node, i);
      if (c == ObservationTree::kNone) continue;
      int rnext = r.step(it.rstate, tr[i]);
      bool err = e.contains(t.output_name(t.incoming_output(c)));
      ++total;
      if (err == !r.accepting(rnext)) ++agree;
      stack.push_back({c, rnext});
    }
  }
  return {agree, total};
}

namespace detail {

struct ViolationFound {
  Word word;
};

struct LearnerStuck : std::logic_error {
  using std::logic_error::logic_error;
};

// Binary-search counterexample decomposition. `oq` poses one output query
// (already bound to the run's query flavor). Returns the number of queries
// posed; afterwards the hypothesis no longer fits the tree.
template <typename OqFn>
int process_counterexample_impl(ObservationTree& tree, const HypothesisBuild& hyp,
                                const Word& sigma, const ApartnessMode& mode, OqFn&& oq) {
  int q_state = hyp.machine.state_after(sigma);
  int q_node = hyp.state_nodes[q_state];
  int r = tree.node_at(sigma);
  if (r == ObservationTree::kNone || q_node == ObservationTree::kNone)
    throw std::logic_error("counterexample prefix must be stored and outside the sink");
  if (tree.in_basis(r)) return 0;
  {
    auto f = tree.frontier();
    if (std::find(f.begin(), f.end(), r) != f.end()) return 0;
  }
  // Depth at which the path leaves the basis.
  int rho_len = 0;
  {
    int cur = tree.root();
    for (size_t idx = 0; idx < sigma.size() && tree.in_basis(cur); ++idx) {
      ++rho_len;
      cur = tree.child(cur, sigma[idx]);
    }
    rho_len = std::min<int>(rho_len, static_cast<int>(sigma.size()));
  }
  int h_mid = (rho_len + static_cast<int>(sigma.size())) / 2;
  Word sigma1(sigma.begin(), sigma.begin() + h_mid);
  Word sigma2(sigma.begin() + h_mid, sigma.end());
  int q2_state = hyp.machine.state_after(sigma1);
  int q2_node = hyp.state_nodes[q2_state];
  int r2 = tree.node_at(sigma1);
  if (q2_node == ObservationTree::kNone)
    throw std::logic_error("counterexample midpoint entered the error sink");
  auto eta = tree.apart(q_node, r, mode);
  if (!eta) throw std::logic_error("counterexample states lost their apartness witness");
  Word query = tree.access_word(q2_node);
  query.insert(query.end(), sigma2.begin(), sigma2.end());
  Word query_eta = query;
  query_eta.insert(query_eta.end(), eta->begin(), eta->end());
  oq(query_eta);
  if (r2 != ObservationTree::kNone && q2_node != r2 && tree.apart(q2_node, r2, mode))
    return 1 + process_counterexample_impl(tree, hyp, sigma1, mode, oq);
  return 1 + process_counterexample_impl(tree, hyp, query, mode, oq);
}

}  // namespace detail

/// Counterexample processing against a teacher: sigma's hypothesis state
/// and tree node must already be apart under the mode. Sound and
/// sound-complete modes query through the reference. Returns the number of
/// output queries posed.
inline int proc_counterex(Teacher& teacher, const HypothesisBuild& hyp, const Word& sigma,
                          const ApartnessMode& mode) {
  mode.validate();
  auto oq = [&](const Word& w) {
    if (mode.uses_reference())
      teacher.oq_s(w, *mode.reference, QueryPhase::Learn);
    else
      teacher.oq_e(w, QueryPhase::Learn);
  };
  return detail::process_counterexample_impl(teacher.tree(), hyp, sigma, mode, oq);
}

/// The rule engine. One instance runs one configured algorithm against one
/// teacher to completion.
class LearnerEngine {
 public:
  LearnerEngine(const LearnerConfig& cfg, Teacher& teacher)
      : cfg_(cfg), teacher_(teacher), tree_(teacher.tree()) {
    if (algorithm_needs_reference(cfg_.algorithm) && !cfg_.reference)
      throw std::invalid_argument(to_string(cfg_.algorithm) + " requires a reference");
    if (cfg_.reference) {
      ref_ = &*cfg_.reference;
      if (!ref_->is_total()) throw std::invalid_argument("reference must be total");
      if (!dfa_is_minimal(*ref_)) throw std::invalid_argument("reference must be minimal");
      if (!is_error_persistent_language(*ref_))
        throw std::invalid_argument("reference must be error-persistent");
      ref_tr_ = detail::input_translation(tree_.inputs(), ref_->inputs());
    }
    switch (cfg_.algorithm) {
      case Algorithm::Lsharp:
      case Algorithm::LsharpE:
      case Algorithm::ALsharpE:
        mode_ = ApartnessMode::plain();
        break;
      case Algorithm::LsharpES:
        mode_ = ApartnessMode::sound(*ref_);
        break;
      case Algorithm::LsharpESC:
        mode_ = ApartnessMode::sound_complete(*ref_);
        break;
    }
    if (ref_ && cfg_.algorithm != Algorithm::LsharpESC) {
      ref_chars_ = covers_and_separators(*ref_, /*accepting_only=*/false);
      for (const auto& [s, w] : ref_chars_->cover_order)
        cover_words_.insert(translate_from_ref(w));
    }
    if (cfg_.algorithm == Algorithm::LsharpESC)
      ref_chars_ = covers_and_separators(*ref_, /*accepting_only=*/true);
    moe_state_ = MoeState(teacher.rng_seed() ^ 0x6c62272e07bb0142ull);

    // The sound variants pose equivalence queries restricted to the
    // reference language; out-of-language counterexamples would name
    // differences their queries are barred from observing.
    oracle_ = cfg_.oracle;
    if (uses_sound_queries()) {
      if (oracle_.kind == EqOracle::Kind::Exact) oracle_.kind = EqOracle::Kind::ExactOnL;
      if (oracle_.kind == EqOracle::Kind::Moe) {
        oracle_.kind = EqOracle::Kind::RandomWp;
        oracle_.rwpm_filter = SuiteFilter::Sound;
      }
      if (oracle_.kind == EqOracle::Kind::RandomWp) oracle_.rwpm_filter = SuiteFilter::Sound;
      if (!oracle_.reference) oracle_.reference = *cfg_.reference;
    }
  }

  RunReport run() {
    RunReport report;
    try {
      if (cfg_.algorithm == Algorithm::LsharpESC) seed_from_cover();
      int stalled = 0;
      while (!done_) {
        NormSnapshot before = cfg_.check_norm ? snapshot_norm() : NormSnapshot{};
        uint64_t version = tree_.version();
        bool fired = apply_one_rule();
        if (!fired && !done_)
          throw detail::LearnerStuck("no rule applicable but basis not adequate");
        if (fired && !done_) {
          ++report.rule_applications;
          stalled = tree_.version() == version ? stalled + 1 : 0;
          if (stalled > 10000)
            throw detail::LearnerStuck("rules keep firing without extending the tree");
          if (cfg_.check_norm && !(snapshot_norm().value(norm_uses_tree()) >
                                   before.value(norm_uses_tree())))
            ++report.norm_violations;
        }
      }
      report.outcome = post_hoc_outcome();
    } catch (const BudgetExceededError&) {
      report.outcome = RunOutcome::BudgetExceeded;
    } catch (const detail::ViolationFound& v) {
      report.outcome = RunOutcome::ViolationDetected;
      report.violation_witness = v.word;
    }
    report.learned = last_hyp_ ? last_hyp_->machine : fallback_machine();
    report.learned_states = report.learned.num_states();
    report.eq_count = eq_count_;
    report.cex_query_bound_violations = cex_bound_violations_;
    report.learn_symbols = teacher_.learn_symbols();
    report.test_symbols = teacher_.test_symbols();
    report.total_symbols = teacher_.total_symbols();
    report.rule_trace = std::move(trace_);
    return report;
  }

 private:
  // ---- shared plumbing ----

  void trace(const char* rule) {
    if (cfg_.collect_rule_trace) trace_.push_back(rule);
  }

  bool in_language(const Word& w) const {
    int s = ref_->initial();
    if (!ref_->accepting(s)) return false;
    for (int i : w) {
      s = ref_->step(s, ref_tr_[i]);
      if (!ref_->accepting(s)) return false;
    }
    return true;
  }

  bool uses_sound_queries() const {
    return cfg_.algorithm == Algorithm::LsharpES || cfg_.algorithm == Algorithm::LsharpESC;
  }

  OutputWord oq(const Word& w) {
    OutputWord outs = uses_sound_queries() ? teacher_.oq_s(w, *ref_, QueryPhase::Learn)
                                           : teacher_.oq_e(w, QueryPhase::Learn);
    if (cfg_.algorithm == Algorithm::LsharpESC && !outs.empty() &&
        tree_.alias().contains(outs.back())) {
      // Every executed input stayed inside the language, so an observed
      // error is a completeness violation.
      Word executed(w.begin(), w.begin() + outs.size());
      throw detail::ViolationFound{std::move(executed)};
    }
    return outs;
  }

  bool apart(int p, int q) { return cache_.is_apart(tree_, p, q, mode_); }
  const std::optional<Word>& witness(int p, int q) {
    return *cache_.lookup(tree_, p, q, mode_);
  }

  Word access_plus(int node, int input) const {
    Word w = tree_.access_word(node);
    w.push_back(input);
    return w;
  }

  // ---- rules ----

  bool apply_one_rule() {
    switch (cfg_.algorithm) {
      case Algorithm::Lsharp:
      case Algorithm::LsharpE:
        return try_promotion(false) || try_extension() || try_separation() || try_equivalence();
      case Algorithm::ALsharpE:
        return try_rebuilding() || try_promotion(true) || try_promotion(false) ||
               try_extension() || try_separation() || try_match_separation() ||
               try_match_refinement() || try_equivalence();
      case Algorithm::LsharpES:
        return try_rebuilding() || try_promotion(true) || try_promotion(false) ||
               try_extension() || try_separation() || try_equivalence();
      case Algorithm::LsharpESC:
        return try_violation() || try_promotion(false) || try_extension() ||
               try_separation() || try_equivalence();
    }
    return false;
  }

  bool try_violation() {
    // Queries posed through oq() raise violations eagerly; this rule also
    // covers error observations recorded by conformance testing.
    const auto& err_nodes = tree_.error_nodes();
    for (; violation_cursor_ < err_nodes.size(); ++violation_cursor_) {
      Word w = tree_.access_word(err_nodes[violation_cursor_]);
      if (in_language(w)) throw detail::ViolationFound{std::move(w)};
    }
    return false;
  }

  bool try_promotion(bool prioritized) {
    for (int f : tree_.frontier()) {
      if (prioritized && !cover_words_.count(tree_.access_word(f))) continue;
      bool isolated = true;
      for (int b : tree_.basis())
        if (!apart(f, b)) {
          isolated = false;
          break;
        }
      if (isolated) {
        tree_.promote(f);
        trace(prioritized ? "prioritized-promotion" : "promotion");
        return true;
      }
    }
    return false;
  }

  std::vector<int> basis_by_id() const {
    std::vector<int> b = tree_.basis();
    std::sort(b.begin(), b.end());
    return b;
  }

  bool try_extension() {
    for (int b : basis_by_id())
      for (int i = 0; i < tree_.inputs().size(); ++i) {
        if (tree_.child(b, i) != ObservationTree::kNone) continue;
        Word w = access_plus(b, i);
        if (uses_sound_queries() && !in_language(w)) continue;
        oq(w);
        trace("extension");
        return true;
      }
    return false;
  }

  bool try_separation() {
    for (int f : tree_.frontier()) {
      std::vector<int> candidates;
      for (int b : tree_.basis())
        if (!apart(f, b)) candidates.push_back(b);
      if (candidates.size() < 2) continue;
      int r = candidates[0], r2 = candidates[1];
      const auto& sep = witness(r, r2);
      if (!sep) throw std::logic_error("basis states must be pairwise apart");
      Word w = tree_.access_word(f);
      w.insert(w.end(), sep->begin(), sep->end());
      oq(w);
      trace("separation");
      return true;
    }
    return false;
  }

  // Maximal stored prefix of w below `node` ends in a non-error output and
  // w itself is not fully stored: querying w is guaranteed to add a node.
  bool extends_tree(int node, const Word& w) const {
    auto [last, used] = tree_.walk(w, node);
    if (used == static_cast<int>(w.size())) return false;
    if (used == 0) return true;
    return !tree_.output_is_error(tree_.incoming_output(last));
  }

  bool try_rebuilding() {
    const bool sound = uses_sound_queries();
    for (int q : basis_by_id()) {
      Word aq = tree_.access_word(q);
      for (int i = 0; i < tree_.inputs().size(); ++i) {
        int child = tree_.child(q, i);
        bool child_open = child == ObservationTree::kNone;
        if (!child_open) {
          if (tree_.in_basis(child)) continue;
          if (tree_.output_is_error(tree_.incoming_output(child))) continue;
        }
        Word aqi = aq;
        aqi.push_back(i);
        if (!cover_words_.count(aqi)) continue;
        for (int q2 : basis_by_id()) {
          Word aq2 = tree_.access_word(q2);
          if (!cover_words_.count(aq2)) continue;
          if (!child_open && apart(q2, child)) continue;
          int ra = ref_->state_after(translate_ref(aqi));
          int rb = ref_->state_after(translate_ref(aq2));
          if (ra == rb) continue;
          const Word* sep = ref_chars_->sep(ra, rb);
          if (!sep) continue;
          Word sep_local = translate_from_ref(*sep);
          Word w1 = aqi;
          w1.insert(w1.end(), sep_local.begin(), sep_local.end());
          Word w2 = aq2;
          w2.insert(w2.end(), sep_local.begin(), sep_local.end());
          bool progress1 = extends_tree(0, w1) && (!sound || in_language(w1));
          bool progress2 = extends_tree(0, w2) && (!sound || in_language(w2));
          if (!progress1 && !progress2) continue;
          oq(w1);
          oq(w2);
          trace("rebuilding");
          return true;
        }
      }
    }
    return false;
  }

  // ---- matching rules (adaptive variant) ----

  Ratio mdeg_cached(int node, int rstate) {
    auto key = std::make_pair(node, rstate);
    auto it = mdeg_cache_.find(key);
    if (it != mdeg_cache_.end() && it->second.second == tree_.subtree_stamp(node))
      return it->second.first;
    Ratio r = mdeg(tree_, node, *ref_, rstate, tree_.alias());
    mdeg_cache_[key] = {r, tree_.subtree_stamp(node)};
    return r;
  }

  std::vector<int> matched_ref_states(int node) {
    std::vector<int> best;
    Ratio best_v{0, 0};
    for (int p = 0; p < ref_->num_states(); ++p) {
      Ratio v = mdeg_cached(node, p);
      if (best.empty() || best_v < v) {
        best = {p};
        best_v = v;
      } else if (v == best_v) {
        best.push_back(p);
      }
    }
    return best;
  }

  // Shortest stored word under `node` whose error behavior disagrees with
  // reference state rstate (error observed iff the reference accepts).
  std::optional<Word> disagreement_word(int node, int rstate) {
    struct Item {
      int node, rstate;
      Word w;
    };
    std::queue<Item> q;
    q.push({node, rstate, {}});
    while (!q.empty()) {
      Item it = q.front();
      q.pop();
      for (int i = 0; i < tree_.inputs().size(); ++i) {
        int c = tree_.child(it.node, i);
        if (c == ObservationTree::kNone) continue;
        int rn = ref_->step(it.rstate, ref_tr_[i]);
        bool err = tree_.output_is_error(tree_.incoming_output(c));
        Word w2 = it.w;
        w2.push_back(i);
        if (err == ref_->accepting(rn)) return w2;
        q.push({c, rn, std::move(w2)});
      }
    }
    return std::nullopt;
  }

  bool try_match_separation() {
    for (int q : basis_by_id()) {
      auto q_matches = matched_ref_states(q);
      for (int i = 0; i < tree_.inputs().size(); ++i) {
        int r = tree_.child(q, i);
        if (r == ObservationTree::kNone || tree_.in_basis(r)) continue;
        if (tree_.output_is_error(tree_.incoming_output(r))) continue;
        for (int p : q_matches) {
          if (disagreement_word(q, p)) continue;  // q must agree with p everywhere
          int p2 = ref_->step(p, ref_tr_[i]);
          bool p2_matched = false;
          for (int s : tree_.basis())
            if (!p2_matched) {
              auto ms = matched_ref_states(s);
              p2_matched = std::find(ms.begin(), ms.end(), p2) != ms.end();
            }
          if (p2_matched) continue;
          for (int q2 : tree_.basis()) {
            if (apart(q2, r)) continue;
            auto sigma = disagreement_word(q2, p2);
            if (!sigma) continue;
            Word w = access_plus(q, i);
            w.insert(w.end(), sigma->begin(), sigma->end());
            if (!extends_tree(0, w)) continue;
            oq(w);
            trace("match-separation");
            return true;
          }
        }
      }
    }
    return false;
  }

  bool try_match_refinement() {
    for (int q : basis_by_id()) {
      auto matches = matched_ref_states(q);
      if (matches.size() < 2) continue;
      for (size_t a = 0; a < matches.size(); ++a)
        for (size_t b = a + 1; b < matches.size(); ++b) {
          const Word* sep = ref_chars_->sep(matches[a], matches[b]);
          if (!sep || sep->empty()) continue;
          Word w = tree_.access_word(q);
          Word sep_local = translate_from_ref(*sep);
          w.insert(w.end(), sep_local.begin(), sep_local.end());
          if (!extends_tree(0, w)) continue;
          oq(w);
          trace("match-refinement");
          return true;
        }
    }
    return false;
  }

  // ---- equivalence ----

  bool try_equivalence() {
    if (!tree_.is_adequate(mode_)) return false;
    HypothesisBuild hyp = build_hypothesis_e(tree_, mode_);
    last_hyp_ = hyp;

    if (auto sigma = check_consistency(hyp.machine, tree_)) {
      handle_conflict(hyp, *sigma);
      trace("equivalence(consistency)");
      return true;
    }
    if (uses_sound_queries()) {
      if (auto rho = check_soundness_hyp(*ref_, hyp.machine, teacher_.alias())) {
        oq(*rho);
        handle_conflict(hyp, *rho);
        trace("equivalence(soundness)");
        return true;
      }
    }
    if (cfg_.max_eq && eq_count_ >= *cfg_.max_eq) {
      done_ = true;
      trace("equivalence(max-eq)");
      return true;
    }
    auto cex = eq(teacher_, hyp.machine, oracle_, &moe_state_);
    if (!cex) {
      done_ = true;
      trace("equivalence(yes)");
      return true;
    }
    ++eq_count_;
    oq(*cex);
    handle_conflict(hyp, *cex);
    trace("equivalence(cex)");
    return true;
  }

  // Finds the shortest prefix of w whose hypothesis state and tree node are
  // apart under the run's mode, then runs counterexample processing on it.
  void handle_conflict(const HypothesisBuild& hyp, const Word& w) {
    auto prefix = shortest_apart_prefix(hyp, w);
    if (!prefix)
      throw std::logic_error("conflict word yields no apart prefix");
    process_counterexample(hyp, *prefix);
  }

  std::optional<Word> shortest_apart_prefix(const HypothesisBuild& hyp, const Word& w) {
    int s = hyp.machine.initial();
    int node = tree_.root();
    Word prefix;
    for (size_t idx = 0;; ++idx) {
      int hyp_node = hyp.state_nodes[s];
      if (hyp_node == ObservationTree::kNone) break;  // entered the error sink
      if (hyp_node != node && tree_.apart(hyp_node, node, mode_)) return prefix;
      if (idx == w.size()) break;
      int c = tree_.child(node, w[idx]);
      if (c == ObservationTree::kNone) break;
      s = hyp.machine.transition(s, w[idx])->target;
      node = c;
      prefix.push_back(w[idx]);
    }
    return std::nullopt;
  }

  void process_counterexample(const HypothesisBuild& hyp, const Word& sigma) {
    int queries = detail::process_counterexample_impl(tree_, hyp, sigma, mode_,
                                                      [this](const Word& w) { oq(w); });
    if (cfg_.check_norm) {
      int bound = 1;
      for (size_t len = 1; len < sigma.size(); len *= 2) ++bound;
      if (queries > bound) ++cex_bound_violations_;
    }
  }

  // ---- sound-complete seeding ----

  void seed_from_cover() {
    auto suite = build_t_l(*ref_);
    for (const auto& w : suite) oq(translate_from_ref(w));
    for (const auto& [state, access] : ref_chars_->cover_order) {
      Word local = translate_from_ref(access);
      int node = tree_.node_at(local);
      if (node == ObservationTree::kNone || tree_.in_basis(node)) continue;
      if (node != tree_.root() &&
          tree_.output_is_error(tree_.incoming_output(node)))
        continue;
      tree_.promote(node);
    }
  }

  // ---- instrumentation ----

  struct NormSnapshot {
    long long basis_term = 0, defined = 0, apart_pairs = 0, tree_nodes = 0;
    long long value(bool with_tree) const {
      return basis_term + defined + apart_pairs + (with_tree ? tree_nodes : 0);
    }
  };

  bool norm_uses_tree() const {
    return cfg_.algorithm == Algorithm::ALsharpE || cfg_.algorithm == Algorithm::LsharpES;
  }

  NormSnapshot snapshot_norm() {
    NormSnapshot n;
    long long b = static_cast<long long>(tree_.basis().size());
    n.basis_term = b * (b + 1) / 2;
    for (int s : tree_.basis())
      for (int i = 0; i < tree_.inputs().size(); ++i)
        if (tree_.child(s, i) != ObservationTree::kNone) ++n.defined;
    for (int f : tree_.frontier())
      for (int s : tree_.basis())
        if (apart(f, s)) ++n.apart_pairs;
    n.tree_nodes = tree_.num_nodes();
    return n;
  }

  // ---- wrap-up ----

  RunOutcome post_hoc_outcome() {
    if (!last_hyp_) return RunOutcome::Incorrect;
    auto cex = mealy_equivalence(last_hyp_->machine, teacher_.sul(), nullptr, teacher_.alias());
    return cex ? RunOutcome::Incorrect : RunOutcome::Correct;
  }

  MealyMachine fallback_machine() {
    // No hypothesis was ever built: report a single-state stub that answers
    // the canonical error (or the first observed root output) everywhere.
    MealyMachine m(tree_.inputs());
    m.add_state("q0");
    std::string out = tree_.alias().empty() ? "?" : tree_.alias().canonical();
    for (int i = 0; i < tree_.inputs().size(); ++i) m.set_transition(0, i, 0, out);
    return m;
  }

  Word translate_ref(const Word& w) const {
    Word out;
    out.reserve(w.size());
    for (int i : w) out.push_back(ref_tr_[i]);
    return out;
  }

  // Reference-alphabet word -> tree-alphabet word.
  Word translate_from_ref(const Word& w) const {
    Word out;
    out.reserve(w.size());
    for (int i : w) out.push_back(tree_.inputs().at(ref_->inputs().name(i)));
    return out;
  }

  const LearnerConfig& cfg_;
  Teacher& teacher_;
  ObservationTree& tree_;
  ApartnessMode mode_;
  EqOracle oracle_;
  const Dfa* ref_ = nullptr;
  std::vector<int> ref_tr_;
  std::optional<CharacterizationData> ref_chars_;
  std::set<Word> cover_words_;  // reference cover, in tree-alphabet words
  ApartnessCache cache_;
  std::map<std::pair<int, int>, std::pair<Ratio, uint64_t>> mdeg_cache_;
  MoeState moe_state_{0};
  std::optional<HypothesisBuild> last_hyp_;
  std::vector<std::string> trace_;
  bool done_ = false;
  int eq_count_ = 0;
  int cex_bound_violations_ = 0;
  size_t violation_cursor_ = 0;
};

/// Runs the configured algorithm against the teacher until it terminates,
/// the budget runs out, or (sound-complete mode) a completeness violation
/// surfaces.
inline RunReport run_learner(const LearnerConfig& cfg, Teacher& teacher) {
  LearnerEngine engine(cfg, teacher);
  return engine.run();
}

}  // namespace errlearn
