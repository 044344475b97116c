#pragma once

// Error-aware conformance testing: the truncation filters, suite
// normalization, the reference-derived seeding suite, a randomized
// Wp-method word generator with truncation, the mixture-of-experts suite
// selector, and the equivalence-query oracles built from them.

#include <random>

#include "errlearn/teacher.hpp"

namespace errlearn {

/// Truncates sigma at the first position where the hypothesis outputs an
/// error; a word whose very first output errs keeps just its first symbol.
/// Words the hypothesis answers error-free pass through unchanged.
inline Word f_e(const MealyMachine& h, const Word& sigma, const ErrorAlias& e) {
  if (e.empty()) return sigma;
  int s = h.initial();
  for (size_t idx = 0; idx < sigma.size(); ++idx) {
    auto edge = *h.transition(s, sigma[idx]);
    if (e.contains(h.output_name(edge.output)))
      return Word(sigma.begin(), sigma.begin() + idx + 1);
    s = edge.target;
  }
  return sigma;
}

/// Truncates to the longest prefix inside the reference language when that
/// cut comes no later than f_e's; otherwise falls back to f_e. The result
/// is always a prefix of f_e(h, sigma).
inline Word f_s(const MealyMachine& h, const Dfa& l, const Word& sigma, const ErrorAlias& e) {
  auto tr = detail::input_translation(h.inputs(), l.inputs());
  size_t len_in_l = sigma.size() + 1;  // sentinel: never leaves the language
  int state = l.initial();
  if (!l.accepting(state)) {
    len_in_l = 0;
  } else {
    for (size_t idx = 0; idx < sigma.size(); ++idx) {
      state = l.step(state, tr[sigma[idx]]);
      if (!l.accepting(state)) {
        len_in_l = idx;
        break;
      }
    }
  }
  Word cut_e = f_e(h, sigma, e);
  if (len_in_l <= sigma.size() && len_in_l < cut_e.size())
    return Word(sigma.begin(), sigma.begin() + len_in_l);
  return cut_e;
}

/// Drops empty words and proper prefixes of other suite members; returns
/// the maximal elements sorted lexicographically.
inline std::vector<Word> normalize_suite(std::vector<Word> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  std::vector<Word> out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (words[i].empty()) continue;
    if (i + 1 < words.size() && words[i + 1].size() > words[i].size() &&
        std::equal(words[i].begin(), words[i].end(), words[i + 1].begin()))
      continue;  // proper prefix of its successor
    out.push_back(words[i]);
  }
  return out;
}

/// Newline-separated suite rendering, inputs space-separated, for external
/// replay.
inline std::string format_suite(const std::vector<Word>& suite, const Alphabet& inputs) {
  std::string out;
  for (const auto& w : suite) {
    out += inputs.format(w);
    out.push_back('\n');
  }
  return out;
}

/// Seeding suite of a minimal, total, error-persistent reference: every
/// accepting-cover prefix, optionally extended one input, followed by the
/// identifiers of the state reached. Executing it with oq_s makes the
/// cover-reached tree states pairwise apart.
inline std::vector<Word> build_t_l(const Dfa& l) {
  auto chars = covers_and_separators(l, /*accepting_only=*/true);
  std::vector<Word> suite;
  for (const auto& [state, access] : chars.cover_order) {
    for (int i = -1; i < l.inputs().size(); ++i) {
      Word pi = access;
      int target = state;
      if (i >= 0) {
        pi.push_back(i);
        target = l.step(state, i);
      }
      const auto& family = chars.separating_family.at(target);
      if (family.empty()) {
        suite.push_back(pi);
        continue;
      }
      for (const auto& w : family) {
        Word piw = pi;
        piw.insert(piw.end(), w.begin(), w.end());
        suite.push_back(std::move(piw));
      }
    }
  }
  return normalize_suite(std::move(suite));
}

/// Access words and per-state identifiers of a complete Mealy machine,
/// outputs compared modulo the alias. Pairs with no separating word (a
/// non-minimal machine) are simply absent from the family.
struct MealyCharacterization {
  std::vector<Word> cover;                       // BFS order, index = state
  std::vector<std::vector<Word>> identifiers;    // W_q per state, sorted
};

inline MealyCharacterization mealy_covers_and_separators(const MealyMachine& m,
                                                         const ErrorAlias& e) {
  if (!m.is_complete()) throw std::invalid_argument("characterization requires a complete machine");
  const int n = m.num_states();
  const int k = m.inputs().size();
  MealyCharacterization out;
  out.cover.assign(n, {});
  out.identifiers.assign(n, {});

  std::vector<char> seen(n, 0);
  std::queue<int> bfs;
  bfs.push(m.initial());
  seen[m.initial()] = 1;
  while (!bfs.empty()) {
    int s = bfs.front();
    bfs.pop();
    for (int i = 0; i < k; ++i) {
      int t = m.transition(s, i)->target;
      if (!seen[t]) {
        seen[t] = 1;
        out.cover[t] = out.cover[s];
        out.cover[t].push_back(i);
        bfs.push(t);
      }
    }
  }

  auto err = error_output_mask(m, e);
  auto out_class = [&](int o) { return err[o] ? -1 : o; };
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q)
      for (int i = 0; i < k && dist[p][q] == -1; ++i)
        if (out_class(m.transition(p, i)->output) != out_class(m.transition(q, i)->output))
          dist[p][q] = dist[q][p] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (dist[p][q] != -1) continue;
        int best = -1;
        for (int i = 0; i < k; ++i) {
          int dp = m.transition(p, i)->target, dq = m.transition(q, i)->target;
          if (dp == dq) continue;
          int d = dist[std::min(dp, dq)][std::max(dp, dq)];
          if (d != -1 && (best == -1 || d + 1 < best)) best = d + 1;
        }
        if (best != -1) dist[p][q] = dist[q][p] = best, changed = true;
      }
  }
  std::map<std::pair<int, int>, Word> memo;
  auto sep_of = [&](auto&& self, int p, int q) -> const Word& {
    auto key = std::make_pair(std::min(p, q), std::max(p, q));
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    Word w;
    for (int i = 0; i < k; ++i) {
      auto ep = *m.transition(p, i);
      auto eq2 = *m.transition(q, i);
      if (dist[p][q] == 1) {
        if (out_class(ep.output) != out_class(eq2.output)) {
          w.push_back(i);
          break;
        }
      } else if (ep.target != eq2.target &&
                 out_class(ep.output) == out_class(eq2.output) &&
                 dist[ep.target][eq2.target] == dist[p][q] - 1) {
        w.push_back(i);
        const Word& rest = self(self, ep.target, eq2.target);
        w.insert(w.end(), rest.begin(), rest.end());
        break;
      }
    }
    return memo.emplace(key, std::move(w)).first->second;
  };
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      if (dist[p][q] == -1) continue;
      const Word& w = sep_of(sep_of, p, q);
      auto insert_sorted = [](std::vector<Word>& v, const Word& word) {
        auto pos = std::lower_bound(v.begin(), v.end(), word);
        if (pos == v.end() || *pos != word) v.insert(pos, word);
      };
      insert_sorted(out.identifiers[p], w);
      insert_sorted(out.identifiers[q], w);
    }
  return out;
}

struct RwpmParams {
  int expected_middle_length = 5;  // geometric mean length of the random walk
  int min_middle_steps = 1;
  std::optional<long long> max_tests;
  uint64_t rng_seed = 0;
};

enum class SuiteFilter { None, ErrorOnly, Sound };

/// Randomized Wp-method word stream: cover prefix, geometric random middle,
/// then an identifier of the state the hypothesis expects, truncated by the
/// configured filter. Deterministic for a fixed seed; words that truncate
/// to nothing are skipped but still count against max_tests.
class RwpmStream {
 public:
  RwpmStream(const MealyMachine& h, RwpmParams params, SuiteFilter filter,
             const Dfa* reference, const ErrorAlias& e)
      : h_(&h),
        params_(params),
        filter_(filter),
        reference_(reference),
        alias_(&e),
        rng_(params.rng_seed),
        chars_(mealy_covers_and_separators(h, e)) {
    if (params_.min_middle_steps < 1 || params_.expected_middle_length < params_.min_middle_steps)
      throw std::invalid_argument("rwpm: expected length must be >= min steps >= 1");
    if (filter_ == SuiteFilter::Sound && reference_ == nullptr)
      throw std::invalid_argument("rwpm: sound filter requires a reference");
  }

  /// Next non-empty filtered test word, or nullopt once max_tests words
  /// have been drawn.
  std::optional<Word> next() {
    while (!params_.max_tests || drawn_ < *params_.max_tests) {
      ++drawn_;
      Word w = draw();
      switch (filter_) {
        case SuiteFilter::None:
          break;
        case SuiteFilter::ErrorOnly:
          w = f_e(*h_, w, *alias_);
          break;
        case SuiteFilter::Sound:
          w = f_s(*h_, *reference_, w, *alias_);
          break;
      }
      if (!w.empty()) return w;
    }
    return std::nullopt;
  }

  long long drawn() const { return drawn_; }

 private:
  Word draw() {
    const int k = h_->inputs().size();
    std::uniform_int_distribution<size_t> pick_state(0, chars_.cover.size() - 1);
    std::uniform_int_distribution<int> pick_input(0, k - 1);
    Word w = chars_.cover[pick_state(rng_)];
    double p = 1.0 / params_.expected_middle_length;
    int steps = params_.min_middle_steps;
    if (p < 1.0) steps += std::geometric_distribution<int>(p)(rng_);
    for (int i = 0; i < steps; ++i) w.push_back(pick_input(rng_));
    int target = h_->state_after(w);
    const auto& ids = chars_.identifiers[target];
    if (!ids.empty()) {
      std::uniform_int_distribution<size_t> pick_id(0, ids.size() - 1);
      const Word& suffix = ids[pick_id(rng_)];
      w.insert(w.end(), suffix.begin(), suffix.end());
    }
    return w;
  }

  const MealyMachine* h_;
  RwpmParams params_;
  SuiteFilter filter_;
  const Dfa* reference_;
  const ErrorAlias* alias_;
  std::mt19937_64 rng_;
  MealyCharacterization chars_;
  long long drawn_ = 0;
};

struct MoeParams {
  double gamma = 0.2;           // exploration probability
  int activation_threshold = 5; // hypothesis size at which confidence kicks in
  std::vector<double> initial_confidences;  // defaults to 1.0 per suite
};

/// Per-run mixture-of-experts state; confidence persists across hypotheses
/// within one learner run.
struct MoeState {
  std::vector<double> confidence;
  std::mt19937_64 rng;
  explicit MoeState(uint64_t seed = 0) : rng(seed) {}
};

namespace detail {

/// Compares an executed (possibly truncated) answer against the hypothesis
/// prediction; true when they disagree somewhere in the executed range.
inline bool answer_disagrees(const MealyMachine& h, const Word& word, const OutputWord& answer,
                             const ErrorAlias& e) {
  int s = h.initial();
  for (size_t idx = 0; idx < answer.size(); ++idx) {
    auto edge = *h.transition(s, word[idx]);
    if (!e.outputs_equal(h.output_name(edge.output), answer[idx])) return true;
    s = edge.target;
  }
  return false;
}

}  // namespace detail

/// Draws words from the given suites, a suite picked uniformly while the
/// hypothesis is small or with probability gamma, else proportionally to
/// confidence; stops at the first counterexample (that suite's confidence
/// increments) or when every suite is exhausted.
inline std::optional<Word> moe_run(Teacher& teacher, const MealyMachine& h,
                                   std::vector<RwpmStream*> suites, const MoeParams& params,
                                   MoeState& state) {
  if (suites.empty()) throw std::invalid_argument("moe_run requires at least one suite");
  if (state.confidence.size() != suites.size()) {
    state.confidence.assign(suites.size(), 1.0);
    for (size_t i = 0; i < params.initial_confidences.size() && i < suites.size(); ++i)
      state.confidence[i] = params.initial_confidences[i];
  }
  std::vector<char> exhausted(suites.size(), 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (true) {
    std::vector<size_t> live;
    for (size_t i = 0; i < suites.size(); ++i)
      if (!exhausted[i]) live.push_back(i);
    if (live.empty()) return std::nullopt;

    size_t chosen;
    bool explore = h.num_states() < params.activation_threshold || unit(state.rng) < params.gamma;
    if (explore || live.size() == 1) {
      std::uniform_int_distribution<size_t> pick(0, live.size() - 1);
      chosen = live[pick(state.rng)];
    } else {
      double total = 0;
      for (size_t i : live) total += state.confidence[i];
      double r = unit(state.rng) * total;
      chosen = live.back();
      for (size_t i : live) {
        r -= state.confidence[i];
        if (r <= 0) {
          chosen = i;
          break;
        }
      }
    }
    auto word = suites[chosen]->next();
    if (!word) {
      exhausted[chosen] = 1;
      continue;
    }
    OutputWord answer = teacher.oq_e(*word, QueryPhase::Test);
    if (detail::answer_disagrees(h, *word, answer, teacher.alias())) {
      state.confidence[chosen] += 1.0;
      return word;
    }
  }
}

/// Equivalence-query oracle configuration. Exact and ExactOnL are idealized
/// product checks at zero symbol cost; RandomWp and Moe run conformance
/// tests through the teacher, charged to the test phase. With omit_final
/// set (the experiment driver's convention), a conformance oracle answers
/// yes for an actually-equivalent hypothesis without running tests.
struct EqOracle {
  enum class Kind { Exact, ExactOnL, RandomWp, Moe };
  Kind kind = Kind::Exact;
  std::optional<Dfa> reference;  // ExactOnL restriction; Sound filter; Moe second suite
  RwpmParams rwpm;
  SuiteFilter rwpm_filter = SuiteFilter::None;
  MoeParams moe;
  bool omit_final = false;

  static EqOracle exact() { return {}; }
  static EqOracle exact_on_l(Dfa ref) {
    EqOracle o;
    o.kind = Kind::ExactOnL;
    o.reference = std::move(ref);
    return o;
  }
  static EqOracle random_wp(RwpmParams params, SuiteFilter filter,
                            std::optional<Dfa> ref = std::nullopt) {
    EqOracle o;
    o.kind = Kind::RandomWp;
    o.rwpm = params;
    o.rwpm_filter = filter;
    o.reference = std::move(ref);
    return o;
  }
  static EqOracle mixture(RwpmParams rwpm, MoeParams moe, Dfa ref) {
    EqOracle o;
    o.kind = Kind::Moe;
    o.rwpm = rwpm;
    o.moe = moe;
    o.reference = std::move(ref);
    return o;
  }
};

/// Poses an equivalence query; returns a counterexample word or nullopt for
/// yes. Conformance counterexamples are returned as the full posed word.
inline std::optional<Word> eq(Teacher& teacher, const MealyMachine& h, const EqOracle& oracle,
                              MoeState* moe_state = nullptr) {
  if (!h.is_complete()) throw std::invalid_argument("eq requires a complete hypothesis");
  const Dfa* ref = oracle.reference ? &*oracle.reference : nullptr;
  switch (oracle.kind) {
    case EqOracle::Kind::Exact:
      return mealy_equivalence(h, teacher.sul(), nullptr, teacher.alias());
    case EqOracle::Kind::ExactOnL:
      if (!ref) throw std::invalid_argument("exact-on-l oracle requires a reference");
      return mealy_equivalence(h, teacher.sul(), ref, teacher.alias());
    case EqOracle::Kind::RandomWp: {
      const bool sound = oracle.rwpm_filter == SuiteFilter::Sound;
      if (oracle.omit_final &&
          !mealy_equivalence(h, teacher.sul(), sound ? ref : nullptr, teacher.alias()))
        return std::nullopt;
      RwpmStream stream(h, oracle.rwpm, oracle.rwpm_filter, ref, teacher.alias());
      while (auto word = stream.next()) {
        OutputWord answer = sound ? teacher.oq_s(*word, *ref, QueryPhase::Test)
                                  : teacher.oq_e(*word, QueryPhase::Test);
        if (detail::answer_disagrees(h, *word, answer, teacher.alias())) return word;
      }
      return std::nullopt;
    }
    case EqOracle::Kind::Moe: {
      if (!ref) throw std::invalid_argument("moe oracle requires a reference");
      if (oracle.omit_final && !mealy_equivalence(h, teacher.sul(), nullptr, teacher.alias()))
        return std::nullopt;
      RwpmParams pe = oracle.rwpm;
      RwpmParams ps = oracle.rwpm;
      ps.rng_seed = oracle.rwpm.rng_seed ^ 0x9e3779b97f4a7c15ull;
      RwpmStream err_suite(h, pe, SuiteFilter::ErrorOnly, nullptr, teacher.alias());
      RwpmStream sound_suite(h, ps, SuiteFilter::Sound, ref, teacher.alias());
      MoeState local(oracle.rwpm.rng_seed ^ 0xda942042e4dd58b5ull);
      MoeState& st = moe_state ? *moe_state : local;
      return moe_run(teacher, h, {&err_suite, &sound_suite}, oracle.moe, st);
    }
  }
  return std::nullopt;
}

}  // namespace errlearn
