#pragma once

// Mealy machines and reference DFAs: the value types everything else builds
// on, plus the analyses defined directly on them (word execution, error
// persistence, reference classification and extraction, DFA minimization,
// product equivalence, state covers and separating families).

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace errlearn {

/// Input word as symbol indexes into an Alphabet.
using Word = std::vector<int>;
/// Output word as output symbol strings.
using OutputWord = std::vector<std::string>;

/// Ordered input alphabet. Symbol order is the declared order and is used
/// for all deterministic tie-breaking.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(const std::vector<std::string>& symbols) {
    for (const auto& s : symbols) add(s);
  }

  int add(const std::string& symbol) {
    auto it = index_.find(symbol);
    if (it != index_.end()) return it->second;
    symbols_.push_back(symbol);
    index_.emplace(symbol, static_cast<int>(symbols_.size()) - 1);
    return static_cast<int>(symbols_.size()) - 1;
  }

  std::optional<int> find(std::string_view symbol) const {
    auto it = index_.find(std::string(symbol));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int at(std::string_view symbol) const {
    auto i = find(symbol);
    if (!i) throw std::out_of_range("unknown input symbol: " + std::string(symbol));
    return *i;
  }

  const std::string& name(int i) const { return symbols_.at(i); }
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.symbols_ == b.symbols_;
  }

  /// Builds a word from explicit symbol names.
  Word word(const std::vector<std::string>& names) const {
    Word w;
    w.reserve(names.size());
    for (const auto& s : names) w.push_back(at(s));
    return w;
  }

  /// Builds a word from text: whitespace-separated symbols, or one character
  /// per symbol when the text has no spaces and every character is a symbol.
  Word word(std::string_view text) const {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
      if (c == ' ' || c == '\t') {
        if (!cur.empty()) parts.push_back(std::move(cur)), cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    if (parts.size() == 1 && !find(parts[0])) {
      Word w;
      for (char c : parts[0]) w.push_back(at(std::string(1, c)));
      return w;
    }
    return word(parts);
  }

  /// Space-separated rendering, used for suite export and diagnostics.
  std::string format(const Word& w) const {
    std::string out;
    for (size_t i = 0; i < w.size(); ++i) {
      if (i) out.push_back(' ');
      out += name(w[i]);
    }
    return out;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

/// Output symbols collapsed into the single abstract error output. An empty
/// alias disables all error handling (nothing counts as an error), which is
/// how the plain-L# baseline is run.
class ErrorAlias {
 public:
  ErrorAlias() = default;
  explicit ErrorAlias(std::vector<std::string> outputs) {
    for (auto& o : outputs)
      if (std::find(members_.begin(), members_.end(), o) == members_.end())
        members_.push_back(std::move(o));
  }
  ErrorAlias(std::initializer_list<std::string> outputs)
      : ErrorAlias(std::vector<std::string>(outputs)) {}

  bool empty() const { return members_.empty(); }
  const std::vector<std::string>& members() const { return members_; }

  bool contains(std::string_view output) const {
    for (const auto& m : members_)
      if (m == output) return true;
    return false;
  }

  /// Representative used for synthesized error transitions.
  const std::string& canonical() const {
    if (members_.empty()) throw std::logic_error("empty error alias has no canonical output");
    return members_.front();
  }

  /// Output equality with all alias members identified.
  bool outputs_equal(std::string_view a, std::string_view b) const {
    return a == b || (contains(a) && contains(b));
  }

 private:
  std::vector<std::string> members_;
};

/// Raised when a word runs off the defined part of a partial machine.
/// Carries the outputs along the longest defined prefix.
struct PartialityError : std::runtime_error {
  OutputWord defined_outputs;
  explicit PartialityError(OutputWord outs)
      : std::runtime_error("transition undefined after " +
                           std::to_string(outs.size()) + " defined steps"),
        defined_outputs(std::move(outs)) {}
};

/// Deterministic finite-state transducer. Transitions may be partial while
/// a machine is being built; SULs, hypotheses and references-as-machines
/// are complete.
class MealyMachine {
 public:
  struct Edge {
    int target = -1;
    int output = -1;
  };

  MealyMachine() = default;
  explicit MealyMachine(Alphabet inputs) : inputs_(std::move(inputs)) {}

  int add_state(std::string name = std::string()) {
    state_names_.push_back(std::move(name));
    edges_.emplace_back(inputs_.size(), Edge{});
    return static_cast<int>(edges_.size()) - 1;
  }

  int add_input(const std::string& symbol) {
    int before = inputs_.size();
    int id = inputs_.add(symbol);
    if (inputs_.size() != before)
      for (auto& row : edges_) row.resize(inputs_.size());
    return id;
  }

  int intern_output(const std::string& symbol) {
    auto it = output_index_.find(symbol);
    if (it != output_index_.end()) return it->second;
    outputs_.push_back(symbol);
    output_index_.emplace(symbol, static_cast<int>(outputs_.size()) - 1);
    return static_cast<int>(outputs_.size()) - 1;
  }

  void set_initial(int s) { check_state(s), initial_ = s; }
  int initial() const { return initial_; }
  int num_states() const { return static_cast<int>(edges_.size()); }
  const Alphabet& inputs() const { return inputs_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  const std::string& output_name(int id) const { return outputs_.at(id); }

  std::string state_name(int s) const {
    check_state(s);
    return state_names_[s].empty() ? "s" + std::to_string(s) : state_names_[s];
  }

  void set_transition(int from, int input, int to, const std::string& output) {
    check_state(from), check_state(to);
    if (input < 0 || input >= inputs_.size()) throw std::out_of_range("bad input index");
    Edge& e = edges_[from][input];
    if (e.target != -1)
      throw std::logic_error("transition already defined for state " + state_name(from) +
                             " on input " + inputs_.name(input));
    e.target = to;
    e.output = intern_output(output);
  }

  bool defined(int s, int i) const { return edges_.at(s).at(i).target != -1; }

  std::optional<Edge> transition(int s, int i) const {
    const Edge& e = edges_.at(s).at(i);
    if (e.target == -1) return std::nullopt;
    return e;
  }

  int step(int s, int i) const {
    const Edge& e = edges_.at(s).at(i);
    if (e.target == -1) throw PartialityError({});
    return e.target;
  }

  int output_at(int s, int i) const {
    const Edge& e = edges_.at(s).at(i);
    if (e.target == -1) throw PartialityError({});
    return e.output;
  }

  bool is_complete() const {
    for (const auto& row : edges_)
      for (const auto& e : row)
        if (e.target == -1) return false;
    return num_states() > 0;
  }

  /// Runs sigma from the initial state; throws PartialityError (carrying the
  /// outputs of the longest defined prefix) if a transition is missing.
  OutputWord run(const Word& sigma) const {
    OutputWord outs;
    outs.reserve(sigma.size());
    int s = initial_;
    for (int i : sigma) {
      const Edge& e = edges_.at(s).at(i);
      if (e.target == -1) throw PartialityError(std::move(outs));
      outs.push_back(outputs_[e.output]);
      s = e.target;
    }
    return outs;
  }

  int state_after(const Word& sigma, int from = -1) const {
    int s = from < 0 ? initial_ : from;
    for (int i : sigma) s = step(s, i);
    return s;
  }

  bool all_reachable() const {
    std::vector<char> seen(num_states(), 0);
    std::queue<int> q;
    q.push(initial_), seen[initial_] = 1;
    int count = 0;
    while (!q.empty()) {
      int s = q.front();
      q.pop(), ++count;
      for (int i = 0; i < inputs_.size(); ++i) {
        auto e = transition(s, i);
        if (e && !seen[e->target]) seen[e->target] = 1, q.push(e->target);
      }
    }
    return count == num_states();
  }

  /// Keeps only states reachable from initial, renumbered in BFS order.
  MealyMachine trimmed() const {
    std::vector<int> remap(num_states(), -1);
    std::vector<int> order;
    std::queue<int> q;
    q.push(initial_), remap[initial_] = 0, order.push_back(initial_);
    while (!q.empty()) {
      int s = q.front();
      q.pop();
      for (int i = 0; i < inputs_.size(); ++i) {
        auto e = transition(s, i);
        if (e && remap[e->target] == -1) {
          remap[e->target] = static_cast<int>(order.size());
          order.push_back(e->target);
          q.push(e->target);
        }
      }
    }
    MealyMachine out(inputs_);
    for (int old : order) out.add_state(state_names_[old]);
    out.set_initial(0);
    for (int idx = 0; idx < static_cast<int>(order.size()); ++idx)
      for (int i = 0; i < inputs_.size(); ++i) {
        auto e = transition(order[idx], i);
        if (e) out.set_transition(idx, i, remap[e->target], outputs_[e->output]);
      }
    return out;
  }

 private:
  void check_state(int s) const {
    if (s < 0 || s >= num_states()) throw std::out_of_range("bad state index");
  }

  Alphabet inputs_;
  std::vector<std::string> outputs_;
  std::unordered_map<std::string, int> output_index_;
  std::vector<std::vector<Edge>> edges_;
  std::vector<std::string> state_names_;
  int initial_ = 0;
};

/// Deterministic acceptor for a reference language. Kept total; parsing
/// completes missing transitions with a non-accepting sink.
class Dfa {
 public:
  Dfa() = default;
  explicit Dfa(Alphabet inputs) : inputs_(std::move(inputs)) {}

  int add_state(bool accepting, std::string name = std::string()) {
    accepting_.push_back(accepting);
    state_names_.push_back(std::move(name));
    delta_.emplace_back(inputs_.size(), -1);
    return static_cast<int>(delta_.size()) - 1;
  }

  int add_input(const std::string& symbol) {
    int before = inputs_.size();
    int id = inputs_.add(symbol);
    if (inputs_.size() != before)
      for (auto& row : delta_) row.resize(inputs_.size(), -1);
    return id;
  }

  void set_initial(int s) { check_state(s), initial_ = s; }
  int initial() const { return initial_; }
  int num_states() const { return static_cast<int>(delta_.size()); }
  const Alphabet& inputs() const { return inputs_; }
  bool accepting(int s) const { return accepting_.at(s); }
  void set_accepting(int s, bool a) { accepting_.at(s) = a; }

  std::string state_name(int s) const {
    check_state(s);
    return state_names_[s].empty() ? "p" + std::to_string(s) : state_names_[s];
  }

  void set_transition(int from, int input, int to) {
    check_state(from), check_state(to);
    if (input < 0 || input >= inputs_.size()) throw std::out_of_range("bad input index");
    if (delta_[from][input] != -1)
      throw std::logic_error("transition already defined for state " + state_name(from) +
                             " on input " + inputs_.name(input));
    delta_[from][input] = to;
  }

  void redirect(int from, int input, int to) {
    check_state(from), check_state(to);
    delta_.at(from).at(input) = to;
  }

  std::optional<int> transition(int s, int i) const {
    int t = delta_.at(s).at(i);
    if (t == -1) return std::nullopt;
    return t;
  }

  int step(int s, int i) const {
    int t = delta_.at(s).at(i);
    if (t == -1) throw std::logic_error("DFA transition undefined");
    return t;
  }

  bool is_total() const {
    for (const auto& row : delta_)
      for (int t : row)
        if (t == -1) return false;
    return num_states() > 0;
  }

  /// Routes every missing transition to a shared non-accepting sink,
  /// creating it on demand. Returns the sink id, or -1 if already total.
  int complete_with_sink() {
    bool missing = false;
    for (const auto& row : delta_)
      for (int t : row)
        if (t == -1) missing = true;
    if (!missing) return -1;
    int sink = add_state(false, "__sink");
    for (auto& row : delta_)
      for (int& t : row)
        if (t == -1) t = sink;
    return sink;
  }

  int state_after(const Word& w, int from = -1) const {
    int s = from < 0 ? initial_ : from;
    for (int i : w) s = step(s, i);
    return s;
  }

  bool accepts(const Word& w) const { return accepting_.at(state_after(w)); }

  bool all_reachable() const {
    return static_cast<int>(reach_order().size()) == num_states();
  }

  Dfa trimmed() const {
    auto order = reach_order();
    std::vector<int> remap(num_states(), -1);
    for (int idx = 0; idx < static_cast<int>(order.size()); ++idx) remap[order[idx]] = idx;
    Dfa out(inputs_);
    for (int old : order) out.add_state(accepting_[old], state_names_[old]);
    out.set_initial(0);
    for (int idx = 0; idx < static_cast<int>(order.size()); ++idx)
      for (int i = 0; i < inputs_.size(); ++i) {
        int t = delta_[order[idx]][i];
        if (t != -1) out.delta_[idx][i] = remap[t];
      }
    return out;
  }

 private:
  std::vector<int> reach_order() const {
    std::vector<int> order;
    if (num_states() == 0) return order;
    std::vector<char> seen(num_states(), 0);
    std::queue<int> q;
    q.push(initial_), seen[initial_] = 1;
    while (!q.empty()) {
      int s = q.front();
      q.pop(), order.push_back(s);
      for (int i = 0; i < inputs_.size(); ++i) {
        int t = delta_[s][i];
        if (t != -1 && !seen[t]) seen[t] = 1, q.push(t);
      }
    }
    return order;
  }

  void check_state(int s) const {
    if (s < 0 || s >= num_states()) throw std::out_of_range("bad state index");
  }

  Alphabet inputs_;
  std::vector<std::vector<int>> delta_;
  std::vector<bool> accepting_;
  std::vector<std::string> state_names_;
  int initial_ = 0;
};

inline OutputWord run_word(const MealyMachine& m, const Word& sigma) { return m.run(sigma); }

/// One flag per output id of m: is it an error output.
inline std::vector<bool> error_output_mask(const MealyMachine& m, const ErrorAlias& e) {
  std::vector<bool> mask(m.outputs().size(), false);
  for (size_t i = 0; i < m.outputs().size(); ++i) mask[i] = e.contains(m.outputs()[i]);
  return mask;
}

/// True iff every state entered by an error edge emits only errors, i.e.
/// the machine stays in error behavior once an error occurred.
inline bool is_e_persistent(const MealyMachine& m, const ErrorAlias& e) {
  if (!m.is_complete()) throw std::invalid_argument("is_e_persistent requires a complete machine");
  auto err = error_output_mask(m, e);
  std::vector<char> pending(m.num_states(), 0);
  std::queue<int> work;
  for (int s = 0; s < m.num_states(); ++s)
    for (int i = 0; i < m.inputs().size(); ++i) {
      auto edge = *m.transition(s, i);
      if (err[edge.output] && !pending[edge.target]) pending[edge.target] = 1, work.push(edge.target);
    }
  std::vector<char> ok(m.num_states(), 0);
  while (!work.empty()) {
    int s = work.front();
    work.pop();
    if (ok[s]) continue;
    ok[s] = 1;
    for (int i = 0; i < m.inputs().size(); ++i) {
      auto edge = *m.transition(s, i);
      if (!err[edge.output]) return false;
      if (!pending[edge.target]) pending[edge.target] = 1, work.push(edge.target);
    }
  }
  return true;
}

namespace detail {

// Input translation table from machine/dfa `src` alphabet to `dst` indexes.
inline std::vector<int> input_translation(const Alphabet& src, const Alphabet& dst) {
  if (src == dst) {
    std::vector<int> id(src.size());
    for (int i = 0; i < src.size(); ++i) id[i] = i;
    return id;
  }
  if (src.size() != dst.size())
    throw std::invalid_argument("input alphabet mismatch");
  std::vector<int> t(src.size());
  for (int i = 0; i < src.size(); ++i) {
    auto j = dst.find(src.name(i));
    if (!j) throw std::invalid_argument("input alphabet mismatch: " + src.name(i));
    t[i] = *j;
  }
  return t;
}

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Backtracking BFS word reconstruction support.
struct Trail {
  std::unordered_map<uint64_t, std::pair<uint64_t, int>> pred;
  Word rebuild(uint64_t key) const {
    Word w;
    auto it = pred.find(key);
    while (it != pred.end() && it->second.second >= 0) {
      w.push_back(it->second.second);
      it = pred.find(it->second.first);
    }
    std::reverse(w.begin(), w.end());
    return w;
  }
};

}  // namespace detail

/// Shortest word on which the two complete machines produce different
/// outputs, via product BFS; inputs are explored in m's alphabet order so
/// ties resolve deterministically. With `restrict_to`, only words whose
/// every prefix the reference accepts are considered (the reference must be
/// total and error-persistent, hence prefix-closed). Outputs compare equal
/// when identical or both in the alias.
inline std::optional<Word> mealy_equivalence(const MealyMachine& m, const MealyMachine& n,
                                             const Dfa* restrict_to = nullptr,
                                             const ErrorAlias& e = {}) {
  if (!m.is_complete() || !n.is_complete())
    throw std::invalid_argument("mealy_equivalence requires complete machines");
  auto n_tr = detail::input_translation(m.inputs(), n.inputs());
  std::vector<int> l_tr;
  if (restrict_to) {
    if (!restrict_to->is_total()) throw std::invalid_argument("restriction DFA must be total");
    l_tr = detail::input_translation(m.inputs(), restrict_to->inputs());
    if (!restrict_to->accepting(restrict_to->initial())) return std::nullopt;
  }

  // Output comparison via an n-output -> m-output translation plus alias masks.
  auto m_err = error_output_mask(m, e);
  auto n_err = error_output_mask(n, e);
  std::vector<int> n_to_m(n.outputs().size(), -1);
  {
    std::unordered_map<std::string_view, int> m_out;
    for (size_t i = 0; i < m.outputs().size(); ++i) m_out[m.outputs()[i]] = static_cast<int>(i);
    for (size_t i = 0; i < n.outputs().size(); ++i) {
      auto it = m_out.find(n.outputs()[i]);
      if (it != m_out.end()) n_to_m[i] = it->second;
    }
  }
  auto same_out = [&](int om, int on) {
    if (n_to_m[on] == om) return true;
    return m_err[om] && n_err[on];
  };

  const uint64_t nn = static_cast<uint64_t>(n.num_states());
  const uint64_t nl = restrict_to ? static_cast<uint64_t>(restrict_to->num_states()) : 1;
  auto pack = [&](int sm, int sn, int sl) {
    return (static_cast<uint64_t>(sm) * nn + sn) * nl + (restrict_to ? sl : 0);
  };

  detail::Trail trail;
  std::queue<std::tuple<int, int, int>> q;
  uint64_t start = pack(m.initial(), n.initial(), restrict_to ? restrict_to->initial() : 0);
  trail.pred[start] = {start, -1};
  q.push({m.initial(), n.initial(), restrict_to ? restrict_to->initial() : 0});
  while (!q.empty()) {
    auto [sm, sn, sl] = q.front();
    q.pop();
    uint64_t key = pack(sm, sn, sl);
    for (int i = 0; i < m.inputs().size(); ++i) {
      int sl2 = 0;
      if (restrict_to) {
        sl2 = restrict_to->step(sl, l_tr[i]);
        if (!restrict_to->accepting(sl2)) continue;
      }
      auto em = *m.transition(sm, i);
      auto en = *n.transition(sn, n_tr[i]);
      if (!same_out(em.output, en.output)) {
        Word w = trail.rebuild(key);
        w.push_back(i);
        return w;
      }
      uint64_t key2 = pack(em.target, en.target, sl2);
      if (!trail.pred.count(key2)) {
        trail.pred[key2] = {key, i};
        q.push({em.target, en.target, sl2});
      }
    }
  }
  return std::nullopt;
}

struct ReferenceClassification {
  bool sound = true;
  bool complete = true;
  std::optional<Word> sound_cex;     // shortest rejected word answered without error
  std::optional<Word> complete_cex;  // shortest accepted word answered with an error
};

/// Explores the synchronous product of reference and machine, reporting the
/// shortest witness for each violated property. Words are in m's alphabet.
inline ReferenceClassification classify_reference(const Dfa& l, const MealyMachine& m,
                                                  const ErrorAlias& e) {
  if (!l.is_total()) throw std::invalid_argument("classify_reference requires a total DFA");
  if (!m.is_complete()) throw std::invalid_argument("classify_reference requires a complete machine");
  auto l_tr = detail::input_translation(m.inputs(), l.inputs());
  auto err = error_output_mask(m, e);

  ReferenceClassification res;
  const uint64_t nl = static_cast<uint64_t>(l.num_states());
  auto pack = [&](int sm, int sl) { return static_cast<uint64_t>(sm) * nl + sl; };
  detail::Trail trail;
  std::queue<std::pair<int, int>> q;
  trail.pred[pack(m.initial(), l.initial())] = {pack(m.initial(), l.initial()), -1};
  q.push({m.initial(), l.initial()});
  while (!q.empty()) {
    auto [sm, sl] = q.front();
    q.pop();
    uint64_t key = pack(sm, sl);
    for (int i = 0; i < m.inputs().size(); ++i) {
      auto em = *m.transition(sm, i);
      int sl2 = l.step(sl, l_tr[i]);
      bool is_err = err[em.output];
      bool accepted = l.accepting(sl2);
      if (!accepted && !is_err && !res.sound_cex) {
        res.sound = false;
        Word w = trail.rebuild(key);
        w.push_back(i);
        res.sound_cex = std::move(w);
      }
      if (accepted && is_err && !res.complete_cex) {
        res.complete = false;
        Word w = trail.rebuild(key);
        w.push_back(i);
        res.complete_cex = std::move(w);
      }
      uint64_t key2 = pack(em.target, sl2);
      if (!trail.pred.count(key2)) {
        trail.pred[key2] = {key, i};
        q.push({em.target, sl2});
      }
    }
    if (res.sound_cex && res.complete_cex) break;
  }
  return res;
}

/// Language-equivalent minimal DFA (unreachable states dropped, then
/// partition refinement); block numbering follows first occurrence so the
/// result is deterministic.
inline Dfa minimize_dfa(const Dfa& l) {
  if (!l.is_total()) throw std::invalid_argument("minimize_dfa requires a total DFA");
  Dfa d = l.all_reachable() ? l : l.trimmed();
  const int n = d.num_states();
  const int k = d.inputs().size();
  std::vector<int> block(n);
  for (int s = 0; s < n; ++s) block[s] = d.accepting(s) ? 0 : 1;
  // Single-class start when all states agree on acceptance.
  {
    std::set<int> init(block.begin(), block.end());
    if (init.size() == 1)
      for (int s = 0; s < n; ++s) block[s] = 0;
  }
  while (true) {
    std::map<std::vector<int>, int> sig_to_block;
    std::vector<int> next(n);
    for (int s = 0; s < n; ++s) {
      std::vector<int> sig;
      sig.reserve(k + 1);
      sig.push_back(block[s]);
      for (int i = 0; i < k; ++i) sig.push_back(block[d.step(s, i)]);
      auto it = sig_to_block.find(sig);
      if (it == sig_to_block.end())
        it = sig_to_block.emplace(std::move(sig), static_cast<int>(sig_to_block.size())).first;
      next[s] = it->second;
    }
    // Renumber blocks by first occurrence for stable state order.
    std::vector<int> order(sig_to_block.size(), -1);
    int counter = 0;
    for (int s = 0; s < n; ++s)
      if (order[next[s]] == -1) order[next[s]] = counter++;
    for (int s = 0; s < n; ++s) next[s] = order[next[s]];
    if (next == block) break;
    block = std::move(next);
  }
  int blocks = *std::max_element(block.begin(), block.end()) + 1;
  Dfa out(d.inputs());
  std::vector<int> rep(blocks, -1);
  for (int s = 0; s < n; ++s)
    if (rep[block[s]] == -1) rep[block[s]] = s;
  for (int b = 0; b < blocks; ++b) out.add_state(d.accepting(rep[b]));
  out.set_initial(block[d.initial()]);
  std::vector<std::vector<char>> done(blocks, std::vector<char>(k, 0));
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < k; ++i)
      if (!done[block[s]][i]) {
        out.set_transition(block[s], i, block[d.step(s, i)]);
        done[block[s]][i] = 1;
      }
  return out.trimmed();
}

inline bool dfa_is_minimal(const Dfa& l) {
  return l.all_reachable() && minimize_dfa(l).num_states() == l.num_states();
}

/// Language-level error persistence: once rejected, every extension is
/// rejected. Checked on the minimized automaton, where it coincides with
/// non-accepting states being absorbing.
inline bool is_error_persistent_language(const Dfa& l) {
  Dfa m = minimize_dfa(l);
  for (int s = 0; s < m.num_states(); ++s) {
    if (m.accepting(s)) continue;
    for (int i = 0; i < m.inputs().size(); ++i)
      if (m.accepting(m.step(s, i))) return false;
  }
  return true;
}

/// Minimal DFA accepting exactly the words the machine answers without a
/// trailing error (plus the empty word). Requires an e-persistent machine.
inline Dfa extract_reference(const MealyMachine& m, const ErrorAlias& e) {
  if (!m.is_complete()) throw std::invalid_argument("extract_reference requires a complete machine");
  if (!is_e_persistent(m, e))
    throw std::invalid_argument("extract_reference requires an e-persistent machine");
  auto err = error_output_mask(m, e);
  Dfa d(m.inputs());
  for (int s = 0; s < m.num_states(); ++s) d.add_state(true, m.state_name(s));
  int sink = d.add_state(false, "__sink");
  d.set_initial(m.initial());
  for (int s = 0; s < m.num_states(); ++s)
    for (int i = 0; i < m.inputs().size(); ++i) {
      auto edge = *m.transition(s, i);
      d.set_transition(s, i, err[edge.output] ? sink : edge.target);
    }
  for (int i = 0; i < m.inputs().size(); ++i) d.set_transition(sink, i, sink);
  return minimize_dfa(d);
}

/// Minimized union of two reference languages over the same input set.
inline Dfa dfa_union(const Dfa& a, const Dfa& b) {
  if (!a.is_total() || !b.is_total()) throw std::invalid_argument("dfa_union requires total DFAs");
  auto tr = detail::input_translation(a.inputs(), b.inputs());
  Dfa prod(a.inputs());
  std::map<std::pair<int, int>, int> ids;
  std::queue<std::pair<int, int>> q;
  auto get = [&](int sa, int sb) {
    auto it = ids.find({sa, sb});
    if (it != ids.end()) return it->second;
    int id = prod.add_state(a.accepting(sa) || b.accepting(sb));
    ids.emplace(std::make_pair(sa, sb), id);
    q.push({sa, sb});
    return id;
  };
  get(a.initial(), b.initial());
  prod.set_initial(0);
  while (!q.empty()) {
    auto [sa, sb] = q.front();
    q.pop();
    int from = ids[{sa, sb}];
    for (int i = 0; i < a.inputs().size(); ++i)
      prod.set_transition(from, i, get(a.step(sa, i), b.step(sb, tr[i])));
  }
  return minimize_dfa(prod);
}

/// Access words, per-state identifiers and the canonical pairwise
/// separators of a minimal total DFA.
struct CharacterizationData {
  std::map<int, Word> state_cover;                    // state -> access word
  std::vector<std::pair<int, Word>> cover_order;      // BFS order, prefix-closed
  std::map<int, std::vector<Word>> separating_family; // W_q, sorted
  std::map<std::pair<int, int>, Word> sep_index;      // unordered pair -> sep word

  const Word* sep(int p, int q) const {
    auto it = sep_index.find({std::min(p, q), std::max(p, q)});
    return it == sep_index.end() ? nullptr : &it->second;
  }
  bool cover_contains(const Word& w) const {
    for (const auto& [s, cw] : cover_order)
      if (cw == w) return true;
    return false;
  }
};

/// BFS shortest-access state cover (over accepting states only when
/// requested) plus a separating family from pairwise shortest separators,
/// ties broken by alphabet order. Throws if some state pair cannot be
/// separated (the DFA was not minimal).
inline CharacterizationData covers_and_separators(const Dfa& l, bool accepting_only) {
  if (!l.is_total()) throw std::invalid_argument("covers_and_separators requires a total DFA");
  const int n = l.num_states();
  const int k = l.inputs().size();
  CharacterizationData out;

  // Cover.
  if (!accepting_only || l.accepting(l.initial())) {
    std::vector<char> seen(n, 0);
    std::queue<std::pair<int, Word>> q;
    q.push({l.initial(), {}});
    seen[l.initial()] = 1;
    while (!q.empty()) {
      auto [s, w] = q.front();
      q.pop();
      out.state_cover[s] = w;
      out.cover_order.push_back({s, w});
      for (int i = 0; i < k; ++i) {
        int t = l.step(s, i);
        if (seen[t]) continue;
        if (accepting_only && !l.accepting(t)) continue;
        seen[t] = 1;
        Word w2 = w;
        w2.push_back(i);
        q.push({t, std::move(w2)});
      }
    }
  }

  // Pairwise separator lengths via layered fixpoint.
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
  for (int p = 0; p < n; ++p)
    for (int q2 = p + 1; q2 < n; ++q2)
      if (l.accepting(p) != l.accepting(q2)) dist[p][q2] = dist[q2][p] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int p = 0; p < n; ++p)
      for (int q2 = p + 1; q2 < n; ++q2) {
        if (dist[p][q2] != -1) continue;
        int best = -1;
        for (int i = 0; i < k; ++i) {
          int dp = l.step(p, i), dq = l.step(q2, i);
          if (dp == dq) continue;
          int d = dist[std::min(dp, dq)][std::max(dp, dq)];
          if (d != -1 && (best == -1 || d + 1 < best)) best = d + 1;
        }
        if (best != -1) dist[p][q2] = dist[q2][p] = best, changed = true;
      }
  }
  for (int p = 0; p < n; ++p)
    for (int q2 = p + 1; q2 < n; ++q2)
      if (dist[p][q2] == -1)
        throw std::invalid_argument("DFA not minimal: states " + l.state_name(p) + " and " +
                                    l.state_name(q2) + " have no separator");

  // Canonical separators: shortest, lexicographically least by input order.
  std::map<std::pair<int, int>, Word> memo;
  auto sep_of = [&](auto&& self, int p, int q2) -> const Word& {
    auto key = std::make_pair(std::min(p, q2), std::max(p, q2));
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    Word w;
    if (dist[p][q2] > 0) {
      for (int i = 0; i < k; ++i) {
        int dp = l.step(p, i), dq = l.step(q2, i);
        if (dp != dq && dist[dp][dq] == dist[p][q2] - 1) {
          w.push_back(i);
          const Word& rest = self(self, dp, dq);
          w.insert(w.end(), rest.begin(), rest.end());
          break;
        }
      }
    }
    return memo.emplace(key, std::move(w)).first->second;
  };
  for (int p = 0; p < n; ++p)
    for (int q2 = p + 1; q2 < n; ++q2) {
      out.sep_index[{p, q2}] = sep_of(sep_of, p, q2);
      out.separating_family[p];
      out.separating_family[q2];
    }
  for (auto& [pair, w] : out.sep_index) {
    auto insert_sorted = [](std::vector<Word>& v, const Word& w2) {
      auto pos = std::lower_bound(v.begin(), v.end(), w2);
      if (pos == v.end() || *pos != w2) v.insert(pos, w2);
    };
    insert_sorted(out.separating_family[pair.first], w);
    insert_sorted(out.separating_family[pair.second], w);
  }
  for (int s = 0; s < n; ++s) out.separating_family[s];
  return out;
}

/// Number of behavioral classes of a complete Mealy machine, outputs
/// compared modulo the alias. Optionally writes the class of each state.
inline int mealy_state_partition(const MealyMachine& m, const ErrorAlias& e,
                                 std::vector<int>* classes = nullptr) {
  if (!m.is_complete()) throw std::invalid_argument("partition requires a complete machine");
  const int n = m.num_states();
  const int k = m.inputs().size();
  auto err = error_output_mask(m, e);
  // Outputs renumbered with alias members collapsed.
  std::vector<int> out_class(m.outputs().size());
  {
    std::map<std::string, int> ids;
    for (size_t i = 0; i < m.outputs().size(); ++i) {
      std::string keyname = err[i] ? std::string("\x01err") : m.outputs()[i];
      auto it = ids.find(keyname);
      if (it == ids.end()) it = ids.emplace(keyname, static_cast<int>(ids.size())).first;
      out_class[i] = it->second;
    }
  }
  std::vector<int> block(n, 0);
  while (true) {
    std::map<std::vector<int>, int> sig_to_block;
    std::vector<int> next(n);
    for (int s = 0; s < n; ++s) {
      std::vector<int> sig;
      sig.reserve(2 * k + 1);
      sig.push_back(block[s]);
      for (int i = 0; i < k; ++i) {
        auto edge = *m.transition(s, i);
        sig.push_back(out_class[edge.output]);
        sig.push_back(block[edge.target]);
      }
      auto it = sig_to_block.find(sig);
      if (it == sig_to_block.end())
        it = sig_to_block.emplace(std::move(sig), static_cast<int>(sig_to_block.size())).first;
      next[s] = it->second;
    }
    if (next == block) break;
    block = std::move(next);
  }
  if (classes) *classes = block;
  return *std::max_element(block.begin(), block.end()) + 1;
}

inline bool mealy_is_minimal(const MealyMachine& m, const ErrorAlias& e = {}) {
  return m.all_reachable() && mealy_state_partition(m, e) == m.num_states();
}

}  // namespace errlearn
