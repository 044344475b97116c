#pragma once

// The observation tree: append-only storage of everything observed about
// the SUL, with basis/frontier bookkeeping and the apartness relations
// (plain, sound, sound-complete) used to tell states apart.

#include <cassert>
#include <deque>
#include <sstream>

#include "errlearn/automata.hpp"

namespace errlearn {

/// Raised when a new observation contradicts a stored output, i.e. the
/// teacher behaved nondeterministically.
struct ObservationConflictError : std::runtime_error {
  int position;
  ObservationConflictError(int pos, const std::string& word)
      : std::runtime_error("conflicting output at position " + std::to_string(pos) +
                           " of " + word),
        position(pos) {}
};

/// Which apartness relation a run uses. Sound and SoundComplete carry a
/// minimal, total, error-persistent reference.
struct ApartnessMode {
  enum class Kind { Plain, Sound, SoundComplete };
  Kind kind = Kind::Plain;
  const Dfa* reference = nullptr;

  static ApartnessMode plain() { return {Kind::Plain, nullptr}; }
  static ApartnessMode sound(const Dfa& ref) { return {Kind::Sound, &ref}; }
  static ApartnessMode sound_complete(const Dfa& ref) { return {Kind::SoundComplete, &ref}; }

  bool uses_reference() const { return kind != Kind::Plain; }

  void validate() const {
    if (uses_reference() && reference == nullptr)
      throw std::invalid_argument("sound/sound-complete apartness requires a reference");
  }
};

class ObservationTree {
 public:
  static constexpr int kNone = -1;

  ObservationTree(Alphabet inputs, ErrorAlias alias)
      : inputs_(std::move(inputs)), alias_(std::move(alias)) {
    nodes_.push_back(Node{kNone, kNone, kNone, 0, std::vector<int>(inputs_.size(), kNone)});
    basis_.push_back(0);
    in_basis_.push_back(1);
  }

  const Alphabet& inputs() const { return inputs_; }
  const ErrorAlias& alias() const { return alias_; }
  int root() const { return 0; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  int parent(int n) const { return nodes_.at(n).parent; }
  int incoming_input(int n) const { return nodes_.at(n).in_sym; }
  int incoming_output(int n) const { return nodes_.at(n).out_sym; }
  int child(int n, int input) const { return nodes_.at(n).children.at(input); }
  const std::string& output_name(int id) const { return outputs_.at(id); }
  bool output_is_error(int id) const { return out_is_err_.at(id); }

  /// Incremented whenever anything is inserted below n (or at n).
  uint64_t subtree_stamp(int n) const { return nodes_.at(n).stamp; }

  int depth(int n) const {
    int d = 0;
    for (int cur = n; nodes_.at(cur).parent != kNone; cur = nodes_[cur].parent) ++d;
    return d;
  }

  Word access_word(int n) const {
    Word w;
    for (int cur = n; nodes_.at(cur).parent != kNone; cur = nodes_[cur].parent)
      w.push_back(nodes_[cur].in_sym);
    std::reverse(w.begin(), w.end());
    return w;
  }

  /// Node reached by w from `from`, or kNone when the path is not stored.
  int node_at(const Word& w, int from = 0) const {
    int cur = from;
    for (int i : w) {
      cur = nodes_.at(cur).children.at(i);
      if (cur == kNone) return kNone;
    }
    return cur;
  }

  /// Longest stored prefix: returns (last node, symbols consumed).
  std::pair<int, int> walk(const Word& w, int from = 0) const {
    int cur = from, used = 0;
    for (int i : w) {
      int c = nodes_.at(cur).children.at(i);
      if (c == kNone) break;
      cur = c, ++used;
    }
    return {cur, used};
  }

  /// Outputs stored along w from node `from`; nullopt if not fully stored.
  std::optional<OutputWord> stored_outputs(const Word& w, int from = 0) const {
    OutputWord outs;
    int cur = from;
    for (int i : w) {
      int c = nodes_.at(cur).children.at(i);
      if (c == kNone) return std::nullopt;
      outs.push_back(outputs_[nodes_[c].out_sym]);
      cur = c;
    }
    return outs;
  }

  /// Inserts one edge, or verifies it when already present. Returns the
  /// child node.
  int extend(int node, int input, const std::string& output) {
    int existing = nodes_.at(node).children.at(input);
    if (existing != kNone) {
      if (outputs_[nodes_[existing].out_sym] != output)
        throw ObservationConflictError(depth(node),
                                       inputs_.format(access_word(node)) + " " + inputs_.name(input));
      return existing;
    }
    int out_id = intern_output(output);
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{node, input, out_id, 0, std::vector<int>(inputs_.size(), kNone)});
    nodes_[node].children[input] = id;
    in_basis_.push_back(0);
    if (out_is_err_[out_id]) error_nodes_.push_back(id);
    for (int cur = id; cur != kNone; cur = nodes_[cur].parent) ++nodes_[cur].stamp;
    ++version_;
    return id;
  }

  /// Nodes reached by an error output, in insertion order.
  const std::vector<int>& error_nodes() const { return error_nodes_; }

  /// Records outs as the response to the first |outs| inputs of sigma.
  /// Returns the node for the executed prefix. Conflicting outputs raise
  /// ObservationConflictError.
  int add_observation(const Word& sigma, const OutputWord& outs) {
    if (outs.size() > sigma.size())
      throw std::invalid_argument("more outputs than inputs in observation");
    int cur = 0;
    for (size_t idx = 0; idx < outs.size(); ++idx) {
      int existing = nodes_[cur].children[sigma[idx]];
      if (existing != kNone &&
          outputs_[nodes_[existing].out_sym] != outs[idx])
        throw ObservationConflictError(static_cast<int>(idx), inputs_.format(sigma));
      cur = extend(cur, sigma[idx], outs[idx]);
    }
    return cur;
  }

  uint64_t version() const { return version_; }

  // ---- basis and frontier ----

  const std::vector<int>& basis() const { return basis_; }
  bool in_basis(int n) const { return in_basis_.at(n) != 0; }

  void promote(int n) {
    if (in_basis(n)) return;
    int p = nodes_.at(n).parent;
    if (p == kNone || !in_basis(p))
      throw std::logic_error("promoted node's parent must be in the basis");
    if (out_is_err_[nodes_[n].out_sym])
      throw std::logic_error("cannot promote a node reached by an error output");
    basis_.push_back(n);
    in_basis_[n] = 1;
    ++version_;
  }

  /// Non-basis children of basis states reached by a non-error output.
  std::vector<int> frontier() const {
    std::vector<int> f;
    for (int b : basis_)
      for (int i = 0; i < inputs_.size(); ++i) {
        int c = nodes_[b].children[i];
        if (c == kNone || in_basis_[c]) continue;
        if (out_is_err_[nodes_[c].out_sym]) continue;
        f.push_back(c);
      }
    std::sort(f.begin(), f.end());
    return f;
  }

  // ---- apartness ----

  /// Deterministic shortest witness that p and q are apart under the given
  /// mode, or nullopt. Search is a breadth-first walk over the stored
  /// subtrees, inputs in alphabet order.
  std::optional<Word> apart(int p, int q, const ApartnessMode& mode) const {
    mode.validate();
    if (p == q) return std::nullopt;
    const Dfa* ref = mode.reference;
    std::vector<int> ref_tr;
    int lp = 0, lq = 0;
    if (mode.uses_reference()) {
      ref_tr = detail::input_translation(inputs_, ref->inputs());
      lp = ref->state_after(translate(access_word(p), ref_tr));
      lq = ref->state_after(translate(access_word(q), ref_tr));
    }

    struct Item {
      int np, nq;   // kNone when the side ran out of the tree
      int lp, lq;   // reference states after access(p)+w / access(q)+w
      Word w;
    };
    std::deque<Item> queue;
    queue.push_back({p, q, lp, lq, {}});
    const bool sound = mode.uses_reference();
    const bool complete = mode.kind == ApartnessMode::Kind::SoundComplete;
    while (!queue.empty()) {
      Item it = std::move(queue.front());
      queue.pop_front();
      for (int i = 0; i < inputs_.size(); ++i) {
        int cp = it.np == kNone ? kNone : nodes_[it.np].children[i];
        int cq = it.nq == kNone ? kNone : nodes_[it.nq].children[i];
        if (cp == kNone && cq == kNone) continue;
        Word w2 = it.w;
        w2.push_back(i);
        if (cp != kNone && cq != kNone) {
          int op = nodes_[cp].out_sym, oq = nodes_[cq].out_sym;
          bool equal = op == oq || (out_is_err_[op] && out_is_err_[oq]);
          if (!equal) return w2;
        }
        int lp2 = 0, lq2 = 0;
        if (sound) {
          lp2 = ref->step(it.lp, ref_tr[i]);
          lq2 = ref->step(it.lq, ref_tr[i]);
          if (cp != kNone) {
            bool err = out_is_err_[nodes_[cp].out_sym];
            if (!err && !ref->accepting(lq2)) return w2;           // sound, p side
            if (complete && err && ref->accepting(lq2)) return w2; // complete, p side
          }
          if (cq != kNone) {
            bool err = out_is_err_[nodes_[cq].out_sym];
            if (!err && !ref->accepting(lp2)) return w2;           // sound, q side
            if (complete && err && ref->accepting(lp2)) return w2; // complete, q side
          }
        }
        if (sound || (cp != kNone && cq != kNone))
          queue.push_back({cp, cq, lp2, lq2, std::move(w2)});
      }
    }
    return std::nullopt;
  }

  struct FrontierClass {
    enum class Kind { Isolated, Identified, Undecided };
    Kind kind = Kind::Isolated;
    int identified_with = kNone;
    std::vector<int> candidates;  // basis states not apart, in basis order
  };

  /// Classifies one frontier node against the basis.
  FrontierClass classify(int n, const ApartnessMode& mode) const {
    FrontierClass c;
    for (int b : basis_)
      if (b != n && !apart(n, b, mode)) c.candidates.push_back(b);
    if (c.candidates.empty()) {
      c.kind = FrontierClass::Kind::Isolated;
    } else if (c.candidates.size() == 1) {
      c.kind = FrontierClass::Kind::Identified;
      c.identified_with = c.candidates.front();
    } else {
      c.kind = FrontierClass::Kind::Undecided;
    }
    return c;
  }

  std::map<int, FrontierClass> classify_frontier(const ApartnessMode& mode) const {
    std::map<int, FrontierClass> out;
    for (int f : frontier()) out.emplace(f, classify(f, mode));
    return out;
  }

  /// Plain: every basis transition observed and every frontier state
  /// identified. Sound/SoundComplete: transitions required only when the
  /// extended access word stays in the reference language.
  bool is_adequate(const ApartnessMode& mode) const {
    mode.validate();
    std::vector<int> ref_tr;
    if (mode.uses_reference())
      ref_tr = detail::input_translation(inputs_, mode.reference->inputs());
    for (int b : basis_) {
      int lb = 0;
      if (mode.uses_reference())
        lb = mode.reference->state_after(translate(access_word(b), ref_tr));
      for (int i = 0; i < inputs_.size(); ++i) {
        if (nodes_[b].children[i] != kNone) continue;
        if (mode.uses_reference() && !mode.reference->accepting(mode.reference->step(lb, ref_tr[i])))
          continue;
        return false;
      }
    }
    for (int f : frontier())
      if (classify(f, mode).kind != FrontierClass::Kind::Identified) return false;
    return true;
  }

  /// Diagnostic dump in the same DOT dialect as machines; basis states are
  /// drawn as double circles.
  std::string to_dot() const {
    std::ostringstream os;
    os << "digraph tree {\n  __start0 [label=\"\" shape=none];\n";
    for (int n = 0; n < num_nodes(); ++n)
      os << "  q" << n << " [shape=" << (in_basis(n) ? "doublecircle" : "circle") << "];\n";
    os << "  __start0 -> q0;\n";
    for (int n = 0; n < num_nodes(); ++n)
      for (int i = 0; i < inputs_.size(); ++i) {
        int c = nodes_[n].children[i];
        if (c == kNone) continue;
        os << "  q" << n << " -> q" << c << " [label="
           << detail::dot_quote(inputs_.name(i) + "/" + outputs_[nodes_[c].out_sym]) << "];\n";
      }
    os << "}\n";
    return os.str();
  }

 private:
  struct Node {
    int parent, in_sym, out_sym;
    uint64_t stamp;
    std::vector<int> children;
  };

  static Word translate(const Word& w, const std::vector<int>& tr) {
    Word out;
    out.reserve(w.size());
    for (int i : w) out.push_back(tr[i]);
    return out;
  }

  int intern_output(const std::string& symbol) {
    auto it = output_index_.find(symbol);
    if (it != output_index_.end()) return it->second;
    outputs_.push_back(symbol);
    out_is_err_.push_back(alias_.contains(symbol));
    output_index_.emplace(symbol, static_cast<int>(outputs_.size()) - 1);
    return static_cast<int>(outputs_.size()) - 1;
  }

  Alphabet inputs_;
  ErrorAlias alias_;
  std::vector<Node> nodes_;
  std::vector<std::string> outputs_;
  std::vector<bool> out_is_err_;
  std::unordered_map<std::string, int> output_index_;
  std::vector<int> basis_;
  std::vector<char> in_basis_;
  std::vector<int> error_nodes_;
  uint64_t version_ = 0;
};

/// Memoizes apartness decisions: established apartness is permanent, while
/// "not apart" is rechecked once either subtree has grown.
class ApartnessCache {
 public:
  const std::optional<Word>* lookup(const ObservationTree& t, int p, int q,
                                    const ApartnessMode& mode) {
    auto key = std::make_pair(std::min(p, q), std::max(p, q));
    auto it = entries_.find(key);
    uint64_t sp = t.subtree_stamp(key.first), sq = t.subtree_stamp(key.second);
    if (it != entries_.end()) {
      Entry& e = it->second;
      if (e.witness || (e.stamp_p == sp && e.stamp_q == sq)) return &e.witness;
      e.witness = t.apart(key.first, key.second, mode);
      e.stamp_p = sp, e.stamp_q = sq;
      return &e.witness;
    }
    Entry e{t.apart(key.first, key.second, mode), sp, sq};
    return &entries_.emplace(key, std::move(e)).first->second.witness;
  }

  bool is_apart(const ObservationTree& t, int p, int q, const ApartnessMode& mode) {
    return lookup(t, p, q, mode)->has_value();
  }

 private:
  struct Entry {
    std::optional<Word> witness;
    uint64_t stamp_p = 0, stamp_q = 0;
  };
  std::map<std::pair<int, int>, Entry> entries_;
};

}  // namespace errlearn
