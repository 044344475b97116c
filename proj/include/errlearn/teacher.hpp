#pragma once

// Query endpoint over a simulated SUL: step-wise output queries with error
// and reference truncation, answer caching through a shared observation
// tree, and symbol accounting against an optional budget.
//
// Charging: a query that the tree can already answer in full costs nothing;
// any other query costs (number of executed inputs + 1), the +1 being the
// reset. Once the total exceeds the budget, subsequent queries fail with
// BudgetExceededError; the observation that crossed the line stays recorded.

#include "errlearn/obs_tree.hpp"

namespace errlearn {

struct BudgetExceededError : std::runtime_error {
  long long total_symbols;
  explicit BudgetExceededError(long long total)
      : std::runtime_error("symbol budget exceeded at " + std::to_string(total)),
        total_symbols(total) {}
};

enum class QueryPhase { Learn, Test };

class Teacher {
 public:
  Teacher(const MealyMachine& sul, ErrorAlias alias,
          std::optional<long long> budget = std::nullopt, uint64_t rng_seed = 0)
      : sul_(&sul),
        alias_(std::move(alias)),
        tree_(sul.inputs(), alias_),
        budget_(budget),
        rng_seed_(rng_seed),
        sul_err_(error_output_mask(sul, alias_)) {
    if (!sul.is_complete()) throw std::invalid_argument("teacher requires a complete SUL");
  }

  const MealyMachine& sul() const { return *sul_; }
  const ErrorAlias& alias() const { return alias_; }
  ObservationTree& tree() { return tree_; }
  const ObservationTree& tree() const { return tree_; }
  uint64_t rng_seed() const { return rng_seed_; }

  long long learn_symbols() const { return learn_symbols_; }
  long long test_symbols() const { return test_symbols_; }
  long long total_symbols() const { return learn_symbols_ + test_symbols_; }
  std::optional<long long> budget() const { return budget_; }
  bool budget_exhausted() const { return budget_ && total_symbols() > *budget_; }

  /// Steps sigma input by input, stopping right after the first error
  /// output. Returns the produced outputs and records them in the tree.
  OutputWord oq_e(const Word& sigma, QueryPhase phase) { return query(sigma, nullptr, phase); }

  /// Like oq_e, but an input whose extended word the reference rejects is
  /// not executed: the query stops just before leaving the language.
  OutputWord oq_s(const Word& sigma, const Dfa& reference, QueryPhase phase) {
    if (!reference.is_total()) throw std::invalid_argument("oq_s requires a total reference");
    return query(sigma, &reference, phase);
  }

 private:
  OutputWord query(const Word& sigma, const Dfa* ref, QueryPhase phase) {
    if (budget_exhausted()) throw BudgetExceededError(total_symbols());

    std::vector<int> ref_tr;
    if (ref) ref_tr = detail::input_translation(tree_.inputs(), ref->inputs());

    // Cache probe: replay sigma over the tree, honoring the same stopping
    // rules the execution would use.
    {
      OutputWord outs;
      int node = tree_.root();
      int lstate = ref ? ref->initial() : 0;
      bool answered = root_queried_;
      for (size_t idx = 0; idx < sigma.size(); ++idx) {
        if (ref) {
          int lnext = ref->step(lstate, ref_tr[sigma[idx]]);
          if (!ref->accepting(lnext)) {
            // The blocked input is never executed, so the answer ends here;
            // it counts as cached once the stored prefix covers it.
            answered = idx > 0 || root_queried_;
            break;
          }
          lstate = lnext;
        }
        int c = tree_.child(node, sigma[idx]);
        if (c == ObservationTree::kNone) {
          answered = false;
          break;
        }
        node = c;
        outs.push_back(tree_.output_name(tree_.incoming_output(c)));
        if (tree_.output_is_error(tree_.incoming_output(c))) {
          answered = true;
          break;
        }
        if (idx + 1 == sigma.size()) answered = root_queried_ || !outs.empty();
      }
      if (sigma.empty()) answered = root_queried_;
      if (answered) return outs;
    }

    // Execute on the SUL from a fresh reset.
    OutputWord outs;
    int s = sul_->initial();
    int node = tree_.root();
    int lstate = ref ? ref->initial() : 0;
    long long executed = 0;
    for (int i : sigma) {
      if (ref) {
        int lnext = ref->step(lstate, ref_tr[i]);
        if (!ref->accepting(lnext)) break;
        lstate = lnext;
      }
      auto edge = *sul_->transition(s, i);
      const std::string& out = sul_->output_name(edge.output);
      node = tree_.extend(node, i, out);
      outs.push_back(out);
      ++executed;
      s = edge.target;
      if (sul_err_[edge.output]) break;
    }
    root_queried_ = true;
    charge(phase, executed + 1);
    return outs;
  }

  void charge(QueryPhase phase, long long symbols) {
    (phase == QueryPhase::Learn ? learn_symbols_ : test_symbols_) += symbols;
  }

  const MealyMachine* sul_;
  ErrorAlias alias_;
  ObservationTree tree_;
  long long learn_symbols_ = 0;
  long long test_symbols_ = 0;
  std::optional<long long> budget_;
  uint64_t rng_seed_ = 0;
  std::vector<bool> sul_err_;
  bool root_queried_ = false;
};

}  // namespace errlearn
