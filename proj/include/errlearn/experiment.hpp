#pragma once

// Experiment driver: loads SUL and reference files, runs the configured
// learner over seeds, classifies outcomes against the known SUL, and emits
// JSONL/CSV reports. Also the random-model generator and the reference
// mutator the test suites build on.

#include <cmath>
#include <fstream>

#include "errlearn/io.hpp"
#include "errlearn/learner.hpp"

namespace errlearn {

/// Complete, reachable, minimal, error-persistent machine with one error
/// sink; roughly e_fraction of the transitions route to it. Deterministic
/// per seed.
inline MealyMachine generate_random_machine(int n_states, int n_inputs, double e_fraction,
                                            uint64_t seed) {
  if (n_states < 1 || n_inputs < 1) throw std::invalid_argument("need at least one state and input");
  if (e_fraction < 0.0 || e_fraction >= 1.0) throw std::invalid_argument("e_fraction must be in [0,1)");
  if (e_fraction > 0.0 && n_states < 2)
    throw std::invalid_argument("an error sink needs at least two states");

  Alphabet inputs;
  for (int i = 0; i < n_inputs; ++i) inputs.add("i" + std::to_string(i));
  const std::vector<std::string> plain_outputs = {"o0", "o1"};
  const bool with_sink = e_fraction > 0.0;
  const int n_normal = with_sink ? n_states - 1 : n_states;
  const int sink = with_sink ? n_states - 1 : -1;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_output(0, static_cast<int>(plain_outputs.size()) - 1);

  for (int attempt = 0; attempt < 500; ++attempt) {
    MealyMachine m(inputs);
    for (int s = 0; s < n_normal; ++s) m.add_state();
    if (with_sink) m.add_state("err_sink");
    std::vector<std::vector<int>> target(n_states, std::vector<int>(n_inputs, -1));
    std::vector<std::vector<int>> outsym(n_states, std::vector<int>(n_inputs, -1));

    // Reachability spine: each new state hangs off an earlier one.
    bool spine_ok = true;
    for (int s = 1; s < n_normal && spine_ok; ++s) {
      std::vector<std::pair<int, int>> free;
      for (int p = 0; p < s; ++p)
        for (int i = 0; i < n_inputs; ++i)
          if (target[p][i] == -1) free.push_back({p, i});
      if (free.empty()) {
        spine_ok = false;
        break;
      }
      auto [p, i] = free[std::uniform_int_distribution<size_t>(0, free.size() - 1)(rng)];
      target[p][i] = s;
      outsym[p][i] = pick_output(rng);
    }
    if (!spine_ok) continue;
    for (int s = 0; s < n_normal; ++s)
      for (int i = 0; i < n_inputs; ++i) {
        if (target[s][i] != -1) continue;
        if (with_sink && unit(rng) < e_fraction) {
          target[s][i] = sink;
          outsym[s][i] = -1;  // error output
        } else {
          target[s][i] = std::uniform_int_distribution<int>(0, n_normal - 1)(rng);
          outsym[s][i] = pick_output(rng);
        }
      }
    for (int s = 0; s < n_normal; ++s)
      for (int i = 0; i < n_inputs; ++i)
        m.set_transition(s, i, target[s][i],
                         outsym[s][i] < 0 ? "err" : plain_outputs[outsym[s][i]]);
    if (with_sink)
      for (int i = 0; i < n_inputs; ++i) m.set_transition(sink, i, sink, "err");

    if (!m.all_reachable()) continue;
    if (!mealy_is_minimal(m, ErrorAlias{"err"})) continue;
    return m;
  }
  throw std::runtime_error("could not generate a minimal machine for these parameters");
}

enum class MutationKind { BreakSoundness, BreakCompleteness };

/// Mutates a reference that is sound and complete for the SUL so that
/// exactly the requested property fails, keeping the result minimal, total
/// and error-persistent. BreakCompleteness makes the language accept a word
/// the SUL answers with an error; BreakSoundness makes it reject a word the
/// SUL answers without one.
inline Dfa mutate_reference(const Dfa& l, MutationKind kind, const MealyMachine& sul,
                            const ErrorAlias& e, uint64_t seed) {
  if (!l.is_total()) throw std::invalid_argument("mutate_reference requires a total reference");
  {
    auto base = classify_reference(l, sul, e);
    if (!base.sound || !base.complete)
      throw std::invalid_argument("mutate_reference requires a sound and complete reference");
  }
  Dfa trimmed = minimize_dfa(l);
  std::mt19937_64 rng(seed);

  std::vector<std::pair<int, int>> candidates;
  for (int s = 0; s < trimmed.num_states(); ++s) {
    if (!trimmed.accepting(s)) continue;
    for (int i = 0; i < trimmed.inputs().size(); ++i) {
      bool into_accepting = trimmed.accepting(trimmed.step(s, i));
      if (kind == MutationKind::BreakCompleteness && !into_accepting)
        candidates.push_back({s, i});  // redirect a rejecting edge into the language
      if (kind == MutationKind::BreakSoundness && into_accepting)
        candidates.push_back({s, i});  // redirect an accepting edge to the sink
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);

  std::vector<int> accepting_states;
  for (int s = 0; s < trimmed.num_states(); ++s)
    if (trimmed.accepting(s)) accepting_states.push_back(s);

  for (auto [s, i] : candidates) {
    Dfa mutated = trimmed;
    if (kind == MutationKind::BreakCompleteness) {
      int to = accepting_states[std::uniform_int_distribution<size_t>(
          0, accepting_states.size() - 1)(rng)];
      mutated.redirect(s, i, to);
    } else {
      int sink = -1;
      for (int t = 0; t < mutated.num_states(); ++t)
        if (!mutated.accepting(t)) sink = t;
      if (sink < 0) sink = mutated.add_state(false, "__sink");
      for (int t = 0; t < mutated.num_states(); ++t)
        for (int j = 0; j < mutated.inputs().size(); ++j)
          if (!mutated.transition(t, j)) mutated.redirect(t, j, sink);
      mutated.redirect(s, i, sink);
    }
    mutated = minimize_dfa(mutated);
    if (!is_error_persistent_language(mutated)) continue;
    auto cls = classify_reference(mutated, sul, e);
    bool ok = kind == MutationKind::BreakCompleteness ? (!cls.complete && cls.sound)
                                                      : (!cls.sound && cls.complete);
    if (ok) return mutated;
  }
  throw std::runtime_error("no viable reference mutation found");
}

struct ExperimentSpec {
  std::string sul_path;
  std::optional<std::string> reference_path;
  Algorithm algorithm = Algorithm::LsharpE;
  EqOracle oracle;  // reference slot filled in by the driver when needed
  std::vector<std::string> error_outputs;
  bool error_substring = false;
  std::vector<uint64_t> seeds = {1};
  long long budget = 1'000'000;
  std::string report_path;
  bool emit_rule_trace = false;
};

struct SeedReport {
  uint64_t seed = 0;
  RunReport run;
};

struct ExperimentResult {
  std::vector<SeedReport> runs;
  double median_total_symbols = 0.0;
  double std_total_symbols = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / v.size());
}

}  // namespace detail

/// Expands the configured error outputs against a machine's output
/// alphabet: exact names, or every output containing one of the given
/// substrings when substring matching is on.
inline ErrorAlias resolve_error_alias(const MealyMachine& m, const std::vector<std::string>& outs,
                                      bool substring) {
  if (!substring) {
    for (const auto& o : outs)
      if (std::find(m.outputs().begin(), m.outputs().end(), o) == m.outputs().end())
        throw std::invalid_argument("error output '" + o + "' never occurs in the machine");
    return ErrorAlias(outs);
  }
  std::vector<std::string> matched;
  for (const auto& candidate : m.outputs())
    for (const auto& pat : outs)
      if (candidate.find(pat) != std::string::npos) {
        matched.push_back(candidate);
        break;
      }
  if (matched.empty()) throw std::invalid_argument("no output matches the error substrings");
  return ErrorAlias(matched);
}

/// Runs one (algorithm, SUL, reference, oracle) configuration across all
/// seeds. The baseline algorithm runs with an empty alias (untruncated
/// queries, full frontier); outcomes are always judged against the real
/// alias.
inline ExperimentResult run_experiment_loaded(const ExperimentSpec& spec, const MealyMachine& sul,
                                              std::optional<Dfa> reference) {
  ErrorAlias alias = resolve_error_alias(sul, spec.error_outputs, spec.error_substring);
  if (reference) reference = minimize_dfa(align_reference(*reference, sul.inputs()));

  ExperimentResult result;
  for (uint64_t seed : spec.seeds) {
    LearnerConfig cfg;
    cfg.algorithm = spec.algorithm;
    if (reference) cfg.reference = *reference;
    cfg.oracle = spec.oracle;
    cfg.oracle.rwpm.rng_seed = seed;
    cfg.oracle.omit_final = true;
    if ((cfg.oracle.kind == EqOracle::Kind::ExactOnL || cfg.oracle.kind == EqOracle::Kind::Moe ||
         cfg.oracle.rwpm_filter == SuiteFilter::Sound) &&
        !cfg.oracle.reference && cfg.reference)
      cfg.oracle.reference = *cfg.reference;
    cfg.collect_rule_trace = spec.emit_rule_trace;

    ErrorAlias effective = spec.algorithm == Algorithm::Lsharp ? ErrorAlias{} : alias;
    Teacher teacher(sul, effective, spec.budget, seed);
    RunReport run = run_learner(cfg, teacher);
    if (run.outcome == RunOutcome::Correct || run.outcome == RunOutcome::Incorrect) {
      // Judge against the real alias even for the baseline run.
      auto cex = mealy_equivalence(run.learned, sul, nullptr, alias);
      run.outcome = cex ? RunOutcome::Incorrect : RunOutcome::Correct;
    }
    result.runs.push_back({seed, std::move(run)});
  }
  std::vector<double> totals;
  for (const auto& r : result.runs) totals.push_back(static_cast<double>(r.run.total_symbols));
  result.median_total_symbols = detail::median_of(totals);
  result.std_total_symbols = detail::stddev_of(totals);
  return result;
}

inline void write_report_jsonl(std::ostream& os, const ExperimentResult& result,
                               const ExperimentSpec& spec, const Alphabet& inputs);

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  auto read_file = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  MealyMachine sul = parse_mealy_dot(read_file(spec.sul_path));
  if (!sul.is_complete()) throw std::invalid_argument("SUL must be complete: " + spec.sul_path);
  std::optional<Dfa> reference;
  if (spec.reference_path) reference = parse_dfa_dot(read_file(*spec.reference_path));
  ExperimentResult result = run_experiment_loaded(spec, sul, std::move(reference));
  if (!spec.report_path.empty()) {
    std::ofstream out(spec.report_path);
    if (!out) throw std::runtime_error("cannot write " + spec.report_path);
    write_report_jsonl(out, result, spec, sul.inputs());
  }
  return result;
}

inline nlohmann::json report_to_json(const SeedReport& r, const Alphabet& inputs) {
  nlohmann::json j;
  j["seed"] = r.seed;
  j["outcome"] = to_string(r.run.outcome);
  j["eq_count"] = r.run.eq_count;
  j["learn_symbols"] = r.run.learn_symbols;
  j["test_symbols"] = r.run.test_symbols;
  j["total_symbols"] = r.run.total_symbols;
  j["learned_states"] = r.run.learned_states;
  if (r.run.violation_witness) j["violation"] = inputs.format(*r.run.violation_witness);
  if (!r.run.rule_trace.empty()) j["rule_trace"] = r.run.rule_trace;
  return j;
}

/// JSON lines: one object per seed, then one aggregate object.
inline void write_report_jsonl(std::ostream& os, const ExperimentResult& result,
                               const ExperimentSpec& spec, const Alphabet& inputs) {
  for (const auto& r : result.runs) os << report_to_json(r, inputs).dump() << "\n";
  nlohmann::json agg;
  agg["aggregate"] = true;
  agg["algorithm"] = to_string(spec.algorithm);
  agg["runs"] = result.runs.size();
  agg["total_symbols_median"] = result.median_total_symbols;
  agg["total_symbols_std"] = result.std_total_symbols;
  os << agg.dump() << "\n";
}

/// CSV mirror of the per-seed rows plus a trailing aggregate row.
inline void write_report_csv(std::ostream& os, const ExperimentResult& result,
                             const ExperimentSpec& spec, const std::string& model_name,
                             int sul_states) {
  os << "Model,States,Algorithm,Seed,Learned,Learned States,Learn Symbols,"
        "Conformance Symbols,Total Symbols\n";
  for (const auto& r : result.runs)
    os << model_name << ',' << sul_states << ',' << to_string(spec.algorithm) << ',' << r.seed
       << ',' << to_string(r.run.outcome) << ',' << r.run.learned_states << ','
       << r.run.learn_symbols << ',' << r.run.test_symbols << ',' << r.run.total_symbols << "\n";
  os << model_name << ',' << sul_states << ',' << to_string(spec.algorithm) << ",median,,,,,"
     << result.median_total_symbols << "\n";
  os << model_name << ',' << sul_states << ',' << to_string(spec.algorithm) << ",std,,,,,"
     << result.std_total_symbols << "\n";
}

}  // namespace errlearn
