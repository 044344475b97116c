// Command-line front end: learn models from DOT-described systems, classify
// and derive reference languages, mutate references for robustness studies,
// and generate random error-persistent machines.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "errlearn/experiment.hpp"

using namespace errlearn;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct LearnOptions {
  std::string sul_path;
  std::string reference_path;
  std::string algorithm = "lsharp-e";
  std::string oracle = "exact";
  std::vector<std::string> error_outputs;
  bool error_substring = false;
  long long budget = 1'000'000;
  std::vector<uint64_t> seeds = {1};
  std::string out_path;
  std::string csv_path;
  bool rule_trace = false;
  long long max_tests = 2000;
  int expected_middle = 5;
  int min_middle = 1;
  double moe_gamma = 0.2;
  int moe_threshold = 5;
};

int run_learn(const LearnOptions& opt) {
  auto algo = algorithm_from_string(opt.algorithm);
  if (!algo) {
    std::cerr << "unknown algorithm: " << opt.algorithm << "\n";
    return 1;
  }
  ExperimentSpec spec;
  spec.sul_path = opt.sul_path;
  if (!opt.reference_path.empty()) spec.reference_path = opt.reference_path;
  spec.algorithm = *algo;
  spec.error_outputs = opt.error_outputs;
  spec.error_substring = opt.error_substring;
  spec.budget = opt.budget;
  spec.seeds = opt.seeds;
  spec.emit_rule_trace = opt.rule_trace;

  RwpmParams rwpm;
  rwpm.expected_middle_length = opt.expected_middle;
  rwpm.min_middle_steps = opt.min_middle;
  rwpm.max_tests = opt.max_tests;
  if (opt.oracle == "exact") {
    spec.oracle.kind = EqOracle::Kind::Exact;
  } else if (opt.oracle == "exact-on-l") {
    spec.oracle.kind = EqOracle::Kind::ExactOnL;
  } else if (opt.oracle == "rwpm") {
    spec.oracle.kind = EqOracle::Kind::RandomWp;
    spec.oracle.rwpm = rwpm;
    switch (*algo) {
      case Algorithm::Lsharp:
        spec.oracle.rwpm_filter = SuiteFilter::None;
        break;
      case Algorithm::LsharpE:
      case Algorithm::ALsharpE:
        spec.oracle.rwpm_filter = SuiteFilter::ErrorOnly;
        break;
      case Algorithm::LsharpES:
      case Algorithm::LsharpESC:
        spec.oracle.rwpm_filter = SuiteFilter::Sound;
        break;
    }
  } else if (opt.oracle == "moe") {
    spec.oracle.kind = EqOracle::Kind::Moe;
    spec.oracle.rwpm = rwpm;
    spec.oracle.moe.gamma = opt.moe_gamma;
    spec.oracle.moe.activation_threshold = opt.moe_threshold;
  } else {
    std::cerr << "unknown oracle: " << opt.oracle << "\n";
    return 1;
  }

  spec.report_path = opt.out_path;
  auto result = run_experiment(spec);
  MealyMachine sul = parse_mealy_dot(read_file(spec.sul_path));
  if (opt.out_path.empty()) write_report_jsonl(std::cout, result, spec, sul.inputs());
  if (!opt.csv_path.empty()) {
    std::ofstream out(opt.csv_path);
    write_report_csv(out, result, spec, spec.sul_path, sul.num_states());
  }

  bool any_violation = false, any_incorrect = false, any_budget = false;
  for (const auto& r : result.runs) {
    any_violation |= r.run.outcome == RunOutcome::ViolationDetected;
    any_incorrect |= r.run.outcome == RunOutcome::Incorrect;
    any_budget |= r.run.outcome == RunOutcome::BudgetExceeded;
  }
  if (any_violation) return 3;
  if (any_incorrect) return 2;
  if (any_budget) return 4;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"error-aware active learning of Mealy machines"};
  app.require_subcommand(1);

  LearnOptions learn;
  auto* learn_cmd = app.add_subcommand("learn", "learn a model of a DOT-described system");
  learn_cmd->add_option("--sul", learn.sul_path, "system under learning (Mealy DOT)")->required();
  learn_cmd->add_option("--reference", learn.reference_path, "reference language (DFA DOT)");
  learn_cmd->add_option("--algorithm", learn.algorithm,
                        "lsharp|lsharp-e|alsharp-e|lsharp-es|lsharp-esc");
  learn_cmd->add_option("--oracle", learn.oracle, "exact|exact-on-l|rwpm|moe");
  learn_cmd->add_option("--error-output", learn.error_outputs, "output(s) treated as errors");
  learn_cmd->add_flag("--error-substring", learn.error_substring,
                      "match error outputs by substring");
  learn_cmd->add_option("--budget", learn.budget, "total symbol budget");
  learn_cmd->add_option("--seeds", learn.seeds, "comma-separated seeds")->delimiter(',');
  learn_cmd->add_option("--out", learn.out_path, "JSONL report path (default stdout)");
  learn_cmd->add_option("--csv", learn.csv_path, "CSV report path");
  learn_cmd->add_flag("--rule-trace", learn.rule_trace, "include applied rules in reports");
  learn_cmd->add_option("--max-tests", learn.max_tests, "test words per conformance round");
  learn_cmd->add_option("--expected-middle", learn.expected_middle,
                        "expected random-walk length of test words");
  learn_cmd->add_option("--min-middle", learn.min_middle, "minimum random-walk steps");
  learn_cmd->add_option("--moe-gamma", learn.moe_gamma, "exploration probability");
  learn_cmd->add_option("--moe-threshold", learn.moe_threshold,
                        "hypothesis size activating weighted suite selection");

  std::string c_sul, c_ref;
  std::vector<std::string> c_err;
  bool c_sub = false;
  auto* classify_cmd =
      app.add_subcommand("classify-reference", "check soundness/completeness of a reference");
  classify_cmd->add_option("--sul", c_sul)->required();
  classify_cmd->add_option("--reference", c_ref)->required();
  classify_cmd->add_option("--error-output", c_err);
  classify_cmd->add_flag("--error-substring", c_sub);

  std::string x_sul, x_out;
  std::vector<std::string> x_err;
  bool x_sub = false;
  auto* extract_cmd =
      app.add_subcommand("extract-reference", "derive the exact reference of a known system");
  extract_cmd->add_option("--sul", x_sul)->required();
  extract_cmd->add_option("--out", x_out, "output DOT path (default stdout)");
  extract_cmd->add_option("--error-output", x_err);
  extract_cmd->add_flag("--error-substring", x_sub);

  std::string m_sul, m_ref, m_kind = "break-soundness", m_out;
  std::vector<std::string> m_err;
  bool m_sub = false;
  uint64_t m_seed = 1;
  auto* mutate_cmd = app.add_subcommand("mutate-reference",
                                        "break soundness or completeness of an exact reference");
  mutate_cmd->add_option("--sul", m_sul)->required();
  mutate_cmd->add_option("--reference", m_ref)->required();
  mutate_cmd->add_option("--kind", m_kind, "break-soundness|break-completeness");
  mutate_cmd->add_option("--seed", m_seed);
  mutate_cmd->add_option("--out", m_out, "output DOT path (default stdout)");
  mutate_cmd->add_option("--error-output", m_err);
  mutate_cmd->add_flag("--error-substring", m_sub);

  int g_states = 8, g_inputs = 3;
  double g_frac = 0.5;
  uint64_t g_seed = 1;
  std::string g_out;
  auto* gen_cmd = app.add_subcommand("gen-random", "generate a random error-persistent machine");
  gen_cmd->add_option("--states", g_states);
  gen_cmd->add_option("--inputs", g_inputs);
  gen_cmd->add_option("--error-fraction", g_frac);
  gen_cmd->add_option("--seed", g_seed);
  gen_cmd->add_option("--out", g_out, "output DOT path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (learn_cmd->parsed()) return run_learn(learn);

    if (classify_cmd->parsed()) {
      auto sul = parse_mealy_dot(read_file(c_sul));
      auto ref = minimize_dfa(align_reference(parse_dfa_dot(read_file(c_ref)), sul.inputs()));
      auto alias = resolve_error_alias(sul, c_err.empty() ? std::vector<std::string>{"err"} : c_err,
                                       c_sub);
      auto cls = classify_reference(ref, sul, alias);
      std::cout << "sound: " << (cls.sound ? "yes" : "no");
      if (cls.sound_cex) std::cout << " (counterexample: " << sul.inputs().format(*cls.sound_cex) << ")";
      std::cout << "\ncomplete: " << (cls.complete ? "yes" : "no");
      if (cls.complete_cex)
        std::cout << " (counterexample: " << sul.inputs().format(*cls.complete_cex) << ")";
      std::cout << "\n";
      return 0;
    }

    if (extract_cmd->parsed()) {
      auto sul = parse_mealy_dot(read_file(x_sul));
      auto alias = resolve_error_alias(sul, x_err.empty() ? std::vector<std::string>{"err"} : x_err,
                                       x_sub);
      auto ref = extract_reference(sul, alias);
      std::string dot = to_dot(ref, "reference");
      if (x_out.empty())
        std::cout << dot;
      else
        write_file(x_out, dot);
      return 0;
    }

    if (mutate_cmd->parsed()) {
      auto sul = parse_mealy_dot(read_file(m_sul));
      auto ref = minimize_dfa(align_reference(parse_dfa_dot(read_file(m_ref)), sul.inputs()));
      auto alias = resolve_error_alias(sul, m_err.empty() ? std::vector<std::string>{"err"} : m_err,
                                       m_sub);
      MutationKind kind;
      if (m_kind == "break-soundness")
        kind = MutationKind::BreakSoundness;
      else if (m_kind == "break-completeness")
        kind = MutationKind::BreakCompleteness;
      else {
        std::cerr << "unknown mutation kind: " << m_kind << "\n";
        return 1;
      }
      auto mutated = mutate_reference(ref, kind, sul, alias, m_seed);
      std::string dot = to_dot(mutated, "mutated");
      if (m_out.empty())
        std::cout << dot;
      else
        write_file(m_out, dot);
      return 0;
    }

    if (gen_cmd->parsed()) {
      auto m = generate_random_machine(g_states, g_inputs, g_frac, g_seed);
      std::string dot = to_dot(m, "random");
      if (g_out.empty())
        std::cout << dot;
      else
        write_file(g_out, dot);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
