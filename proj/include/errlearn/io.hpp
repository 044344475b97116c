#pragma once

// DOT and JSON serialization for automata.
//
// The DOT dialect: a digraph whose Mealy edges are labeled "input/output"
// (first '/' separates), whose DFA edges are labeled with the input symbol,
// whose accepting DFA states use shape=doublecircle, and whose initial state
// is the target of an edge from a pseudo-node named "__start*" (or carries a
// start=true attribute). Missing DFA transitions go to an implicit
// non-accepting sink created at parse time.

#include <cctype>
#include <sstream>
#include <variant>

#include "errlearn/automata.hpp"
#include "json.hpp"

namespace errlearn {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NondeterminismError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AutomatonKind { Mealy, Dfa };

namespace detail {

struct DotEdge {
  std::string from, to, label;
  bool has_label = false;
};

struct DotNode {
  std::string name;
  std::map<std::string, std::string> attrs;
};

struct DotGraph {
  std::vector<DotNode> nodes;  // in appearance order, deduplicated
  std::vector<DotEdge> edges;  // in appearance order

  DotNode& node(const std::string& name) {
    for (auto& n : nodes)
      if (n.name == name) return n;
    nodes.push_back({name, {}});
    return nodes.back();
  }
};

class DotLexer {
 public:
  explicit DotLexer(std::string_view text) : text_(text) {}

  struct Token {
    enum Kind { Ident, Punct, End } kind = End;
    std::string value;
  };

  Token next() {
    skip_trivia();
    if (pos_ >= text_.size()) return {Token::End, ""};
    char c = text_[pos_];
    if (c == '"') return {Token::Ident, quoted()};
    if (c == '-' && pos_ + 1 < text_.size() &&
        (text_[pos_ + 1] == '>' || text_[pos_ + 1] == '-')) {
      pos_ += 2;
      return {Token::Punct, "->"};
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
        c == '+' || c == '-') {
      size_t start = pos_;
      while (pos_ < text_.size()) {
        char d = text_[pos_];
        if (d == '-' && pos_ + 1 < text_.size() &&
            (text_[pos_ + 1] == '>' || text_[pos_ + 1] == '-'))
          break;
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '.' ||
            d == '+' || d == '-')
          ++pos_;
        else
          break;
      }
      return {Token::Ident, std::string(text_.substr(start, pos_ - start))};
    }
    ++pos_;
    return {Token::Punct, std::string(1, c)};
  }

 private:
  void skip_trivia() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        pos_ += 2;
        while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) ++pos_;
        pos_ = std::min(pos_ + 2, text_.size());
      } else {
        break;
      }
    }
  }

  std::string quoted() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) throw FormatError("unterminated quoted string in DOT input");
    ++pos_;  // closing quote
    return out;
  }

  std::string_view text_;
  size_t pos_ = 0;
};

inline DotGraph parse_dot(std::string_view text) {
  DotLexer lex(text);
  using Token = DotLexer::Token;
  auto tok = lex.next();
  if (tok.kind == Token::Ident && tok.value == "strict") tok = lex.next();
  if (tok.kind != Token::Ident || (tok.value != "digraph" && tok.value != "graph"))
    throw FormatError("expected digraph");
  tok = lex.next();
  if (tok.kind == Token::Ident) tok = lex.next();  // graph name
  if (tok.kind != Token::Punct || tok.value != "{") throw FormatError("expected '{'");

  DotGraph g;
  auto parse_attrs = [&](Token& t) {
    std::map<std::string, std::string> attrs;
    if (!(t.kind == Token::Punct && t.value == "[")) return std::pair{attrs, t};
    t = lex.next();
    while (!(t.kind == Token::Punct && t.value == "]")) {
      if (t.kind == Token::End) throw FormatError("unterminated attribute list");
      if (t.kind != Token::Ident) throw FormatError("expected attribute name");
      std::string key = t.value;
      t = lex.next();
      if (t.kind == Token::Punct && t.value == "=") {
        t = lex.next();
        if (t.kind != Token::Ident) throw FormatError("expected attribute value");
        attrs[key] = t.value;
        t = lex.next();
      } else {
        attrs[key] = "true";
      }
      while (t.kind == Token::Punct && (t.value == "," || t.value == ";")) t = lex.next();
    }
    t = lex.next();
    return std::pair{attrs, t};
  };

  tok = lex.next();
  while (!(tok.kind == Token::Punct && tok.value == "}")) {
    if (tok.kind == Token::End) throw FormatError("unterminated graph");
    if (tok.kind != Token::Ident) throw FormatError("unexpected token '" + tok.value + "'");
    std::string name = tok.value;
    tok = lex.next();
    if (tok.kind == Token::Punct && tok.value == "=") {
      lex.next();  // graph-level attribute, value dropped
      tok = lex.next();
    } else if (tok.kind == Token::Punct && tok.value == "->") {
      std::vector<std::string> chain{name};
      while (tok.kind == Token::Punct && tok.value == "->") {
        tok = lex.next();
        if (tok.kind != Token::Ident) throw FormatError("expected edge target");
        chain.push_back(tok.value);
        tok = lex.next();
      }
      auto [attrs, t] = parse_attrs(tok);
      tok = t;
      for (size_t i = 0; i + 1 < chain.size(); ++i) {
        DotEdge e;
        e.from = chain[i], e.to = chain[i + 1];
        auto it = attrs.find("label");
        if (it != attrs.end()) e.label = it->second, e.has_label = true;
        g.node(e.from);
        g.node(e.to);
        g.edges.push_back(std::move(e));
      }
    } else if (name == "graph" || name == "node" || name == "edge") {
      auto [attrs, t] = parse_attrs(tok);  // defaults, ignored
      tok = t;
    } else {
      auto [attrs, t] = parse_attrs(tok);
      tok = t;
      auto& n = g.node(name);
      for (auto& [k, v] : attrs) n.attrs[k] = v;
    }
    while (tok.kind == Token::Punct && tok.value == ";") tok = lex.next();
  }
  return g;
}

inline bool is_start_marker(const std::string& name) {
  return name.rfind("__start", 0) == 0;
}

inline std::string find_initial(const DotGraph& g) {
  std::string initial;
  for (const auto& e : g.edges)
    if (is_start_marker(e.from)) {
      if (!initial.empty() && initial != e.to)
        throw FormatError("multiple initial-state markers");
      initial = e.to;
    }
  for (const auto& n : g.nodes) {
    auto it = n.attrs.find("start");
    if (it != n.attrs.end() && it->second == "true") {
      if (!initial.empty() && initial != n.name)
        throw FormatError("multiple initial-state markers");
      initial = n.name;
    }
  }
  if (initial.empty()) throw FormatError("no initial state marker");
  return initial;
}

}  // namespace detail

/// Parses a Mealy machine; states are indexed in first-appearance order.
inline MealyMachine parse_mealy_dot(std::string_view text) {
  auto g = detail::parse_dot(text);
  std::string initial = detail::find_initial(g);

  MealyMachine m;
  std::map<std::string, int> ids;
  for (const auto& n : g.nodes) {
    if (detail::is_start_marker(n.name)) continue;
    ids.emplace(n.name, m.add_state(n.name));
  }
  if (!ids.count(initial)) throw FormatError("initial state " + initial + " has no node");
  m.set_initial(ids[initial]);
  for (const auto& e : g.edges) {
    if (detail::is_start_marker(e.from)) continue;
    if (!e.has_label) throw FormatError("Mealy edge without label");
    auto slash = e.label.find('/');
    if (slash == std::string::npos)
      throw FormatError("Mealy edge label without '/': " + e.label);
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t");
      size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string in = trim(e.label.substr(0, slash));
    std::string out = trim(e.label.substr(slash + 1));
    if (in.empty()) throw FormatError("Mealy edge with empty input: " + e.label);
    int i = m.add_input(in);
    try {
      m.set_transition(ids.at(e.from), i, ids.at(e.to), out);
    } catch (const std::logic_error&) {
      throw NondeterminismError("duplicate transition from " + e.from + " on input " + in);
    }
  }
  return m;
}

/// Parses a DFA; doublecircle marks accepting states and omitted
/// transitions are completed with a fresh non-accepting sink.
inline Dfa parse_dfa_dot(std::string_view text) {
  auto g = detail::parse_dot(text);
  std::string initial = detail::find_initial(g);

  Dfa d;
  std::map<std::string, int> ids;
  for (const auto& n : g.nodes) {
    if (detail::is_start_marker(n.name)) continue;
    auto it = n.attrs.find("shape");
    bool accepting = it != n.attrs.end() && it->second == "doublecircle";
    ids.emplace(n.name, d.add_state(accepting, n.name));
  }
  if (!ids.count(initial)) throw FormatError("initial state " + initial + " has no node");
  d.set_initial(ids[initial]);
  for (const auto& e : g.edges) {
    if (detail::is_start_marker(e.from)) continue;
    if (!e.has_label || e.label.empty()) throw FormatError("DFA edge without input label");
    int i = d.add_input(e.label);
    try {
      d.set_transition(ids.at(e.from), i, ids.at(e.to));
    } catch (const std::logic_error&) {
      throw NondeterminismError("duplicate transition from " + e.from + " on input " + e.label);
    }
  }
  d.complete_with_sink();
  return d;
}

inline std::variant<MealyMachine, Dfa> parse_automaton_dot(std::string_view text,
                                                           AutomatonKind kind) {
  if (kind == AutomatonKind::Mealy) return parse_mealy_dot(text);
  return parse_dfa_dot(text);
}

inline std::string to_dot(const MealyMachine& m, const std::string& graph_name = "g") {
  std::ostringstream os;
  os << "digraph " << graph_name << " {\n";
  os << "  __start0 [label=\"\" shape=none];\n";
  for (int s = 0; s < m.num_states(); ++s)
    os << "  " << detail::dot_quote(m.state_name(s)) << " [shape=circle];\n";
  os << "  __start0 -> " << detail::dot_quote(m.state_name(m.initial())) << ";\n";
  for (int s = 0; s < m.num_states(); ++s)
    for (int i = 0; i < m.inputs().size(); ++i) {
      auto e = m.transition(s, i);
      if (!e) continue;
      os << "  " << detail::dot_quote(m.state_name(s)) << " -> "
         << detail::dot_quote(m.state_name(e->target)) << " [label="
         << detail::dot_quote(m.inputs().name(i) + "/" + m.output_name(e->output)) << "];\n";
    }
  os << "}\n";
  return os.str();
}

inline std::string to_dot(const Dfa& d, const std::string& graph_name = "g") {
  std::ostringstream os;
  os << "digraph " << graph_name << " {\n";
  os << "  __start0 [label=\"\" shape=none];\n";
  for (int s = 0; s < d.num_states(); ++s)
    os << "  " << detail::dot_quote(d.state_name(s)) << " [shape="
       << (d.accepting(s) ? "doublecircle" : "circle") << "];\n";
  os << "  __start0 -> " << detail::dot_quote(d.state_name(d.initial())) << ";\n";
  for (int s = 0; s < d.num_states(); ++s)
    for (int i = 0; i < d.inputs().size(); ++i) {
      auto t = d.transition(s, i);
      if (!t) continue;
      os << "  " << detail::dot_quote(d.state_name(s)) << " -> "
         << detail::dot_quote(d.state_name(*t)) << " [label="
         << detail::dot_quote(d.inputs().name(i)) << "];\n";
    }
  os << "}\n";
  return os.str();
}

inline nlohmann::json to_json(const MealyMachine& m) {
  nlohmann::json j;
  j["type"] = "mealy";
  j["inputs"] = m.inputs().symbols();
  nlohmann::json states = nlohmann::json::array();
  for (int s = 0; s < m.num_states(); ++s) states.push_back(m.state_name(s));
  j["states"] = states;
  j["initial"] = m.initial();
  nlohmann::json tr = nlohmann::json::array();
  for (int s = 0; s < m.num_states(); ++s)
    for (int i = 0; i < m.inputs().size(); ++i) {
      auto e = m.transition(s, i);
      if (e) tr.push_back({s, m.inputs().name(i), m.output_name(e->output), e->target});
    }
  j["transitions"] = tr;
  return j;
}

inline nlohmann::json to_json(const Dfa& d) {
  nlohmann::json j;
  j["type"] = "dfa";
  j["inputs"] = d.inputs().symbols();
  nlohmann::json states = nlohmann::json::array();
  for (int s = 0; s < d.num_states(); ++s) states.push_back(d.state_name(s));
  j["states"] = states;
  j["initial"] = d.initial();
  nlohmann::json acc = nlohmann::json::array();
  for (int s = 0; s < d.num_states(); ++s)
    if (d.accepting(s)) acc.push_back(s);
  j["accepting"] = acc;
  nlohmann::json tr = nlohmann::json::array();
  for (int s = 0; s < d.num_states(); ++s)
    for (int i = 0; i < d.inputs().size(); ++i) {
      auto t = d.transition(s, i);
      if (t) tr.push_back({s, d.inputs().name(i), *t});
    }
  j["transitions"] = tr;
  return j;
}

inline MealyMachine mealy_from_json(const nlohmann::json& j) {
  if (j.at("type") != "mealy") throw FormatError("expected mealy JSON");
  MealyMachine m(Alphabet(j.at("inputs").get<std::vector<std::string>>()));
  for (const auto& name : j.at("states")) m.add_state(name.get<std::string>());
  m.set_initial(j.at("initial").get<int>());
  for (const auto& t : j.at("transitions"))
    m.set_transition(t.at(0).get<int>(), m.inputs().at(t.at(1).get<std::string>()),
                     t.at(3).get<int>(), t.at(2).get<std::string>());
  return m;
}

inline Dfa dfa_from_json(const nlohmann::json& j) {
  if (j.at("type") != "dfa") throw FormatError("expected dfa JSON");
  Dfa d(Alphabet(j.at("inputs").get<std::vector<std::string>>()));
  std::set<int> acc;
  for (const auto& a : j.at("accepting")) acc.insert(a.get<int>());
  int idx = 0;
  for (const auto& name : j.at("states")) d.add_state(acc.count(idx++), name.get<std::string>());
  d.set_initial(j.at("initial").get<int>());
  for (const auto& t : j.at("transitions"))
    d.set_transition(t.at(0).get<int>(), d.inputs().at(t.at(1).get<std::string>()),
                     t.at(2).get<int>());
  d.complete_with_sink();
  return d;
}

/// Rebuilds a reference over a target alphabet: same symbols in the target
/// order, symbols absent from the reference going to the sink. Inputs the
/// reference knows but the target lacks are a mismatch.
inline Dfa align_reference(const Dfa& ref, const Alphabet& target) {
  for (const auto& s : ref.inputs().symbols())
    if (!target.find(s))
      throw std::invalid_argument("reference input '" + s + "' not in SUL alphabet");
  Dfa out(target);
  for (int s = 0; s < ref.num_states(); ++s) out.add_state(ref.accepting(s), ref.state_name(s));
  out.set_initial(ref.initial());
  for (int s = 0; s < ref.num_states(); ++s)
    for (int i = 0; i < target.size(); ++i) {
      auto idx = ref.inputs().find(target.name(i));
      if (idx) {
        auto t = ref.transition(s, *idx);
        if (t) out.set_transition(s, i, *t);
      }
    }
  out.complete_with_sink();
  return out;
}

}  // namespace errlearn
