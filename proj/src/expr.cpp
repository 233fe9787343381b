#include "edr/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "edr/errors.hpp"

namespace edr {

namespace {

constexpr std::array<std::string_view, kTerminalCount> kTerminalNames = {
    "pt", "pmin", "pavg", "pat", "mr", "age", "dd", "w", "sl"};

double eval_node(const Node*& p, const TerminalValues& v) {
  const Node node = *p++;
  switch (node.op) {
    case Op::Terminal: return v[static_cast<std::size_t>(node.terminal)];
    case Op::Add: {
      const double a = eval_node(p, v);
      return a + eval_node(p, v);
    }
    case Op::Sub: {
      const double a = eval_node(p, v);
      return a - eval_node(p, v);
    }
    case Op::Mul: {
      const double a = eval_node(p, v);
      return a * eval_node(p, v);
    }
    case Op::Div: {
      const double a = eval_node(p, v);
      const double b = eval_node(p, v);
      return b == 0.0 ? 1.0 : a / b;
    }
    case Op::Pos: {
      const double a = eval_node(p, v);
      return a < 0.0 ? 0.0 : a;
    }
  }
  return 0.0;
}

const double* eval_batch(const Node*& p, const std::array<const double*, kTerminalCount>& cols, std::size_t count,
                         double*& top) {
  const Node node = *p++;
  if (node.op == Op::Terminal) return cols[static_cast<std::size_t>(node.terminal)];
  const double* a = eval_batch(p, cols, count, top);
  if (node.op == Op::Pos) {
    double* r = top;
    top += count;
    for (std::size_t k = 0; k < count; ++k) r[k] = a[k] < 0.0 ? 0.0 : a[k];
    return r;
  }
  const double* b = eval_batch(p, cols, count, top);
  double* r = top;
  top += count;
  switch (node.op) {
    case Op::Add:
      for (std::size_t k = 0; k < count; ++k) r[k] = a[k] + b[k];
      break;
    case Op::Sub:
      for (std::size_t k = 0; k < count; ++k) r[k] = a[k] - b[k];
      break;
    case Op::Mul:
      for (std::size_t k = 0; k < count; ++k) r[k] = a[k] * b[k];
      break;
    case Op::Div:
      for (std::size_t k = 0; k < count; ++k) r[k] = b[k] == 0.0 ? 1.0 : a[k] / b[k];
      break;
    default: break;
  }
  return r;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<Node> lookup(std::string_view sym) {
  const std::string s = lower(sym);
  if (s == "+") return Node::function(Op::Add);
  if (s == "-") return Node::function(Op::Sub);
  if (s == "*") return Node::function(Op::Mul);
  if (s == "/") return Node::function(Op::Div);
  if (s == "pos") return Node::function(Op::Pos);
  for (std::size_t t = 0; t < kTerminalNames.size(); ++t) {
    if (s == kTerminalNames[t]) return Node::leaf(static_cast<Terminal>(t));
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  std::vector<Node> parse_all() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    parse_one();
    skip_ws();
    if (pos_ < text_.size()) {
      fail(text_[pos_] == ')' ? "unbalanced ')'" : "unexpected trailing content");
    }
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("at offset " + std::to_string(pos_) + ": " + msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view symbol_token() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  void parse_one() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input (unbalanced '(')");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] != '(') {
      const std::size_t at = pos_;
      const auto tok = symbol_token();
      const auto node = lookup(tok);
      if (!node) {
        pos_ = at;
        fail("unknown symbol '" + std::string(tok) + "'");
      }
      if (node->op != Op::Terminal) {
        pos_ = at;
        fail("operator '" + std::string(tok) + "' must be applied inside parentheses");
      }
      out_.push_back(*node);
      return;
    }
    ++pos_;  // '('
    skip_ws();
    const std::size_t at = pos_;
    const auto tok = symbol_token();
    if (tok.empty()) fail("expected operator after '('");
    const auto node = lookup(tok);
    if (!node) {
      pos_ = at;
      fail("unknown symbol '" + std::string(tok) + "'");
    }
    if (node->op == Op::Terminal) {
      pos_ = at;
      fail("terminal '" + std::string(tok) + "' cannot take arguments");
    }
    out_.push_back(*node);
    int count = 0;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) fail("unexpected end of input (unbalanced '(')");
      if (text_[pos_] == ')') break;
      if (count == node->arity()) {
        fail("arity mismatch: '" + std::string(tok) + "' takes " + std::to_string(node->arity()) +
             " argument(s)");
      }
      parse_one();
      ++count;
    }
    if (count != node->arity()) {
      fail("arity mismatch: '" + std::string(tok) + "' takes " + std::to_string(node->arity()) +
           " argument(s), got " + std::to_string(count));
    }
    ++pos_;  // ')'
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Node> out_;
};

void serialize_node(std::span<const Node> nodes, std::size_t& i, std::string& out) {
  const Node n = nodes[i++];
  if (n.op == Op::Terminal) {
    out += symbol(n.terminal);
    return;
  }
  out += '(';
  out += symbol(n.op);
  for (int c = 0; c < n.arity(); ++c) {
    out += ' ';
    serialize_node(nodes, i, out);
  }
  out += ')';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pos: return "pos";
    case Op::Terminal: return "terminal";
  }
  return "?";
}

std::string_view symbol(Terminal t) { return kTerminalNames[static_cast<std::size_t>(t)]; }

Expr::Expr(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
  std::ptrdiff_t open = 1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (open <= 0) throw std::invalid_argument("Expr: nodes after a complete tree");
    open += nodes_[i].arity() - 1;
  }
  if (nodes_.empty() || open != 0) throw std::invalid_argument("Expr: incomplete prefix tree");
  terminal_mask_ = 0;
  for (const Node& n : nodes_) {
    if (n.op == Op::Terminal) terminal_mask_ |= 1U << static_cast<unsigned>(n.terminal);
  }
}

std::size_t Expr::subtree_end(std::size_t i) const {
  std::ptrdiff_t open = 1;
  while (open > 0) {
    open += nodes_[i].arity() - 1;
    ++i;
  }
  return i;
}

std::vector<int> Expr::node_depths() const {
  std::vector<int> depths(nodes_.size());
  // Stack of remaining child slots per open ancestor.
  std::vector<int> pending;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    depths[i] = static_cast<int>(pending.size());
    if (!pending.empty()) --pending.back();
    if (nodes_[i].arity() > 0) pending.push_back(nodes_[i].arity());
    while (!pending.empty() && pending.back() == 0) pending.pop_back();
  }
  return depths;
}

int Expr::depth() const {
  const auto d = node_depths();
  return *std::max_element(d.begin(), d.end());
}

double Expr::evaluate(const TerminalValues& values) const {
  const Node* p = nodes_.data();
  const double v = eval_node(p, values);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

void Expr::evaluate_batch(const std::array<const double*, kTerminalCount>& columns, std::size_t count, double* out,
                          std::vector<double>& arena) const {
  if (arena.size() < nodes_.size() * count) arena.resize(nodes_.size() * count);
  double* top = arena.data();
  const Node* p = nodes_.data();
  const double* r = eval_batch(p, columns, count, top);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = std::isfinite(r[k]) ? r[k] : std::numeric_limits<double>::infinity();
  }
}

TerminalValues terminal_values(const EvalContext& ctx) {
  const auto& p = ctx.job.proc_times;
  std::size_t argmin = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += static_cast<double>(p[i]);
    if (p[i] < p[argmin]) argmin = i;
  }
  const auto pij = static_cast<double>(p[static_cast<std::size_t>(ctx.machine)]);
  const auto now = static_cast<double>(ctx.now);
  const auto due = static_cast<double>(ctx.job.due);
  TerminalValues v{};
  v[static_cast<std::size_t>(Terminal::Pt)] = pij;
  v[static_cast<std::size_t>(Terminal::Pmin)] = static_cast<double>(p[argmin]);
  v[static_cast<std::size_t>(Terminal::Pavg)] = sum / static_cast<double>(p.size());
  v[static_cast<std::size_t>(Terminal::Pat)] =
      std::max(static_cast<double>(ctx.machine_free[argmin]) - now, 0.0);
  v[static_cast<std::size_t>(Terminal::Mr)] =
      std::max(static_cast<double>(ctx.machine_free[static_cast<std::size_t>(ctx.machine)]) - now, 0.0);
  v[static_cast<std::size_t>(Terminal::Age)] = now - static_cast<double>(ctx.job.release);
  v[static_cast<std::size_t>(Terminal::Dd)] = due;
  v[static_cast<std::size_t>(Terminal::W)] = static_cast<double>(ctx.job.weight);
  v[static_cast<std::size_t>(Terminal::Sl)] = -std::max(due - pij - now, 0.0);
  return v;
}

double evaluate(const DispatchingRule& rule, const EvalContext& ctx) {
  return rule.expr.evaluate(terminal_values(ctx));
}

Expr parse_expr(std::string_view text) { return Expr(Parser(text).parse_all()); }

DispatchingRule parse_rule(std::string_view text, std::string label) {
  return DispatchingRule{parse_expr(text), std::move(label)};
}

std::string serialize(const Expr& expr) {
  std::string out;
  std::size_t i = 0;
  serialize_node(expr.nodes(), i, out);
  return out;
}

std::vector<DispatchingRule> parse_rule_file(std::string_view text) {
  std::vector<DispatchingRule> rules;
  std::size_t line_no = 0;
  for (std::size_t start = 0; start < text.size();) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    std::string label;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      label = std::string(trim(line.substr(hash + 1)));
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    try {
      rules.push_back(parse_rule(line, std::move(label)));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return rules;
}

std::vector<DispatchingRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rule_file(ss.str());
}

std::string format_rule_file(std::span<const DispatchingRule> rules) {
  std::string out;
  for (const auto& r : rules) {
    out += serialize(r.expr);
    if (!r.label.empty()) {
      out += " # ";
      out += r.label;
    }
    out += '\n';
  }
  return out;
}

void save_rules(std::span<const DispatchingRule> rules, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << format_rule_file(rules);
}

}  // namespace edr
