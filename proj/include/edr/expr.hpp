#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edr/instance.hpp"

namespace edr {

enum class Op : std::uint8_t { Add, Sub, Mul, Div, Pos, Terminal };

enum class Terminal : std::uint8_t { Pt, Pmin, Pavg, Pat, Mr, Age, Dd, W, Sl };

inline constexpr std::size_t kTerminalCount = 9;
inline constexpr std::size_t kFunctionCount = 5;

constexpr int arity(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Pos: return 1;
    case Op::Terminal: return 0;
  }
  return 0;
}

std::string_view symbol(Op op);
std::string_view symbol(Terminal t);

/// One node of a priority expression. `terminal` is meaningful only when
/// `op == Op::Terminal`.
struct Node {
  Op op = Op::Terminal;
  Terminal terminal = Terminal::Pt;

  static constexpr Node leaf(Terminal t) { return Node{Op::Terminal, t}; }
  static constexpr Node function(Op o) { return Node{o, Terminal::Pt}; }
  constexpr int arity() const { return edr::arity(op); }
  constexpr bool operator==(const Node& o) const {
    return op == o.op && (op != Op::Terminal || terminal == o.terminal);
  }
};

using TerminalValues = std::array<double, kTerminalCount>;

/// Expression tree stored in prefix order. Every subtree is a contiguous
/// range `[i, subtree_end(i))`.
class Expr {
 public:
  Expr() : nodes_{Node::leaf(Terminal::Pt)} {}
  /// Throws std::invalid_argument unless `prefix` encodes exactly one tree.
  explicit Expr(std::vector<Node> prefix);

  std::span<const Node> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  /// Root alone has depth 0.
  int depth() const;
  std::size_t subtree_end(std::size_t i) const;
  /// Depth of every node, in prefix order.
  std::vector<int> node_depths() const;

  /// Non-finite results are mapped to +infinity (worst priority).
  double evaluate(const TerminalValues& values) const;

  /// Column-wise evaluation of `count` contexts at once: `columns[t]` points
  /// at `count` values of terminal t. Results match evaluate() bit for bit.
  /// `arena` is scratch storage reused between calls.
  void evaluate_batch(const std::array<const double*, kTerminalCount>& columns, std::size_t count, double* out,
                      std::vector<double>& arena) const;

  /// Bit t is set when terminal t occurs in the tree.
  unsigned terminal_mask() const { return terminal_mask_; }
  bool uses(Terminal t) const { return (terminal_mask_ >> static_cast<unsigned>(t)) & 1U; }

  bool operator==(const Expr& o) const { return nodes_ == o.nodes_; }

 private:
  std::vector<Node> nodes_;
  unsigned terminal_mask_ = 1U;
};

struct DispatchingRule {
  Expr expr;
  std::string label;
};

/// Inputs for one priority evaluation pi_ij.
struct EvalContext {
  const Instance& instance;
  const JobSpec& job;
  int machine = 0;
  Time now = 0;
  std::span<const Time> machine_free;
};

TerminalValues terminal_values(const EvalContext& ctx);
double evaluate(const DispatchingRule& rule, const EvalContext& ctx);

/// Parses a prefix S-expression, e.g. `(/ (+ pt pavg) (pos sl))`. Symbols are
/// case-insensitive. Throws ParseError carrying the character offset.
Expr parse_expr(std::string_view text);
DispatchingRule parse_rule(std::string_view text, std::string label = {});
/// Canonical form: lowercase, single spaces.
std::string serialize(const Expr& expr);
inline std::string serialize(const DispatchingRule& rule) { return serialize(rule.expr); }

/// Rule file: one expression per line; `#` starts a comment. A trailing
/// comment on a rule line becomes its label. ParseError locations are line
/// numbers.
std::vector<DispatchingRule> parse_rule_file(std::string_view text);
std::vector<DispatchingRule> load_rules(const std::filesystem::path& path);
std::string format_rule_file(std::span<const DispatchingRule> rules);
void save_rules(std::span<const DispatchingRule> rules, const std::filesystem::path& path);

}  // namespace edr
