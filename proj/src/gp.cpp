#include "edr/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "edr/errors.hpp"
#include "edr/parallel.hpp"
#include "edr/sim.hpp"

namespace edr {

namespace {

// Attempts per operator application before falling back to a copy of the
// first parent (one try plus five retries).
constexpr int kAttempts = 6;

constexpr std::array<Op, 4> kBinaryOps = {Op::Add, Op::Sub, Op::Mul, Op::Div};

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

bool coin(Rng& rng) { return std::uniform_int_distribution<int>(0, 1)(rng) == 1; }

Node random_terminal(Rng& rng) { return Node::leaf(static_cast<Terminal>(pick(rng, kTerminalCount))); }

Node random_function(Rng& rng) {
  const std::size_t k = pick(rng, kFunctionCount);
  return Node::function(k < kBinaryOps.size() ? kBinaryOps[k] : Op::Pos);
}

void grow_into(std::vector<Node>& out, Rng& rng, int depth_left, bool full) {
  bool leaf = depth_left <= 0;
  if (!leaf && !full) leaf = pick(rng, kTerminalCount + kFunctionCount) < kTerminalCount;
  if (leaf) {
    out.push_back(random_terminal(rng));
    return;
  }
  const Node f = random_function(rng);
  out.push_back(f);
  for (int c = 0; c < f.arity(); ++c) grow_into(out, rng, depth_left - 1, full);
}

Expr splice(const Expr& a, std::size_t at, std::span<const Node> replacement) {
  const auto nodes = a.nodes();
  std::vector<Node> out(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(at));
  out.insert(out.end(), replacement.begin(), replacement.end());
  out.insert(out.end(), nodes.begin() + static_cast<std::ptrdiff_t>(a.subtree_end(at)), nodes.end());
  return Expr(std::move(out));
}

std::span<const Node> subtree(const Expr& e, std::size_t at) {
  return e.nodes().subspan(at, e.subtree_end(at) - at);
}

// Pairs of nodes at identical coordinates whose ancestors all have matching
// arity (the common region).
void common_region(const Expr& a, std::size_t ia, const Expr& b, std::size_t ib,
                   std::vector<std::pair<std::size_t, std::size_t>>& out) {
  out.emplace_back(ia, ib);
  const int ar = a.nodes()[ia].arity();
  if (ar == 0 || ar != b.nodes()[ib].arity()) return;
  std::size_t ca = ia + 1;
  std::size_t cb = ib + 1;
  for (int c = 0; c < ar; ++c) {
    common_region(a, ca, b, cb, out);
    ca = a.subtree_end(ca);
    cb = b.subtree_end(cb);
  }
}

void uniform_into(const Expr& a, std::size_t ia, const Expr& b, std::size_t ib, Rng& rng, std::vector<Node>& out) {
  const Node na = a.nodes()[ia];
  const Node nb = b.nodes()[ib];
  if (na.arity() != nb.arity()) {
    const auto src = coin(rng) ? subtree(b, ib) : subtree(a, ia);
    out.insert(out.end(), src.begin(), src.end());
    return;
  }
  out.push_back(coin(rng) ? nb : na);
  std::size_t ca = ia + 1;
  std::size_t cb = ib + 1;
  for (int c = 0; c < na.arity(); ++c) {
    uniform_into(a, ca, b, cb, rng, out);
    ca = a.subtree_end(ca);
    cb = b.subtree_end(cb);
  }
}

std::vector<std::size_t> indices_where(const Expr& e, auto pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (pred(e.nodes()[i])) out.push_back(i);
  }
  return out;
}

Expr with_node(const Expr& e, std::size_t at, Node n) {
  std::vector<Node> nodes(e.nodes().begin(), e.nodes().end());
  nodes[at] = n;
  return Expr(std::move(nodes));
}

Expr crossover_once(CrossoverKind kind, const Expr& a, const Expr& b, Rng& rng) {
  switch (kind) {
    case CrossoverKind::Subtree: {
      const std::size_t ia = pick(rng, a.size());
      const std::size_t ib = pick(rng, b.size());
      return splice(a, ia, subtree(b, ib));
    }
    case CrossoverKind::Uniform: {
      std::vector<Node> out;
      uniform_into(a, 0, b, 0, rng, out);
      return Expr(std::move(out));
    }
    case CrossoverKind::ContextPreserving: {
      std::vector<std::pair<std::size_t, std::size_t>> region;
      common_region(a, 0, b, 0, region);
      const auto [ia, ib] = region[pick(rng, region.size())];
      return splice(a, ia, subtree(b, ib));
    }
    case CrossoverKind::SizeFair: {
      const std::size_t ia = pick(rng, a.size());
      const auto target = static_cast<std::ptrdiff_t>(a.subtree_end(ia) - ia);
      std::vector<std::size_t> nearest;
      std::ptrdiff_t best_gap = 0;
      for (std::size_t ib = 0; ib < b.size(); ++ib) {
        const auto gap = std::abs(static_cast<std::ptrdiff_t>(b.subtree_end(ib) - ib) - target);
        if (nearest.empty() || gap < best_gap) {
          nearest.assign(1, ib);
          best_gap = gap;
        } else if (gap == best_gap) {
          nearest.push_back(ib);
        }
      }
      return splice(a, ia, subtree(b, nearest[pick(rng, nearest.size())]));
    }
  }
  return a;
}

Expr mutate_once(MutationKind kind, const Expr& a, Rng& rng, int max_depth) {
  switch (kind) {
    case MutationKind::Subtree: {
      const std::size_t at = pick(rng, a.size());
      const int room = max_depth - a.node_depths()[at];
      std::vector<Node> fresh;
      grow_into(fresh, rng, std::uniform_int_distribution<int>(0, std::max(room, 0))(rng), false);
      return splice(a, at, fresh);
    }
    case MutationKind::Hoist: {
      if (a.size() == 1) return a;
      const std::size_t at = 1 + pick(rng, a.size() - 1);
      const auto sub = subtree(a, at);
      return Expr(std::vector<Node>(sub.begin(), sub.end()));
    }
    case MutationKind::NodeComplement: {
      const auto cands = indices_where(a, [](Node n) { return n.arity() == 2; });
      if (cands.empty()) return a;
      const std::size_t at = cands[pick(rng, cands.size())];
      Op op = a.nodes()[at].op;
      switch (op) {
        case Op::Add: op = Op::Sub; break;
        case Op::Sub: op = Op::Add; break;
        case Op::Mul: op = Op::Div; break;
        case Op::Div: op = Op::Mul; break;
        default: break;
      }
      return with_node(a, at, Node::function(op));
    }
    case MutationKind::NodeReplacement: {
      const auto cands = indices_where(a, [](Node n) { return n.op != Op::Pos; });
      if (cands.empty()) return a;
      const std::size_t at = cands[pick(rng, cands.size())];
      const Node old = a.nodes()[at];
      if (old.op == Op::Terminal) {
        auto t = static_cast<std::size_t>(old.terminal);
        t = (t + 1 + pick(rng, kTerminalCount - 1)) % kTerminalCount;
        return with_node(a, at, Node::leaf(static_cast<Terminal>(t)));
      }
      const auto pos = static_cast<std::size_t>(std::find(kBinaryOps.begin(), kBinaryOps.end(), old.op) -
                                                kBinaryOps.begin());
      const std::size_t next = (pos + 1 + pick(rng, kBinaryOps.size() - 1)) % kBinaryOps.size();
      return with_node(a, at, Node::function(kBinaryOps[next]));
    }
    case MutationKind::Permutation: {
      const auto cands = indices_where(a, [](Node n) { return n.arity() == 2; });
      if (cands.empty()) return a;
      const std::size_t at = cands[pick(rng, cands.size())];
      const std::size_t left = at + 1;
      const std::size_t right = a.subtree_end(left);
      const std::size_t end = a.subtree_end(right);
      const auto nodes = a.nodes();
      std::vector<Node> out(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(left));
      out.insert(out.end(), nodes.begin() + static_cast<std::ptrdiff_t>(right),
                 nodes.begin() + static_cast<std::ptrdiff_t>(end));
      out.insert(out.end(), nodes.begin() + static_cast<std::ptrdiff_t>(left),
                 nodes.begin() + static_cast<std::ptrdiff_t>(right));
      out.insert(out.end(), nodes.begin() + static_cast<std::ptrdiff_t>(end), nodes.end());
      return Expr(std::move(out));
    }
    case MutationKind::Shrink: {
      const auto cands = indices_where(a, [](Node n) { return n.arity() > 0; });
      if (cands.empty()) return a;
      const Node leaf = random_terminal(rng);
      return splice(a, cands[pick(rng, cands.size())], std::span<const Node>(&leaf, 1));
    }
  }
  return a;
}

}  // namespace

void validate(const GPConfig& c) {
  if (c.pop_size < 3) throw ParamError("pop_size", "must be >= 3");
  if (c.max_evals < c.pop_size) throw ParamError("max_evals", "must be >= pop_size");
  if (c.max_depth < 1) throw ParamError("max_depth", "must be >= 1");
  if (!(c.mutation_prob >= 0.0 && c.mutation_prob <= 1.0)) throw ParamError("mutation_prob", "must lie in [0, 1]");
  if (c.crossover_ops.empty()) throw ParamError("crossover_ops", "must not be empty");
  if (c.mutation_ops.empty()) throw ParamError("mutation_ops", "must not be empty");
}

double fitness(const Expr& rule, const InstanceSet& set, unsigned jobs) {
  if (set.instances.empty()) throw std::invalid_argument("fitness: empty instance set");
  std::vector<double> twt(set.instances.size());
  parallel_for(twt.size(), jobs, [&](std::size_t i) { twt[i] = Simulator(set.instances[i]).run(rule).twt; });
  double sum = 0.0;
  for (double v : twt) sum += v;
  return sum / static_cast<double>(twt.size());
}

Expr random_tree(Rng& rng, int depth, bool full) {
  std::vector<Node> out;
  grow_into(out, rng, depth, full);
  return Expr(std::move(out));
}

Expr crossover(CrossoverKind kind, const Expr& a, const Expr& b, Rng& rng, int max_depth) {
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Expr child = crossover_once(kind, a, b, rng);
    if (child.depth() <= max_depth) return child;
  }
  return a;
}

Expr mutate(MutationKind kind, const Expr& a, Rng& rng, int max_depth) {
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Expr child = mutate_once(kind, a, rng, max_depth);
    if (child.depth() <= max_depth) return child;
  }
  return a;
}

Evolution::Evolution(GPConfig config, const InstanceSet& train)
    : config_(std::move(config)), train_(&train), rng_(config_.seed) {
  validate(config_);
  if (train.instances.empty()) throw ParamError("train", "training set is empty");
}

Individual Evolution::make_individual(Expr rule) {
  const int d = rule.depth();
  if (d > config_.max_depth) throw std::logic_error("GP inserted a tree deeper than max_depth");
  max_depth_seen_ = std::max(max_depth_seen_, d);
  Individual ind;
  ind.fitness = fitness(rule, *train_, config_.jobs);
  ind.evaluated = true;
  const bool improved = evals_ == 0 || ind.fitness < best_fitness_;
  if (improved) {
    best_fitness_ = ind.fitness;
    best_ = rule;
  }
  ++evals_;
  if (progress_ && (improved || evals_ == config_.max_evals)) progress_(evals_, best_fitness_);
  ind.rule = std::move(rule);
  return ind;
}

void Evolution::init_population() {
  pop_.clear();
  pop_.reserve(static_cast<std::size_t>(config_.pop_size));
  const int min_depth = std::min(2, config_.max_depth);
  const int ramp = config_.max_depth - min_depth + 1;
  for (int i = 0; i < config_.pop_size; ++i) {
    const int depth = min_depth + (i / 2) % ramp;
    pop_.push_back(make_individual(random_tree(rng_, depth, i % 2 == 0)));
  }
}

void Evolution::tournament_step() {
  const std::size_t n = pop_.size();
  std::array<std::size_t, 3> t{};
  t[0] = pick(rng_, n);
  do t[1] = pick(rng_, n); while (t[1] == t[0]);
  do t[2] = pick(rng_, n); while (t[2] == t[0] || t[2] == t[1]);
  std::stable_sort(t.begin(), t.end(), [&](std::size_t x, std::size_t y) { return pop_[x].fitness < pop_[y].fitness; });

  const auto xo = config_.crossover_ops[pick(rng_, config_.crossover_ops.size())];
  Expr child = crossover(xo, pop_[t[0]].rule, pop_[t[1]].rule, rng_, config_.max_depth);
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < config_.mutation_prob) {
    const auto mu = config_.mutation_ops[pick(rng_, config_.mutation_ops.size())];
    child = mutate(mu, child, rng_, config_.max_depth);
  }
  pop_[t[2]] = make_individual(std::move(child));
}

void Evolution::run(const ProgressFn& progress) {
  progress_ = progress;
  if (pop_.empty()) init_population();
  while (evals_ < config_.max_evals) tournament_step();
  progress_ = {};
}

DispatchingRule evolve(const GPConfig& config, const InstanceSet& train, const ProgressFn& progress) {
  Evolution gp(config, train);
  gp.run(progress);
  return DispatchingRule{gp.best(), "gp-seed-" + std::to_string(config.seed)};
}

}  // namespace edr
