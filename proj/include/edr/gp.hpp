#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "edr/expr.hpp"
#include "edr/instance.hpp"

namespace edr {

enum class CrossoverKind { Subtree, Uniform, ContextPreserving, SizeFair };
enum class MutationKind { Subtree, Hoist, NodeComplement, NodeReplacement, Permutation, Shrink };

inline constexpr CrossoverKind kAllCrossovers[] = {CrossoverKind::Subtree, CrossoverKind::Uniform,
                                                   CrossoverKind::ContextPreserving, CrossoverKind::SizeFair};
inline constexpr MutationKind kAllMutations[] = {MutationKind::Subtree,         MutationKind::Hoist,
                                                 MutationKind::NodeComplement,  MutationKind::NodeReplacement,
                                                 MutationKind::Permutation,     MutationKind::Shrink};

struct GPConfig {
  int pop_size = 1000;
  long max_evals = 80000;
  int max_depth = 5;
  double mutation_prob = 0.3;
  std::uint64_t seed = 1;
  std::vector<CrossoverKind> crossover_ops{std::begin(kAllCrossovers), std::end(kAllCrossovers)};
  std::vector<MutationKind> mutation_ops{std::begin(kAllMutations), std::end(kAllMutations)};
  /// Worker threads for per-instance fitness simulation.
  unsigned jobs = 1;
};

/// Throws ParamError naming the first invalid field.
void validate(const GPConfig& config);

using Rng = std::mt19937_64;

struct Individual {
  Expr rule;
  double fitness = 0.0;  // lower is better
  bool evaluated = false;
};

/// Mean run_sgs TWT over the set, summed in instance order.
double fitness(const Expr& rule, const InstanceSet& set, unsigned jobs = 1);

/// Random trees; `full` grows every branch to `depth`.
Expr random_tree(Rng& rng, int depth, bool full);

Expr crossover(CrossoverKind kind, const Expr& a, const Expr& b, Rng& rng, int max_depth);
Expr mutate(MutationKind kind, const Expr& a, Rng& rng, int max_depth);

/// Observer for the evaluation stream: (evaluation count, best fitness so far).
using ProgressFn = std::function<void(long, double)>;

/// Steady-state GP with 3-tournament selection. Each inserted child consumes
/// one fitness evaluation; the initial population counts toward the budget.
class Evolution {
 public:
  Evolution(GPConfig config, const InstanceSet& train);

  void init_population();
  void tournament_step();
  /// Initialises the population if needed, then steps until the budget is
  /// spent. `progress` fires on every improvement and on the last evaluation.
  void run(const ProgressFn& progress = {});

  const std::vector<Individual>& population() const { return pop_; }
  long evaluations() const { return evals_; }
  double best_fitness() const { return best_fitness_; }
  const Expr& best() const { return best_; }
  /// Largest depth of any individual ever inserted.
  int max_depth_seen() const { return max_depth_seen_; }

 private:
  Individual make_individual(Expr rule);

  GPConfig config_;
  const InstanceSet* train_;
  Rng rng_;
  std::vector<Individual> pop_;
  long evals_ = 0;
  double best_fitness_ = 0.0;
  Expr best_;
  int max_depth_seen_ = 0;
  ProgressFn progress_;
};

/// Runs until the budget is spent and returns the best rule found.
DispatchingRule evolve(const GPConfig& config, const InstanceSet& train, const ProgressFn& progress = {});

}  // namespace edr
