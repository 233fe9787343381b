#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "edr/ensemble.hpp"
#include "edr/instance.hpp"

namespace edr {

struct SECConfig {
  int num_ensembles = 100;  // p
  int size = 3;             // e
  Mode mode = Mode::EDR_M;
  std::uint64_t seed = 1;
  bool without_replacement = true;
  unsigned jobs = 1;
};

struct Candidate {
  std::vector<std::size_t> members;  // pool indices, in ensemble order
  double score = 0.0;
};

struct SECResult {
  Ensemble best;
  std::size_t best_index = 0;
  std::vector<Candidate> candidates;  // in construction order
};

/// Throws ParamError naming the first invalid field.
void validate(const SECConfig& config, std::size_t pool_size);

/// Candidate member lists drawn from the seed, before any evaluation.
std::vector<std::vector<std::size_t>> sample_candidates(const SECConfig& config, std::size_t pool_size);

Ensemble make_ensemble(std::span<const DispatchingRule> pool, std::span<const std::size_t> members, Mode mode);

/// Mean per-instance TWT of run_ensemble; throws std::invalid_argument on an
/// empty set.
double evaluate_ensemble(const Ensemble& ensemble, const InstanceSet& set, unsigned jobs = 1);

/// Simple ensemble combination: p random ensembles of size e, keep the one
/// with the lowest validation score (first constructed on ties).
SECResult construct(std::span<const DispatchingRule> pool, const SECConfig& config, const InstanceSet& validation);

}  // namespace edr
