#include "edr/sec.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

#include "edr/errors.hpp"
#include "edr/parallel.hpp"

namespace edr {

void validate(const SECConfig& c, std::size_t pool_size) {
  if (pool_size == 0) throw ParamError("pool", "rule pool is empty");
  if (c.num_ensembles < 1) throw ParamError("num_ensembles", "must be >= 1");
  if (c.size < 1) throw ParamError("size", "must be >= 1");
  if (c.without_replacement && static_cast<std::size_t>(c.size) > pool_size) {
    throw ParamError("size", "ensemble size " + std::to_string(c.size) + " exceeds pool size " +
                                 std::to_string(pool_size) + " when sampling without replacement");
  }
}

std::vector<std::vector<std::size_t>> sample_candidates(const SECConfig& c, std::size_t pool_size) {
  validate(c, pool_size);
  std::mt19937_64 rng(c.seed);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(static_cast<std::size_t>(c.num_ensembles));
  std::vector<std::size_t> deck(pool_size);
  for (int k = 0; k < c.num_ensembles; ++k) {
    std::vector<std::size_t> members;
    if (c.without_replacement) {
      std::iota(deck.begin(), deck.end(), std::size_t{0});
      for (int s = 0; s < c.size; ++s) {
        const auto pos = static_cast<std::size_t>(s);
        const std::size_t j = std::uniform_int_distribution<std::size_t>(pos, pool_size - 1)(rng);
        std::swap(deck[pos], deck[j]);
        members.push_back(deck[pos]);
      }
    } else {
      for (int s = 0; s < c.size; ++s) {
        members.push_back(std::uniform_int_distribution<std::size_t>(0, pool_size - 1)(rng));
      }
    }
    out.push_back(std::move(members));
  }
  return out;
}

Ensemble make_ensemble(std::span<const DispatchingRule> pool, std::span<const std::size_t> members, Mode mode) {
  Ensemble e;
  e.mode = mode;
  for (std::size_t id : members) {
    if (id >= pool.size()) throw std::out_of_range("make_ensemble: member id " + std::to_string(id));
    e.rules.push_back(pool[id]);
  }
  return e;
}

double evaluate_ensemble(const Ensemble& ensemble, const InstanceSet& set, unsigned jobs) {
  if (set.instances.empty()) throw std::invalid_argument("evaluate_ensemble: empty instance set");
  std::vector<double> twt(set.instances.size());
  parallel_for(twt.size(), jobs, [&](std::size_t i) { twt[i] = run_ensemble(set.instances[i], ensemble).first.twt; });
  double sum = 0.0;
  for (double v : twt) sum += v;
  return sum / static_cast<double>(twt.size());
}

SECResult construct(std::span<const DispatchingRule> pool, const SECConfig& config, const InstanceSet& validation) {
  if (validation.instances.empty()) throw ParamError("validation", "validation set is empty");
  const auto members = sample_candidates(config, pool.size());
  SECResult result;
  result.candidates.resize(members.size());
  parallel_for(members.size(), config.jobs, [&](std::size_t k) {
    result.candidates[k].members = members[k];
    result.candidates[k].score = evaluate_ensemble(make_ensemble(pool, members[k], config.mode), validation);
  });
  for (std::size_t k = 1; k < result.candidates.size(); ++k) {
    if (result.candidates[k].score < result.candidates[result.best_index].score) result.best_index = k;
  }
  result.best = make_ensemble(pool, result.candidates[result.best_index].members, config.mode);
  return result;
}

}  // namespace edr
