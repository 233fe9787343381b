#pragma once

// Independent reference implementations used as test oracles. They are
// written for clarity, not speed, and share no code with the library beyond
// its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "edr/expr.hpp"
#include "edr/instance.hpp"
#include "edr/sim.hpp"

namespace edr::test {

/// m=2, all released at 0, p = [[2,4],[3,3],[9,1]], d = [2,3,4], w = [1,2,3].
inline Instance three_job_instance() {
  Instance inst;
  inst.name = "three";
  inst.machines = 2;
  inst.jobs = {{0, 0, 2, 1, {2, 4}}, {1, 0, 3, 2, {3, 3}}, {2, 0, 4, 3, {9, 1}}};
  return inst;
}

inline Instance random_instance(std::mt19937_64& rng, bool static_release = false) {
  std::uniform_int_distribution<int> n_dist(1, 14);
  std::uniform_int_distribution<int> m_dist(1, 4);
  std::uniform_int_distribution<Time> p_dist(1, 20);
  std::uniform_int_distribution<Time> r_dist(0, 30);
  std::uniform_int_distribution<Time> slack_dist(0, 40);
  std::uniform_int_distribution<std::int64_t> w_dist(1, 10);
  Instance inst;
  inst.name = "random";
  inst.machines = m_dist(rng);
  const int n = n_dist(rng);
  for (int j = 0; j < n; ++j) {
    JobSpec job;
    job.id = j;
    for (int i = 0; i < inst.machines; ++i) job.proc_times.push_back(p_dist(rng));
    job.release = static_release ? 0 : r_dist(rng);
    job.due = job.release + slack_dist(rng);
    job.weight = w_dist(rng);
    inst.jobs.push_back(job);
  }
  return inst;
}

/// Random expression built from a recursive grammar, independent of the
/// library's tree generator.
inline Expr random_expr(std::mt19937_64& rng, int max_depth) {
  std::vector<Node> out;
  auto grow = [&](auto&& self, int depth) -> void {
    std::uniform_int_distribution<int> pick(0, 13);
    const int k = depth >= max_depth ? 5 + static_cast<int>(rng() % 9) : pick(rng);
    if (k < 5) {
      const Op op = static_cast<Op>(k);
      out.push_back(Node::function(op));
      for (int c = 0; c < arity(op); ++c) self(self, depth + 1);
    } else {
      out.push_back(Node::leaf(static_cast<Terminal>(k - 5)));
    }
  };
  grow(grow, 0);
  return Expr(out);
}

// ---------------------------------------------------------------------------
// Priority oracle: direct recursive interpretation with the terminal formulas
// written out per evaluation.

struct OracleContext {
  const Instance* inst;
  int job;
  int machine;
  Time now;
  std::vector<Time> machine_free;
};

inline double oracle_terminal(Terminal t, const OracleContext& c) {
  const JobSpec& job = c.inst->jobs[static_cast<std::size_t>(c.job)];
  const auto& p = job.proc_times;
  switch (t) {
    case Terminal::Pt: return static_cast<double>(p[static_cast<std::size_t>(c.machine)]);
    case Terminal::Pmin: return static_cast<double>(*std::min_element(p.begin(), p.end()));
    case Terminal::Pavg: {
      double sum = 0.0;
      for (Time v : p) sum += static_cast<double>(v);
      return sum / static_cast<double>(p.size());
    }
    case Terminal::Pat: {
      std::size_t fastest = 0;
      for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] < p[fastest]) fastest = i;
      }
      return static_cast<double>(std::max<Time>(c.machine_free[fastest] - c.now, 0));
    }
    case Terminal::Mr:
      return static_cast<double>(std::max<Time>(c.machine_free[static_cast<std::size_t>(c.machine)] - c.now, 0));
    case Terminal::Age: return static_cast<double>(c.now - job.release);
    case Terminal::Dd: return static_cast<double>(job.due);
    case Terminal::W: return static_cast<double>(job.weight);
    case Terminal::Sl:
      return -static_cast<double>(std::max<Time>(job.due - p[static_cast<std::size_t>(c.machine)] - c.now, 0));
  }
  return 0.0;
}

inline double oracle_eval_at(std::span<const Node> nodes, std::size_t& i, const OracleContext& c) {
  const Node n = nodes[i++];
  switch (n.op) {
    case Op::Terminal: return oracle_terminal(n.terminal, c);
    case Op::Pos: {
      const double a = oracle_eval_at(nodes, i, c);
      return a < 0 ? 0.0 : a;
    }
    default: break;
  }
  const double a = oracle_eval_at(nodes, i, c);
  const double b = oracle_eval_at(nodes, i, c);
  switch (n.op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return b == 0 ? 1.0 : a / b;
    default: return 0.0;
  }
}

inline double oracle_priority(const Expr& e, const OracleContext& c) {
  std::size_t i = 0;
  const double v = oracle_eval_at(e.nodes(), i, c);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// SGS oracle: steps time one unit at a time and opens a decision point at
// every tick where a job is released or a machine completes, provided a
// machine is idle and a released job waits.

struct OracleSchedule {
  std::vector<Assignment> assignments;  // commit order
  double twt = 0.0;
};

inline OracleSchedule oracle_sgs(const Instance& inst, const Expr& rule) {
  const int n = inst.job_count();
  const int m = inst.machines;
  std::vector<Time> free_at(static_cast<std::size_t>(m), 0);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  OracleSchedule out;
  int remaining = n;
  for (Time t = 0; remaining > 0; ++t) {
    bool event = t == 0;
    for (const JobSpec& j : inst.jobs) event = event || j.release == t;
    for (Time f : free_at) event = event || f == t;
    if (!event) continue;
    std::vector<int> waiting;
    for (const JobSpec& j : inst.jobs) {
      if (!done[static_cast<std::size_t>(j.id)] && j.release <= t) waiting.push_back(j.id);
    }
    const bool idle = std::any_of(free_at.begin(), free_at.end(), [&](Time f) { return f <= t; });
    if (waiting.empty() || !idle) continue;

    struct Choice {
      int job;
      int machine;
      double priority;
    };
    std::vector<Choice> choices;
    for (int j : waiting) {
      Choice best{j, -1, 0.0};
      for (int i = 0; i < m; ++i) {
        const double pr = oracle_priority(rule, {&inst, j, i, t, free_at});
        if (best.machine < 0 || pr < best.priority) best = {j, i, pr};
      }
      choices.push_back(best);
    }
    std::stable_sort(choices.begin(), choices.end(), [](const Choice& a, const Choice& b) {
      return a.priority < b.priority || (a.priority == b.priority && a.job < b.job);
    });
    for (const Choice& c : choices) {
      auto& f = free_at[static_cast<std::size_t>(c.machine)];
      if (f > t) continue;
      const JobSpec& job = inst.jobs[static_cast<std::size_t>(c.job)];
      const Time done_at = t + job.proc_times[static_cast<std::size_t>(c.machine)];
      out.assignments.push_back({c.job, c.machine, t, done_at});
      out.twt += static_cast<double>(job.weight * std::max<Time>(done_at - job.due, 0));
      f = done_at;
      done[static_cast<std::size_t>(c.job)] = true;
      --remaining;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank-test oracles by brute-force enumeration of all relabelings.

inline std::vector<double> oracle_midranks(const std::vector<double>& pooled) {
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    double below = 0;
    double equal = 0;
    for (double v : pooled) {
      below += v < pooled[i];
      equal += v == pooled[i];
    }
    ranks[i] = below + (equal + 1) / 2.0;
  }
  return ranks;
}

/// Two-sided exact p: share of subsets whose rank sum lies at least as far
/// from its mean as the observed one.
inline double oracle_mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = oracle_midranks(pooled);
  const std::size_t n = pooled.size();
  const std::size_t k = a.size();
  const double mean = static_cast<double>(k) * static_cast<double>(n + 1) / 2.0;
  const double observed = std::abs(std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(k), 0.0) - mean);
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1U << i)) s += ranks[i];
    }
    ++total;
    hits += std::abs(s - mean) >= observed - 1e-9;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline double oracle_h(const std::vector<double>& ranks, const std::vector<int>& labels, std::size_t groups) {
  const double n = static_cast<double>(ranks.size());
  std::vector<double> sum(groups, 0.0);
  std::vector<double> cnt(groups, 0.0);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    sum[static_cast<std::size_t>(labels[i])] += ranks[i];
    cnt[static_cast<std::size_t>(labels[i])] += 1;
  }
  double h = 0;
  for (std::size_t g = 0; g < groups; ++g) h += sum[g] * sum[g] / cnt[g];
  h = 12.0 / (n * (n + 1)) * h - 3 * (n + 1);
  // tie correction
  std::vector<double> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double c = 1 - ties / (n * n * n - n);
  return c > 0 ? h / c : 0.0;
}

/// Exact p: share of distinct group labelings with H at least the observed.
inline double oracle_kruskal_p(const std::vector<std::vector<double>>& groups) {
  std::vector<double> pooled;
  std::vector<int> labels;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g]) {
      pooled.push_back(v);
      labels.push_back(static_cast<int>(g));
    }
  }
  const auto ranks = oracle_midranks(pooled);
  const double observed = oracle_h(ranks, labels, groups.size());
  std::sort(labels.begin(), labels.end());
  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  do {
    ++total;
    hits += oracle_h(ranks, labels, groups.size()) >= observed - 1e-9;
  } while (std::next_permutation(labels.begin(), labels.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

/// Exact Kruskal-Wallis p-values for every group shape of one pooled sample.
/// Walks all set partitions of the pooled indices as restricted growth
/// strings and files sum(R_g^2 / n_g) under the sorted block sizes.
class PartitionOracle {
 public:
  explicit PartitionOracle(const std::vector<double>& pooled)
      : ranks_(oracle_midranks(pooled)), label_(pooled.size(), 0) {
    walk(0, 0);
    for (auto& [shape, values] : stats_) std::sort(values.begin(), values.end());
  }

  /// p for the split whose first sizes[0] pooled values form group 0, the
  /// next sizes[1] group 1, and so on.
  double p_value(const std::vector<std::size_t>& sizes) const {
    double observed = 0;
    std::size_t at = 0;
    for (std::size_t n : sizes) {
      double sum = 0;
      for (std::size_t i = 0; i < n; ++i) sum += ranks_[at + i];
      at += n;
      observed += sum * sum / static_cast<double>(n);
    }
    std::vector<std::size_t> key = sizes;
    std::sort(key.begin(), key.end());
    const auto& values = stats_.at(key);
    const auto first = std::lower_bound(values.begin(), values.end(), observed * (1 - 1e-12));
    return static_cast<double>(values.end() - first) / static_cast<double>(values.size());
  }

 private:
  void walk(std::size_t i, int blocks) {
    if (i == ranks_.size()) {
      std::vector<double> sum(static_cast<std::size_t>(blocks), 0.0);
      std::vector<std::size_t> cnt(static_cast<std::size_t>(blocks), 0);
      for (std::size_t k = 0; k < ranks_.size(); ++k) {
        sum[static_cast<std::size_t>(label_[k])] += ranks_[k];
        ++cnt[static_cast<std::size_t>(label_[k])];
      }
      double t = 0;
      for (std::size_t b = 0; b < sum.size(); ++b) t += sum[b] * sum[b] / static_cast<double>(cnt[b]);
      std::sort(cnt.begin(), cnt.end());
      stats_[cnt].push_back(t);
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      label_[i] = b;
      walk(i + 1, std::max(blocks, b + 1));
    }
  }

  std::vector<double> ranks_;
  std::vector<int> label_;
  std::map<std::vector<std::size_t>, std::vector<double>> stats_;
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("edr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace edr::test
