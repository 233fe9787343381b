#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edr/expr.hpp"
#include "edr/instance.hpp"

namespace edr {

struct Assignment {
  int job = 0;
  int machine = 0;
  Time start = 0;
  Time completion = 0;

  bool operator==(const Assignment&) const = default;
};

struct ScheduleResult {
  std::vector<Assignment> assignments;  // in commitment order
  double twt = 0.0;
};

/// Every job is in exactly one of `released_pending`, `unreleased` or
/// `committed`. `released_pending` is sorted by id, `unreleased` by
/// (release, id).
struct SystemState {
  Time now = 0;
  std::vector<Time> machine_free;
  std::vector<int> released_pending;
  std::vector<int> unreleased;
  std::vector<Assignment> committed;

  bool operator==(const SystemState&) const = default;
};

/// State at time 0 with jobs released at 0 already pending.
SystemState initial_state(const Instance& instance);

/// Sum of w_j * max(C_j - d_j, 0). Throws std::invalid_argument unless the
/// assignments cover every job exactly once.
double twt_of(std::span<const Assignment> assignments, const Instance& instance);

double weighted_tardiness(const JobSpec& job, Time completion);

/// Priorities of one rule frozen when a decision point opens. Indexed by job
/// id; `best_machine[j] < 0` for jobs that were not pending.
struct DecisionTable {
  Time opened_at = 0;
  std::vector<int> best_machine;
  std::vector<double> best_priority;
};

struct SimOutcome {
  std::optional<Assignment> first_decision;
  double sim_twt = 0.0;
};

/// Per-job quantities shared by every priority evaluation.
struct JobStats {
  double pmin = 0.0;
  double pavg = 0.0;
  int fastest_machine = 0;
};

/// Schedule generation scheme bound to one instance.
///
/// A decision point opens when time reaches an event (a release or a machine
/// becoming free) and at least one machine is free and one job is pending.
/// Priorities are evaluated for every pending job on every machine; each job
/// keeps its argmin machine (lowest index on ties). Jobs whose best machine is
/// free are then committed in priority order (lowest job id on ties) without
/// re-evaluating. Afterwards time advances to the next event.
class Simulator {
 public:
  explicit Simulator(const Instance& instance);

  const Instance& instance() const { return *instance_; }

  ScheduleResult run(const Expr& rule) const;

  /// Runs the scheme from a copy of `state` as if no further jobs will be
  /// released. With `open`, the decision point at `state.now` continues with
  /// those frozen priorities instead of opening a new one. `max_commits`
  /// bounds the simulated horizon (0 = unbounded).
  SimOutcome simulate(const SystemState& state, const Expr& rule, const DecisionTable* open = nullptr,
                      std::size_t max_commits = 0) const;

  bool at_decision_point(const SystemState& state) const;
  DecisionTable open_decision(const SystemState& state, const Expr& rule) const;
  /// Same, reusing the storage of `table`.
  void open_decision(const SystemState& state, const Expr& rule, DecisionTable& table) const;
  std::optional<Assignment> next_commit(const SystemState& state, const DecisionTable& table) const;
  void commit(SystemState& state, const Assignment& a) const;
  void release(SystemState& state) const;
  /// Moves `now` to the next event strictly after it and releases jobs.
  /// Returns false when no event remains.
  bool advance(SystemState& state) const;

  double priority(const Expr& rule, int job, int machine, const SystemState& state) const;

 private:
  SimOutcome drive(SystemState& s, const Expr& rule, const DecisionTable* open, std::size_t max_commits,
                   std::vector<Assignment>* log) const;

  const Instance* instance_;
  std::vector<JobStats> stats_;
};

ScheduleResult run_sgs(const Instance& instance, const DispatchingRule& rule);

/// CSV `job,machine,start,completion,weighted_tardiness`, ordered by job id.
std::string format_schedule_csv(const ScheduleResult& result, const Instance& instance);

/// Released-only simulation from `state`; never mutates it. `sim_twt` covers
/// only jobs committed during the simulation.
SimOutcome simulate_from(const SystemState& state, const Instance& instance, const DispatchingRule& rule);

}  // namespace edr
