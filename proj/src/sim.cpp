#include "edr/sim.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <stdexcept>

namespace edr {

SystemState initial_state(const Instance& instance) {
  SystemState s;
  s.machine_free.assign(static_cast<std::size_t>(instance.machines), 0);
  s.unreleased.resize(instance.jobs.size());
  for (std::size_t j = 0; j < instance.jobs.size(); ++j) s.unreleased[j] = static_cast<int>(j);
  std::stable_sort(s.unreleased.begin(), s.unreleased.end(), [&](int a, int b) {
    return instance.jobs[static_cast<std::size_t>(a)].release < instance.jobs[static_cast<std::size_t>(b)].release;
  });
  Simulator(instance).release(s);
  return s;
}

double weighted_tardiness(const JobSpec& job, Time completion) {
  return static_cast<double>(job.weight * std::max<Time>(completion - job.due, 0));
}

double twt_of(std::span<const Assignment> assignments, const Instance& instance) {
  std::vector<char> seen(instance.jobs.size(), 0);
  double total = 0.0;
  for (const Assignment& a : assignments) {
    if (a.job < 0 || static_cast<std::size_t>(a.job) >= seen.size()) {
      throw std::invalid_argument("twt_of: job id " + std::to_string(a.job) + " out of range");
    }
    if (seen[static_cast<std::size_t>(a.job)]++) {
      throw std::invalid_argument("twt_of: job " + std::to_string(a.job) + " assigned twice");
    }
    total += weighted_tardiness(instance.jobs[static_cast<std::size_t>(a.job)], a.completion);
  }
  for (std::size_t j = 0; j < seen.size(); ++j) {
    if (!seen[j]) throw std::invalid_argument("twt_of: job " + std::to_string(j) + " missing");
  }
  return total;
}

Simulator::Simulator(const Instance& instance) : instance_(&instance) {
  stats_.reserve(instance.jobs.size());
  for (const JobSpec& job : instance.jobs) {
    JobStats st;
    double sum = 0.0;
    for (std::size_t i = 0; i < job.proc_times.size(); ++i) {
      sum += static_cast<double>(job.proc_times[i]);
      if (job.proc_times[i] < job.proc_times[static_cast<std::size_t>(st.fastest_machine)]) {
        st.fastest_machine = static_cast<int>(i);
      }
    }
    st.pmin = static_cast<double>(job.proc_times[static_cast<std::size_t>(st.fastest_machine)]);
    st.pavg = sum / static_cast<double>(job.proc_times.size());
    stats_.push_back(st);
  }
}

double Simulator::priority(const Expr& rule, int job, int machine, const SystemState& state) const {
  const JobSpec& spec = instance_->jobs[static_cast<std::size_t>(job)];
  const JobStats& st = stats_[static_cast<std::size_t>(job)];
  const auto pij = static_cast<double>(spec.proc_times[static_cast<std::size_t>(machine)]);
  const auto now = static_cast<double>(state.now);
  const auto due = static_cast<double>(spec.due);
  TerminalValues v;
  v[static_cast<std::size_t>(Terminal::Pt)] = pij;
  v[static_cast<std::size_t>(Terminal::Pmin)] = st.pmin;
  v[static_cast<std::size_t>(Terminal::Pavg)] = st.pavg;
  v[static_cast<std::size_t>(Terminal::Pat)] =
      std::max(static_cast<double>(state.machine_free[static_cast<std::size_t>(st.fastest_machine)]) - now, 0.0);
  v[static_cast<std::size_t>(Terminal::Mr)] =
      std::max(static_cast<double>(state.machine_free[static_cast<std::size_t>(machine)]) - now, 0.0);
  v[static_cast<std::size_t>(Terminal::Age)] = now - static_cast<double>(spec.release);
  v[static_cast<std::size_t>(Terminal::Dd)] = due;
  v[static_cast<std::size_t>(Terminal::W)] = static_cast<double>(spec.weight);
  v[static_cast<std::size_t>(Terminal::Sl)] = -std::max(due - pij - now, 0.0);
  return rule.evaluate(v);
}

bool Simulator::at_decision_point(const SystemState& state) const {
  if (state.released_pending.empty()) return false;
  return std::any_of(state.machine_free.begin(), state.machine_free.end(),
                     [&](Time t) { return t <= state.now; });
}

namespace {

struct Workspace {
  std::array<std::vector<double>, kTerminalCount> columns;
  std::vector<double> values;
  std::vector<double> arena;
};

thread_local Workspace workspace;

}  // namespace

DecisionTable Simulator::open_decision(const SystemState& state, const Expr& rule) const {
  DecisionTable table;
  open_decision(state, rule, table);
  return table;
}

void Simulator::open_decision(const SystemState& state, const Expr& rule, DecisionTable& table) const {
  table.opened_at = state.now;
  table.best_machine.assign(instance_->jobs.size(), -1);
  table.best_priority.assign(instance_->jobs.size(), std::numeric_limits<double>::infinity());
  const auto m = static_cast<std::size_t>(instance_->machines);
  const std::size_t count = state.released_pending.size() * m;
  if (count == 0) return;

  Workspace& ws = workspace;
  for (auto& col : ws.columns) col.resize(count);
  ws.values.resize(count);
  auto col = [&](Terminal t) { return ws.columns[static_cast<std::size_t>(t)].data(); };
  double* pt = col(Terminal::Pt);
  double* pmin = col(Terminal::Pmin);
  double* pavg = col(Terminal::Pavg);
  double* pat = col(Terminal::Pat);
  double* mr = col(Terminal::Mr);
  double* age = col(Terminal::Age);
  double* dd = col(Terminal::Dd);
  double* w = col(Terminal::W);
  double* sl = col(Terminal::Sl);
  const auto now = static_cast<double>(state.now);

  const bool use_pt = rule.uses(Terminal::Pt);
  const bool use_mr = rule.uses(Terminal::Mr);
  const bool use_sl = rule.uses(Terminal::Sl);
  const unsigned per_job = rule.terminal_mask() & ((1U << static_cast<unsigned>(Terminal::Pmin)) |
                                                   (1U << static_cast<unsigned>(Terminal::Pavg)) |
                                                   (1U << static_cast<unsigned>(Terminal::Pat)) |
                                                   (1U << static_cast<unsigned>(Terminal::Age)) |
                                                   (1U << static_cast<unsigned>(Terminal::Dd)) |
                                                   (1U << static_cast<unsigned>(Terminal::W)));
  std::size_t k = 0;
  for (int j : state.released_pending) {
    const JobSpec& spec = instance_->jobs[static_cast<std::size_t>(j)];
    const JobStats& st = stats_[static_cast<std::size_t>(j)];
    const auto due = static_cast<double>(spec.due);
    if (per_job != 0) {
      auto fill = [&](Terminal t, double* dst, double v) {
        if (rule.uses(t)) std::fill(dst + k, dst + k + m, v);
      };
      fill(Terminal::Pmin, pmin, st.pmin);
      fill(Terminal::Pavg, pavg, st.pavg);
      fill(Terminal::Pat, pat,
           std::max(static_cast<double>(state.machine_free[static_cast<std::size_t>(st.fastest_machine)]) - now, 0.0));
      fill(Terminal::Age, age, now - static_cast<double>(spec.release));
      fill(Terminal::Dd, dd, due);
      fill(Terminal::W, w, static_cast<double>(spec.weight));
    }
    for (std::size_t i = 0; i < m; ++i, ++k) {
      const auto pij = static_cast<double>(spec.proc_times[i]);
      if (use_pt) pt[k] = pij;
      if (use_mr) mr[k] = std::max(static_cast<double>(state.machine_free[i]) - now, 0.0);
      if (use_sl) sl[k] = -std::max(due - pij - now, 0.0);
    }
  }

  std::array<const double*, kTerminalCount> columns{};
  for (std::size_t t = 0; t < kTerminalCount; ++t) columns[t] = ws.columns[t].data();
  rule.evaluate_batch(columns, count, ws.values.data(), ws.arena);

  k = 0;
  for (int j : state.released_pending) {
    std::size_t best = 0;
    double best_value = ws.values[k];
    for (std::size_t i = 1; i < m; ++i) {
      if (ws.values[k + i] < best_value) {
        best_value = ws.values[k + i];
        best = i;
      }
    }
    k += m;
    table.best_machine[static_cast<std::size_t>(j)] = static_cast<int>(best);
    table.best_priority[static_cast<std::size_t>(j)] = best_value;
  }
}

std::optional<Assignment> Simulator::next_commit(const SystemState& state, const DecisionTable& table) const {
  int chosen = -1;
  double chosen_value = 0.0;
  for (int j : state.released_pending) {
    const int b = table.best_machine[static_cast<std::size_t>(j)];
    if (b < 0 || state.machine_free[static_cast<std::size_t>(b)] > state.now) continue;
    const double v = table.best_priority[static_cast<std::size_t>(j)];
    if (chosen < 0 || v < chosen_value) {
      chosen = j;
      chosen_value = v;
    }
  }
  if (chosen < 0) return std::nullopt;
  const int machine = table.best_machine[static_cast<std::size_t>(chosen)];
  const Time p = instance_->jobs[static_cast<std::size_t>(chosen)].proc_times[static_cast<std::size_t>(machine)];
  return Assignment{chosen, machine, state.now, state.now + p};
}

void Simulator::commit(SystemState& state, const Assignment& a) const {
  auto it = std::lower_bound(state.released_pending.begin(), state.released_pending.end(), a.job);
  if (it == state.released_pending.end() || *it != a.job) {
    throw std::logic_error("commit: job " + std::to_string(a.job) + " is not pending");
  }
  state.released_pending.erase(it);
  state.machine_free[static_cast<std::size_t>(a.machine)] = a.completion;
  state.committed.push_back(a);
}

void Simulator::release(SystemState& state) const {
  std::size_t k = 0;
  while (k < state.unreleased.size() &&
         instance_->jobs[static_cast<std::size_t>(state.unreleased[k])].release <= state.now) {
    const int j = state.unreleased[k++];
    state.released_pending.insert(
        std::lower_bound(state.released_pending.begin(), state.released_pending.end(), j), j);
  }
  state.unreleased.erase(state.unreleased.begin(), state.unreleased.begin() + static_cast<std::ptrdiff_t>(k));
}

bool Simulator::advance(SystemState& state) const {
  Time next = std::numeric_limits<Time>::max();
  for (Time t : state.machine_free) {
    if (t > state.now) next = std::min(next, t);
  }
  if (!state.unreleased.empty()) {
    next = std::min(next, instance_->jobs[static_cast<std::size_t>(state.unreleased.front())].release);
  }
  if (next == std::numeric_limits<Time>::max()) return false;
  state.now = next;
  release(state);
  return true;
}

SimOutcome Simulator::drive(SystemState& s, const Expr& rule, const DecisionTable* open,
                            std::size_t max_commits, std::vector<Assignment>* log) const {
  SimOutcome out;
  std::size_t commits = 0;
  const DecisionTable* carried = (open != nullptr && open->opened_at == s.now) ? open : nullptr;
  DecisionTable local;
  while (!s.released_pending.empty() || !s.unreleased.empty()) {
    if (!at_decision_point(s)) {
      if (!advance(s)) throw std::logic_error("simulator: pending jobs but no future event");
      carried = nullptr;
      continue;
    }
    const DecisionTable* table = carried;
    if (table == nullptr) {
      open_decision(s, rule, local);
      table = &local;
    }
    carried = nullptr;
    while (auto a = next_commit(s, *table)) {
      const JobSpec& job = instance_->jobs[static_cast<std::size_t>(a->job)];
      s.released_pending.erase(std::lower_bound(s.released_pending.begin(), s.released_pending.end(), a->job));
      s.machine_free[static_cast<std::size_t>(a->machine)] = a->completion;
      if (log != nullptr) log->push_back(*a);
      if (!out.first_decision) out.first_decision = *a;
      out.sim_twt += weighted_tardiness(job, a->completion);
      if (max_commits != 0 && ++commits >= max_commits) return out;
    }
    if (s.released_pending.empty() && s.unreleased.empty()) break;
    if (!advance(s)) throw std::logic_error("simulator: pending jobs but no future event");
  }
  return out;
}

ScheduleResult Simulator::run(const Expr& rule) const {
  SystemState s = initial_state(*instance_);
  ScheduleResult result;
  result.assignments.reserve(instance_->jobs.size());
  result.twt = drive(s, rule, nullptr, 0, &result.assignments).sim_twt;
  return result;
}

SimOutcome Simulator::simulate(const SystemState& state, const Expr& rule, const DecisionTable* open,
                               std::size_t max_commits) const {
  SystemState s;
  s.now = state.now;
  s.machine_free = state.machine_free;
  s.released_pending = state.released_pending;
  return drive(s, rule, open, max_commits, nullptr);
}

ScheduleResult run_sgs(const Instance& instance, const DispatchingRule& rule) {
  return Simulator(instance).run(rule.expr);
}

std::string format_schedule_csv(const ScheduleResult& result, const Instance& instance) {
  std::vector<Assignment> rows = result.assignments;
  std::sort(rows.begin(), rows.end(), [](const Assignment& a, const Assignment& b) { return a.job < b.job; });
  std::string out = "job,machine,start,completion,weighted_tardiness\n";
  for (const Assignment& a : rows) {
    const auto wt = static_cast<long long>(weighted_tardiness(instance.jobs[static_cast<std::size_t>(a.job)], a.completion));
    out += std::to_string(a.job) + "," + std::to_string(a.machine) + "," + std::to_string(a.start) + "," +
           std::to_string(a.completion) + "," + std::to_string(wt) + "\n";
  }
  return out;
}

SimOutcome simulate_from(const SystemState& state, const Instance& instance, const DispatchingRule& rule) {
  return Simulator(instance).simulate(state, rule.expr);
}

}  // namespace edr
