#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edr/sim.hpp"

namespace edr {

/// EDR_S scores a rule by the weighted tardiness of the next job it would
/// schedule; EDR_M by simulating all currently released jobs.
enum class Mode { EDR_S, EDR_M };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct Ensemble {
  std::vector<DispatchingRule> rules;  // order breaks ties
  Mode mode = Mode::EDR_M;
};

struct DecisionRecord {
  Time time = 0;
  std::vector<double> scores;  // F[k]
  std::size_t chosen = 0;
  Assignment committed;
};

struct EnsembleTrace {
  std::vector<DecisionRecord> records;
};

/// Number of simulated commitments used to score a rule (0 = all released).
std::size_t lookahead(Mode mode);

/// Scores every member at a freshly opened decision point.
std::vector<double> score_rules(const SystemState& state, const Instance& instance, const Ensemble& ensemble);

/// Executes the ensemble on one instance.
///
/// At every selection round each member simulates the released jobs from the
/// current state; the member with the lowest score (lowest index on ties)
/// makes exactly one commitment, after which a new round starts at the same
/// time. Each member keeps the priorities it froze when the current decision
/// point opened, so a round continues that member's own dispatching sequence.
/// When the winning member would only schedule in the future, time advances
/// to the next event and a new decision point opens.
std::pair<ScheduleResult, EnsembleTrace> run_ensemble(const Instance& instance, const Ensemble& ensemble);

/// CSV `time,chosen_rule,F_0,...,F_{e-1}`, one row per commitment.
std::string format_trace_csv(const EnsembleTrace& trace, std::size_t ensemble_size);

/// Ensemble file: `mode=EDR_S|EDR_M` header, then one rule per line.
std::string format_ensemble(const Ensemble& ensemble);
Ensemble parse_ensemble(std::string_view text);
void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble load_ensemble(const std::filesystem::path& path);

}  // namespace edr
