#include "edr/ensemble.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "edr/errors.hpp"

namespace edr {

namespace {

double score(const SimOutcome& out, const Instance& instance, Mode mode) {
  if (mode == Mode::EDR_M) return out.sim_twt;
  if (!out.first_decision) return 0.0;
  return weighted_tardiness(instance.jobs[static_cast<std::size_t>(out.first_decision->job)],
                            out.first_decision->completion);
}

std::size_t argmin(const std::vector<double>& f) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (f[k] < f[best]) best = k;
  }
  return best;
}

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::EDR_S ? "EDR_S" : "EDR_M"; }

Mode mode_from_string(std::string_view text) {
  if (text == "EDR_S" || text == "EDR-S") return Mode::EDR_S;
  if (text == "EDR_M" || text == "EDR-M") return Mode::EDR_M;
  throw ParamError("mode", "expected EDR_S or EDR_M, got '" + std::string(text) + "'");
}

std::size_t lookahead(Mode mode) { return mode == Mode::EDR_S ? 1 : 0; }

std::vector<double> score_rules(const SystemState& state, const Instance& instance, const Ensemble& ensemble) {
  const Simulator sim(instance);
  std::vector<double> f;
  f.reserve(ensemble.rules.size());
  for (const auto& rule : ensemble.rules) {
    f.push_back(score(sim.simulate(state, rule.expr, nullptr, lookahead(ensemble.mode)), instance, ensemble.mode));
  }
  return f;
}

std::pair<ScheduleResult, EnsembleTrace> run_ensemble(const Instance& instance, const Ensemble& ensemble) {
  if (ensemble.rules.empty()) throw std::invalid_argument("run_ensemble: empty ensemble");
  const Simulator sim(instance);
  const std::size_t e = ensemble.rules.size();
  const std::size_t horizon = lookahead(ensemble.mode);

  SystemState state = initial_state(instance);
  EnsembleTrace trace;
  trace.records.reserve(instance.jobs.size());
  std::vector<DecisionTable> tables;
  std::vector<SimOutcome> outcomes(e);
  std::vector<double> f(e);

  while (!state.released_pending.empty() || !state.unreleased.empty()) {
    if (!sim.at_decision_point(state)) {
      if (!sim.advance(state)) throw std::logic_error("run_ensemble: pending jobs but no future event");
      tables.clear();
      continue;
    }
    if (tables.empty()) {
      for (const auto& rule : ensemble.rules) tables.push_back(sim.open_decision(state, rule.expr));
    }
    for (std::size_t k = 0; k < e; ++k) {
      outcomes[k] = sim.simulate(state, ensemble.rules[k].expr, &tables[k], horizon);
      f[k] = score(outcomes[k], instance, ensemble.mode);
    }
    const std::size_t best = argmin(f);
    const auto& decision = outcomes[best].first_decision;
    if (decision && decision->start == state.now) {
      sim.commit(state, *decision);
      trace.records.push_back(DecisionRecord{state.now, f, best, *decision});
      continue;
    }
    if (!sim.advance(state)) throw std::logic_error("run_ensemble: pending jobs but no future event");
    tables.clear();
  }

  ScheduleResult result;
  result.assignments = state.committed;
  result.twt = twt_of(result.assignments, instance);
  return {std::move(result), std::move(trace)};
}

std::string format_trace_csv(const EnsembleTrace& trace, std::size_t ensemble_size) {
  std::string out = "time,chosen_rule";
  for (std::size_t k = 0; k < ensemble_size; ++k) out += ",F_" + std::to_string(k);
  out += '\n';
  for (const auto& r : trace.records) {
    out += std::to_string(r.time) + "," + std::to_string(r.chosen);
    for (double f : r.scores) out += "," + std::to_string(static_cast<long long>(f));
    out += '\n';
  }
  return out;
}

std::string format_ensemble(const Ensemble& ensemble) {
  std::string out = "mode=" + std::string(to_string(ensemble.mode)) + "\n";
  out += format_rule_file(ensemble.rules);
  return out;
}

Ensemble parse_ensemble(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  Ensemble ens;
  bool have_mode = false;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string line(text.substr(start, end - start));
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t lead = 0;
    while (lead < line.size() && std::isspace(static_cast<unsigned char>(line[lead]))) ++lead;
    line.erase(0, lead);
    if (line.empty()) continue;
    if (line.rfind("mode=", 0) != 0) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'mode=EDR_S' or 'mode=EDR_M'", line_no);
    }
    try {
      ens.mode = mode_from_string(line.substr(5));
    } catch (const ParamError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    have_mode = true;
    break;
  }
  if (!have_mode) throw ParseError("ensemble file has no mode header", line_no == 0 ? 1 : line_no);
  try {
    ens.rules = parse_rule_file(text.substr(std::min(start, text.size())));
  } catch (const ParseError& e) {
    throw ParseError(std::string("after mode header, ") + e.what(), line_no + e.location());
  }
  if (ens.rules.empty()) throw ParseError("ensemble file has no rules", line_no);
  return ens;
}

void save_ensemble(const Ensemble& ensemble, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << format_ensemble(ensemble);
}

Ensemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ensemble(ss.str());
}

}  // namespace edr
