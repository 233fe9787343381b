#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "edr/ensemble.hpp"
#include "edr/errors.hpp"
#include "edr/gp.hpp"
#include "edr/instance.hpp"
#include "edr/parallel.hpp"
#include "edr/rng.hpp"
#include "edr/sec.hpp"
#include "edr/stats.hpp"
#include "edr/version.hpp"

namespace edr::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

class ConfigError : public Error {
 public:
  using Error::Error;
};

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string seconds_text(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << text;
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw FileError(what + ": file not found '" + path.string() + "'");
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Seeds, effective configuration and tool version, written beside outputs.
/// The configuration omits output locations and worker counts.
void write_meta(const fs::path& path, std::string_view command, const json& config, const json& seeds) {
  json meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["command"] = command;
  meta["config"] = config;
  meta["config_hash"] = fnv1a_hex(config.dump());
  meta["seeds"] = seeds;
  write_text(path, meta.dump(2) + "\n");
}

fs::path meta_beside(const fs::path& file) { return fs::path(file.string() + ".meta.json"); }

std::string slug(const std::string& text) {
  std::string out;
  for (char c : text) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

std::string method_label(int p, int e, Mode mode) {
  return "SEC-" + std::to_string(p) + "/e=" + std::to_string(e) + "/" + (mode == Mode::EDR_S ? "EDR-S" : "EDR-M");
}

// ---------------------------------------------------------------------------
// JSON config: `{"<command>": {"<long-option>": value, ...}}`. Top-level
// scalar keys apply to any command that has such an option. Flags given on
// the command line win.

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
  throw ConfigError("config key '" + key + "': unsupported value " + v.dump());
}

std::vector<std::string> expand_config(std::vector<std::string> args, CLI::App& app) {
  auto it = std::find_if(args.begin(), args.end(),
                         [](const std::string& a) { return a == "--config" || a.rfind("--config=", 0) == 0; });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw ConfigError("--config requires a path");
    path = *std::next(it);
    args.erase(it, it + 2);
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  require_file(path, "--config");
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config '" + path + "': expected a JSON object");
  if (args.empty()) return args;

  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args.front());
  } catch (const CLI::OptionNotFound&) {
    return args;
  }

  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  auto apply = [&](const std::string& key, const json& value, bool strict) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      if (strict) throw ConfigError("config: unknown key '" + sub->get_name() + "." + key + "'");
      return;
    }
    if (given(key)) return;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
      return;
    }
    extra.push_back("--" + key);
    if (value.is_array()) {
      if (value.empty()) throw ConfigError("config key '" + key + "': empty list");
      for (const auto& v : value) extra.push_back(scalar_text(v, key));
    } else {
      extra.push_back(scalar_text(value, key));
    }
  };
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_object()) apply(key, value, false);
  }
  if (doc.contains(sub->get_name())) {
    const json& section = doc[sub->get_name()];
    if (!section.is_object()) throw ConfigError("config: section '" + sub->get_name() + "' must be an object");
    for (const auto& [key, value] : section.items()) apply(key, value, true);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  std::uint64_t seed = 1;
  std::string out;
  int train = 60;
  int validation = 60;
  int test = 60;
};

int cmd_gen(const GenOptions& o) {
  const Corpus corpus = make_corpus(o.seed, {o.train, o.validation, o.test});
  save_corpus(corpus, o.out);
  json config;
  config["seed"] = o.seed;
  config["train"] = o.train;
  config["validation"] = o.validation;
  config["test"] = o.test;
  json seeds = json::array();
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(o.train + o.validation + o.test); ++k) {
    seeds.push_back(corpus_params(o.seed, k).seed);
  }
  write_meta(fs::path(o.out) / "meta.json", "gen", config, {{"corpus", o.seed}, {"instances", seeds}});
  std::cout << "wrote " << (o.train + o.validation + o.test) << " instances to " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evolve

struct EvolveOptions {
  std::string train;
  std::string out;
  std::string log_dir;
  std::vector<std::uint64_t> seeds;
  int runs = 50;
  std::uint64_t seed_base = 1;
  int pop = 1000;
  long evals = 80000;
  int max_depth = 5;
  double mutation_prob = 0.3;
  bool append = false;
  unsigned jobs = 1;
};

int cmd_evolve(EvolveOptions o) {
  require_file(o.train, "--train");
  if (o.seeds.empty()) {
    if (o.runs < 1) throw ParamError("runs", "must be >= 1");
    for (int k = 0; k < o.runs; ++k) o.seeds.push_back(o.seed_base + static_cast<std::uint64_t>(k));
  }
  GPConfig base;
  base.pop_size = o.pop;
  base.max_evals = o.evals;
  base.max_depth = o.max_depth;
  base.mutation_prob = o.mutation_prob;
  validate(base);
  const InstanceSet train = load_set(o.train);

  std::vector<DispatchingRule> found(o.seeds.size());
  std::vector<std::string> logs(o.seeds.size());
  parallel_for(o.seeds.size(), o.jobs, [&](std::size_t k) {
    GPConfig cfg = base;
    cfg.seed = o.seeds[k];
    std::string log = "eval_count,best_fitness\n";
    found[k] = evolve(cfg, train, [&](long evals, double best) { log += std::to_string(evals) + "," + num(best) + "\n"; });
    logs[k] = std::move(log);
  });

  std::vector<DispatchingRule> pool;
  if (o.append && fs::exists(o.out)) pool = load_rules(o.out);
  pool.insert(pool.end(), found.begin(), found.end());
  save_rules(pool, o.out);
  if (!o.log_dir.empty()) {
    for (std::size_t k = 0; k < o.seeds.size(); ++k) {
      write_text(fs::path(o.log_dir) / ("run_" + std::to_string(o.seeds[k]) + ".csv"), logs[k]);
    }
  }
  json config;
  config["train"] = o.train;
  config["pop"] = o.pop;
  config["evals"] = o.evals;
  config["max_depth"] = o.max_depth;
  config["mutation_prob"] = o.mutation_prob;
  config["append"] = o.append;
  write_meta(meta_beside(o.out), "evolve", config, o.seeds);
  std::cout << "evolved " << found.size() << " rules into " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// build-ensembles

struct BuildOptions {
  std::string pool;
  std::string set;
  std::string out;
  std::vector<int> p{100};
  std::vector<int> e{3, 5, 7};
  std::vector<std::string> modes{"EDR_M"};
  int reps = 30;
  std::uint64_t seed = 1;
  bool with_replacement = false;
  unsigned jobs = 1;
};

int cmd_build(const BuildOptions& o) {
  require_file(o.pool, "--pool");
  require_file(o.set, "--set");
  if (o.reps < 1) throw ParamError("reps", "must be >= 1");
  if (o.p.empty() || o.e.empty() || o.modes.empty()) throw ParamError("grid", "p, e and mode lists must be non-empty");
  std::vector<Mode> modes;
  for (const auto& m : o.modes) modes.push_back(mode_from_string(m));
  const auto pool = load_rules(o.pool);
  if (pool.empty()) throw ValidationError("--pool: rule file is empty");
  const InstanceSet validation = load_set(o.set);

  struct Job {
    std::string label;
    int rep;
    SECConfig config;
  };
  std::vector<Job> grid;
  SplitMix64 seeds(o.seed);
  for (int p : o.p) {
    for (int e : o.e) {
      for (Mode mode : modes) {
        for (int rep = 1; rep <= o.reps; ++rep) {
          SECConfig c;
          c.num_ensembles = p;
          c.size = e;
          c.mode = mode;
          c.seed = seeds.next();
          c.without_replacement = !o.with_replacement;
          validate(c, pool.size());
          grid.push_back({method_label(p, e, mode), rep, c});
        }
      }
    }
  }

  json index = json::array();
  json seed_list = json::array();
  const fs::path out(o.out);
  for (const Job& job : grid) {
    SECConfig c = job.config;
    c.jobs = o.jobs;
    const SECResult res = construct(pool, c, validation);
    const std::string stem = slug(job.label) + "_rep" + std::to_string(job.rep);
    const std::string ens_file = "ensembles/" + stem + ".ens";
    Ensemble best = res.best;
    for (std::size_t k = 0; k < best.rules.size(); ++k) {
      best.rules[k].label = "pool:" + std::to_string(res.candidates[res.best_index].members[k]);
    }
    save_ensemble(best, out / ens_file);
    std::string scores = "candidate_id,score,member_ids\n";
    for (std::size_t k = 0; k < res.candidates.size(); ++k) {
      std::string ids;
      for (std::size_t id : res.candidates[k].members) ids += (ids.empty() ? "" : " ") + std::to_string(id);
      scores += std::to_string(k) + "," + num(res.candidates[k].score) + "," + ids + "\n";
    }
    write_text(out / "scores" / (stem + ".csv"), scores);
    json entry;
    entry["method"] = job.label;
    entry["rep"] = job.rep;
    entry["file"] = ens_file;
    entry["members"] = res.candidates[res.best_index].members;
    entry["validation_score"] = res.candidates[res.best_index].score;
    entry["seed"] = c.seed;
    index.push_back(entry);
    seed_list.push_back(c.seed);
  }
  write_text(out / "ensembles.json", index.dump(2) + "\n");
  json config;
  config["pool"] = o.pool;
  config["set"] = o.set;
  config["p"] = o.p;
  config["e"] = o.e;
  config["modes"] = o.modes;
  config["reps"] = o.reps;
  config["seed"] = o.seed;
  config["with_replacement"] = o.with_replacement;
  write_meta(out / "meta.json", "build-ensembles", config, seed_list);
  std::cout << "built " << grid.size() << " ensembles into " << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Ensemble inputs shared by eval and freq.

struct EnsembleEntry {
  std::string method;
  int rep = 1;
  Ensemble ensemble;
  std::vector<std::size_t> members;  // pool ids when known
};

std::vector<EnsembleEntry> load_ensemble_inputs(const std::vector<std::string>& inputs) {
  std::vector<EnsembleEntry> out;
  int loose = 0;
  for (const auto& input : inputs) {
    require_file(input, "--ensembles");
    const fs::path path(input);
    if (path.extension() == ".json") {
      json doc;
      try {
        doc = json::parse(read_text(path));
      } catch (const json::parse_error& e) {
        throw ParseError(input + ": " + e.what(), 0);
      }
      if (!doc.is_array()) throw ValidationError(input + ": expected an array of ensemble entries");
      for (const auto& item : doc) {
        EnsembleEntry e;
        e.method = item.at("method").get<std::string>();
        e.rep = item.value("rep", 1);
        const fs::path file = path.parent_path() / item.at("file").get<std::string>();
        require_file(file, input);
        e.ensemble = load_ensemble(file);
        if (item.contains("members")) e.members = item["members"].get<std::vector<std::size_t>>();
        out.push_back(std::move(e));
      }
    } else {
      EnsembleEntry e;
      e.method = "ENS";
      e.rep = ++loose;
      e.ensemble = load_ensemble(path);
      out.push_back(std::move(e));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string set;
  std::string rules;
  std::vector<std::string> ensembles;
  std::string out;
  std::string schedule_dir;
  std::string trace_dir;
  bool measure_time = false;
  unsigned jobs = 1;
};

int cmd_eval(const EvalOptions& o) {
  require_file(o.set, "--set");
  if (o.rules.empty() && o.ensembles.empty()) throw ParamError("rules", "give --rules and/or --ensembles");
  if (!o.rules.empty()) require_file(o.rules, "--rules");
  const InstanceSet set = load_set(o.set);
  if (set.instances.empty()) throw ValidationError("--set: no instances");

  struct Item {
    std::string method;
    int rep;
    std::optional<DispatchingRule> rule;
    std::optional<Ensemble> ensemble;
  };
  std::vector<Item> items;
  if (!o.rules.empty()) {
    const auto rules = load_rules(o.rules);
    for (std::size_t k = 0; k < rules.size(); ++k) items.push_back({"DR", static_cast<int>(k + 1), rules[k], {}});
  }
  for (auto& e : load_ensemble_inputs(o.ensembles)) items.push_back({e.method, e.rep, {}, std::move(e.ensemble)});

  std::vector<RunRecord> records(items.size());
  parallel_for(items.size(), o.jobs, [&](std::size_t k) {
    const Item& item = items[k];
    const std::string dir = slug(item.method) + "_rep" + std::to_string(item.rep);
    double total = 0.0;
    const auto start = Clock::now();
    for (const Instance& inst : set.instances) {
      if (item.rule) {
        const ScheduleResult r = run_sgs(inst, *item.rule);
        total += r.twt;
        if (!o.schedule_dir.empty()) {
          write_text(fs::path(o.schedule_dir) / dir / (inst.name + ".csv"), format_schedule_csv(r, inst));
        }
      } else {
        const auto [r, trace] = run_ensemble(inst, *item.ensemble);
        total += r.twt;
        if (!o.schedule_dir.empty()) {
          write_text(fs::path(o.schedule_dir) / dir / (inst.name + ".csv"), format_schedule_csv(r, inst));
        }
        if (!o.trace_dir.empty()) {
          write_text(fs::path(o.trace_dir) / dir / (inst.name + ".csv"),
                     format_trace_csv(trace, item.ensemble->rules.size()));
        }
      }
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    records[k] = RunRecord{item.method, item.rep, total / static_cast<double>(set.instances.size()),
                           o.measure_time ? std::optional<double>(elapsed) : std::nullopt};
  });
  write_text(o.out, format_results_csv(records));
  json config;
  config["set"] = o.set;
  config["rules"] = o.rules;
  config["ensembles"] = o.ensembles;
  config["measure_time"] = o.measure_time;
  write_meta(meta_beside(o.out), "eval", config, json::array());
  std::cout << "evaluated " << records.size() << " methods on " << set.instances.size() << " instances\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::vector<std::string> results;
  std::string out_dir;
  double alpha = 0.05;
};

int cmd_compare(const CompareOptions& o) {
  std::vector<RunRecord> records;
  for (const auto& path : o.results) {
    require_file(path, "--results");
    const auto part = load_results(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  if (records.empty()) throw ValidationError("--results: no records");
  if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw ParamError("alpha", "must lie in (0, 1)");
  const Comparison cmp = compare_methods(records, o.alpha);
  const std::string report = format_report_markdown(cmp, o.alpha);
  std::cout << report;
  if (!o.out_dir.empty()) {
    const fs::path out(o.out_dir);
    write_text(out / "report.md", report);
    write_text(out / "summary.csv", format_summary_csv(cmp));
    write_text(out / "pairwise.csv", format_pairwise_csv(cmp));
    json config;
    config["results"] = o.results;
    config["alpha"] = o.alpha;
    write_meta(out / "meta.json", "compare", config, json::array());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// freq

struct FreqOptions {
  std::string pool;
  std::vector<std::string> ensembles;
  std::string method;
  std::string out;
};

int cmd_freq(const FreqOptions& o) {
  require_file(o.pool, "--pool");
  const auto pool = load_rules(o.pool);
  std::vector<std::vector<std::size_t>> member_lists;
  for (auto& entry : load_ensemble_inputs(o.ensembles)) {
    if (!o.method.empty() && entry.method != o.method) continue;
    if (entry.members.empty()) {
      for (const auto& rule : entry.ensemble.rules) {
        const std::string text = serialize(rule);
        const auto it = std::find_if(pool.begin(), pool.end(), [&](const auto& r) { return serialize(r) == text; });
        if (it == pool.end()) throw ValidationError("ensemble member '" + text + "' is not in the pool");
        entry.members.push_back(static_cast<std::size_t>(it - pool.begin()));
      }
    }
    member_lists.push_back(entry.members);
  }
  const auto counts = frequency(member_lists, pool.size());
  std::string csv = "rule_id,count,rule\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    csv += std::to_string(k) + "," + std::to_string(counts[k]) + ",\"" + serialize(pool[k]) + "\"\n";
  }
  write_text(o.out, csv);
  json config;
  config["pool"] = o.pool;
  config["ensembles"] = o.ensembles;
  config["method"] = o.method;
  write_meta(meta_beside(o.out), "freq", config, json::array());
  std::cout << "counted " << member_lists.size() << " ensembles\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench-time

struct BenchOptions {
  std::string pool;
  std::string set;
  std::string out;
  std::vector<int> sizes{3, 5, 7};
  std::vector<std::string> modes{"EDR_S", "EDR_M"};
  int samples = 5;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchOptions& o) {
  require_file(o.pool, "--pool");
  require_file(o.set, "--set");
  if (o.samples < 1) throw ParamError("samples", "must be >= 1");
  const auto pool = load_rules(o.pool);
  if (pool.empty()) throw ValidationError("--pool: rule file is empty");
  const InstanceSet set = load_set(o.set);
  const auto n = static_cast<double>(set.instances.size());

  std::string csv = "method,size,mean_seconds,mean_twt\n";
  double dr_seconds = 0.0;
  double dr_twt = 0.0;
  for (const auto& rule : pool) {
    const auto start = Clock::now();
    double total = 0.0;
    for (const Instance& inst : set.instances) total += run_sgs(inst, rule).twt;
    dr_seconds += std::chrono::duration<double>(Clock::now() - start).count();
    dr_twt += total / n;
  }
  const auto pool_n = static_cast<double>(pool.size());
  csv += "DR,," + seconds_text(dr_seconds / pool_n) + "," + num(dr_twt / pool_n) + "\n";

  json seeds = json::array();
  SplitMix64 derive(o.seed);
  for (const auto& mode_text : o.modes) {
    const Mode mode = mode_from_string(mode_text);
    for (int size : o.sizes) {
      SECConfig c;
      c.num_ensembles = o.samples;
      c.size = size;
      c.mode = mode;
      c.seed = derive.next();
      seeds.push_back(c.seed);
      const auto candidates = sample_candidates(c, pool.size());
      double secs = 0.0;
      double twt = 0.0;
      for (const auto& members : candidates) {
        const Ensemble ens = make_ensemble(pool, members, mode);
        const auto start = Clock::now();
        double total = 0.0;
        for (const Instance& inst : set.instances) total += run_ensemble(inst, ens).first.twt;
        secs += std::chrono::duration<double>(Clock::now() - start).count();
        twt += total / n;
      }
      const auto k = static_cast<double>(candidates.size());
      csv += std::string(mode == Mode::EDR_S ? "EDR-S" : "EDR-M") + "," + std::to_string(size) + "," +
             seconds_text(secs / k) + "," + num(twt / k) + "\n";
    }
  }
  write_text(o.out, csv);
  std::cout << csv;
  json config;
  config["pool"] = o.pool;
  config["set"] = o.set;
  config["sizes"] = o.sizes;
  config["modes"] = o.modes;
  config["samples"] = o.samples;
  config["seed"] = o.seed;
  write_meta(meta_beside(o.out), "bench-time", config, seeds);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& raw_args) {
  CLI::App app{"Evolve dispatching rules and run simulation-based ensembles of them"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  app.footer("Every command also accepts --config <file.json>; command-line flags override it.");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a train/validation/test corpus");
  gen_cmd->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--train", gen.train, "Training instances")->capture_default_str();
  gen_cmd->add_option("--validation", gen.validation, "Validation instances")->capture_default_str();
  gen_cmd->add_option("--test", gen.test, "Test instances")->capture_default_str();

  EvolveOptions evo;
  auto* evo_cmd = app.add_subcommand("evolve", "Evolve one dispatching rule per GP seed");
  evo_cmd->add_option("--train", evo.train, "Training set file")->required();
  evo_cmd->add_option("--out", evo.out, "Pool rule file to write")->required();
  evo_cmd->add_option("--seeds", evo.seeds, "Explicit GP seeds")->delimiter(',');
  evo_cmd->add_option("--runs", evo.runs, "Number of runs when --seeds is absent")->capture_default_str();
  evo_cmd->add_option("--seed-base", evo.seed_base, "First seed when --seeds is absent")->capture_default_str();
  evo_cmd->add_option("--pop", evo.pop, "Population size")->capture_default_str();
  evo_cmd->add_option("--evals", evo.evals, "Fitness evaluations per run")->capture_default_str();
  evo_cmd->add_option("--max-depth", evo.max_depth, "Maximum tree depth")->capture_default_str();
  evo_cmd->add_option("--mutation-prob", evo.mutation_prob, "Mutation probability")->capture_default_str();
  evo_cmd->add_option("--log-dir", evo.log_dir, "Directory for per-run eval_count,best_fitness logs");
  evo_cmd->add_flag("--append", evo.append, "Keep rules already in the pool file");
  evo_cmd->add_option("--jobs", evo.jobs, "Parallel GP runs")->capture_default_str();

  BuildOptions bld;
  auto* bld_cmd = app.add_subcommand("build-ensembles", "Run SEC over a (p, e, mode) grid on a validation set");
  bld_cmd->add_option("--pool", bld.pool, "Pool rule file")->required();
  bld_cmd->add_option("--set", bld.set, "Validation set file")->required();
  bld_cmd->add_option("--out", bld.out, "Output directory")->required();
  bld_cmd->add_option("--p", bld.p, "Numbers of candidate ensembles")->delimiter(',')->capture_default_str();
  bld_cmd->add_option("--e", bld.e, "Ensemble sizes")->delimiter(',')->capture_default_str();
  bld_cmd->add_option("--mode", bld.modes, "EDR_S and/or EDR_M")->delimiter(',')->capture_default_str();
  bld_cmd->add_option("--reps", bld.reps, "Repetitions per grid point")->capture_default_str();
  bld_cmd->add_option("--seed", bld.seed, "Master seed")->capture_default_str();
  bld_cmd->add_flag("--with-replacement", bld.with_replacement, "Allow repeated rules inside an ensemble");
  bld_cmd->add_option("--jobs", bld.jobs, "Parallel candidate evaluations")->capture_default_str();

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "Evaluate rules and ensembles on a set");
  ev_cmd->add_option("--set", ev.set, "Instance set file")->required();
  ev_cmd->add_option("--rules", ev.rules, "Rule file; one result row per rule");
  ev_cmd->add_option("--ensembles", ev.ensembles, "ensembles.json index or .ens files");
  ev_cmd->add_option("--out", ev.out, "Results CSV")->required();
  ev_cmd->add_option("--schedule-dir", ev.schedule_dir, "Dump every schedule as CSV");
  ev_cmd->add_option("--trace-dir", ev.trace_dir, "Dump ensemble decision traces as CSV");
  ev_cmd->add_flag("--measure-time", ev.measure_time, "Record wall time per method");
  ev_cmd->add_option("--jobs", ev.jobs, "Parallel evaluations")->capture_default_str();

  CompareOptions cmpo;
  auto* cmp_cmd = app.add_subcommand("compare", "Summaries and significance tests over results CSVs");
  cmp_cmd->add_option("--results", cmpo.results, "Results CSV files")->required();
  cmp_cmd->add_option("--out-dir", cmpo.out_dir, "Directory for report.md, summary.csv, pairwise.csv");
  cmp_cmd->add_option("--alpha", cmpo.alpha, "Significance level")->capture_default_str();

  FreqOptions fq;
  auto* fq_cmd = app.add_subcommand("freq", "Count pool rule occurrences across saved ensembles");
  fq_cmd->add_option("--pool", fq.pool, "Pool rule file")->required();
  fq_cmd->add_option("--ensembles", fq.ensembles, "ensembles.json index or .ens files")->required();
  fq_cmd->add_option("--method", fq.method, "Only count entries with this method label");
  fq_cmd->add_option("--out", fq.out, "Output CSV")->required();

  BenchOptions bt;
  auto* bt_cmd = app.add_subcommand("bench-time", "Mean wall time of rules and ensembles per size");
  bt_cmd->add_option("--pool", bt.pool, "Pool rule file")->required();
  bt_cmd->add_option("--set", bt.set, "Instance set file")->required();
  bt_cmd->add_option("--out", bt.out, "Output CSV")->required();
  bt_cmd->add_option("--sizes", bt.sizes, "Ensemble sizes")->delimiter(',')->capture_default_str();
  bt_cmd->add_option("--mode", bt.modes, "Modes to time")->delimiter(',')->capture_default_str();
  bt_cmd->add_option("--samples", bt.samples, "Random ensembles per size")->capture_default_str();
  bt_cmd->add_option("--seed", bt.seed, "Sampling seed")->capture_default_str();

  try {
    std::vector<std::string> args = expand_config(raw_args, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (*gen_cmd) return cmd_gen(gen);
    if (*evo_cmd) return cmd_evolve(evo);
    if (*bld_cmd) return cmd_build(bld);
    if (*ev_cmd) return cmd_eval(ev);
    if (*cmp_cmd) return cmd_compare(cmpo);
    if (*fq_cmd) return cmd_freq(fq);
    if (*bt_cmd) return cmd_bench(bt);
    return 1;
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace edr::cli
