#include "edr/instance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "edr/errors.hpp"
#include "edr/rng.hpp"

namespace edr {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::int64_t to_int(std::string_view tok, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line) + ": expected integer, got '" +
                         std::string(tok) + "'",
                     line);
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

void validate(const Instance& instance) {
  if (instance.machines < 1) throw ValidationError(instance.name + ": machine count must be >= 1");
  if (instance.jobs.empty()) throw ValidationError(instance.name + ": instance has no jobs");
  for (std::size_t j = 0; j < instance.jobs.size(); ++j) {
    const JobSpec& job = instance.jobs[j];
    const std::string where = instance.name + ": job " + std::to_string(j);
    if (job.id != static_cast<int>(j)) throw ValidationError(where + ": id must equal its index");
    if (job.release < 0) throw ValidationError(where + ": negative release");
    if (job.due < job.release) throw ValidationError(where + ": due date before release");
    if (job.weight < 1) throw ValidationError(where + ": weight must be >= 1");
    if (job.proc_times.size() != static_cast<std::size_t>(instance.machines)) {
      throw ValidationError(where + ": expected " + std::to_string(instance.machines) +
                            " processing times");
    }
    for (Time p : job.proc_times) {
      if (p < 1) throw ValidationError(where + ": processing time must be >= 1");
    }
  }
}

std::string_view to_string(SetRole role) {
  switch (role) {
    case SetRole::Train: return "train";
    case SetRole::Validation: return "validation";
    case SetRole::Test: return "test";
  }
  return "train";
}

SetRole role_from_string(std::string_view text) {
  if (text == "train") return SetRole::Train;
  if (text == "validation") return SetRole::Validation;
  if (text == "test") return SetRole::Test;
  throw ParamError("role", "unknown set role '" + std::string(text) + "'");
}

void validate(const GenParams& p) {
  if (p.n < 1) throw ParamError("n", "job count must be >= 1");
  if (p.m < 1) throw ParamError("m", "machine count must be >= 1");
  if (p.proc_lo < 1) throw ParamError("proc_lo", "must be >= 1");
  if (p.proc_hi < p.proc_lo) throw ParamError("proc_hi", "must be >= proc_lo");
  if (p.weight_hi < 1) throw ParamError("weight_hi", "must be >= 1");
  if (!(p.congestion > 0.0) || !std::isfinite(p.congestion)) {
    throw ParamError("congestion", "must be a positive real");
  }
  if (!(p.tf >= 0.0 && p.tf <= 1.0)) throw ParamError("tf", "must lie in [0, 1]");
  if (!(p.rdd >= 0.0 && p.rdd <= 1.0)) throw ParamError("rdd", "must lie in [0, 1]");
}

Instance generate(const GenParams& params, std::string name) {
  validate(params);
  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<Time> proc(params.proc_lo, params.proc_hi);
  std::uniform_int_distribution<std::int64_t> weight(1, params.weight_hi);

  Instance inst;
  inst.name = std::move(name);
  inst.machines = params.m;
  inst.jobs.resize(static_cast<std::size_t>(params.n));
  std::vector<double> mean_proc(inst.jobs.size());
  for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
    JobSpec& job = inst.jobs[j];
    job.id = static_cast<int>(j);
    job.proc_times.resize(static_cast<std::size_t>(params.m));
    for (Time& p : job.proc_times) p = proc(rng);
    job.weight = weight(rng);
    mean_proc[j] = static_cast<double>(std::accumulate(job.proc_times.begin(), job.proc_times.end(), Time{0})) /
                   params.m;
  }

  const double total = std::accumulate(mean_proc.begin(), mean_proc.end(), 0.0);
  const auto horizon = static_cast<Time>(std::floor(params.congestion * total / params.m));
  std::uniform_int_distribution<Time> release(0, horizon);

  const double scale = params.m;
  const double k_lo = std::max(1.0, ((1.0 - params.tf) - params.rdd / 2.0) * scale);
  const double k_hi = std::max(k_lo, ((1.0 - params.tf) + params.rdd / 2.0) * scale);
  std::uniform_real_distribution<double> slack_factor(k_lo, k_hi);

  for (std::size_t j = 0; j < inst.jobs.size(); ++j) {
    JobSpec& job = inst.jobs[j];
    job.release = release(rng);
    const double k = k_hi > k_lo ? slack_factor(rng) : k_lo;
    job.due = job.release + std::max<Time>(0, std::llround(k * mean_proc[j]));
  }
  return inst;
}

std::string to_text(const Instance& instance) {
  std::ostringstream out;
  out << instance.jobs.size() << ' ' << instance.machines << '\n';
  for (const JobSpec& job : instance.jobs) {
    out << job.release << ' ' << job.due << ' ' << job.weight;
    for (Time p : job.proc_times) out << ' ' << p;
    out << '\n';
  }
  return out.str();
}

Instance parse_instance(std::string_view text, std::string name) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty() || split_ws(lines[0]).size() != 2) {
    throw ParseError("line 1: expected header 'n m'", 1);
  }
  const auto header = split_ws(lines[0]);
  const std::int64_t n = to_int(header[0], 1);
  const std::int64_t m = to_int(header[1], 1);
  if (n < 1) throw ParseError("line 1: job count must be >= 1", 1);
  if (m < 1) throw ParseError("line 1: machine count must be >= 1", 1);

  Instance inst;
  inst.name = std::move(name);
  inst.machines = static_cast<int>(m);
  inst.jobs.reserve(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    const std::size_t line_no = static_cast<std::size_t>(j) + 2;
    if (line_no - 1 >= lines.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": missing job line", line_no);
    }
    const auto toks = split_ws(lines[line_no - 1]);
    if (toks.size() != static_cast<std::size_t>(3 + m)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(3 + m) +
                           " fields, got " + std::to_string(toks.size()),
                       line_no);
    }
    JobSpec job;
    job.id = static_cast<int>(j);
    job.release = to_int(toks[0], line_no);
    job.due = to_int(toks[1], line_no);
    job.weight = to_int(toks[2], line_no);
    for (std::int64_t i = 0; i < m; ++i) {
      job.proc_times.push_back(to_int(toks[static_cast<std::size_t>(3 + i)], line_no));
    }
    inst.jobs.push_back(std::move(job));
  }
  for (std::size_t l = static_cast<std::size_t>(n) + 1; l < lines.size(); ++l) {
    if (!split_ws(lines[l]).empty()) {
      throw ParseError("line " + std::to_string(l + 1) + ": unexpected trailing content", l + 1);
    }
  }
  validate(inst);
  return inst;
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  write_file(path, to_text(instance));
}

Instance load_instance(const std::filesystem::path& path) {
  return parse_instance(read_file(path), path.stem().string());
}

GenParams corpus_params(std::uint64_t corpus_seed, std::uint64_t index) {
  SplitMix64 derive(corpus_seed);
  const std::uint64_t base = derive.next();
  SplitMix64 per_instance(base + index);
  GenParams p;
  p.seed = per_instance.next();
  std::mt19937_64 rng(per_instance.next());
  p.n = std::uniform_int_distribution<int>(12, 100)(rng);
  p.m = std::uniform_int_distribution<int>(3, 10)(rng);
  p.proc_lo = 1;
  p.proc_hi = 100;
  p.weight_hi = 10;
  static constexpr double kTf[] = {0.2, 0.4, 0.6, 0.8};
  static constexpr double kRdd[] = {0.2, 0.4, 0.6, 0.8, 1.0};
  p.tf = kTf[std::uniform_int_distribution<int>(0, 3)(rng)];
  p.rdd = kRdd[std::uniform_int_distribution<int>(0, 4)(rng)];
  p.congestion = std::uniform_real_distribution<double>(kCorpusCongestionLo, kCorpusCongestionHi)(rng);
  return p;
}

Corpus make_corpus(std::uint64_t seed, CorpusCounts counts) {
  if (counts.train < 1) throw ParamError("train", "count must be positive");
  if (counts.validation < 1) throw ParamError("validation", "count must be positive");
  if (counts.test < 1) throw ParamError("test", "count must be positive");
  Corpus corpus;
  std::uint64_t index = 0;
  auto fill = [&](InstanceSet& set, int count) {
    for (int k = 0; k < count; ++k, ++index) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03d", std::string(to_string(set.role)).c_str(), k);
      set.instances.push_back(generate(corpus_params(seed, index), name));
    }
  };
  fill(corpus.train, counts.train);
  fill(corpus.validation, counts.validation);
  fill(corpus.test, counts.test);
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  nlohmann::ordered_json manifest;
  for (const InstanceSet* set : {&corpus.train, &corpus.validation, &corpus.test}) {
    nlohmann::ordered_json paths = nlohmann::ordered_json::array();
    for (const Instance& inst : set->instances) {
      const std::string rel = "instances/" + inst.name + ".txt";
      save_instance(inst, dir / rel);
      paths.push_back(rel);
    }
    nlohmann::ordered_json set_json;
    set_json["role"] = to_string(set->role);
    set_json["instances"] = paths;
    write_file(dir / (std::string(to_string(set->role)) + ".json"), set_json.dump(2) + "\n");
    manifest[std::string(to_string(set->role))] = paths;
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

InstanceSet load_set(const std::filesystem::path& set_file) {
  const std::string text = read_file(set_file);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(set_file.string() + ": " + e.what(), 0);
  }
  if (!doc.is_object() || !doc.contains("instances") || !doc["instances"].is_array()) {
    throw ValidationError(set_file.string() + ": expected an object with an 'instances' array");
  }
  InstanceSet set;
  set.role = role_from_string(doc.value("role", std::string("test")));
  const auto base = set_file.parent_path();
  for (const auto& entry : doc["instances"]) {
    const std::filesystem::path p = entry.get<std::string>();
    set.instances.push_back(load_instance(p.is_absolute() ? p : base / p));
  }
  return set;
}

}  // namespace edr
