#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace edr {

/// Integer time unit used for releases, due dates and processing times.
using Time = std::int64_t;

struct JobSpec {
  int id = 0;
  Time release = 0;
  Time due = 0;
  std::int64_t weight = 1;
  std::vector<Time> proc_times;  // one entry per machine

  bool operator==(const JobSpec&) const = default;
};

struct Instance {
  std::string name;
  int machines = 1;
  std::vector<JobSpec> jobs;

  int job_count() const { return static_cast<int>(jobs.size()); }
  bool operator==(const Instance&) const = default;
};

/// Throws ValidationError if any JobSpec/Instance invariant is broken.
void validate(const Instance& instance);

enum class SetRole { Train, Validation, Test };

std::string_view to_string(SetRole role);
SetRole role_from_string(std::string_view text);

struct InstanceSet {
  SetRole role = SetRole::Train;
  std::vector<Instance> instances;
};

/// Parameters of the random instance generator.
///
/// Releases are spread over [0, congestion * sum(mean_proc) / m]. Due dates
/// follow the tardiness-factor / due-date-range construction scaled by the
/// machine count.
struct GenParams {
  std::uint64_t seed = 1;
  int n = 12;
  int m = 3;
  Time proc_lo = 1;
  Time proc_hi = 100;
  std::int64_t weight_hi = 10;
  double congestion = 1.0;
  double tf = 0.5;
  double rdd = 0.5;
};

/// Throws ParamError naming the first invalid field.
void validate(const GenParams& params);

Instance generate(const GenParams& params, std::string name = "generated");

// Text format: line 1 `n m`, then one line per job
// `release due weight p_1 ... p_m`.
std::string to_text(const Instance& instance);
Instance parse_instance(std::string_view text, std::string name);
void save_instance(const Instance& instance, const std::filesystem::path& path);
/// The instance name is taken from the file stem.
Instance load_instance(const std::filesystem::path& path);

/// Range of the release-spread factor sampled per corpus instance.
inline constexpr double kCorpusCongestionLo = 0.05;
inline constexpr double kCorpusCongestionHi = 0.3;

struct CorpusCounts {
  int train = 60;
  int validation = 60;
  int test = 60;
};

struct Corpus {
  InstanceSet train{SetRole::Train, {}};
  InstanceSet validation{SetRole::Validation, {}};
  InstanceSet test{SetRole::Test, {}};
};

/// Generator parameters for the `index`-th instance of a corpus. Each index
/// gets its own derived seed.
GenParams corpus_params(std::uint64_t corpus_seed, std::uint64_t index);

Corpus make_corpus(std::uint64_t seed, CorpusCounts counts = {});

/// Writes `<dir>/instances/<name>.txt`, one set file per role
/// (`<dir>/<role>.json`) and `<dir>/manifest.json`. Paths inside the JSON
/// files are relative to `dir`.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Loads a set file written by save_corpus.
InstanceSet load_set(const std::filesystem::path& set_file);

}  // namespace edr
