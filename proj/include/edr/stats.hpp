#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace edr {

struct Summary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

/// Throws std::invalid_argument on an empty sample.
Summary aggregate(std::span<const double> values);

/// Midranks (1-based) of `values`, ties sharing the mean rank.
std::vector<double> midranks(std::span<const double> values);

struct MannWhitneyResult {
  double u = 0.0;         // U of the first sample
  double p = 1.0;         // two-sided
  double rank_sum = 0.0;  // rank sum of the first sample in the pooled ranking
  bool exact = false;
};

/// Samples up to this pooled size use the exact conditional permutation
/// distribution; larger ones the normal approximation with tie and continuity
/// correction.
inline constexpr std::size_t kMannWhitneyExactLimit = 20;

MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b);

struct KruskalWallisResult {
  double h = 0.0;
  double p = 1.0;
  std::vector<double> rank_sums;
  bool exact = false;
};

/// Exact enumeration is used while the number of distinct splits into groups
/// stays below this bound; otherwise chi-square with k-1 degrees of freedom.
inline constexpr double kKruskalExactLimit = 1e7;

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// flag_i = p_i < alpha / pvals.size()
std::vector<bool> bonferroni(std::span<const double> pvals, double alpha = 0.05);

/// Occurrences of each pool index across the given member lists.
std::vector<std::size_t> frequency(std::span<const std::vector<std::size_t>> ensembles, std::size_t pool_size);

/// One row of a results CSV `method,rep,score,seconds`. An empty seconds field
/// means the run was not timed.
struct RunRecord {
  std::string method;
  int rep = 1;
  double score = 0.0;
  std::optional<double> seconds;
};

std::vector<RunRecord> parse_results_csv(const std::string& text);
std::vector<RunRecord> load_results(const std::filesystem::path& path);
std::string format_results_csv(std::span<const RunRecord> records);

/// Mean seconds per method, in first-appearance order. Untimed records are
/// skipped; methods without timings are omitted.
std::vector<std::pair<std::string, double>> timing(std::span<const RunRecord> records);

/// Scores grouped by method, in first-appearance order.
std::vector<std::pair<std::string, std::vector<double>>> group_scores(std::span<const RunRecord> records);

struct PairwiseTest {
  std::string a;
  std::string b;
  MannWhitneyResult test;
  bool significant = false;
};

struct Comparison {
  std::vector<std::pair<std::string, Summary>> summaries;
  std::vector<std::pair<std::string, double>> mean_seconds;
  std::optional<KruskalWallisResult> kruskal;  // present with >= 2 eligible methods
  std::vector<PairwiseTest> pairwise;          // Bonferroni-flagged
};

/// Kruskal-Wallis across every method with at least two records, then
/// pairwise Mann-Whitney tests between all such methods.
Comparison compare_methods(std::span<const RunRecord> records, double alpha = 0.05);

/// Markdown tables: min/median/max per method family with one column group
/// per ensemble size (parsed from an `e=<size>` label component), timings,
/// and the test results.
std::string format_report_markdown(const Comparison& cmp, double alpha = 0.05);
std::string format_summary_csv(const Comparison& cmp);
std::string format_pairwise_csv(const Comparison& cmp);

}  // namespace edr
