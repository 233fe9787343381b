#include "edr/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "edr/errors.hpp"

namespace edr {

namespace {

// Midranks doubled so that every rank is an integer.
std::vector<long long> doubled_midranks(std::span<const double> values) {
  const auto r = midranks(values);
  std::vector<long long> out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = std::llround(2.0 * r[i]);
  return out;
}

double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

double exact_mann_whitney_p(const std::vector<long long>& ranks2, std::size_t n1, long long observed2) {
  const std::size_t n = ranks2.size();
  const long long total = std::accumulate(ranks2.begin(), ranks2.end(), 0LL);
  // ways[c][s]: subsets of size c with doubled rank sum s.
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(ranks2[i]);
    for (std::size_t c = std::min(n1, i + 1); c >= 1; --c) {
      for (std::size_t s = static_cast<std::size_t>(total); s >= r; --s) ways[c][s] += ways[c - 1][s - r];
    }
  }
  // Doubled expected rank sum is n1 * (n + 1); compare doubled deviations.
  const long long center = static_cast<long long>(n1) * static_cast<long long>(n + 1);
  const long long obs_dev = std::llabs(observed2 - center);
  double hit = 0.0;
  double all = 0.0;
  for (std::size_t s = 0; s <= static_cast<std::size_t>(total); ++s) {
    const double w = ways[n1][s];
    if (w == 0.0) continue;
    all += w;
    if (std::llabs(static_cast<long long>(s) - center) >= obs_dev) hit += w;
  }
  return std::min(1.0, hit / all);
}

// Distinct ways to split the pooled sample into groups of the given sizes,
// counting groups of equal size as interchangeable.
double partition_count(const std::vector<std::size_t>& sizes) {
  double out = 1.0;
  std::size_t placed = 0;
  for (std::size_t s : sizes) {
    for (std::size_t k = 1; k <= s; ++k) {
      ++placed;
      out *= static_cast<double>(placed) / static_cast<double>(k);
    }
  }
  std::vector<std::size_t> sorted = sizes;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    for (std::size_t k = 2; k <= j - i; ++k) out /= static_cast<double>(k);
    i = j;
  }
  return out;
}

// Counts splits whose sum of squared doubled rank sums over group size
// reaches the observed value. Equal-size groups are filled in order of their
// first member, so every split is visited once.
class KruskalEnumerator {
 public:
  KruskalEnumerator(std::vector<long long> ranks2, std::vector<std::size_t> sizes, double threshold)
      : ranks2_(std::move(ranks2)), size_(std::move(sizes)), threshold_(threshold) {
    std::sort(size_.begin(), size_.end());
    capacity_ = size_;
    sums_.assign(size_.size(), 0);
  }

  std::pair<double, double> run() {
    visit(0);
    return {hits_, total_};
  }

 private:
  void visit(std::size_t item) {
    if (item == ranks2_.size()) {
      double t = 0.0;
      for (std::size_t g = 0; g < sums_.size(); ++g) {
        const auto s = static_cast<double>(sums_[g]);
        t += s * s / static_cast<double>(size_[g]);
      }
      total_ += 1.0;
      if (t >= threshold_) hits_ += 1.0;
      return;
    }
    for (std::size_t g = 0; g < capacity_.size(); ++g) {
      if (capacity_[g] == 0) continue;
      const bool empty = capacity_[g] == size_[g];
      if (empty && g > 0 && size_[g - 1] == size_[g] && capacity_[g - 1] == size_[g - 1]) continue;
      --capacity_[g];
      sums_[g] += ranks2_[item];
      visit(item + 1);
      sums_[g] -= ranks2_[item];
      ++capacity_[g];
    }
  }

  std::vector<long long> ranks2_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> capacity_;
  std::vector<long long> sums_;
  double threshold_;
  double hits_ = 0.0;
  double total_ = 0.0;
};

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pval(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, p < 1e-4 ? "%.2e" : "%.4f", p);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Summary aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const double median = n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  return {v.front(), median, v.back()};
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney: both samples must be non-empty");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const auto n1 = static_cast<double>(a.size());
  const auto n2 = static_cast<double>(b.size());
  const double n = n1 + n2;

  MannWhitneyResult res;
  res.rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  res.u = res.rank_sum - n1 * (n1 + 1.0) / 2.0;

  const double ties = tie_term(pooled);
  if (ties == n * n * n - n) {  // every value identical
    res.p = 1.0;
    return res;
  }
  if (pooled.size() <= kMannWhitneyExactLimit) {
    const auto ranks2 = doubled_midranks(pooled);
    const long long obs2 = std::accumulate(ranks2.begin(), ranks2.begin() + static_cast<std::ptrdiff_t>(a.size()), 0LL);
    res.p = exact_mann_whitney_p(ranks2, a.size(), obs2);
    res.exact = true;
    return res;
  }
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  const double dev = std::max(std::abs(res.u - mean) - 0.5, 0.0);
  res.p = var > 0.0 ? std::min(1.0, std::erfc(dev / std::sqrt(var) / std::sqrt(2.0))) : 1.0;
  return res;
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need >= 2 groups");
  std::vector<double> pooled;
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("kruskal_wallis: every group must be non-empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
    sizes.push_back(g.size());
  }
  const auto ranks = midranks(pooled);
  const auto n = static_cast<double>(pooled.size());

  KruskalWallisResult res;
  double t = 0.0;
  std::size_t offset = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < sizes[g]; ++i) sum += ranks[offset + i];
    offset += sizes[g];
    res.rank_sums.push_back(sum);
    t += sum * sum / static_cast<double>(sizes[g]);
  }
  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  if (correction <= 0.0) {
    res.h = 0.0;
    res.p = 1.0;
    return res;
  }
  res.h = (12.0 / (n * (n + 1.0)) * t - 3.0 * (n + 1.0)) / correction;
  res.h = std::max(res.h, 0.0);

  if (partition_count(sizes) <= kKruskalExactLimit) {
    const auto ranks2 = doubled_midranks(pooled);
    double observed = 0.0;
    offset = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      long long s = 0;
      for (std::size_t i = 0; i < sizes[g]; ++i) s += ranks2[offset + i];
      offset += sizes[g];
      observed += static_cast<double>(s) * static_cast<double>(s) / static_cast<double>(sizes[g]);
    }
    const auto [hits, total] = KruskalEnumerator(ranks2, sizes, observed * (1.0 - 1e-12)).run();
    res.p = hits / total;
    res.exact = true;
    return res;
  }
  res.p = boost::math::gamma_q(static_cast<double>(groups.size() - 1) / 2.0, res.h / 2.0);
  return res;
}

std::vector<bool> bonferroni(std::span<const double> pvals, double alpha) {
  std::vector<bool> flags;
  flags.reserve(pvals.size());
  const double threshold = pvals.empty() ? alpha : alpha / static_cast<double>(pvals.size());
  for (double p : pvals) flags.push_back(p < threshold);
  return flags;
}

std::vector<std::size_t> frequency(std::span<const std::vector<std::size_t>> ensembles, std::size_t pool_size) {
  std::vector<std::size_t> counts(pool_size, 0);
  for (const auto& members : ensembles) {
    for (std::size_t id : members) {
      if (id >= pool_size) throw std::out_of_range("frequency: member id " + std::to_string(id) + " >= pool size");
      ++counts[id];
    }
  }
  return counts;
}

std::vector<RunRecord> parse_results_csv(const std::string& text) {
  std::vector<RunRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("method,", 0) == 0) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields 'method,rep,score,seconds'", line_no);
    }
    RunRecord r;
    r.method = f[0];
    try {
      std::size_t used = 0;
      r.rep = std::stoi(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("rep");
      r.score = std::stod(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("score");
      if (!f[3].empty()) {
        r.seconds = std::stod(f[3], &used);
        if (used != f[3].size()) throw std::invalid_argument("seconds");
      }
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed numeric field", line_no);
    }
    if (r.score < 0.0 || (r.seconds && *r.seconds < 0.0)) {
      throw ValidationError("line " + std::to_string(line_no) + ": score and seconds must be non-negative");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RunRecord> load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_results_csv(ss.str());
}

std::string format_results_csv(std::span<const RunRecord> records) {
  std::string out = "method,rep,score,seconds\n";
  for (const auto& r : records) {
    out += r.method + "," + std::to_string(r.rep) + "," + num(r.score) + "," +
           (r.seconds ? fixed(*r.seconds, 6) : std::string()) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, double>> timing(std::span<const RunRecord> records) {
  std::vector<std::pair<std::string, double>> out;
  std::vector<std::size_t> counts;
  for (const auto& r : records) {
    if (!r.seconds) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == r.method; });
    if (it == out.end()) {
      out.emplace_back(r.method, 0.0);
      counts.push_back(0);
      it = out.end() - 1;
    }
    it->second += *r.seconds;
    ++counts[static_cast<std::size_t>(it - out.begin())];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].second /= static_cast<double>(counts[i]);
  return out;
}

std::vector<std::pair<std::string, std::vector<double>>> group_scores(std::span<const RunRecord> records) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == r.method; });
    if (it == out.end()) {
      out.emplace_back(r.method, std::vector<double>{});
      it = out.end() - 1;
    }
    it->second.push_back(r.score);
  }
  return out;
}

Comparison compare_methods(std::span<const RunRecord> records, double alpha) {
  Comparison cmp;
  const auto groups = group_scores(records);
  std::vector<std::vector<double>> eligible;
  std::vector<std::string> names;
  for (const auto& [method, scores] : groups) {
    cmp.summaries.emplace_back(method, aggregate(scores));
    if (scores.size() >= 2) {
      eligible.push_back(scores);
      names.push_back(method);
    }
  }
  cmp.mean_seconds = timing(records);
  if (eligible.size() >= 2) {
    cmp.kruskal = kruskal_wallis(eligible);
    std::vector<double> ps;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      for (std::size_t j = i + 1; j < eligible.size(); ++j) {
        PairwiseTest t{names[i], names[j], mann_whitney(eligible[i], eligible[j]), false};
        ps.push_back(t.test.p);
        cmp.pairwise.push_back(std::move(t));
      }
    }
    const auto flags = bonferroni(ps, alpha);
    for (std::size_t k = 0; k < flags.size(); ++k) cmp.pairwise[k].significant = flags[k];
  }
  return cmp;
}

namespace {

struct LabelParts {
  std::string family;
  std::string size;  // empty when the label has no e=<size> component
};

LabelParts split_label(const std::string& method) {
  LabelParts parts;
  for (const auto& piece : split(method, '/')) {
    if (piece.rfind("e=", 0) == 0) {
      parts.size = piece.substr(2);
    } else {
      parts.family += parts.family.empty() ? piece : "/" + piece;
    }
  }
  return parts;
}

}  // namespace

std::string format_report_markdown(const Comparison& cmp, double alpha) {
  std::vector<std::string> families;
  std::vector<std::string> sizes;
  std::map<std::pair<std::string, std::string>, Summary> cells;
  for (const auto& [method, s] : cmp.summaries) {
    const auto parts = split_label(method);
    if (std::find(families.begin(), families.end(), parts.family) == families.end()) families.push_back(parts.family);
    if (std::find(sizes.begin(), sizes.end(), parts.size) == sizes.end()) sizes.push_back(parts.size);
    cells[{parts.family, parts.size}] = s;
  }
  std::stable_sort(sizes.begin(), sizes.end(), [](const std::string& x, const std::string& y) {
    if (x.empty() != y.empty()) return x.empty();
    if (x.size() != y.size()) return x.size() < y.size();
    return x < y;
  });

  std::ostringstream out;
  out << "## Test scores (min / median / max)\n\n| Method |";
  for (const auto& s : sizes) {
    const std::string head = s.empty() ? "" : " e=" + s;
    out << " min" << head << " | med" << head << " | max" << head << " |";
  }
  out << "\n|---|";
  for (std::size_t i = 0; i < sizes.size(); ++i) out << "---|---|---|";
  out << "\n";
  for (const auto& fam : families) {
    out << "| " << fam << " |";
    for (const auto& s : sizes) {
      const auto it = cells.find({fam, s});
      if (it == cells.end()) {
        out << " | | |";
      } else {
        out << ' ' << fixed(it->second.min, 2) << " | " << fixed(it->second.median, 2) << " | "
            << fixed(it->second.max, 2) << " |";
      }
    }
    out << "\n";
  }

  if (!cmp.mean_seconds.empty()) {
    out << "\n## Mean execution time (s)\n\n| Method | seconds |\n|---|---|\n";
    for (const auto& [m, sec] : cmp.mean_seconds) out << "| " << m << " | " << fixed(sec, 4) << " |\n";
  }

  if (cmp.kruskal) {
    out << "\n## Kruskal-Wallis\n\nH = " << fixed(cmp.kruskal->h, 4) << ", p = " << pval(cmp.kruskal->p)
        << (cmp.kruskal->p < alpha ? " (significant)" : " (not significant)") << "\n";
    out << "\n## Pairwise Mann-Whitney (Bonferroni, alpha = " << alpha << ")\n\n"
        << "| A | B | U | p | significant |\n|---|---|---|---|---|\n";
    for (const auto& t : cmp.pairwise) {
      out << "| " << t.a << " | " << t.b << " | " << fixed(t.test.u, 1) << " | " << pval(t.test.p) << " | "
          << (t.significant ? "yes" : "no") << " |\n";
    }
  }
  return out.str();
}

std::string format_summary_csv(const Comparison& cmp) {
  std::string out = "method,min,median,max,mean_seconds\n";
  for (const auto& [method, s] : cmp.summaries) {
    const auto it = std::find_if(cmp.mean_seconds.begin(), cmp.mean_seconds.end(),
                                 [&](const auto& p) { return p.first == method; });
    out += method + "," + num(s.min) + "," + num(s.median) + "," + num(s.max) + "," +
           (it == cmp.mean_seconds.end() ? std::string() : fixed(it->second, 6)) + "\n";
  }
  return out;
}

std::string format_pairwise_csv(const Comparison& cmp) {
  std::string out = "method_a,method_b,U,p,significant\n";
  for (const auto& t : cmp.pairwise) {
    out += t.a + "," + t.b + "," + num(t.test.u) + "," + num(t.test.p) + "," + (t.significant ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace edr
