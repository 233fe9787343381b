#include <doctest.h>

#include <random>

#include "edr/errors.hpp"
#include "edr/stats.hpp"
#include "support.hpp"

using namespace edr;

namespace {

std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n, int levels) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() % static_cast<unsigned>(levels));
  return v;
}

}  // namespace

TEST_CASE("aggregate") {
  auto agg = [](std::vector<double> v) { return aggregate(v); };
  CHECK(agg({3}).min == 3);
  CHECK(agg({3}).median == 3);
  CHECK(agg({3}).max == 3);
  CHECK(agg({4, 1, 3, 2}).min == 1);
  CHECK(agg({4, 1, 3, 2}).median == 2.5);
  CHECK(agg({4, 1, 3, 2}).max == 4);
  CHECK(agg({2, 2, 2}).median == 2);
  CHECK_THROWS_AS(agg({}), std::invalid_argument);
}

TEST_CASE("midranks") {
  const std::vector<double> v{10, 20, 20, 5};
  CHECK(midranks(v) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("Mann-Whitney basics") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  CHECK(mann_whitney(a, a).p >= 0.99);
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{100, 101, 102};
  const auto r = mann_whitney(x, y);
  CHECK(r.u == 0);
  CHECK(r.exact);
  CHECK(r.p == doctest::Approx(0.1));
  const std::vector<double> x4{1, 2, 3, 4};
  const std::vector<double> y4{100, 101, 102, 103};
  CHECK(mann_whitney(x4, y4).p < 0.05);
  const std::vector<double> same{7, 7, 7};
  CHECK(mann_whitney(same, same).p == 1);
}

TEST_CASE("Mann-Whitney matches exhaustive enumeration on small samples") {
  std::mt19937_64 rng(1);
  for (std::size_t n1 = 1; n1 <= 7; ++n1) {
    for (std::size_t n2 = 1; n2 <= 7; ++n2) {
      for (int rep = 0; rep < 6; ++rep) {
        const auto a = random_sample(rng, n1, rep % 2 ? 4 : 1000);
        const auto b = random_sample(rng, n2, rep % 2 ? 4 : 1000);
        const auto r = mann_whitney(a, b);
        CHECK(r.p == doctest::Approx(test::oracle_mann_whitney_p(a, b)).epsilon(1e-9));
        CHECK(r.p == mann_whitney(b, a).p);
      }
    }
  }
}

TEST_CASE("Mann-Whitney normal approximation matches reference values") {
  const std::vector<double> a{3, 7, 7, 12, 15, 15, 18, 21, 22, 22, 25, 30, 31, 33, 40};
  const std::vector<double> b{1, 2, 5, 7, 9, 10, 12, 12, 14, 16, 17, 19, 20, 23};
  const auto r = mann_whitney(a, b);
  CHECK_FALSE(r.exact);
  CHECK(r.u == 154);
  CHECK(r.p == doctest::Approx(0.034062997551816354).epsilon(1e-9));

  std::vector<double> x;
  std::vector<double> y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(0.5 * i);
    y.push_back(0.5 * i + 2.75);
  }
  const auto s = mann_whitney(x, y);
  CHECK(s.u == 21);
  CHECK(s.p == doctest::Approx(0.003549838634913565).epsilon(1e-9));
}

TEST_CASE("rank statistics are shift invariant") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    auto a = random_sample(rng, 5 + k % 20, 50);
    auto b = random_sample(rng, 4 + k % 17, 50);
    auto c = random_sample(rng, 3 + k % 5, 50);
    const auto before = mann_whitney(a, b);
    const auto hb = kruskal_wallis({a, b, c});
    for (auto* v : {&a, &b, &c}) {
      for (auto& x : *v) x += 1000;
    }
    CHECK(mann_whitney(a, b).u == before.u);
    CHECK(mann_whitney(a, b).p == before.p);
    CHECK(kruskal_wallis({a, b, c}).h == doctest::Approx(hb.h));
  }
}

TEST_CASE("Kruskal-Wallis basics") {
  const std::vector<double> g{1, 2, 3};
  const auto r = kruskal_wallis({g, g, g});
  CHECK(r.h == doctest::Approx(0).epsilon(1e-12));
  const auto flat = kruskal_wallis({{5, 5}, {5, 5, 5}});
  CHECK(flat.h == 0);
  CHECK(flat.p == 1);
}

TEST_CASE("Kruskal-Wallis with two groups agrees with Mann-Whitney rank sums") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 30; ++k) {
    const auto a = random_sample(rng, 3 + k % 6, 10);
    const auto b = random_sample(rng, 2 + k % 5, 10);
    CHECK(kruskal_wallis({a, b}).rank_sums[0] == mann_whitney(a, b).rank_sum);
  }
}

TEST_CASE("Kruskal-Wallis matches exhaustive enumeration on tiny groups") {
  std::mt19937_64 rng(7);
  const std::vector<std::vector<std::size_t>> shapes{{2, 2, 2}, {3, 2, 1}, {3, 3, 2}, {4, 2}, {2, 2, 2, 2}, {1, 1, 5}};
  for (const auto& shape : shapes) {
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<std::vector<double>> groups;
      for (std::size_t n : shape) groups.push_back(random_sample(rng, n, rep % 2 ? 3 : 1000));
      const auto r = kruskal_wallis(groups);
      CHECK(r.p == doctest::Approx(test::oracle_kruskal_p(groups)).epsilon(1e-9));
    }
  }
}

TEST_CASE("Kruskal-Wallis chi-square approximation matches reference values") {
  const std::vector<double> g1{11, 14, 9, 20, 18, 13, 15, 17, 10, 16};
  const std::vector<double> g2{21, 25, 19, 22, 30, 24, 18, 27, 26, 23};
  const std::vector<double> g3{12, 14, 15, 11, 9, 8, 13, 16, 10, 14};
  const auto r = kruskal_wallis({g1, g2, g3});
  CHECK_FALSE(r.exact);
  CHECK(r.h == doctest::Approx(19.402966101694904).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(6.11926758753239e-05).epsilon(1e-9));
}

TEST_CASE("Bonferroni") {
  CHECK(bonferroni(std::vector<double>{0.01}) == std::vector<bool>{true});
  CHECK(bonferroni(std::vector<double>{0.03, 0.03}) == std::vector<bool>{false, false});
  CHECK(bonferroni(std::vector<double>{}).empty());
  CHECK(bonferroni(std::vector<double>{0.02, 0.2}, 0.05) == std::vector<bool>{true, false});
}

TEST_CASE("frequency") {
  std::vector<std::vector<std::size_t>> ens(30);
  std::mt19937_64 rng(9);
  for (auto& e : ens) e = {4, rng() % 4, 5 + rng() % 3};
  const auto counts = frequency(ens, 8);
  CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 90);
  CHECK(counts[4] == 30);
  CHECK(frequency({}, 3) == std::vector<std::size_t>{0, 0, 0});
  std::vector<std::vector<std::size_t>> bad{{5}};
  CHECK_THROWS_AS(frequency(bad, 3), std::out_of_range);
}

TEST_CASE("results csv") {
  const std::vector<RunRecord> recs{{"DR", 1, 12.5, std::nullopt}, {"SEC-100/e=3/EDR-M", 2, 0.1, 1.25}};
  const std::string csv = format_results_csv(recs);
  CHECK(csv == "method,rep,score,seconds\nDR,1,12.5,\nSEC-100/e=3/EDR-M,2,0.1,1.250000\n");
  const auto back = parse_results_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].method == "DR");
  CHECK_FALSE(back[0].seconds.has_value());
  CHECK(back[1].score == 0.1);
  CHECK(*back[1].seconds == 1.25);
  CHECK_THROWS_AS(parse_results_csv("method,rep,score,seconds\nDR,x,1,\n"), ParseError);
  CHECK_THROWS_AS(parse_results_csv("a,b\n"), ParseError);
}

TEST_CASE("timing means") {
  const std::vector<RunRecord> one{{"A", 1, 0, 5.0}};
  CHECK(timing(one) == std::vector<std::pair<std::string, double>>{{"A", 5.0}});
  const std::vector<RunRecord> two{{"A", 1, 0, 1.0}, {"A", 2, 0, 3.0}, {"B", 1, 0, std::nullopt}};
  CHECK(timing(two) == std::vector<std::pair<std::string, double>>{{"A", 2.0}});
}

TEST_CASE("comparison and report") {
  std::vector<RunRecord> recs;
  for (int r = 1; r <= 6; ++r) {
    recs.push_back({"DR", r, 20.0 + r, std::nullopt});
    recs.push_back({"SEC-100/e=3/EDR-M", r, 10.0 + r, 0.5});
    recs.push_back({"SEC-100/e=5/EDR-M", r, 11.0 + r, 0.9});
  }
  const Comparison cmp = compare_methods(recs);
  REQUIRE(cmp.summaries.size() == 3);
  CHECK(cmp.summaries[0].second.median == 23.5);
  REQUIRE(cmp.kruskal.has_value());
  CHECK(cmp.kruskal->p < 0.05);
  REQUIRE(cmp.pairwise.size() == 3);
  CHECK(cmp.pairwise[0].significant);
  const std::string md = format_report_markdown(cmp);
  CHECK(md.find("e=3") != std::string::npos);
  CHECK(md.find("e=5") != std::string::npos);
  CHECK(md.find("Kruskal-Wallis") != std::string::npos);
  CHECK(format_summary_csv(cmp).rfind("method,", 0) == 0);
  CHECK(format_pairwise_csv(cmp).rfind("method_a,", 0) == 0);
}
