#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "edr/errors.hpp"
#include "edr/instance.hpp"
#include "support.hpp"

using namespace edr;

TEST_CASE("generate yields a valid instance of the requested shape") {
  GenParams p;
  p.seed = 1;
  p.n = 12;
  p.m = 3;
  const Instance inst = generate(p);
  CHECK(inst.job_count() == 12);
  CHECK(inst.machines == 3);
  CHECK_NOTHROW(validate(inst));
  for (const auto& j : inst.jobs) {
    CHECK(j.proc_times.size() == 3);
    for (Time v : j.proc_times) CHECK((v >= 1 && v <= 100));
    CHECK((j.weight >= 1 && j.weight <= 10));
    CHECK(j.due >= j.release);
  }
}

TEST_CASE("every generated instance satisfies the invariants") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 1000; ++k) {
    GenParams p;
    p.seed = rng();
    p.n = 1 + static_cast<int>(rng() % 40);
    p.m = 1 + static_cast<int>(rng() % 8);
    p.proc_lo = 1 + static_cast<Time>(rng() % 10);
    p.proc_hi = p.proc_lo + static_cast<Time>(rng() % 50);
    p.weight_hi = 1 + static_cast<std::int64_t>(rng() % 10);
    p.congestion = 0.01 + static_cast<double>(rng() % 200) / 100.0;
    p.tf = static_cast<double>(rng() % 11) / 10.0;
    p.rdd = static_cast<double>(rng() % 11) / 10.0;
    const Instance inst = generate(p);
    REQUIRE_NOTHROW(validate(inst));
    REQUIRE(inst.job_count() == p.n);
    for (const auto& j : inst.jobs) {
      for (Time v : j.proc_times) REQUIRE((v >= p.proc_lo && v <= p.proc_hi));
      REQUIRE((j.weight >= 1 && j.weight <= p.weight_hi));
    }
  }
}

TEST_CASE("tf=0 and rdd=0 make due-date slack proportional to mean processing time") {
  GenParams p;
  p.seed = 5;
  p.n = 30;
  p.m = 4;
  p.tf = 0.0;
  p.rdd = 0.0;
  const Instance inst = generate(p);
  for (const auto& j : inst.jobs) {
    double mean = 0;
    for (Time v : j.proc_times) mean += static_cast<double>(v);
    mean /= static_cast<double>(j.proc_times.size());
    CHECK(j.due - j.release == std::llround(4.0 * mean));
  }
}

TEST_CASE("generation is deterministic per seed") {
  GenParams p;
  p.seed = 42;
  p.n = 20;
  CHECK(to_text(generate(p)) == to_text(generate(p)));
  GenParams q = p;
  q.seed = 43;
  CHECK(to_text(generate(p)) != to_text(generate(q)));
}

TEST_CASE("invalid generator parameters name the field") {
  auto field_of = [](GenParams p) {
    try {
      validate(p);
    } catch (const ParamError& e) {
      return e.field();
    }
    return std::string();
  };
  GenParams p;
  p.proc_lo = 0;
  CHECK(field_of(p) == "proc_lo");
  p = {};
  p.proc_hi = 0;
  CHECK(field_of(p) == "proc_hi");
  p = {};
  p.tf = 1.5;
  CHECK(field_of(p) == "tf");
  p = {};
  p.rdd = -0.1;
  CHECK(field_of(p) == "rdd");
  p = {};
  p.congestion = 0;
  CHECK(field_of(p) == "congestion");
  p = {};
  p.n = 0;
  CHECK(field_of(p) == "n");
  CHECK_THROWS_AS(generate(p), ParamError);
}

TEST_CASE("text round trip is the identity") {
  const Corpus corpus = make_corpus(3, {10, 10, 10});
  for (const auto* set : {&corpus.train, &corpus.validation, &corpus.test}) {
    for (const Instance& inst : set->instances) {
      CHECK(parse_instance(to_text(inst), inst.name) == inst);
    }
  }
}

TEST_CASE("save and load round trip through a file") {
  const auto dir = test::scratch_dir("instance_io");
  GenParams p;
  p.seed = 8;
  Instance inst = generate(p, "sample");
  save_instance(inst, dir / "sample.txt");
  CHECK(load_instance(dir / "sample.txt") == inst);
}

TEST_CASE("malformed instance files") {
  SUBCASE("due before release is a validation error") {
    CHECK_THROWS_AS(parse_instance("1 1\n5 3 1 4\n", "x"), ValidationError);
  }
  SUBCASE("short proc row is a parse error with its line number") {
    try {
      parse_instance("2 3\n0 5 1 1 2 3\n0 5 1 1 2\n", "x");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.location() == 3);
    }
  }
  SUBCASE("non-numeric token") { CHECK_THROWS_AS(parse_instance("1 1\n0 a 1 4\n", "x"), ParseError); }
  SUBCASE("missing rows") { CHECK_THROWS_AS(parse_instance("2 1\n0 5 1 4\n", "x"), ParseError); }
  SUBCASE("zero processing time") { CHECK_THROWS_AS(parse_instance("1 1\n0 5 1 0\n", "x"), ValidationError); }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_instance("/nonexistent/x.txt"), FileError); }
}

TEST_CASE("default corpus has 60/60/60 instances") {
  const Corpus c = make_corpus(1);
  CHECK(c.train.instances.size() == 60);
  CHECK(c.validation.instances.size() == 60);
  CHECK(c.test.instances.size() == 60);
}

TEST_CASE("corpus of one per role") {
  const Corpus c = make_corpus(2, {1, 1, 1});
  CHECK(c.train.instances.size() == 1);
  CHECK(c.validation.instances.size() == 1);
  CHECK(c.test.instances.size() == 1);
  CHECK(c.train.role == SetRole::Train);
  CHECK(c.validation.role == SetRole::Validation);
  CHECK(c.test.role == SetRole::Test);
  CHECK(c.train.instances[0].name != c.test.instances[0].name);
}

TEST_CASE("corpus instances have varied parameters and distinct seeds") {
  std::set<std::uint64_t> seeds;
  std::set<int> ns;
  std::set<double> tfs;
  for (std::uint64_t k = 0; k < 60; ++k) {
    const GenParams p = corpus_params(11, k);
    seeds.insert(p.seed);
    ns.insert(p.n);
    tfs.insert(p.tf);
    CHECK_NOTHROW(validate(p));
  }
  CHECK(seeds.size() == 60);
  CHECK(ns.size() > 5);
  CHECK(tfs.size() > 1);
}

TEST_CASE("corpus save and load") {
  const auto dir = test::scratch_dir("corpus_io");
  const Corpus c = make_corpus(4, {3, 2, 2});
  save_corpus(c, dir);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  const InstanceSet train = load_set(dir / "train.json");
  const InstanceSet test = load_set(dir / "test.json");
  CHECK(train.role == SetRole::Train);
  CHECK(test.role == SetRole::Test);
  REQUIRE(train.instances.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(train.instances[k] == c.train.instances[k]);
  CHECK(make_corpus(4, {3, 2, 2}).test.instances == c.test.instances);
}
