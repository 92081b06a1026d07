#include <doctest.h>

#include <cmath>
#include <set>

#include "phasor/io.hpp"
#include "phasor/rng.hpp"

using namespace phasor;

TEST_CASE("rng draws are a pure function of the key") {
  Rng a = make_stream("exp", 7, "noise");
  Rng b = make_stream("exp", 7, "noise");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("sibling streams are decorrelated and independent of draw order") {
  Rng parent = make_stream("exp", 7, "root");
  Rng a = parent.child("a");
  Rng b = parent.child("b");
  const std::uint64_t b_first = Rng(b).next_u64();
  // Exhausting stream a does not disturb stream b.
  for (int i = 0; i < 1000; ++i) a.next_u64();
  CHECK(b.next_u64() == b_first);
  CHECK(parent.child("a").next_u64() != parent.child("b").next_u64());
}

TEST_CASE("uniform and normal have sane first moments") {
  Rng rng = make_stream("exp", 1, "moments");
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    const double g = rng.normal();
    sn += g;
    sn2 += g * g;
  }
  CHECK(std::abs(su / n - 0.5) < 0.02);
  CHECK(std::abs(sn / n) < 0.03);
  CHECK(std::abs(sn2 / n - 1.0) < 0.05);
}

TEST_CASE("uniform_index covers the full range") {
  Rng rng = make_stream("exp", 1, "index");
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t k = rng.uniform_index(5);
    CHECK(k < 5);
    seen.insert(k);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("shuffle permutes without loss") {
  Rng rng = make_stream("exp", 1, "shuffle");
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  auto orig = v;
  rng.shuffle(v);
  std::multiset<int> a(v.begin(), v.end()), b(orig.begin(), orig.end());
  CHECK(a == b);
}

TEST_CASE("fmt_double round-trips exactly") {
  for (const double x : {0.1, 1.0 / 3.0, -2.5e-12, 3.141592653589793, 0.0}) {
    CHECK(std::stod(fmt_double(x)) == x);
  }
}

TEST_CASE("config_hash is order-insensitive and value-sensitive") {
  json a = {{"x", 1}, {"y", 2.5}};
  json b = {{"y", 2.5}, {"x", 1}};
  CHECK(config_hash(a) == config_hash(b));
  b["y"] = 2.50001;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("merge_config merges nested objects and overrides scalars") {
  json base = {{"a", 1}, {"nested", {{"x", 1}, {"y", 2}}}};
  json patch = {{"nested", {{"y", 3}}}, {"b", 4}};
  json merged = merge_config(base, patch);
  CHECK(merged["a"] == 1);
  CHECK(merged["b"] == 4);
  CHECK(merged["nested"]["x"] == 1);
  CHECK(merged["nested"]["y"] == 3);
}

TEST_CASE("apply_override parses dotted paths and JSON values") {
  json config = {{"sim", {{"dt", 0.05}, {"steps", 100}}}};
  apply_override(config, "sim.dt=0.1");
  apply_override(config, "sim.steps=250");
  CHECK(config["sim"]["dt"] == 0.1);
  CHECK(config["sim"]["steps"] == 250);
}
