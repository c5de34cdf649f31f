#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <vector>

#include "alkit/common.hpp"
#include "alkit/feature.hpp"
#include "alkit/io.hpp"
#include "alkit/pool.hpp"
#include "alkit/rng.hpp"
#include "testutil.hpp"

using namespace alkit;

TEST_CASE("rng: equal seeds give equal streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("rng: uniform stays in [0,1) and covers both halves") {
  Rng rng(7);
  int low = 0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    if (u < 0.5) ++low;
  }
  CHECK(low > 4500);
  CHECK(low < 5500);
}

TEST_CASE("rng: uniform_int bounds and zero-bound error") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_int(7) < 7);
  CHECK_THROWS_AS(rng.uniform_int(0), ConfigError);
}

TEST_CASE("rng: derived streams are independent of parent consumption") {
  Rng parent(99);
  Rng child_before = parent.derive(5);
  parent.next_u64();
  parent.next_u64();
  Rng child_after = parent.derive(5);
  for (int i = 0; i < 100; ++i)
    CHECK(child_before.next_u64() == child_after.next_u64());

  Rng other = parent.derive(6);
  Rng five = parent.derive(5);
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (other.next_u64() == five.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("rng: sample_without_replacement is a distinct subset") {
  Rng rng(11);
  const auto s = rng.sample_without_replacement(50, 20);
  REQUIRE(s.size() == 20);
  std::set<int> seen(s.begin(), s.end());
  CHECK(seen.size() == 20);
  for (int v : s) {
    CHECK(v >= 0);
    CHECK(v < 50);
  }
  // k > n saturates.
  const auto all = rng.sample_without_replacement(5, 9);
  CHECK(all.size() == 5);
}

TEST_CASE("ceil_fraction: exact products do not round up") {
  CHECK(ceil_fraction(0.01, 62500) == 625);
  CHECK(ceil_fraction(0.01, 100) == 1);
  CHECK(ceil_fraction(0.01, 101) == 2);
  CHECK(ceil_fraction(0.5, 3) == 2);
  CHECK(ceil_fraction(1.0, 7) == 7);
  CHECK(ceil_fraction(0.1, 10) == 1);
  CHECK(ceil_fraction(0.3, 10) == 3);  // 0.3*10 = 2.9999... snaps to 3
}

TEST_CASE("parallel_for: blocks partition the range for any worker count") {
  for (int workers : {1, 2, 3, 8, 17}) {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) hits[i] += 1;
    });
    CHECK(std::all_of(hits.begin(), hits.end(),
                      [](int h) { return h == 1; }));
  }
  // n = 0 never calls the block.
  bool called = false;
  parallel_for(0, 4, [&](std::size_t, std::size_t) { called = true; });
  CHECK_FALSE(called);
}

TEST_CASE("pool: save/load round-trip preserves items") {
  const Pool pool = testutil::make_cluster_pool(30, 10, 3, 50, 6, 0.3, 17);
  const std::string path = testutil::temp_path("pool_roundtrip") + ".jsonl";
  save_pool(pool, path);
  const Pool back = load_pool(path, TaskKind::classification, 50, 3);
  REQUIRE(back.items.size() == pool.items.size());
  for (std::size_t i = 0; i < pool.items.size(); ++i)
    CHECK(back.items[i] == pool.items[i]);
  CHECK(back.original_ids == pool.original_ids);
}

TEST_CASE("pool: split index helpers agree with item tags") {
  const Pool pool = testutil::make_cluster_pool(25, 5, 2, 30, 4, 0.2, 3);
  const auto train = pool.train_indices();
  const auto test = pool.test_indices();
  CHECK(train.size() == 25);
  CHECK(test.size() == 5);
  for (int id : train)
    CHECK(pool.items[static_cast<std::size_t>(id)].split == Split::train);
  for (int id : test)
    CHECK(pool.items[static_cast<std::size_t>(id)].split == Split::test);
}

TEST_CASE("pool: loader rejects out-of-range tokens with the line number") {
  const std::string path = testutil::temp_path("pool_badtoken") + ".jsonl";
  write_text(path,
             "{\"id\": 0, \"tokens\": [1, 99], \"label\": 0, \"split\": "
             "\"train\"}\n");
  CHECK_THROWS_WITH_AS(load_pool(path, TaskKind::classification, 10, 2),
                       doctest::Contains("token out of range at line 1"),
                       ConfigError);
}

TEST_CASE("pool: loader rejects malformed JSON and duplicate ids") {
  const std::string bad = testutil::temp_path("pool_badjson") + ".jsonl";
  write_text(bad, "{\"id\": 0, \"tokens\": [1]\n");
  CHECK_THROWS_WITH_AS(load_pool(bad, TaskKind::classification, 10, 2),
                       doctest::Contains("malformed line at line 1"),
                       ConfigError);

  const std::string dup = testutil::temp_path("pool_dupid") + ".jsonl";
  write_text(dup,
             "{\"id\": 4, \"tokens\": [1], \"label\": 0, \"split\": "
             "\"train\"}\n"
             "{\"id\": 4, \"tokens\": [2], \"label\": 1, \"split\": "
             "\"test\"}\n");
  CHECK_THROWS_WITH_AS(load_pool(dup, TaskKind::classification, 10, 2),
                       doctest::Contains("duplicate id 4"), ConfigError);
}

TEST_CASE("pool: missing file is an io error") {
  CHECK_THROWS_AS(
      load_pool("/nonexistent/alkit.jsonl", TaskKind::classification, 10, 2),
      IoError);
}

TEST_CASE("feature view: token rows pad and truncate") {
  Pool pool;
  pool.task = TaskKind::classification;
  pool.vocab_size = 16;
  pool.num_classes = 2;
  PoolItem a;
  a.id = 0;
  a.tokens = {5, 7};
  a.class_label = 0;
  PoolItem b;
  b.id = 1;
  b.tokens = {5, 7, 9, 1, 2};
  b.class_label = 1;
  b.split = Split::test;
  pool.items = {a, b};
  pool.original_ids = {0, 1};

  const FeatureView view =
      make_feature_view(pool, FeatureKind::token, nullptr, {0, 1}, 4, 0);
  REQUIRE(view.m.rows() == 2);
  REQUIRE(view.m.cols() == 4);
  const std::vector<double> padded(view.m.row(0).begin(), view.m.row(0).end());
  CHECK(padded == std::vector<double>{5, 7, 0, 0});
  const std::vector<double> cut(view.m.row(1).begin(), view.m.row(1).end());
  CHECK(cut == std::vector<double>{5, 7, 9, 1});
}

TEST_CASE("feature view: model-backed kinds demand a model") {
  const Pool pool = testutil::make_cluster_pool(4, 2, 2, 10, 3, 0.0, 1);
  CHECK_THROWS_WITH_AS(
      make_feature_view(pool, FeatureKind::embedding, nullptr, {0, 1}),
      doctest::Contains("requires a model"), ConfigError);
}

TEST_CASE("alfv: write/read round-trips float payloads") {
  Matrix m(3, 2);
  double v = 0.25;
  for (auto& x : m.data()) {
    x = v;
    v += 0.125;
  }
  const std::string path = testutil::temp_path("alfv") + ".alfv";
  write_alfv(m, path);
  const Matrix back = read_alfv(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  CHECK(back == m);  // all values exactly representable as binary32
}

TEST_CASE("alfv: magic is checked") {
  const std::string path = testutil::temp_path("alfv_bad") + ".bin";
  write_text(path, "NOTALFVDATA");
  CHECK_THROWS_WITH_AS(read_alfv(path), doctest::Contains("not an ALFV file"),
                       ConfigError);
}

TEST_CASE("matrix csv: %.17g round-trips doubles bit-exactly") {
  Matrix m(2, 3);
  Rng rng(5);
  for (auto& x : m.data()) x = rng.uniform() * 1e6 - 5e5;
  m.at(0, 0) = 1.0 / 3.0;
  const std::string path = testutil::temp_path("mat") + ".csv";
  write_matrix_csv(m, path);
  const Matrix back = read_matrix_csv(path);
  CHECK(back == m);
}

TEST_CASE("read_matrix_auto dispatches on the magic") {
  Matrix m(2, 2);
  m.at(0, 0) = 1;
  m.at(1, 1) = 2;
  const std::string a = testutil::temp_path("auto") + ".alfv";
  const std::string c = testutil::temp_path("auto") + ".csv";
  write_alfv(m, a);
  write_matrix_csv(m, c);
  CHECK(read_matrix_auto(a) == m);
  CHECK(read_matrix_auto(c) == m);
}

TEST_CASE("output feature view rows must sum to one") {
  const Pool pool = testutil::make_cluster_pool(4, 0, 2, 10, 3, 0.0, 2);
  FeatureView view;
  view.kind = FeatureKind::output;
  view.m = Matrix::from_rows({{0.7, 0.4}, {0.5, 0.5}});
  view.item_ids = {0, 1};
  CHECK_THROWS_WITH_AS(view.validate(&pool),
                       doctest::Contains("row does not sum to 1"),
                       NumericError);
}
