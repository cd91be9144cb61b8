#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <unistd.h>

#include "mtsq/baselines.hpp"
#include "mtsq/bench.hpp"
#include "oracles.hpp"

using namespace mtsq;
using namespace mtsq::bench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mtsq_test_bench_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_values(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size() || a.channels != b.channels) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a.items()[i];
    const auto& y = b.items()[i];
    if (x.id() != y.id() || x.length() != y.length()) return false;
    for (std::size_t c = 0; c < a.channels; ++c) {
      if (!std::equal(x.channel(c).begin(), x.channel(c).end(), y.channel(c).begin())) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("synthetic generator") {
  const auto a = generate_synthetic(6, 3, 100, 42);
  const auto b = generate_synthetic(6, 3, 100, 42);
  const auto c = generate_synthetic(6, 3, 100, 43);
  CHECK(a.size() == 6);
  CHECK(a.channels == 3);
  CHECK(same_values(a, b));
  CHECK_FALSE(same_values(a, c));
  for (const auto& s : a.items()) {
    CHECK(s.length() == 100);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      CHECK(s.channel(ch)[0] >= 0.0);
      CHECK(s.channel(ch)[0] <= 100.0);
    }
  }

  // pinned zero steps give constant channels; znorm must cope
  const auto flat = generate_synthetic(3, 2, 50, 1, SyntheticOptions{.step_sigma = 0.0});
  for (const auto& s : flat.items()) {
    for (std::size_t ch = 0; ch < 2; ++ch) {
      const auto row = s.channel(ch);
      CHECK(std::all_of(row.begin(), row.end(), [&](double v) { return v == row[0]; }));
    }
  }
  WorkloadSpec spec{.qlen = 10, .count = 3, .noise_factor = 0.0, .seed = 2, .mode = Mode::znorm};
  const auto wl = generate_workload(flat, spec);
  for (const auto& q : wl.queries) {
    const auto r = brute_force_knn(flat.items(), q);
    REQUIRE(r.size() == 1);
    CHECK(r[0].distance == 0.0);
  }

  const auto scaled = generate_synthetic(2, 2, 40, 5, SyntheticOptions{.step_sigma = 1.0, .channel_scale = {1.0, 10.0}});
  const auto base = generate_synthetic(2, 2, 40, 5, SyntheticOptions{.step_sigma = 1.0});
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t t = 0; t < 40; ++t) {
      CHECK(scaled.items()[i].channel(0)[t] == base.items()[i].channel(0)[t]);
      CHECK(scaled.items()[i].channel(1)[t] == doctest::Approx(10.0 * base.items()[i].channel(1)[t]));
    }
  }
  CHECK_THROWS_AS(generate_synthetic(0, 1, 10, 1), InvalidInput);
}

TEST_CASE("dataset construction") {
  CHECK_THROWS_AS(make_dataset("x", {}), InvalidInput);
  SeriesCollection dup;
  dup.emplace_back(1, 1, 5, std::vector<double>(5, 0.0));
  dup.emplace_back(1, 1, 5, std::vector<double>(5, 0.0));
  CHECK_THROWS_AS(make_dataset("x", dup), InvalidInput);
  SeriesCollection mixed;
  mixed.emplace_back(1, 1, 5, std::vector<double>(5, 0.0));
  mixed.emplace_back(2, 2, 5, std::vector<double>(10, 0.0));
  CHECK_THROWS_AS(make_dataset("x", mixed), InvalidInput);

  const auto d = generate_synthetic(5, 2, 30, 3);
  CHECK(d.subsequence_count(10) == 5 * 21);
  const auto rest = without_series(d, {1, 3});
  REQUIRE(rest.size() == 3);
  CHECK(rest.items()[0].id() == 0);
  CHECK(rest.items()[1].id() == 2);
  CHECK(rest.items()[2].id() == 4);
}

TEST_CASE("workload generation") {
  const auto d = generate_synthetic(10, 4, 200, 8);
  SUBCASE("noise free queries are dataset subsequences") {
    const WorkloadSpec spec{.qlen = 32, .count = 20, .noise_factor = 0.0, .seed = 4, .channels_per_query = 2};
    const auto wl = generate_workload(d, spec);
    REQUIRE(wl.queries.size() == 20);
    REQUIRE(wl.sources.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
      const auto& q = wl.queries[i];
      CHECK(q.channel_ids.size() == 2);
      CHECK(std::is_sorted(q.channel_ids.begin(), q.channel_ids.end()));
      const auto& src = wl.sources[i];
      const auto& s = d.items()[src.series_id];
      CHECK(src.offset + 32 <= s.length());
      CHECK(oracle::window_sq_dist(s, src.offset, q.values, q.channel_ids, Mode::raw) == 0.0);
    }
    const auto again = generate_workload(d, spec);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(again.queries[i].values.values == wl.queries[i].values.values);
      CHECK(again.sources[i] == wl.sources[i]);
    }
  }
  SUBCASE("noise scales with the channel deviation") {
    const WorkloadSpec spec{.qlen = 64, .count = 30, .noise_factor = 0.1, .seed = 9};
    const auto wl = generate_workload(d, spec);
    for (std::size_t i = 0; i < wl.queries.size(); ++i) {
      const auto& q = wl.queries[i];
      const auto& s = d.items()[wl.sources[i].series_id];
      for (std::size_t r = 0; r < q.channel_ids.size(); ++r) {
        const auto clean = oracle::slice(s.channel(q.channel_ids[r]), wl.sources[i].offset, 64);
        double mu = 0.0, var = 0.0;
        for (double x : clean) mu += x / 64;
        for (double x : clean) var += (x - mu) * (x - mu) / 64;
        const double sd = std::sqrt(var);
        const double err = std::sqrt(oracle::sq_dist(clean, oracle::slice(q.values.channel(r), 0, 64)) / 64);
        // noise rms over 64 samples stays well inside [0.03, 0.3] of sd
        CHECK(err <= 0.3 * sd + 1e-12);
        CHECK(err >= 0.03 * sd);
      }
    }
  }
  SUBCASE("random channel counts cover the range") {
    const WorkloadSpec spec{.qlen = 16, .count = 200, .seed = 1, .random_channel_count = true};
    std::set<std::size_t> sizes;
    for (const auto& q : generate_workload(d, spec).queries) sizes.insert(q.channel_ids.size());
    CHECK(sizes == std::set<std::size_t>{1, 2, 3, 4});
  }
  SUBCASE("out of dataset sources are disjoint from the indexed series") {
    const WorkloadSpec spec{.qlen = 32, .count = 50, .out_of_dataset = true, .holdout_series = 3, .seed = 5};
    const auto wl = generate_workload(d, spec);
    REQUIRE(wl.held_out_ids.size() == 3);
    const std::set<std::uint64_t> held(wl.held_out_ids.begin(), wl.held_out_ids.end());
    for (const auto& src : wl.sources) CHECK(held.count(src.series_id) == 1);
    const auto indexed = without_series(d, wl.held_out_ids);
    CHECK(indexed.size() == 7);
    for (const auto& s : indexed.items()) CHECK(held.count(s.id()) == 0);
    CHECK(generate_workload(d, WorkloadSpec{.qlen = 32, .out_of_dataset = true}).held_out_ids.size() == 1);
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(generate_workload(d, WorkloadSpec{.qlen = 201}), WorkloadError);
    CHECK_THROWS_AS(generate_workload(d, WorkloadSpec{.qlen = 0}), WorkloadError);
    CHECK_THROWS_AS(generate_workload(d, WorkloadSpec{.qlen = 8, .k = 0}), WorkloadError);
    CHECK_THROWS_AS(generate_workload(d, WorkloadSpec{.qlen = 8, .noise_factor = -1}), WorkloadError);
    CHECK_THROWS_AS(generate_workload(d, WorkloadSpec{.qlen = 8, .channels_per_query = 5}), WorkloadError);
    CHECK_THROWS_AS(generate_workload(d, WorkloadSpec{.qlen = 8, .out_of_dataset = true, .holdout_series = 10}),
                    WorkloadError);
  }
}

TEST_CASE("relative contrast") {
  // identical subsequences everywhere: every distance equal
  SeriesCollection same;
  same.emplace_back(0, 1, 20, std::vector<double>(20, 1.0));
  same.emplace_back(1, 1, 20, std::vector<double>(20, 1.0));
  Query q = oracle::cut_query(same[0], 0, 5, {0}, 1, Mode::raw);
  q.values.values.assign(5, 3.0);
  CHECK(relative_contrast(same, q) == 1.0);

  const auto raw = oracle::random_walks(3, 2, 60, 2);
  const auto exact = oracle::cut_query(raw[1], 10, 12, {0, 1}, 1, Mode::raw);
  CHECK(std::isinf(relative_contrast(raw, exact)));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto noisy = oracle::cut_query(raw[rng() % 3], rng() % 40, 12, {0, 1}, 1, Mode::raw, &rng, 1.0);
    auto all = noisy;
    all.k = 3 * 49;
    const auto hits = oracle::knn(raw, all);
    CHECK(relative_contrast(raw, noisy) == doctest::Approx(hits.back().distance / hits.front().distance));
  }

  SeriesCollection tiny;
  tiny.emplace_back(0, 1, 5, std::vector<double>{1, 2, 3, 4, 5});
  CHECK_THROWS_AS(relative_contrast(tiny, oracle::cut_query(tiny[0], 0, 5, {0}, 1, Mode::raw)), InvalidInput);
}

TEST_CASE("median") {
  CHECK(median({}) == 0.0);
  CHECK(median({3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}

TEST_CASE("benchmark runs and reports") {
  const auto d = generate_synthetic(6, 3, 160, 11);
  const auto wl = generate_workload(d, WorkloadSpec{.qlen = 32, .count = 8, .seed = 2, .k = 3});

  BenchConfig brute_only{.methods = {"brute"}, .repetitions = 2};
  const auto r0 = run_benchmark(d, wl, brute_only);
  REQUIRE(r0.methods.size() == 1);
  CHECK(r0.methods[0].queries.size() == 8);
  CHECK(r0.methods[0].median_pruning_effectiveness() == 0.0);
  for (const auto& rec : r0.methods[0].queries) CHECK(rec.seconds.size() == 2);

  BenchConfig all{.build = BuildConfig{.seed = 4}, .repetitions = 1};
  for (Mode mode : {Mode::raw, Mode::znorm}) {
    auto spec = wl.spec;
    spec.mode = mode;
    spec.random_channel_count = true;
    const auto wlm = generate_workload(d, spec);
    const auto report = run_benchmark(d, wlm, all);  // throws on any disagreement
    REQUIRE(report.methods.size() == 4);
    CHECK(report.subsequences == 6 * 129);
    for (const auto& m : report.methods) {
      CHECK(m.median_pruning_effectiveness() >= 0.0);
      CHECK(m.median_pruning_effectiveness() <= 1.0);
      for (const auto& rec : m.queries) CHECK(rec.subsequences_total == 6 * 129);
    }
    CHECK(report.methods[2].name == "msindex");
    CHECK(report.methods[2].index_bytes > 0);
  }

  const auto a = run_benchmark(d, wl, all).to_json(false);
  const auto b = run_benchmark(d, wl, all).to_json(false);
  CHECK(a.dump() == b.dump());
  CHECK(a.at("schema_version") == BenchReport::kSchemaVersion);
  CHECK(a.dump().find("seconds") == std::string::npos);
  CHECK(run_benchmark(d, wl, all).to_json(true).dump().find("seconds") != std::string::npos);
  const auto csv = run_benchmark(d, wl, all).to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 8);  // header, then method x query

  CHECK_THROWS_AS(run_benchmark(d, wl, BenchConfig{.methods = {"nope"}}), InvalidInput);
  CHECK_THROWS_AS(run_benchmark(d, wl, BenchConfig{.methods = {}}), InvalidInput);
  CHECK_THROWS_AS(run_benchmark(d, wl, BenchConfig{.repetitions = 0}), InvalidInput);
}

TEST_CASE("dataset files round trip") {
  const auto d = generate_synthetic(4, 3, 37, 6);
  const auto dir = scratch("files");

  save_binary(d, dir / "d.mtsq");
  const auto bin = load_dataset(dir / "d.mtsq");
  CHECK(same_values(d, bin));

  save_csv(d, dir / "csv");
  const auto csv = load_dataset(dir / "csv" / "manifest.csv");
  CHECK(same_values(d, csv));

  SUBCASE("binary corruption") {
    std::ifstream in(dir / "d.mtsq", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir / "short.mtsq", std::ios::binary) << bytes.substr(0, bytes.size() - 8);
    CHECK_THROWS_AS(load_binary(dir / "short.mtsq"), FormatError);
    auto bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir / "magic.mtsq", std::ios::binary) << bad;
    CHECK_THROWS_AS(load_binary(dir / "magic.mtsq"), FormatError);
    auto ver = bytes;
    ver[4] = 9;
    std::ofstream(dir / "ver.mtsq", std::ios::binary) << ver;
    CHECK_THROWS_AS(load_binary(dir / "ver.mtsq"), FormatError);
    CHECK_THROWS_AS(load_binary(dir / "missing.mtsq"), InvalidInput);
  }
  SUBCASE("csv errors") {
    const auto bad = dir / "bad";
    fs::create_directories(bad);
    std::ofstream(bad / "manifest.csv") << "id,file\n0,s.csv\n";
    std::ofstream(bad / "s.csv") << "channel_0,channel_1\n1,2\n3,nan\n";
    CHECK_THROWS_AS(load_csv(bad / "manifest.csv"), FormatError);
    std::ofstream(bad / "s.csv") << "channel_0,channel_1\n1,2\n3\n";
    CHECK_THROWS_AS(load_csv(bad / "manifest.csv"), FormatError);
    std::ofstream(bad / "s.csv") << "a,b\n1,2\n";
    CHECK_THROWS_AS(load_csv(bad / "manifest.csv"), FormatError);
    std::ofstream(bad / "manifest.csv") << "series,path\n0,s.csv\n";
    CHECK_THROWS_AS(load_csv(bad / "manifest.csv"), FormatError);
    std::ofstream(bad / "manifest.csv") << "id,file\n-1,s.csv\n";
    CHECK_THROWS_AS(load_csv(bad / "manifest.csv"), FormatError);
  }
  fs::remove_all(dir.parent_path());
}
