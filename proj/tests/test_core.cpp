#include <doctest.h>

#include <random>

#include "mtsq/core.hpp"
#include "oracles.hpp"

using namespace mtsq;

TEST_CASE("euclidean distance basics") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 2, 4};
  CHECK(euclidean_distance(a, b) == doctest::Approx(1.0));
  CHECK(euclidean_distance(a, a) == 0.0);
  CHECK_THROWS_AS(euclidean_distance(a, std::vector<double>{1, 2}), InvalidInput);
}

TEST_CASE("channel subset ignores other channels") {
  std::mt19937_64 rng(3);
  Window x(2, 16), y(2, 16);
  for (auto& v : x.values) v = std::normal_distribution<double>()(rng);
  for (auto& v : y.values) v = std::normal_distribution<double>()(rng);
  const std::vector<std::size_t> only0{0};
  double s = 0.0;
  for (std::size_t t = 0; t < 16; ++t) s += (x.channel(0)[t] - y.channel(0)[t]) * (x.channel(0)[t] - y.channel(0)[t]);
  CHECK(euclidean_distance(x, y, only0) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
  // wreck channel 1 and nothing changes
  for (auto& v : y.channel(1)) v = 1e6;
  CHECK(euclidean_distance(x, y, only0) == doctest::Approx(std::sqrt(s)).epsilon(1e-12));
  const std::vector<std::size_t> both{0, 1};
  CHECK(euclidean_distance(x, y, both) >= euclidean_distance(x, y, only0));
}

TEST_CASE("distance over differently laid out windows") {
  Window a(2, 3), b(1, 3);
  a.values = {1, 1, 1, 5, 6, 7};  // channels 0, 2
  b.values = {5, 6, 9};           // channel 2
  const std::vector<std::size_t> ca{0, 2}, cb{2}, common{2};
  CHECK(euclidean_distance(a, ca, b, cb, common) == doctest::Approx(2.0));
  const std::vector<std::size_t> missing{0};
  CHECK_THROWS(euclidean_distance(a, ca, b, cb, missing));
}

TEST_CASE("metric properties on random triples") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = oracle::gaussian(20, rng), y = oracle::gaussian(20, rng), z = oracle::gaussian(20, rng);
    const double xy = euclidean_distance(x, y), yx = euclidean_distance(y, x);
    CHECK(xy == doctest::Approx(yx).epsilon(1e-9));
    CHECK(xy <= euclidean_distance(x, z) + euclidean_distance(z, y) + 1e-9 * xy);
  }
}

TEST_CASE("znormalize") {
  CHECK(znormalize(std::vector<double>{5, 5, 5}) == std::vector<double>{0, 0, 0});
  const auto two = znormalize(std::vector<double>{0, 2});
  CHECK(two[0] == doctest::Approx(-1.0));
  CHECK(two[1] == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  const auto x = oracle::gaussian(100, rng, 7.0);
  const auto z = znormalize(x);
  const Moments mo = moments(z);
  CHECK(std::abs(mo.mean) < 1e-9);
  CHECK(std::abs(mo.stddev - 1.0) < 1e-9);
  const auto zz = znormalize(z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(zz[i] == doctest::Approx(z[i]).epsilon(1e-9));
  const auto ref = oracle::znorm(x);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("match ordering breaks ties by series then offset") {
  std::vector<Match> m{{1.0, {2, 5, 4}}, {1.0, {1, 9, 4}}, {0.5, {7, 0, 4}}, {1.0, {1, 3, 4}}};
  sort_matches(m);
  CHECK(m[0].ref.series_id == 7);
  CHECK(m[1].ref == SubsequenceRef{1, 3, 4});
  CHECK(m[2].ref == SubsequenceRef{1, 9, 4});
  CHECK(m[3].ref.series_id == 2);
}

TEST_CASE("channel validation") {
  const std::vector<std::size_t> ok{0, 2}, dup{1, 1}, unsorted{2, 0}, out{0, 3}, none{};
  CHECK_NOTHROW(validate_channels(ok, 3));
  CHECK_THROWS_AS(validate_channels(dup, 3), InvalidQuery);
  CHECK_THROWS_AS(validate_channels(unsorted, 3), InvalidQuery);
  CHECK_THROWS_AS(validate_channels(out, 3), InvalidQuery);
  CHECK_THROWS_AS(validate_channels(none, 3), InvalidQuery);
}

TEST_CASE("series construction rejects bad shapes and non-finite values") {
  CHECK_THROWS_AS(MultivariateTimeSeries(0, 2, 3, std::vector<double>(5)), InvalidInput);
  CHECK_THROWS_AS(MultivariateTimeSeries(0, std::vector<std::vector<double>>{{1, 2}, {1}}), InvalidInput);
  CHECK_THROWS_AS(MultivariateTimeSeries(0, 1, 2, std::vector<double>{1, std::nan("")}), InvalidInput);
  const MultivariateTimeSeries s(4, std::vector<std::vector<double>>{{1, 2, 3}, {4, 5, 6}});
  CHECK(s.channel_count() == 2);
  CHECK(s.length() == 3);
  CHECK(s.channel(1)[2] == 6);
  CHECK(s.subsequence_count(2) == 2);
  CHECK(s.subsequence_count(4) == 0);
}

TEST_CASE("subsequence distance agrees with the direct oracle") {
  const auto data = oracle::random_walks(3, 4, 200, 17);
  std::mt19937_64 rng(2);
  for (auto mode : {Mode::raw, Mode::znorm}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto channels = oracle::random_channels(4, rng);
      const auto& src = data[rng() % 3];
      const auto q = oracle::cut_query(src, rng() % 150, 32, channels, 1, mode, &rng, 1.0);
      Window norm = q.values;
      normalize_window(norm, mode);
      const auto& target = data[rng() % 3];
      const std::size_t off = rng() % 169;
      CHECK(subsequence_distance_sq(target, off, norm, channels, mode) ==
            doctest::Approx(oracle::window_sq_dist(target, off, q.values, channels, mode)).epsilon(1e-9));
    }
  }
}

TEST_CASE("sliding stats match two-pass moments") {
  std::mt19937_64 rng(8);
  auto x = oracle::gaussian(300, rng, 3.0);
  for (std::size_t i = 100; i < 140; ++i) x[i] = 2.5;  // constant stretch
  const auto st = sliding_stats(x, 25);
  REQUIRE(st.mean.size() == 276);
  for (std::size_t i = 0; i < st.mean.size(); ++i) {
    const Moments mo = moments(std::span<const double>(x).subspan(i, 25));
    CHECK(st.mean[i] == doctest::Approx(mo.mean).epsilon(1e-9));
    CHECK(std::abs(st.stddev[i] - mo.stddev) < 1e-7);
  }
  CHECK(st.stddev[105] <= kZeroVarianceEpsilon);
}

TEST_CASE("mode parsing") {
  CHECK(parse_mode("raw") == Mode::raw);
  CHECK(parse_mode("znorm") == Mode::znorm);
  CHECK(to_string(Mode::znorm) == "znorm");
  CHECK_THROWS_AS(parse_mode("zscore"), InvalidInput);
}

TEST_CASE("dataset fingerprint tracks values and ids") {
  auto a = oracle::random_walks(2, 2, 20, 1);
  const auto base = dataset_fingerprint(a);
  CHECK(dataset_fingerprint(a) == base);
  auto b = a;
  std::vector<double> v(b[1].values().begin(), b[1].values().end());
  v[3] += 1e-9;
  b[1] = MultivariateTimeSeries(b[1].id(), 2, 20, v);
  CHECK(dataset_fingerprint(b) != base);
  auto c = a;
  c[0] = MultivariateTimeSeries(99, 2, 20, std::vector<double>(a[0].values().begin(), a[0].values().end()));
  CHECK(dataset_fingerprint(c) != base);
}
