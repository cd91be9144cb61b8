#include <doctest.h>

#include <numbers>
#include <random>

#include "mtsq/dft.hpp"
#include "oracles.hpp"

using namespace mtsq;
using namespace mtsq::dft;

namespace {

Window window_of(std::vector<std::vector<double>> rows) {
  Window w(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), w.channel(r).begin());
  return w;
}

Window random_window(std::size_t c, std::size_t len, std::mt19937_64& rng, double sd = 1.0) {
  Window w(c, len);
  std::normal_distribution<double> d(0.0, sd);
  for (auto& v : w.values) v = d(rng);
  return w;
}

// Random plan over a random sample; d_target picks how much is kept.
CoefficientPlan sample_plan(std::size_t c, std::size_t qlen, Mode mode, double d_target, std::mt19937_64& rng) {
  std::vector<Window> sample;
  for (int i = 0; i < 30; ++i) {
    Window w(c, qlen);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double v = 0.0;
      for (auto& x : w.channel(ch)) x = (v += std::normal_distribution<double>()(rng));
    }
    sample.push_back(w);
  }
  return select_coefficients(estimate_ardc(sample, qlen, mode), d_target);
}

double full_sq(const Window& a, const Window& b) { return oracle::sq_dist(a.values, b.values); }

}  // namespace

TEST_CASE("forward transform small cases") {
  const auto dc = forward(std::vector<double>{3, 3, 3, 3});
  CHECK(std::abs(dc[0] - Complex(12, 0)) < 1e-12);
  for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(dc[k]) < 1e-12);
  const auto imp = forward(std::vector<double>{1, 0, 0, 0});
  for (const auto& v : imp) CHECK(std::abs(v - Complex(1, 0)) < 1e-12);
}

TEST_CASE("forward transform matches the naive sum for many lengths") {
  std::mt19937_64 rng(13);
  for (std::size_t n : {1u, 2u, 5u, 13u, 64u, 100u, 128u, 257u, 1000u}) {
    const auto x = oracle::gaussian(n, rng);
    const auto got = forward(x);
    const auto ref = oracle::naive_dft(x);
    double scale = 1.0;
    for (const auto& v : ref) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(got[k] - ref[k]) <= 1e-9 * scale);
    const auto back = inverse(got);
    for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(back[t].real() - x[t]) <= 1e-9 * scale);
    // Parseval
    double e_time = 0.0, e_freq = 0.0;
    for (double v : x) e_time += v * v;
    for (const auto& v : got) e_freq += std::norm(v);
    CHECK(e_freq / static_cast<double>(n) == doctest::Approx(e_time).epsilon(1e-9));
  }
}

TEST_CASE("fold weights and admissible range") {
  CHECK(coefficient_count(8) == 5);
  CHECK(coefficient_count(7) == 4);
  CHECK(fold_weight(0, 8) == 1.0);
  CHECK(fold_weight(3, 8) == 2.0);
  CHECK(fold_weight(4, 8) == 1.0);  // Nyquist
  CHECK(fold_weight(3, 7) == 2.0);
  CHECK(first_admissible(Mode::raw) == 0);
  CHECK(first_admissible(Mode::znorm) == 1);
}

TEST_CASE("znorm identity for non-DC coefficients") {
  std::mt19937_64 rng(21);
  const auto x = oracle::gaussian(50, rng, 4.0);
  const auto raw = forward(x);
  const auto z = forward(oracle::znorm(x));
  const Moments mo = moments(x);
  for (std::size_t k = 1; k < 50; ++k) {
    CHECK(std::abs(z[k] - raw[k] / mo.stddev) <= 1e-9 * std::max(1.0, std::abs(z[k])));
  }
}

TEST_CASE("ARDC concentrates on an injected sinusoid") {
  std::mt19937_64 rng(4);
  std::vector<Window> sample;
  for (int i = 0; i < 40; ++i) {
    const double amp = std::uniform_real_distribution<double>(0.5, 5.0)(rng);
    const double phase = std::uniform_real_distribution<double>(0.0, 6.0)(rng);
    std::vector<double> row(64);
    for (std::size_t t = 0; t < 64; ++t) row[t] = amp * std::sin(2 * std::numbers::pi * 5 * t / 64.0 + phase);
    sample.push_back(window_of({row}));
  }
  const auto table = estimate_ardc(sample, 64, Mode::raw);
  CHECK(table.at(0, 5) >= 0.999);
  double sum = 0.0;
  for (double v : table.channel(0)) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ARDC skips zero-distance pairs and falls back when all are zero") {
  const Window a = window_of({{1, 2, 3, 4, 5, 6, 7, 9}});
  const Window b = window_of({{0, 0, 1, 0, 0, 0, 1, 0}});
  std::vector<Window> sample{a, a, b};
  const auto table = estimate_ardc(sample, 8, Mode::raw);
  CHECK_FALSE(table.uniform_fallback);
  double sum = 0.0;
  for (double v : table.channel(0)) {
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<Window> same{a, a, a};
  const auto flat = estimate_ardc(same, 8, Mode::raw);
  CHECK(flat.uniform_fallback);
  sum = 0.0;
  for (double v : flat.channel(0)) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ARDC of white noise is roughly uniform") {
  std::mt19937_64 rng(99);
  std::vector<Window> sample;
  for (int i = 0; i < 100; ++i) sample.push_back(random_window(1, 32, rng));
  const auto table = estimate_ardc(sample, 32, Mode::raw);
  // Compare per conjugate-pair weight so DC and Nyquist are on the same footing.
  double lo = 1e9, hi = 0.0;
  for (std::size_t j = 0; j < table.coefficients(); ++j) {
    const double per = table.at(0, j) / fold_weight(j, 32);
    lo = std::min(lo, per);
    hi = std::max(hi, per);
  }
  CHECK(hi / lo < 3.0);
}

TEST_CASE("ARDC in znorm mode gives index 0 nothing") {
  std::mt19937_64 rng(1);
  std::vector<Window> sample;
  for (int i = 0; i < 20; ++i) sample.push_back(random_window(2, 16, rng));
  const auto table = estimate_ardc(sample, 16, Mode::znorm);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(table.at(c, 0) == 0.0);
    double sum = 0.0;
    for (double v : table.channel(c)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("greedy coefficient selection") {
  ArdcTable t;
  t.channels = 1;
  t.qlen = 4;
  t.mode = Mode::raw;
  t.values = {0.5, 0.3, 0.2};
  const auto plan = select_coefficients(t, 0.6);
  CHECK(plan.selected(0) == std::vector<std::uint32_t>{0, 1});
  CHECK(plan.dimensions() == 4);
  CHECK(select_coefficients(t, 1.0).selected(0) == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(select_coefficients(t, 0.1).selected(0) == std::vector<std::uint32_t>{0});
  CHECK_THROWS_AS(select_coefficients(t, 0.0), InvalidInput);
  CHECK_THROWS_AS(select_coefficients(t, 1.5), InvalidInput);
}

TEST_CASE("a high-frequency energy spike is selected before low indices") {
  std::mt19937_64 rng(6);
  std::vector<Window> sample;
  for (int i = 0; i < 60; ++i) {
    std::vector<double> row(128);
    double v = 0.0;
    const double amp = std::uniform_real_distribution<double>(10.0, 30.0)(rng);
    for (std::size_t t = 0; t < 128; ++t) {
      v += 0.05 * std::normal_distribution<double>()(rng);
      row[t] = v + amp * std::cos(2 * std::numbers::pi * 50 * t / 128.0);
    }
    sample.push_back(window_of({row}));
  }
  const auto plan = select_coefficients(estimate_ardc(sample, 128, Mode::raw), 0.6);
  const auto& sel = plan.selected(0);
  CHECK(std::find(sel.begin(), sel.end(), 50u) != sel.end());
  CHECK(std::find(sel.begin(), sel.end(), 5u) == sel.end());
}

TEST_CASE("sliding features match direct per-window extraction") {
  std::mt19937_64 rng(31);
  const auto data = oracle::random_walks(1, 3, 1500, 2);
  for (Mode mode : {Mode::raw, Mode::znorm}) {
    const auto plan = sample_plan(3, 40, mode, 0.8, rng);
    const auto table = sliding_features(data[0], plan);
    REQUIRE(table.rows == 1461);
    for (std::size_t off = 0; off < table.rows; off += (off < 1100 ? 37 : 1)) {
      Window w = extract_window(data[0], off, 40);
      normalize_window(w, mode);
      // independent: naive DFT of the normalized rows
      std::vector<double> expect;
      for (std::size_t c = 0; c < 3; ++c) {
        const auto spec = oracle::naive_dft(oracle::slice(w.channel(c), 0, 40));
        for (auto j : plan.selected(c)) {
          const double s = std::sqrt(fold_weight(j, 40));
          expect.push_back(s * spec[j].real());
          expect.push_back(s * spec[j].imag());
        }
      }
      const auto row = table.row(off);
      REQUIRE(row.size() == expect.size());
      double scale = 1.0;
      for (double v : expect) scale = std::max(scale, std::abs(v));
      for (std::size_t d = 0; d < row.size(); ++d) CHECK(std::abs(row[d] - expect[d]) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("sliding features edge cases") {
  std::mt19937_64 rng(3);
  const auto one = oracle::random_walks(1, 2, 16, 5);
  const auto plan = sample_plan(2, 16, Mode::raw, 0.7, rng);
  const auto table = sliding_features(one[0], plan);
  CHECK(table.rows == 1);
  Window w = extract_window(one[0], 0, 16);
  const auto direct = extract_features(w, plan);
  for (std::size_t d = 0; d < direct.size(); ++d) CHECK(table.row(0)[d] == doctest::Approx(direct[d]).epsilon(1e-9));

  const auto short_series = oracle::random_walks(1, 2, 10, 5);
  CHECK_THROWS_AS(sliding_features(short_series[0], plan), InvalidInput);

  // constant channel in znorm mode
  std::vector<double> vals(2 * 64);
  for (std::size_t t = 0; t < 64; ++t) {
    vals[t] = 4.0;
    vals[64 + t] = std::sin(0.3 * t) + 0.01 * t;
  }
  const MultivariateTimeSeries s(0, 2, 64, vals);
  const auto zplan = sample_plan(2, 16, Mode::znorm, 0.9, rng);
  const auto zt = sliding_features(s, zplan);
  for (std::size_t off = 0; off < zt.rows; ++off) {
    for (std::size_t d = 0; d < zplan.channel_dimensions(0); ++d) CHECK(zt.row(off)[d] == 0.0);
  }
}

TEST_CASE("DFT lower bound is sound and tight with every coefficient") {
  std::mt19937_64 rng(77);
  for (Mode mode : {Mode::raw, Mode::znorm}) {
    const auto partial = sample_plan(3, 24, mode, 0.6, rng);
    const auto full = sample_plan(3, 24, mode, 1.0, rng);
    for (int trial = 0; trial < 300; ++trial) {
      Window a = random_window(3, 24, rng, 3.0), b = random_window(3, 24, rng, 3.0);
      normalize_window(a, mode);
      normalize_window(b, mode);
      const auto ch = oracle::random_channels(3, rng);
      double truth = 0.0;
      for (auto c : ch) truth += oracle::sq_dist(oracle::slice(a.channel(c), 0, 24), oracle::slice(b.channel(c), 0, 24));
      truth = std::sqrt(truth);
      const double lb = dft_lower_bound(extract_features(a, partial), extract_features(b, partial), partial, ch);
      CHECK(lb <= truth * (1 + 1e-9) + 1e-12);
      const double tight = dft_lower_bound(extract_features(a, full), extract_features(b, full), full, ch);
      CHECK(tight == doctest::Approx(truth).epsilon(1e-6));
      const auto fa = extract_features(a, partial);
      CHECK(dft_lower_bound(fa, fa, partial, ch) == 0.0);
    }
  }
}

TEST_CASE("enlarging the coefficient set never lowers the bound") {
  std::mt19937_64 rng(5);
  std::vector<Window> sample;
  for (int i = 0; i < 30; ++i) sample.push_back(random_window(1, 32, rng));
  const auto table = estimate_ardc(sample, 32, Mode::raw);
  const std::vector<std::size_t> ch{0};
  for (int trial = 0; trial < 50; ++trial) {
    const Window a = random_window(1, 32, rng), b = random_window(1, 32, rng);
    double prev = 0.0;
    for (double target : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
      const auto plan = select_coefficients(table, target);
      const double lb = dft_lower_bound(extract_features(a, plan), extract_features(b, plan), plan, ch);
      CHECK(lb >= prev - 1e-12);
      prev = lb;
    }
  }
}

TEST_CASE("remainder examples and decomposition") {
  ArdcTable t;
  t.channels = 1;
  t.qlen = 4;
  t.mode = Mode::raw;
  t.values = {0.6, 0.3, 0.1};
  const auto dc_only = select_coefficients(t, 0.5);
  REQUIRE(dc_only.selected(0) == std::vector<std::uint32_t>{0});
  const auto rem = compute_remainder(window_of({{1, 2, 3, 4}}), dc_only);
  const std::vector<double> expect{-1.5, -0.5, 0.5, 1.5};
  for (std::size_t i = 0; i < 4; ++i) CHECK(rem.values[i] == doctest::Approx(expect[i]).epsilon(1e-12));

  std::mt19937_64 rng(8);
  for (std::size_t qlen : {16u, 33u}) {
    const auto full = sample_plan(2, qlen, Mode::raw, 1.0, rng);
    const Window w = random_window(2, qlen, rng);
    const auto r0 = compute_remainder(w, full);
    double n = 0.0;
    for (double v : r0.values) n += v * v;
    CHECK(std::sqrt(n) < 1e-6);

    const auto plan = sample_plan(2, qlen, Mode::raw, 0.5, rng);
    const Reconstructor recon(plan);
    for (int trial = 0; trial < 40; ++trial) {
      const Window a = random_window(2, qlen, rng, 2.0), b = random_window(2, qlen, rng, 2.0);
      const auto fa = extract_features(a, plan), fb = extract_features(b, plan);
      const Window ra = compute_remainder(a, plan), rb = compute_remainder(b, plan);
      const Window ra2 = remainder_from_features(a, fa, recon);
      for (std::size_t i = 0; i < ra.values.size(); ++i) CHECK(ra2.values[i] == doctest::Approx(ra.values[i]).epsilon(1e-9));
      // orthogonality: |a|^2 = |recon|^2 + |rem|^2
      double ea = 0.0, er = 0.0, ef = 0.0;
      for (double v : a.values) ea += v * v;
      for (double v : ra.values) er += v * v;
      for (double v : fa) ef += v * v;
      CHECK(ea == doctest::Approx(ef / static_cast<double>(qlen) + er).epsilon(1e-6));
      // remainder has no energy at the selected indices
      for (std::size_t c = 0; c < 2; ++c) {
        const auto spec = oracle::naive_dft(oracle::slice(ra.channel(c), 0, qlen));
        for (auto j : plan.selected(c)) CHECK(std::abs(spec[j]) <= 1e-6 * std::sqrt(ea));
      }
      // d^2 split into the feature part and the remainder part
      double fd = 0.0;
      for (std::size_t d = 0; d < fa.size(); ++d) fd += (fa[d] - fb[d]) * (fa[d] - fb[d]);
      CHECK(full_sq(a, b) == doctest::Approx(fd / static_cast<double>(qlen) + full_sq(ra, rb)).epsilon(1e-6));
    }
  }
}

TEST_CASE("pivots") {
  std::mt19937_64 rng(12);
  std::vector<Window> sample;
  for (int i = 0; i < 25; ++i) sample.push_back(random_window(2, 8, rng));
  const auto one = build_pivots(sample, 1, 3);
  REQUIRE(one.size() == 1);
  for (std::size_t i = 0; i < 16; ++i) {
    double mean = 0.0;
    for (const auto& w : sample) mean += w.values[i];
    mean /= 25.0;
    CHECK(one.pivots[0].values[i] == doctest::Approx(mean).epsilon(1e-12));
  }

  std::vector<Window> clusters;
  for (int i = 0; i < 40; ++i) {
    Window w = random_window(1, 6, rng, 0.1);
    for (auto& v : w.values) v += (i % 2 ? 10.0 : -10.0);
    clusters.push_back(w);
  }
  const auto two = build_pivots(clusters, 2, 5);
  REQUIRE(two.size() == 2);
  std::vector<double> centres;
  for (const auto& p : two.pivots) {
    double m = 0.0;
    for (double v : p.values) m += v;
    centres.push_back(m / 6.0);
  }
  std::sort(centres.begin(), centres.end());
  CHECK(centres[0] == doctest::Approx(-10.0).epsilon(0.01));
  CHECK(centres[1] == doctest::Approx(10.0).epsilon(0.01));

  std::vector<Window> same(5, window_of({{1, 2, 3}}));
  set_warnings_enabled(false);
  const auto clamp = build_pivots(same, 9, 1);
  set_warnings_enabled(true);
  CHECK(clamp.size() <= 5);
  for (const auto& p : clamp.pivots) CHECK(p.values == same[0].values);

  // deterministic for a fixed seed
  const auto again = build_pivots(clusters, 2, 5);
  for (std::size_t p = 0; p < 2; ++p) CHECK(again.pivots[p].values == two.pivots[p].values);
}

TEST_CASE("corrected bound examples") {
  const std::vector<Interval> inside{{1.0, 3.0}};
  const std::vector<double> dq{2.0};
  CHECK(corrected_lower_bound(8.0, inside, dq, 4) == doctest::Approx(2.0));
  const std::vector<Interval> single{{5.0, 5.0}};
  CHECK(corrected_lower_bound(8.0, single, dq, 4) == doctest::Approx(2.0 + 9.0));
  const std::vector<Interval> two{{5.0, 6.0}, {0.0, 1.5}};
  const std::vector<double> dq2{2.0, 2.0};
  CHECK(corrected_lower_bound(0.0, two, dq2, 4) == doctest::Approx(9.0));  // max(3^2, 0.5^2)
}

TEST_CASE("pivot correction stays between the plain bound and the true distance") {
  std::mt19937_64 rng(41);
  for (Mode mode : {Mode::raw, Mode::znorm}) {
    const auto plan = sample_plan(3, 32, mode, 0.6, rng);
    const Reconstructor recon(plan);
    std::vector<Window> rems;
    for (int i = 0; i < 20; ++i) {
      Window w = random_window(3, 32, rng, 2.0);
      normalize_window(w, mode);
      rems.push_back(compute_remainder(w, plan));
    }
    const auto pivots = build_pivots(rems, 2, 7, mode);
    for (int trial = 0; trial < 300; ++trial) {
      Window a = random_window(3, 32, rng, 2.0), b = random_window(3, 32, rng, 2.0);
      normalize_window(a, mode);
      normalize_window(b, mode);
      const auto ch = oracle::random_channels(3, rng);
      const auto fa = extract_features(a, plan), fb = extract_features(b, plan);
      const auto da = pivot_channel_distances(compute_remainder(a, plan), pivots);
      // the query side only holds its own channels
      Window bq(ch.size(), 32);
      for (std::size_t r = 0; r < ch.size(); ++r) std::copy(b.channel(ch[r]).begin(), b.channel(ch[r]).end(), bq.channel(r).begin());
      const auto fbq = extract_features(bq, plan, ch);
      const auto db = pivot_channel_distances(remainder_from_features(bq, fbq, recon, ch), pivots, ch);
      std::vector<double> iv;
      for (double d : da) {
        iv.push_back(d);
        iv.push_back(d);
      }
      double truth = 0.0;
      for (auto c : ch) truth += oracle::sq_dist(oracle::slice(a.channel(c), 0, 32), oracle::slice(b.channel(c), 0, 32));
      const double lb = dft_lower_bound(fa, fb, plan, ch);
      const double corr = lb * lb + pivot_correction(iv, 3, db, ch);
      CHECK(lb * lb <= corr);
      CHECK(corr <= truth * (1 + 1e-9) + 1e-9);
    }
  }
}
