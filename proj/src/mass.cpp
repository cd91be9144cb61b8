#include "mtsq/mass.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mtsq::mass {

namespace {

// FFT of `kernel` reversed and zero-padded to `fft_len`.
std::vector<dft::Complex> reversed_spectrum(std::span<const double> kernel, std::size_t fft_len) {
  std::vector<dft::Complex> buf(fft_len);
  const std::size_t s = kernel.size();
  for (std::size_t i = 0; i < s; ++i) buf[i] = kernel[s - 1 - i];
  dft::fft(buf, false);
  return buf;
}

// dots[j] = sum_i kernel_i * t_{j+i}, given the reversed-kernel spectrum.
void correlate(std::span<const dft::Complex> kernel_spectrum, std::size_t s, std::span<const double> t,
               double shift, std::span<double> dots) {
  const std::size_t n = kernel_spectrum.size();
  std::vector<dft::Complex> buf(n);
  for (std::size_t i = 0; i < t.size(); ++i) buf[i] = t[i] - shift;
  dft::fft(buf, false);
  for (std::size_t i = 0; i < n; ++i) buf[i] *= kernel_spectrum[i];
  dft::fft(buf, true);
  for (std::size_t j = 0; j < dots.size(); ++j) dots[j] = buf[j + s - 1].real();
}

}  // namespace

std::vector<double> sliding_dot_products(std::span<const double> q, std::span<const double> t) {
  if (q.empty() || q.size() > t.size()) {
    throw InvalidInput("sliding_dot_products: need 1 <= |q| <= |t|");
  }
  const std::size_t n = dft::next_power_of_two(t.size());
  const auto spec = reversed_spectrum(q, n);
  std::vector<double> dots(t.size() - q.size() + 1);
  correlate(spec, q.size(), t, 0.0, dots);
  return dots;
}

DistanceProfile distance_profile(std::span<const double> q, std::span<const double> t, Mode mode) {
  if (q.empty() || q.size() > t.size()) {
    throw InvalidInput("distance_profile: need 1 <= |q| <= |t|");
  }
  Query query;
  query.values = Window(1, q.size());
  std::copy(q.begin(), q.end(), query.values.values.begin());
  query.channel_ids = {0};
  query.mode = mode;
  const PreparedQuery prepared(query);
  std::vector<double> acc(t.size() - q.size() + 1, 0.0);
  std::vector<double> sigma;
  if (mode == Mode::znorm) sigma = sliding_stats(t, q.size()).stddev;
  prepared.accumulate(0, t, sigma, acc);
  for (double& v : acc) v = std::sqrt(std::max(0.0, v));
  return acc;
}

SeriesStats compute_series_stats(const MultivariateTimeSeries& series, std::size_t qlen) {
  SeriesStats stats;
  stats.qlen = qlen;
  for (std::size_t c = 0; c < series.channel_count(); ++c) {
    stats.channels.push_back(sliding_stats(series.channel(c), qlen));
  }
  return stats;
}

PreparedQuery::PreparedQuery(const Query& query)
    : normalized_(query.values), channel_ids_(query.channel_ids), mode_(query.mode) {
  if (query.values.length == 0) throw InvalidQuery("qlen: query must be non-empty");
  if (query.values.channels != query.channel_ids.size()) {
    throw InvalidQuery("channels: query has " + std::to_string(query.values.channels) +
                       " rows but names " + std::to_string(query.channel_ids.size()) + " channels");
  }
  for (double v : query.values.values) {
    if (!std::isfinite(v)) throw InvalidQuery("values: query contains non-finite values");
  }
  normalize_window(normalized_, mode_);
  rows_.resize(normalized_.channels);
  for (std::size_t r = 0; r < normalized_.channels; ++r) {
    auto row = normalized_.channel(r);
    Row& out = rows_[r];
    out.kernel.assign(row.begin(), row.end());
    if (mode_ == Mode::raw) {
      out.center = moments(row).mean;
      for (double& v : out.kernel) v -= out.center;
    }
    for (double v : out.kernel) out.norm_sq += v * v;
  }
}

double PreparedQuery::energy() const {
  double e = 0.0;
  for (const auto& r : rows_) e += r.norm_sq;
  return e;
}

const std::vector<dft::Complex>& PreparedQuery::spectrum(std::size_t r, std::size_t fft_len) const {
  auto key = std::make_pair(r, fft_len);
  auto it = spectra_.find(key);
  if (it == spectra_.end()) {
    it = spectra_.emplace(key, reversed_spectrum(rows_[r].kernel, fft_len)).first;
  }
  return it->second;
}

void PreparedQuery::accumulate(std::size_t r, std::span<const double> window,
                               std::span<const double> sigma, std::span<double> acc) const {
  const std::size_t s = qlen();
  const std::size_t count = acc.size();
  if (window.size() != count + s - 1) throw InvalidInput("accumulate: window/profile size mismatch");
  const Row& row = rows_[r];
  const std::size_t n = dft::next_power_of_two(window.size());
  std::vector<double> dots(count);

  if (mode_ == Mode::raw) {
    correlate(spectrum(r, n), s, window, row.center, dots);
    long double sum_sq = 0.0L;
    for (std::size_t i = 0; i < s; ++i) {
      const long double v = window[i] - row.center;
      sum_sq += v * v;
    }
    for (std::size_t j = 0; j < count; ++j) {
      if (j > 0) {
        const long double out = window[j - 1] - row.center;
        const long double in = window[j + s - 1] - row.center;
        sum_sq += in * in - out * out;
      }
      acc[j] += row.norm_sq + static_cast<double>(sum_sq) - 2.0 * dots[j];
    }
    return;
  }

  if (sigma.size() != count) throw InvalidInput("accumulate: znorm mode needs one stddev per window");
  // The normalized query sums to zero, so any shift of the window leaves the
  // dot products unchanged; the window mean keeps round-off small.
  correlate(spectrum(r, n), s, window, moments(window).mean, dots);
  const double ss = static_cast<double>(s);
  for (std::size_t j = 0; j < count; ++j) {
    if (sigma[j] <= kZeroVarianceEpsilon) {
      acc[j] += row.norm_sq;
    } else {
      acc[j] += row.norm_sq + ss - 2.0 * dots[j] / sigma[j];
    }
  }
}

DistanceProfile multivariate_profile(const PreparedQuery& query, const MultivariateTimeSeries& series,
                                     OffsetRange range, const SeriesStats* stats) {
  const std::size_t s = query.qlen();
  if (series.length() < s || range.last + s > series.length() || range.first > range.last) {
    throw InvalidInput("multivariate_profile: offset range outside the series");
  }
  const std::size_t count = range.size();
  std::vector<double> acc(count, 0.0);
  std::vector<double> local_sigma;
  const auto& ids = query.channel_ids();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= series.channel_count()) {
      throw InvalidQuery("channels: unknown channel id " + std::to_string(ids[r]));
    }
    auto window = series.channel(ids[r]).subspan(range.first, count + s - 1);
    std::span<const double> sigma;
    if (query.mode() == Mode::znorm) {
      if (stats != nullptr && stats->qlen == s) {
        sigma = std::span<const double>(stats->channels[ids[r]].stddev).subspan(range.first, count);
      } else {
        local_sigma = sliding_stats(window, s).stddev;
        sigma = local_sigma;
      }
    }
    query.accumulate(r, window, sigma, acc);
  }
  for (double& v : acc) v = std::sqrt(std::max(0.0, v));
  return acc;
}

DistanceProfile multivariate_profile(const Query& query, const MultivariateTimeSeries& series,
                                     OffsetRange range) {
  const PreparedQuery prepared(query);
  return multivariate_profile(prepared, series, range, nullptr);
}

double squared_slack(double query_energy, double tau_sq) {
  return 1e-8 * (1.0 + 3.0 * query_energy + 3.0 * tau_sq);
}

std::vector<Match> refine_top_k(std::vector<ScoredOffset> candidates, std::size_t k,
                                const PreparedQuery& query, std::span<const MultivariateTimeSeries> series) {
  std::vector<Match> out;
  if (candidates.empty() || k == 0) return out;
  double cutoff = kInfinity;
  if (candidates.size() > k) {
    auto kth = candidates.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(candidates.begin(), kth, candidates.end(),
                     [](const ScoredOffset& a, const ScoredOffset& b) { return a.distance_sq < b.distance_sq; });
    cutoff = kth->distance_sq + squared_slack(query.energy(), kth->distance_sq);
  }
  for (const auto& c : candidates) {
    if (c.distance_sq > cutoff) continue;
    const auto& s = series[c.series];
    const double d2 = subsequence_distance_sq(s, c.offset, query.normalized(), query.channel_ids(), query.mode());
    out.push_back(Match{std::sqrt(d2), SubsequenceRef{s.id(), c.offset, query.qlen()}});
  }
  sort_matches(out);
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace mtsq::mass
