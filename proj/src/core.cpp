#include "mtsq/core.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <iostream>
#include <string>

namespace mtsq {

namespace {
std::atomic<bool> g_warnings_enabled{true};

std::size_t row_of(std::span<const std::size_t> channels, std::size_t channel) {
  auto it = std::find(channels.begin(), channels.end(), channel);
  if (it == channels.end()) {
    throw InvalidInput("channel " + std::to_string(channel) + " missing from operand");
  }
  return static_cast<std::size_t>(it - channels.begin());
}
}  // namespace

void warn(std::string_view message) {
  if (g_warnings_enabled.load(std::memory_order_relaxed)) {
    std::cerr << "warning: " << message << '\n';
  }
}

void set_warnings_enabled(bool enabled) { g_warnings_enabled.store(enabled); }

std::string_view to_string(Mode mode) { return mode == Mode::raw ? "raw" : "znorm"; }

Mode parse_mode(std::string_view text) {
  if (text == "raw") return Mode::raw;
  if (text == "znorm" || text == "normalized") return Mode::znorm;
  throw InvalidInput("mode: expected 'raw' or 'znorm', got '" + std::string(text) + "'");
}

MultivariateTimeSeries::MultivariateTimeSeries(std::uint64_t id, std::size_t channels,
                                               std::size_t length, std::vector<double> values)
    : id_(id), channels_(channels), length_(length), values_(std::move(values)) {
  if (channels_ == 0 || length_ == 0) {
    throw InvalidInput("series " + std::to_string(id) + ": channel count and length must be positive");
  }
  if (values_.size() != channels_ * length_) {
    throw InvalidInput("series " + std::to_string(id) + ": value count does not match c x m");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw InvalidInput("series " + std::to_string(id) + ": non-finite value");
    }
  }
}

MultivariateTimeSeries::MultivariateTimeSeries(std::uint64_t id,
                                               const std::vector<std::vector<double>>& channels)
    : MultivariateTimeSeries(
          id, channels.size(), channels.empty() ? 0 : channels.front().size(), [&] {
            std::vector<double> flat;
            for (const auto& ch : channels) {
              if (ch.size() != channels.front().size()) {
                throw InvalidInput("series " + std::to_string(id) + ": ragged channels");
              }
              flat.insert(flat.end(), ch.begin(), ch.end());
            }
            return flat;
          }()) {}

Window extract_window(const MultivariateTimeSeries& series, std::size_t offset, std::size_t length,
                      std::span<const std::size_t> channels) {
  if (offset + length > series.length()) {
    throw InvalidInput("window exceeds series length");
  }
  const std::size_t rows = channels.empty() ? series.channel_count() : channels.size();
  Window w(rows, length);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t ch = channels.empty() ? r : channels[r];
    auto src = series.channel(ch).subspan(offset, length);
    std::copy(src.begin(), src.end(), w.channel(r).begin());
  }
  return w;
}

bool match_less(const Match& a, const Match& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.ref.series_id != b.ref.series_id) return a.ref.series_id < b.ref.series_id;
  return a.ref.offset < b.ref.offset;
}

void sort_matches(std::vector<Match>& matches) {
  std::sort(matches.begin(), matches.end(), match_less);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("euclidean_distance: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double euclidean_distance(const Window& a, std::span<const std::size_t> a_channels, const Window& b,
                          std::span<const std::size_t> b_channels,
                          std::span<const std::size_t> common_channels) {
  if (a.length != b.length) throw InvalidInput("euclidean_distance: length mismatch");
  double sum = 0.0;
  for (std::size_t ch : common_channels) {
    auto x = a.channel(row_of(a_channels, ch));
    auto y = b.channel(row_of(b_channels, ch));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

double euclidean_distance(const Window& a, const Window& b, std::span<const std::size_t> channels) {
  if (a.length != b.length) throw InvalidInput("euclidean_distance: length mismatch");
  double sum = 0.0;
  for (std::size_t ch : channels) {
    if (ch >= a.channels || ch >= b.channels) {
      throw InvalidInput("euclidean_distance: channel out of range");
    }
    auto x = a.channel(ch);
    auto y = b.channel(ch);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

Moments moments(std::span<const double> x) {
  Moments m;
  if (x.empty()) return m;
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(ss / static_cast<double>(x.size()));
  return m;
}

void znormalize_inplace(std::span<double> x) {
  const Moments m = moments(x);
  if (m.stddev <= kZeroVarianceEpsilon) {
    std::fill(x.begin(), x.end(), 0.0);
    return;
  }
  for (double& v : x) v = (v - m.mean) / m.stddev;
}

std::vector<double> znormalize(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("znormalize: empty input");
  std::vector<double> out(x.begin(), x.end());
  znormalize_inplace(out);
  return out;
}

void normalize_window(Window& w, Mode mode) {
  if (mode != Mode::znorm) return;
  for (std::size_t c = 0; c < w.channels; ++c) znormalize_inplace(w.channel(c));
}

void validate_channels(std::span<const std::size_t> channel_ids, std::size_t channel_count) {
  if (channel_ids.empty()) throw InvalidQuery("channels: query must name at least one channel");
  for (std::size_t i = 0; i < channel_ids.size(); ++i) {
    if (channel_ids[i] >= channel_count) {
      throw InvalidQuery("channels: unknown channel id " + std::to_string(channel_ids[i]) +
                         " (dataset has " + std::to_string(channel_count) + ")");
    }
    if (i > 0 && channel_ids[i] <= channel_ids[i - 1]) {
      throw InvalidQuery("channels: ids must be strictly increasing without duplicates");
    }
  }
}

double subsequence_distance_sq(const MultivariateTimeSeries& series, std::size_t offset,
                               const Window& normalized_query,
                               std::span<const std::size_t> channel_ids, Mode mode) {
  const std::size_t qlen = normalized_query.length;
  double sum = 0.0;
  std::vector<double> scratch;
  for (std::size_t r = 0; r < channel_ids.size(); ++r) {
    auto q = normalized_query.channel(r);
    auto t = series.channel(channel_ids[r]).subspan(offset, qlen);
    if (mode == Mode::raw) {
      for (std::size_t i = 0; i < qlen; ++i) {
        const double d = t[i] - q[i];
        sum += d * d;
      }
    } else {
      scratch.assign(t.begin(), t.end());
      znormalize_inplace(scratch);
      for (std::size_t i = 0; i < qlen; ++i) {
        const double d = scratch[i] - q[i];
        sum += d * d;
      }
    }
  }
  return sum;
}

}  // namespace mtsq

namespace mtsq {

SlidingStats sliding_stats(std::span<const double> x, std::size_t window) {
  SlidingStats stats;
  if (window == 0 || x.size() < window) return stats;
  const std::size_t count = x.size() - window + 1;
  stats.mean.resize(count);
  stats.stddev.resize(count);

  // Centering by the global mean keeps the prefix sums small.
  const double shift = moments(x).mean;
  long double sum = 0.0L;
  long double sum_sq = 0.0L;
  for (std::size_t i = 0; i < window; ++i) {
    const long double v = x[i] - shift;
    sum += v;
    sum_sq += v * v;
  }
  const long double n = static_cast<long double>(window);
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v - shift));
  const double recompute_below = 1e-6 * (1.0 + scale);

  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) {
      const long double out = x[i - 1] - shift;
      const long double in = x[i + window - 1] - shift;
      sum += in - out;
      sum_sq += in * in - out * out;
    }
    const long double mean = sum / n;
    long double var = sum_sq / n - mean * mean;
    if (var < 0.0L) var = 0.0L;
    double sd = static_cast<double>(std::sqrt(var));
    double mu = static_cast<double>(mean) + shift;
    if (sd < recompute_below) {
      const Moments exact = moments(x.subspan(i, window));
      mu = exact.mean;
      sd = exact.stddev;
    }
    stats.mean[i] = mu;
    stats.stddev[i] = sd;
  }
  return stats;
}

std::uint64_t dataset_fingerprint(std::span<const MultivariateTimeSeries> series) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  mix(series.size());
  for (const auto& s : series) {
    mix(s.id());
    mix(s.channel_count());
    mix(s.length());
    for (double v : s.values()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

}  // namespace mtsq
