#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "mtsq/core.hpp"
#include "mtsq/dft.hpp"

namespace mtsq::mass {

using DistanceProfile = std::vector<double>;

// Inclusive range of window offsets.
struct OffsetRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
};

// Entry j = sum_i q_i * t_{j+i}, via a zero-padded FFT of length
// next_power_of_two(|t|). Throws InvalidInput when |q| > |t|.
std::vector<double> sliding_dot_products(std::span<const double> q, std::span<const double> t);

// Euclidean distance between q and every |q|-window of t, raw or z-normalized.
DistanceProfile distance_profile(std::span<const double> q, std::span<const double> t, Mode mode);

// Sliding statistics for every channel of one series at a fixed window length.
struct SeriesStats {
  std::size_t qlen = 0;
  std::vector<SlidingStats> channels;
};
SeriesStats compute_series_stats(const MultivariateTimeSeries& series, std::size_t qlen);

// A query made ready for repeated profile evaluation. Rows are normalized per
// mode; query spectra are cached per FFT length. Owns per-query scratch state:
// one instance per executing query.
class PreparedQuery {
 public:
  explicit PreparedQuery(const Query& query);

  std::size_t qlen() const { return normalized_.length; }
  Mode mode() const { return mode_; }
  const std::vector<std::size_t>& channel_ids() const { return channel_ids_; }
  // Mode-normalized query rows (row r is channel channel_ids()[r]).
  const Window& normalized() const { return normalized_; }
  // Squared norm of the centered query, summed over rows. Scales error slack.
  double energy() const;

  // Adds the squared per-channel profile of row r over `window` (length
  // count + qlen - 1) into acc[0..count). `sigma` holds the window stddevs
  // for znorm mode (count entries).
  void accumulate(std::size_t r, std::span<const double> window, std::span<const double> sigma,
                  std::span<double> acc) const;

 private:
  struct Row {
    std::vector<double> kernel;  // centered raw row, or the normalized row
    double center = 0.0;         // subtracted from series values (raw mode)
    double norm_sq = 0.0;
  };
  const std::vector<dft::Complex>& spectrum(std::size_t r, std::size_t fft_len) const;

  Window normalized_;
  std::vector<std::size_t> channel_ids_;
  Mode mode_ = Mode::raw;
  std::vector<Row> rows_;
  mutable std::map<std::pair<std::size_t, std::size_t>, std::vector<dft::Complex>> spectra_;
};

// sqrt of the summed squared per-channel profiles over the query channels,
// restricted to `range`. `stats` supplies cached sliding statistics (needed in
// znorm mode; computed locally when null).
DistanceProfile multivariate_profile(const PreparedQuery& query, const MultivariateTimeSeries& series,
                                     OffsetRange range, const SeriesStats* stats = nullptr);
DistanceProfile multivariate_profile(const Query& query, const MultivariateTimeSeries& series,
                                     OffsetRange range);

// Slack on squared distances that dominates FFT round-off for candidates
// near a threshold `tau_sq`; used when filtering approximate distances
// before exact re-scoring.
double squared_slack(double query_energy, double tau_sq);

// A subsequence scored from a profile. `series` indexes the collection
// passed to refine_top_k, not the series id.
struct ScoredOffset {
  double distance_sq = 0.0;
  std::size_t series = 0;
  std::size_t offset = 0;
};

// Keeps every candidate within slack of the k-th smallest approximate
// distance, re-scores those directly and returns the k best under the core
// ordering. All exact methods funnel through this so they agree bit for bit.
std::vector<Match> refine_top_k(std::vector<ScoredOffset> candidates, std::size_t k,
                                const PreparedQuery& query, std::span<const MultivariateTimeSeries> series);

}  // namespace mtsq::mass
