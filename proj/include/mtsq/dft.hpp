#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "mtsq/core.hpp"

namespace mtsq::dft {

using Complex = std::complex<double>;

// In-place unnormalized transform of any length (radix-2 for powers of two,
// Bluestein otherwise, naive below 64 points). `inverse` applies the 1/n scale.
void fft(std::vector<Complex>& data, bool inverse = false);

std::vector<Complex> forward(std::span<const double> x);
std::vector<Complex> forward(std::span<const Complex> x);
std::vector<Complex> inverse(std::span<const Complex> spectrum);

std::size_t next_power_of_two(std::size_t n);

// Coefficients 0..qlen/2 are admissible for real input; index 0 is dropped in
// znorm mode because normalized windows have zero mean.
std::size_t coefficient_count(std::size_t qlen);
std::size_t first_admissible(Mode mode);

// Multiplicity of coefficient j in the full spectrum (2 when its conjugate
// partner is distinct, 1 for DC and the Nyquist bin).
double fold_weight(std::size_t j, std::size_t qlen);

// Average relative distance contribution per channel and coefficient.
struct ArdcTable {
  std::size_t channels = 0;
  std::size_t qlen = 0;
  Mode mode = Mode::raw;
  std::vector<double> values;  // channels x coefficient_count(qlen)
  bool uniform_fallback = false;

  std::size_t coefficients() const { return coefficient_count(qlen); }
  double at(std::size_t channel, std::size_t j) const { return values[channel * coefficients() + j]; }
  std::span<const double> channel(std::size_t c) const {
    return {values.data() + c * coefficients(), coefficients()};
  }

  friend bool operator==(const ArdcTable&, const ArdcTable&) = default;
};

// `sample` holds raw windows (channels x qlen); they are normalized per mode.
// Pairs at zero distance on a channel are skipped; a channel without any
// non-zero pair falls back to a uniform table.
ArdcTable estimate_ardc(std::span<const Window> sample, std::size_t qlen, Mode mode);
ArdcTable uniform_ardc(std::size_t channels, std::size_t qlen, Mode mode);

// Per-channel selected coefficient indices and the feature layout they imply.
// Feature layout: channel-major, for each selected j ascending a pair
// (sqrt(w_j) Re X_j, sqrt(w_j) Im X_j) where w_j = fold_weight(j, qlen).
class CoefficientPlan {
 public:
  CoefficientPlan() = default;
  CoefficientPlan(ArdcTable ardc, double d_target, std::vector<std::vector<std::uint32_t>> selected);

  std::size_t qlen() const { return ardc_.qlen; }
  Mode mode() const { return ardc_.mode; }
  double d_target() const { return d_target_; }
  const ArdcTable& ardc() const { return ardc_; }
  std::size_t channels() const { return selected_.size(); }
  const std::vector<std::uint32_t>& selected(std::size_t channel) const { return selected_[channel]; }
  std::size_t dimensions() const { return offsets_.empty() ? 0 : offsets_.back(); }
  std::size_t channel_offset(std::size_t channel) const { return offsets_[channel]; }
  std::size_t channel_dimensions(std::size_t channel) const { return 2 * selected_[channel].size(); }
  std::vector<std::size_t> dimensions_for(std::span<const std::size_t> channel_ids) const;

  friend bool operator==(const CoefficientPlan&, const CoefficientPlan&) = default;

 private:
  ArdcTable ardc_;
  double d_target_ = 1.0;
  std::vector<std::vector<std::uint32_t>> selected_;
  std::vector<std::size_t> offsets_;
};

// Greedy descending-ARDC selection until the cumulative share reaches
// d_target; at least one coefficient per channel, all of them when d_target >= 1.
CoefficientPlan select_coefficients(const ArdcTable& ardc, double d_target);

using FeatureVector = std::vector<double>;

// Features of an already mode-normalized window. Row r of `window` is written
// to the dimensions of channel channel_ids[r] (all channels when empty); the
// dimensions of other channels stay zero.
FeatureVector extract_features(const Window& normalized, const CoefficientPlan& plan,
                               std::span<const std::size_t> channel_ids = {});

// Row-major table of feature vectors, one row per window offset.
struct FeatureTable {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * dims, dims}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * dims, dims}; }
};

// Interval between from-scratch recomputations in the sliding transform.
inline constexpr std::size_t kSlidingRefreshInterval = 1024;

// Features of every window of `series`, via the sliding-DFT recurrence.
// `stats` (one per channel, window = qlen) is required only in znorm mode and
// computed on the fly when omitted. Throws InvalidInput when m < qlen.
FeatureTable sliding_features(const MultivariateTimeSeries& series, const CoefficientPlan& plan,
                              const std::vector<SlidingStats>* stats = nullptr);

// d(fa, fb) / sqrt(qlen) over the dimensions of `channel_ids`.
double dft_lower_bound(std::span<const double> fa, std::span<const double> fb,
                       const CoefficientPlan& plan, std::span<const std::size_t> channel_ids);

// Rebuilds the time-domain component of the selected coefficients of one
// channel from its feature slice.
class Reconstructor {
 public:
  explicit Reconstructor(const CoefficientPlan& plan);
  void reconstruct(std::span<const double> feature, std::size_t channel, std::span<double> out) const;

 private:
  const CoefficientPlan* plan_;
  std::vector<std::vector<double>> cos_;  // per channel: selected x qlen
  std::vector<std::vector<double>> sin_;
};

// Subsequence minus the inverse transform of its selected coefficients (and
// their conjugates). Input must already be normalized per the plan's mode.
Window compute_remainder(const Window& normalized, const CoefficientPlan& plan);
// Same, reusing features already extracted for the window. Row r of
// `normalized` corresponds to channel channel_ids[r] (all when empty).
Window remainder_from_features(const Window& normalized, std::span<const double> feature,
                               const Reconstructor& reconstructor,
                               std::span<const std::size_t> channel_ids = {});

struct PivotSet {
  std::vector<Window> pivots;  // each channels x qlen
  Mode mode = Mode::raw;

  std::size_t size() const { return pivots.size(); }
  bool empty() const { return pivots.empty(); }
};

// k-means (k-means++ seeding, Lloyd iterations) over the remainder sample.
PivotSet build_pivots(std::span<const Window> remainders, std::size_t pivot_count, std::uint64_t seed,
                      Mode mode = Mode::raw, std::size_t max_iterations = 100);

// Per-pivot, per-row distances between remainder rows and the matching pivot
// channels. Layout [pivot][row]. Row r is channel channel_ids[r] (all when empty).
std::vector<double> pivot_channel_distances(const Window& remainder, const PivotSet& pivots,
                                            std::span<const std::size_t> channel_ids = {});

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Distance from d to the interval (0 when inside).
inline double interval_gap(double d, Interval iv) {
  if (d < iv.lo) return iv.lo - d;
  if (d > iv.hi) return d - iv.hi;
  return 0.0;
}

// Squared time-domain bound: feature_dist_sq / qlen plus the largest squared
// interval gap over pivots.
double corrected_lower_bound(double feature_dist_sq, std::span<const Interval> pivot_intervals,
                             std::span<const double> query_pivot_dist, std::size_t qlen);

// Channel-resolved correction: for each pivot, the sum over the query channels
// of squared gaps between the query's channel distance and the stored
// [lo, hi] interval of that channel; the maximum over pivots is returned.
// `intervals` layout [pivot][channel][lo, hi] over all `channel_count`
// channels; `query_dists` layout [pivot][r] with r indexing channel_ids.
double pivot_correction(std::span<const double> intervals, std::size_t channel_count,
                        std::span<const double> query_dists,
                        std::span<const std::size_t> channel_ids);

}  // namespace mtsq::dft
