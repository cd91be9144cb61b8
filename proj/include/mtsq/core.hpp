#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mtsq {

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InvalidInput : public Error {
 public:
  using Error::Error;
};
class InvalidQuery : public Error {
 public:
  using Error::Error;
};
class BuildError : public Error {
 public:
  using Error::Error;
};
class FormatError : public Error {
 public:
  using Error::Error;
};

void warn(std::string_view message);
// Suppresses warnings written to stderr (tests and benchmarks use this).
void set_warnings_enabled(bool enabled);

enum class Mode : std::uint8_t { raw = 0, znorm = 1 };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

inline constexpr double kZeroVarianceEpsilon = 1e-12;

// c x m matrix of observations, channel-major.
class MultivariateTimeSeries {
 public:
  MultivariateTimeSeries() = default;
  MultivariateTimeSeries(std::uint64_t id, std::size_t channels, std::size_t length,
                         std::vector<double> values);
  MultivariateTimeSeries(std::uint64_t id, const std::vector<std::vector<double>>& channels);

  std::uint64_t id() const { return id_; }
  std::size_t channel_count() const { return channels_; }
  std::size_t length() const { return length_; }

  std::span<const double> channel(std::size_t c) const {
    return {values_.data() + c * length_, length_};
  }
  std::span<const double> values() const { return values_; }

  // Number of windows of the given length (0 when the series is too short).
  std::size_t subsequence_count(std::size_t qlen) const {
    return length_ >= qlen ? length_ - qlen + 1 : 0;
  }

 private:
  std::uint64_t id_ = 0;
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  std::vector<double> values_;
};

struct SubsequenceRef {
  std::uint64_t series_id = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  friend bool operator==(const SubsequenceRef&, const SubsequenceRef&) = default;
};

// A dense channels x length block, channel-major. Used for queries, samples
// and remainders.
struct Window {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> values;

  Window() = default;
  Window(std::size_t c, std::size_t len) : channels(c), length(len), values(c * len, 0.0) {}

  std::span<double> channel(std::size_t c) { return {values.data() + c * length, length}; }
  std::span<const double> channel(std::size_t c) const {
    return {values.data() + c * length, length};
  }
};

// Copies the window at `offset` on the listed channels (all channels if empty).
Window extract_window(const MultivariateTimeSeries& series, std::size_t offset, std::size_t length,
                      std::span<const std::size_t> channels = {});

struct Query {
  Window values;  // |channel_ids| x qlen
  std::vector<std::size_t> channel_ids;
  std::size_t k = 1;
  Mode mode = Mode::raw;

  std::size_t qlen() const { return values.length; }
};

struct Match {
  double distance = 0.0;
  SubsequenceRef ref;
};

// Ascending (distance, series_id, offset).
bool match_less(const Match& a, const Match& b);
void sort_matches(std::vector<Match>& matches);

// Euclidean distance over `common_channels`. Row i of `a` holds channel
// a_channels[i]; likewise for `b`. Channels missing from either side throw.
double euclidean_distance(const Window& a, std::span<const std::size_t> a_channels, const Window& b,
                          std::span<const std::size_t> b_channels,
                          std::span<const std::size_t> common_channels);
// Both windows share the same channel numbering; compares the listed rows.
double euclidean_distance(const Window& a, const Window& b, std::span<const std::size_t> channels);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Population z-normalization; all zeros when sigma <= kZeroVarianceEpsilon.
std::vector<double> znormalize(std::span<const double> x);
void znormalize_inplace(std::span<double> x);
// Normalizes every channel independently when mode == znorm.
void normalize_window(Window& w, Mode mode);

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};
Moments moments(std::span<const double> x);

// Validates channel ids for a dataset with `channel_count` channels: non-empty,
// strictly increasing, in range. Throws InvalidQuery naming the problem.
void validate_channels(std::span<const std::size_t> channel_ids, std::size_t channel_count);

// Exact squared distance between a prepared (already mode-normalized) query
// block and the window of `series` at `offset`. Row r of `query` is compared
// against series channel `channel_ids[r]`.
double subsequence_distance_sq(const MultivariateTimeSeries& series, std::size_t offset,
                               const Window& normalized_query,
                               std::span<const std::size_t> channel_ids, Mode mode);

// Per-window mean and population standard deviation of x for every window of
// the given length. Small-variance windows are recomputed with two passes so
// constant windows come out with stddev exactly at or below the epsilon.
struct SlidingStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};
SlidingStats sliding_stats(std::span<const double> x, std::size_t window);

// Series store shared between an index and the dataset it was built from.
using SeriesCollection = std::vector<MultivariateTimeSeries>;
using SeriesHandle = std::shared_ptr<const SeriesCollection>;

// FNV-1a over ids, shapes and value bytes.
std::uint64_t dataset_fingerprint(std::span<const MultivariateTimeSeries> series);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace mtsq
