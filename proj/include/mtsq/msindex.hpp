#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mtsq/core.hpp"
#include "mtsq/dft.hpp"
#include "mtsq/mass.hpp"
#include "mtsq/spatial.hpp"

namespace mtsq {

struct BuildConfig {
  double d_target = 0.60;
  double leaf_fraction = 0.0005;
  std::size_t pivot_count = 1;
  std::size_t sample_size = 100;
  std::uint64_t seed = 0;
  bool weighted_partitioning = true;
  std::size_t node_capacity = 0;  // 0: max(2, leaf size)

  friend bool operator==(const BuildConfig&, const BuildConfig&) = default;
};

struct QueryStats {
  std::size_t entries_emitted_probe1 = 0;
  std::size_t entries_returned_probe2 = 0;
  std::size_t subsequences_verified = 0;
  std::size_t subsequences_total = 0;
  std::size_t nodes_visited = 0;
  double tau_k = kInfinity;

  double pruning_effectiveness() const {
    return subsequences_total == 0
               ? 0.0
               : 1.0 - static_cast<double>(subsequences_verified) / static_cast<double>(subsequences_total);
  }
};

struct QueryOptions {
  // Applies the pivot correction while draining probe 2 (no effect without pivots).
  bool pivot_correction = true;
};

struct QueryResult {
  std::vector<Match> matches;
  QueryStats stats;
};

// Build-time summary of an index.
struct IndexSummary {
  std::size_t series = 0;
  std::size_t skipped_series = 0;
  std::size_t subsequences = 0;
  std::size_t entries = 0;
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t height = 0;
  std::size_t leaf_size = 0;
  std::size_t dimensions = 0;
  double compression() const {
    return entries == 0 ? 0.0 : static_cast<double>(subsequences) / static_cast<double>(entries);
  }
};

class MsIndex {
 public:
  // Throws BuildError when no series is at least qlen long or channel counts differ.
  static MsIndex build(SeriesHandle series, std::size_t qlen, Mode mode, const BuildConfig& config = {});

  // Two-probe exact kNN. Throws InvalidQuery on qlen, mode or channel mismatch.
  QueryResult knn_query(const Query& query, const QueryOptions& options = {}) const;

  // Every subsequence within squared distance tau_sq on the query channels
  // (plus a round-off margin; the result may hold a few just beyond it).
  // Sorted under the core ordering.
  std::vector<Match> range_query(const Query& query, double tau_sq, QueryStats* stats = nullptr) const;

  void save(std::ostream& out) const;
  // `series` must be the collection the index was built on (checked by
  // fingerprint). A non-empty expected_qlen must match the stored one.
  static MsIndex load(std::istream& in, SeriesHandle series, std::optional<std::size_t> expected_qlen = {});

  std::size_t qlen() const { return qlen_; }
  Mode mode() const { return mode_; }
  std::size_t channel_count() const { return channels_; }
  const BuildConfig& config() const { return config_; }
  const dft::CoefficientPlan& plan() const { return plan_; }
  const dft::PivotSet& pivots() const { return pivots_; }
  const spatial::RTree& tree() const { return tree_; }
  const SeriesCollection& series() const { return *series_; }
  std::size_t subsequence_count() const { return total_subsequences_; }
  IndexSummary summary() const;

 private:
  MsIndex() = default;
  void index_series_positions();
  const mass::SeriesStats* stats_for(std::size_t position) const;
  std::size_t position_of(std::uint64_t series_id) const;
  void check_query(const Query& query) const;

  SeriesHandle series_;
  std::size_t qlen_ = 0;
  Mode mode_ = Mode::raw;
  std::size_t channels_ = 0;
  BuildConfig config_;
  dft::CoefficientPlan plan_;
  dft::PivotSet pivots_;
  spatial::RTree tree_;
  std::size_t leaf_size_ = 0;
  std::size_t skipped_series_ = 0;
  std::size_t total_subsequences_ = 0;
  std::vector<mass::SeriesStats> stats_;  // znorm only, per series position
  std::vector<std::pair<std::uint64_t, std::size_t>> positions_;  // sorted (id, position)
};

// Stage-specific RNG seed derived from the build seed.
std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage);

}  // namespace mtsq
