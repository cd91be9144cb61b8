#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mtsq/core.hpp"
#include "mtsq/msindex.hpp"

namespace mtsq {

// Direct evaluation of every subsequence. The reference for everything else.
std::vector<Match> brute_force_knn(std::span<const MultivariateTimeSeries> series, const Query& query);

// Full-series MASS profiles merged across the dataset.
std::vector<Match> mass_scan_knn(std::span<const MultivariateTimeSeries> series, const Query& query);

// A subsequence reported by a channel index with its squared distance on that channel.
struct ChannelCandidate {
  std::uint64_t series_id = 0;
  std::uint64_t offset = 0;
  double distance_sq = 0.0;
};

struct ChannelQueryStats {
  std::size_t subsequences_verified = 0;
  std::size_t nodes_visited = 0;
};

// Univariate index over one channel of a dataset. `q` is already normalized
// per the index mode.
class ChannelIndex {
 public:
  virtual ~ChannelIndex() = default;
  virtual std::size_t channel() const = 0;
  // Exact top-k on this channel.
  virtual std::vector<ChannelCandidate> query_topk(std::span<const double> q, std::size_t k,
                                                   ChannelQueryStats* stats = nullptr) const = 0;
  // Contains every subsequence whose channel distance squared is <= tau_sq.
  virtual std::vector<ChannelCandidate> query_range(std::span<const double> q, double tau_sq,
                                                    ChannelQueryStats* stats = nullptr) const = 0;
};

// Channel index backed by a single-channel MS-Index (DFT features in an R-tree,
// no pivots).
class DftChannelIndex : public ChannelIndex {
 public:
  DftChannelIndex(std::span<const MultivariateTimeSeries> series, std::size_t channel, std::size_t qlen, Mode mode,
                  const BuildConfig& config = {});

  std::size_t channel() const override { return channel_; }
  std::vector<ChannelCandidate> query_topk(std::span<const double> q, std::size_t k,
                                           ChannelQueryStats* stats = nullptr) const override;
  std::vector<ChannelCandidate> query_range(std::span<const double> q, double tau_sq,
                                            ChannelQueryStats* stats = nullptr) const override;
  const MsIndex& index() const { return index_; }

 private:
  Query make_query(std::span<const double> q) const;

  std::size_t channel_;
  MsIndex index_;
};

// One DftChannelIndex per dataset channel.
std::vector<std::unique_ptr<ChannelIndex>> build_channel_indices(std::span<const MultivariateTimeSeries> series,
                                                                 std::size_t qlen, Mode mode,
                                                                 const BuildConfig& config = {});

struct UtsStats {
  // Subsequences verified inside the channel indices plus distinct full
  // multivariate verifications, capped at the total.
  std::size_t subsequences_verified = 0;
  std::size_t subsequences_total = 0;
  std::size_t nodes_visited = 0;
  std::vector<double> thresholds_sq;  // per query channel

  double pruning_effectiveness() const {
    return subsequences_total == 0
               ? 0.0
               : 1.0 - static_cast<double>(subsequences_verified) / static_cast<double>(subsequences_total);
  }
};

// Threshold-algorithm wrapper turning per-channel indices into an exact
// multivariate kNN: per-channel top-k, estimated top-k, per-channel squared
// thresholds, per-channel range re-query, exact top-k over the union.
// `indices[i]` must cover channel i of `series`.
std::vector<Match> uts_baseline_knn(std::span<const std::unique_ptr<ChannelIndex>> indices,
                                    std::span<const MultivariateTimeSeries> series, const Query& query,
                                    UtsStats* stats = nullptr);

}  // namespace mtsq
