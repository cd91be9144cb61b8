#include "mtsq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "mtsq/mass.hpp"

namespace mtsq {

namespace {

void check_query(std::span<const MultivariateTimeSeries> series, const Query& query) {
  if (query.qlen() == 0) throw InvalidQuery("qlen: query must be non-empty");
  if (query.k == 0) throw InvalidQuery("k: must be positive");
  if (query.values.channels != query.channel_ids.size()) {
    throw InvalidQuery("channels: query rows do not match the channel list");
  }
  if (!series.empty()) validate_channels(query.channel_ids, series.front().channel_count());
}

Window row_window(const Window& w, std::size_t r) {
  Window out(1, w.length);
  const auto row = w.channel(r);
  std::copy(row.begin(), row.end(), out.values.begin());
  return out;
}

}  // namespace

std::vector<Match> brute_force_knn(std::span<const MultivariateTimeSeries> series, const Query& query) {
  check_query(series, query);
  Window normalized = query.values;
  normalize_window(normalized, query.mode);
  const std::size_t qlen = query.qlen();
  std::vector<Match> all;
  for (const auto& s : series) {
    if (s.channel_count() <= query.channel_ids.back()) {
      throw InvalidQuery("channels: series " + std::to_string(s.id()) + " lacks channel " +
                         std::to_string(query.channel_ids.back()));
    }
    for (std::size_t off = 0; off < s.subsequence_count(qlen); ++off) {
      const double d2 = subsequence_distance_sq(s, off, normalized, query.channel_ids, query.mode);
      all.push_back(Match{std::sqrt(d2), SubsequenceRef{s.id(), off, qlen}});
    }
  }
  const std::size_t k = std::min(query.k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), match_less);
  all.resize(k);
  return all;
}

std::vector<Match> mass_scan_knn(std::span<const MultivariateTimeSeries> series, const Query& query) {
  check_query(series, query);
  const mass::PreparedQuery pq(query);
  const std::size_t qlen = query.qlen();
  std::vector<mass::ScoredOffset> scored;
  for (std::size_t p = 0; p < series.size(); ++p) {
    const std::size_t count = series[p].subsequence_count(qlen);
    if (count == 0) continue;
    const auto profile = mass::multivariate_profile(pq, series[p], mass::OffsetRange{0, count - 1});
    for (std::size_t off = 0; off < count; ++off) {
      scored.push_back(mass::ScoredOffset{profile[off] * profile[off], p, off});
    }
  }
  return mass::refine_top_k(std::move(scored), query.k, pq, series);
}

namespace {

SeriesHandle project_channel(std::span<const MultivariateTimeSeries> series, std::size_t channel) {
  auto out = std::make_shared<SeriesCollection>();
  out->reserve(series.size());
  for (const auto& s : series) {
    if (channel >= s.channel_count()) throw InvalidInput("channel index: channel out of range");
    const auto row = s.channel(channel);
    out->emplace_back(s.id(), 1, s.length(), std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

BuildConfig without_pivots(BuildConfig config) {
  config.pivot_count = 0;
  return config;
}

}  // namespace

DftChannelIndex::DftChannelIndex(std::span<const MultivariateTimeSeries> series, std::size_t channel,
                                 std::size_t qlen, Mode mode, const BuildConfig& config)
    : channel_(channel),
      index_(MsIndex::build(project_channel(series, channel), qlen, mode, without_pivots(config))) {}

Query DftChannelIndex::make_query(std::span<const double> q) const {
  Query query;
  query.values = Window(1, q.size());
  std::copy(q.begin(), q.end(), query.values.values.begin());
  query.channel_ids = {0};
  query.mode = index_.mode();
  return query;
}

std::vector<ChannelCandidate> DftChannelIndex::query_topk(std::span<const double> q, std::size_t k,
                                                          ChannelQueryStats* stats) const {
  Query query = make_query(q);
  query.k = k;
  const QueryResult result = index_.knn_query(query);
  std::vector<ChannelCandidate> out;
  for (const auto& m : result.matches) {
    out.push_back(ChannelCandidate{m.ref.series_id, m.ref.offset, m.distance * m.distance});
  }
  if (stats != nullptr) {
    stats->subsequences_verified += result.stats.subsequences_verified;
    stats->nodes_visited += result.stats.nodes_visited;
  }
  return out;
}

std::vector<ChannelCandidate> DftChannelIndex::query_range(std::span<const double> q, double tau_sq,
                                                           ChannelQueryStats* stats) const {
  QueryStats qs;
  const auto matches = index_.range_query(make_query(q), tau_sq, &qs);
  std::vector<ChannelCandidate> out;
  for (const auto& m : matches) {
    out.push_back(ChannelCandidate{m.ref.series_id, m.ref.offset, m.distance * m.distance});
  }
  if (stats != nullptr) {
    stats->subsequences_verified += qs.subsequences_verified;
    stats->nodes_visited += qs.nodes_visited;
  }
  return out;
}

std::vector<std::unique_ptr<ChannelIndex>> build_channel_indices(std::span<const MultivariateTimeSeries> series,
                                                                 std::size_t qlen, Mode mode,
                                                                 const BuildConfig& config) {
  if (series.empty()) throw BuildError("dataset is empty");
  std::vector<std::unique_ptr<ChannelIndex>> out;
  for (std::size_t c = 0; c < series.front().channel_count(); ++c) {
    out.push_back(std::make_unique<DftChannelIndex>(series, c, qlen, mode, config));
  }
  return out;
}

std::vector<Match> uts_baseline_knn(std::span<const std::unique_ptr<ChannelIndex>> indices,
                                    std::span<const MultivariateTimeSeries> series, const Query& query,
                                    UtsStats* stats) {
  check_query(series, query);
  const auto& ids = query.channel_ids;
  for (std::size_t ch : ids) {
    if (ch >= indices.size() || !indices[ch] || indices[ch]->channel() != ch) {
      throw InvalidQuery("channels: no channel index for channel " + std::to_string(ch));
    }
  }
  const std::size_t qlen = query.qlen();
  Window normalized = query.values;
  normalize_window(normalized, query.mode);
  std::vector<Window> rows;
  for (std::size_t r = 0; r < ids.size(); ++r) rows.push_back(row_window(normalized, r));

  std::unordered_map<std::uint64_t, std::size_t> position;
  std::size_t total = 0;
  for (std::size_t p = 0; p < series.size(); ++p) {
    position.emplace(series[p].id(), p);
    total += series[p].subsequence_count(qlen);
  }
  std::size_t stride = 1;
  for (const auto& s : series) stride = std::max(stride, s.length() + 1);
  auto key = [&](std::uint64_t sid, std::uint64_t off) { return position.at(sid) * stride + off; };

  UtsStats local;
  local.subsequences_total = total;
  ChannelQueryStats channel_stats;
  std::unordered_set<std::size_t> verified;
  std::vector<Match> pool;  // exact full distances, one per distinct subsequence
  auto add_full = [&](std::uint64_t sid, std::uint64_t off) {
    if (!verified.insert(key(sid, off)).second) return;
    const auto& s = series[position.at(sid)];
    const double d2 = subsequence_distance_sq(s, off, normalized, ids, query.mode);
    pool.push_back(Match{std::sqrt(d2), SubsequenceRef{sid, off, qlen}});
  };
  auto channel_sq = [&](std::size_t r, const Match& m) {
    const auto& s = series[position.at(m.ref.series_id)];
    const std::size_t ch = ids[r];
    return subsequence_distance_sq(s, m.ref.offset, rows[r], std::span<const std::size_t>(&ch, 1), query.mode);
  };

  // Per-channel top-k, then the estimated global top-k over their union.
  for (std::size_t r = 0; r < ids.size(); ++r) {
    for (const auto& c : indices[ids[r]]->query_topk(rows[r].values, query.k, &channel_stats)) {
      add_full(c.series_id, c.offset);
    }
  }
  std::sort(pool.begin(), pool.end(), match_less);
  std::vector<Match> estimate(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(query.k, pool.size())));

  // Per-channel squared thresholds from the estimate.
  local.thresholds_sq.assign(ids.size(), 0.0);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    for (const auto& m : estimate) local.thresholds_sq[r] = std::max(local.thresholds_sq[r], channel_sq(r, m));
  }

  // Re-query every channel at its threshold and drop the channel's false positives.
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const double tau = local.thresholds_sq[r];
    for (const auto& c : indices[ids[r]]->query_range(rows[r].values, tau, &channel_stats)) {
      const Match probe{0.0, SubsequenceRef{c.series_id, c.offset, qlen}};
      if (channel_sq(r, probe) <= tau) add_full(c.series_id, c.offset);
    }
  }

  std::sort(pool.begin(), pool.end(), match_less);
  if (pool.size() > query.k) pool.resize(query.k);
  local.nodes_visited = channel_stats.nodes_visited;
  local.subsequences_verified = std::min(total, channel_stats.subsequences_verified + verified.size());
  if (stats != nullptr) *stats = std::move(local);
  return pool;
}

}  // namespace mtsq
