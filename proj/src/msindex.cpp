#include "mtsq/msindex.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "mtsq/binary_io.hpp"

namespace mtsq {

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stage) {
  // splitmix64 finalizer over (seed, stage)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stage + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

constexpr std::uint64_t kSampleStage = 1;
constexpr std::uint64_t kPivotStage = 2;

struct Located {
  std::size_t position;
  std::size_t offset;
};

// Uniform sample of distinct subsequences, in ascending global order.
std::vector<Located> sample_subsequences(const SeriesCollection& series, std::size_t qlen,
                                         std::size_t sample_size, std::uint64_t seed) {
  std::vector<std::size_t> prefix{0};
  std::vector<std::size_t> owner;
  for (std::size_t p = 0; p < series.size(); ++p) {
    const std::size_t count = series[p].subsequence_count(qlen);
    if (count == 0) continue;
    prefix.push_back(prefix.back() + count);
    owner.push_back(p);
  }
  const std::size_t total = prefix.back();
  std::vector<std::size_t> picks;
  if (total <= sample_size) {
    picks.resize(total);
    for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, total - 1);
    std::vector<char> taken(total, 0);
    while (picks.size() < sample_size) {
      const std::size_t g = dist(rng);
      if (taken[g]) continue;
      taken[g] = 1;
      picks.push_back(g);
    }
    std::sort(picks.begin(), picks.end());
  }
  std::vector<Located> out;
  out.reserve(picks.size());
  for (std::size_t g : picks) {
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), g);
    const std::size_t slot = static_cast<std::size_t>(it - prefix.begin()) - 1;
    out.push_back(Located{owner[slot], g - prefix[slot]});
  }
  return out;
}

std::vector<double> dimension_variances(const std::vector<dft::FeatureVector>& features, std::size_t dims) {
  std::vector<double> var(dims, 0.0);
  if (features.empty()) return var;
  const double n = static_cast<double>(features.size());
  for (std::size_t d = 0; d < dims; ++d) {
    double mean = 0.0;
    for (const auto& f : features) mean += f[d];
    mean /= n;
    double ss = 0.0;
    for (const auto& f : features) ss += (f[d] - mean) * (f[d] - mean);
    var[d] = ss / n;
  }
  return var;
}

void validate_config(const BuildConfig& config) {
  if (!(config.d_target > 0.0 && config.d_target <= 1.0)) {
    throw InvalidInput("d_target: must lie in (0, 1]");
  }
  if (!(config.leaf_fraction > 0.0 && config.leaf_fraction <= 1.0)) {
    throw InvalidInput("leaf_fraction: must lie in (0, 1]");
  }
  if (config.sample_size == 0) throw InvalidInput("sample_size: must be positive");
}

}  // namespace

MsIndex MsIndex::build(SeriesHandle series, std::size_t qlen, Mode mode, const BuildConfig& config) {
  validate_config(config);
  if (!series || series->empty()) throw BuildError("dataset is empty");
  if (qlen == 0) throw BuildError("qlen: must be positive");

  MsIndex index;
  index.series_ = std::move(series);
  index.qlen_ = qlen;
  index.mode_ = mode;
  index.config_ = config;
  const SeriesCollection& data = *index.series_;
  index.channels_ = data.front().channel_count();
  for (const auto& s : data) {
    if (s.channel_count() != index.channels_) {
      throw BuildError("series " + std::to_string(s.id()) + " has " + std::to_string(s.channel_count()) +
                       " channels, expected " + std::to_string(index.channels_));
    }
    if (s.length() < qlen) {
      warn("series " + std::to_string(s.id()) + " is shorter than qlen " + std::to_string(qlen) + "; skipped");
      ++index.skipped_series_;
    }
    index.total_subsequences_ += s.subsequence_count(qlen);
  }
  if (index.total_subsequences_ == 0) {
    throw BuildError("no series has at least qlen = " + std::to_string(qlen) + " observations");
  }
  index.index_series_positions();

  // Sample, plan and partition weights.
  const auto sample = sample_subsequences(data, qlen, config.sample_size, stage_seed(config.seed, kSampleStage));
  std::vector<Window> raw_sample;
  raw_sample.reserve(sample.size());
  for (const auto& loc : sample) raw_sample.push_back(extract_window(data[loc.position], loc.offset, qlen));
  index.plan_ = dft::select_coefficients(dft::estimate_ardc(raw_sample, qlen, mode), config.d_target);
  const dft::Reconstructor reconstructor(index.plan_);

  std::vector<dft::FeatureVector> sample_features;
  std::vector<Window> sample_remainders;
  for (Window w : raw_sample) {
    normalize_window(w, mode);
    sample_features.push_back(dft::extract_features(w, index.plan_));
    sample_remainders.push_back(dft::remainder_from_features(w, sample_features.back(), reconstructor));
  }
  const std::size_t dims = index.plan_.dimensions();
  std::vector<double> weights;
  if (config.weighted_partitioning) {
    weights = spatial::partition_weights(dimension_variances(sample_features, dims));
  } else {
    weights.assign(dims, 1.0 / static_cast<double>(dims));
  }

  if (config.pivot_count > 0) {
    index.pivots_ = dft::build_pivots(sample_remainders, config.pivot_count,
                                      stage_seed(config.seed, kPivotStage), mode);
  }
  index.pivots_.mode = mode;

  // Features and pivot distances of every subsequence.
  if (mode == Mode::znorm) index.stats_.resize(data.size());
  spatial::PointSet points;
  points.dims = dims;
  points.interval_width = index.pivots_.size() * index.channels_;
  points.coords.reserve(index.total_subsequences_ * dims);
  points.series_ids.reserve(index.total_subsequences_);
  points.offsets.reserve(index.total_subsequences_);
  points.pivot_distances.reserve(index.total_subsequences_ * points.interval_width);
  for (std::size_t p = 0; p < data.size(); ++p) {
    const auto& s = data[p];
    if (s.length() < qlen) continue;
    const std::vector<SlidingStats>* stats = nullptr;
    if (mode == Mode::znorm) {
      index.stats_[p] = mass::compute_series_stats(s, qlen);
      stats = &index.stats_[p].channels;
    }
    const dft::FeatureTable table = dft::sliding_features(s, index.plan_, stats);
    std::vector<double> dists;
    for (std::size_t off = 0; off < table.rows; ++off) {
      if (!index.pivots_.empty()) {
        Window w = extract_window(s, off, qlen);
        normalize_window(w, mode);
        dists = dft::pivot_channel_distances(dft::remainder_from_features(w, table.row(off), reconstructor),
                                             index.pivots_);
      }
      points.add(table.row(off), s.id(), off, dists);
    }
  }

  index.leaf_size_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(static_cast<double>(index.total_subsequences_) * config.leaf_fraction)));
  spatial::BulkLoadConfig load;
  load.leaf_size = index.leaf_size_;
  load.node_capacity = config.node_capacity;
  load.weights = std::move(weights);
  index.tree_ = spatial::RTree::bulk_load(points, load);
  return index;
}

void MsIndex::index_series_positions() {
  positions_.clear();
  for (std::size_t p = 0; p < series_->size(); ++p) positions_.emplace_back((*series_)[p].id(), p);
  std::sort(positions_.begin(), positions_.end());
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    if (positions_[i].first == positions_[i - 1].first) {
      throw BuildError("duplicate series id " + std::to_string(positions_[i].first));
    }
  }
}

std::size_t MsIndex::position_of(std::uint64_t series_id) const {
  const auto it = std::lower_bound(positions_.begin(), positions_.end(), std::make_pair(series_id, std::size_t{0}));
  if (it == positions_.end() || it->first != series_id) {
    throw FormatError("tree: entry refers to unknown series " + std::to_string(series_id));
  }
  return it->second;
}

const mass::SeriesStats* MsIndex::stats_for(std::size_t position) const {
  return stats_.empty() ? nullptr : &stats_[position];
}

void MsIndex::check_query(const Query& query) const {
  if (query.qlen() != qlen_) {
    throw InvalidQuery("qlen: query length " + std::to_string(query.qlen()) + " does not match index qlen " +
                       std::to_string(qlen_));
  }
  if (query.mode != mode_) {
    throw InvalidQuery(std::string("mode: query mode ") + std::string(to_string(query.mode)) +
                       " does not match index mode " + std::string(to_string(mode_)));
  }
  if (query.k == 0) throw InvalidQuery("k: must be positive");
  validate_channels(query.channel_ids, channels_);
  if (query.values.channels != query.channel_ids.size()) {
    throw InvalidQuery("channels: query rows do not match the channel list");
  }
}

namespace {

// Per-query bound functions over the feature space.
struct Bounds {
  dft::FeatureVector features;
  std::vector<std::size_t> dims;
  std::vector<double> pivot_dists;
  double inv_qlen = 1.0;

  double plain(const spatial::Mbr& mbr) const { return spatial::mindist_sq(mbr, features, dims) * inv_qlen; }
};

Bounds make_bounds(const mass::PreparedQuery& pq, const dft::CoefficientPlan& plan, const dft::PivotSet& pivots,
                   bool with_pivots) {
  Bounds b;
  b.features = dft::extract_features(pq.normalized(), plan, pq.channel_ids());
  b.dims = plan.dimensions_for(pq.channel_ids());
  b.inv_qlen = 1.0 / static_cast<double>(plan.qlen());
  if (with_pivots) {
    const dft::Reconstructor reconstructor(plan);
    const Window rem = dft::remainder_from_features(pq.normalized(), b.features, reconstructor, pq.channel_ids());
    b.pivot_dists = dft::pivot_channel_distances(rem, pivots, pq.channel_ids());
  }
  return b;
}

}  // namespace

QueryResult MsIndex::knn_query(const Query& query, const QueryOptions& options) const {
  check_query(query);
  const mass::PreparedQuery pq(query);
  const bool with_pivots = options.pivot_correction && !pivots_.empty();
  const Bounds bounds = make_bounds(pq, plan_, pivots_, with_pivots);
  const auto& ids = pq.channel_ids();

  const spatial::BoundFn order = [&](const spatial::Mbr& mbr, std::span<const double>) { return bounds.plain(mbr); };
  const spatial::BoundFn filter = [&](const spatial::Mbr& mbr, std::span<const double> iv) {
    double b = bounds.plain(mbr);
    if (with_pivots) b += dft::pivot_correction(iv, channels_, bounds.pivot_dists, ids);
    return b;
  };

  QueryResult result;
  QueryStats& stats = result.stats;
  stats.subsequences_total = total_subsequences_;
  std::vector<mass::ScoredOffset> candidates;
  auto verify = [&](std::uint32_t entry_id) {
    const auto& e = tree_.entry(entry_id);
    const std::size_t pos = position_of(e.series_id);
    const auto profile = mass::multivariate_profile(
        pq, (*series_)[pos], mass::OffsetRange{e.start_offset, e.end_offset}, stats_for(pos));
    for (std::size_t i = 0; i < profile.size(); ++i) {
      candidates.push_back(mass::ScoredOffset{profile[i] * profile[i], pos, e.start_offset + i});
    }
    stats.subsequences_verified += profile.size();
  };

  // Probe 1: the k entries with the smallest bounds seed tau_k.
  spatial::NearestBrowser browser(tree_, order);
  std::vector<std::uint32_t> probe1;
  while (probe1.size() < query.k) {
    const auto emitted = browser.next();
    if (!emitted) break;
    verify(emitted->entry);
    probe1.push_back(emitted->entry);
  }
  stats.entries_emitted_probe1 = probe1.size();

  double tau_sq = kInfinity;
  if (candidates.size() >= query.k) {
    std::vector<double> d2;
    d2.reserve(candidates.size());
    for (const auto& c : candidates) d2.push_back(c.distance_sq);
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(query.k - 1), d2.end());
    tau_sq = d2[query.k - 1];
  }
  stats.tau_k = std::sqrt(tau_sq);

  // Probe 2: resume the browse as a range query at tau_k.
  const double threshold = std::isinf(tau_sq) ? kInfinity : tau_sq + mass::squared_slack(pq.energy(), tau_sq);
  for (std::uint32_t id : probe1) {
    const auto& e = tree_.entry(id);
    if (filter(e.mbr, e.pivot_intervals) <= threshold) ++stats.entries_returned_probe2;
  }
  for (const auto& emission : browser.drain_within(threshold, filter)) {
    verify(emission.entry);
    ++stats.entries_returned_probe2;
  }
  stats.nodes_visited = browser.nodes_visited();

  result.matches = mass::refine_top_k(std::move(candidates), query.k, pq, *series_);
  return result;
}

std::vector<Match> MsIndex::range_query(const Query& query, double tau_sq, QueryStats* stats) const {
  check_query(query);
  if (!(tau_sq >= 0.0)) throw InvalidQuery("tau: threshold must be non-negative");
  const mass::PreparedQuery pq(query);
  const bool with_pivots = !pivots_.empty();
  const Bounds bounds = make_bounds(pq, plan_, pivots_, with_pivots);
  const auto& ids = pq.channel_ids();
  const spatial::BoundFn bound = [&](const spatial::Mbr& mbr, std::span<const double> iv) {
    double b = bounds.plain(mbr);
    if (with_pivots) b += dft::pivot_correction(iv, channels_, bounds.pivot_dists, ids);
    return b;
  };
  const double threshold = std::isinf(tau_sq) ? kInfinity : tau_sq + mass::squared_slack(pq.energy(), tau_sq);

  QueryStats local;
  local.subsequences_total = total_subsequences_;
  local.tau_k = std::sqrt(tau_sq);
  std::vector<Match> out;
  const auto hits = spatial::range_query(tree_, bound, threshold, &local.nodes_visited);
  local.entries_returned_probe2 = hits.size();
  for (std::uint32_t id : hits) {
    const auto& e = tree_.entry(id);
    const std::size_t pos = position_of(e.series_id);
    const auto& s = (*series_)[pos];
    const auto profile =
        mass::multivariate_profile(pq, s, mass::OffsetRange{e.start_offset, e.end_offset}, stats_for(pos));
    local.subsequences_verified += profile.size();
    for (std::size_t i = 0; i < profile.size(); ++i) {
      if (profile[i] * profile[i] > threshold) continue;
      const std::size_t off = e.start_offset + i;
      const double d2 = subsequence_distance_sq(s, off, pq.normalized(), ids, mode_);
      out.push_back(Match{std::sqrt(d2), SubsequenceRef{s.id(), off, qlen_}});
    }
  }
  sort_matches(out);
  if (stats != nullptr) *stats = local;
  return out;
}

IndexSummary MsIndex::summary() const {
  IndexSummary s;
  s.series = series_->size();
  s.skipped_series = skipped_series_;
  s.subsequences = total_subsequences_;
  s.entries = tree_.entry_count();
  s.nodes = tree_.node_count();
  s.leaves = tree_.leaf_count();
  s.height = tree_.height();
  s.leaf_size = leaf_size_;
  s.dimensions = plan_.dimensions();
  return s;
}

// Snapshot layout (little-endian): magic, version, mode, qlen, build config,
// plan (ARDC table and selections), pivots, series metadata with the dataset
// fingerprint, then the r-tree in pre-order.
namespace {

constexpr char kIndexMagic[5] = "MSIX";
constexpr std::uint32_t kIndexVersion = 1;
constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;

}  // namespace

void MsIndex::save(std::ostream& out) const {
  io::write_magic(out, kIndexMagic);
  io::write_u32(out, kIndexVersion);
  io::write_u8(out, static_cast<std::uint8_t>(mode_));
  io::write_u64(out, qlen_);
  io::write_u64(out, channels_);

  io::write_f64(out, config_.d_target);
  io::write_f64(out, config_.leaf_fraction);
  io::write_u64(out, config_.pivot_count);
  io::write_u64(out, config_.sample_size);
  io::write_u64(out, config_.seed);
  io::write_u8(out, config_.weighted_partitioning ? 1 : 0);
  io::write_u64(out, config_.node_capacity);

  const auto& ardc = plan_.ardc();
  io::write_u8(out, ardc.uniform_fallback ? 1 : 0);
  for (double v : ardc.values) io::write_f64(out, v);
  io::write_f64(out, plan_.d_target());
  for (std::size_t c = 0; c < channels_; ++c) {
    io::write_u64(out, plan_.selected(c).size());
    for (std::uint32_t j : plan_.selected(c)) io::write_u32(out, j);
  }

  io::write_u64(out, pivots_.size());
  for (const auto& p : pivots_.pivots) {
    for (double v : p.values) io::write_f64(out, v);
  }

  io::write_u64(out, leaf_size_);
  io::write_u64(out, series_->size());
  for (const auto& s : *series_) {
    io::write_u64(out, s.id());
    io::write_u64(out, s.length());
  }
  io::write_u64(out, dataset_fingerprint(*series_));
  tree_.serialize(out);
  if (!out) throw Error("failed to write index snapshot");
}

MsIndex MsIndex::load(std::istream& in, SeriesHandle series, std::optional<std::size_t> expected_qlen) {
  if (!series) throw InvalidInput("dataset: no series supplied for the snapshot");
  io::expect_magic(in, kIndexMagic, "index snapshot");
  const std::uint32_t version = io::read_u32(in, "version");
  if (version != kIndexVersion) {
    throw FormatError("version: snapshot version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kIndexVersion) + ")");
  }
  MsIndex index;
  const std::uint8_t mode = io::read_u8(in, "mode");
  if (mode > 1) throw FormatError("mode: corrupt value " + std::to_string(mode));
  index.mode_ = static_cast<Mode>(mode);
  index.qlen_ = io::read_count(in, "qlen", kLimit);
  if (index.qlen_ == 0) throw FormatError("qlen: zero in snapshot");
  if (expected_qlen && *expected_qlen != index.qlen_) {
    throw FormatError("qlen: snapshot was built for qlen " + std::to_string(index.qlen_) + ", not " +
                      std::to_string(*expected_qlen));
  }
  index.channels_ = io::read_count(in, "channels", 1 << 20);

  BuildConfig& cfg = index.config_;
  cfg.d_target = io::read_f64(in, "d_target");
  cfg.leaf_fraction = io::read_f64(in, "leaf_fraction");
  cfg.pivot_count = io::read_count(in, "pivot_count", kLimit);
  cfg.sample_size = io::read_count(in, "sample_size", kLimit);
  cfg.seed = io::read_u64(in, "seed");
  cfg.weighted_partitioning = io::read_u8(in, "weighted") != 0;
  cfg.node_capacity = io::read_count(in, "node_capacity", kLimit);

  dft::ArdcTable ardc;
  ardc.channels = index.channels_;
  ardc.qlen = index.qlen_;
  ardc.mode = index.mode_;
  ardc.uniform_fallback = io::read_u8(in, "ardc flag") != 0;
  ardc.values.resize(index.channels_ * ardc.coefficients());
  for (double& v : ardc.values) v = io::read_f64(in, "ardc");
  const double d_target = io::read_f64(in, "plan d_target");
  std::vector<std::vector<std::uint32_t>> selected(index.channels_);
  for (auto& sel : selected) {
    sel.resize(io::read_count(in, "selection size", ardc.coefficients()));
    for (auto& j : sel) j = io::read_u32(in, "selection");
  }
  try {
    index.plan_ = dft::CoefficientPlan(std::move(ardc), d_target, std::move(selected));
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }

  const std::uint64_t pivots = io::read_count(in, "pivot count", 1 << 20);
  index.pivots_.mode = index.mode_;
  for (std::uint64_t p = 0; p < pivots; ++p) {
    Window w(index.channels_, index.qlen_);
    for (double& v : w.values) v = io::read_f64(in, "pivot");
    index.pivots_.pivots.push_back(std::move(w));
  }

  index.leaf_size_ = io::read_count(in, "leaf size", kLimit);
  const std::uint64_t n = io::read_count(in, "series count", kLimit);
  if (n != series->size()) {
    throw FormatError("dataset: snapshot covers " + std::to_string(n) + " series, dataset has " +
                      std::to_string(series->size()));
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t id = io::read_u64(in, "series id");
    const std::uint64_t m = io::read_u64(in, "series length");
    const auto& s = (*series)[i];
    if (s.id() != id || s.length() != m) {
      throw FormatError("dataset: series " + std::to_string(i) + " does not match the snapshot");
    }
    if (s.channel_count() != index.channels_) throw FormatError("dataset: channel count does not match the snapshot");
  }
  if (io::read_u64(in, "fingerprint") != dataset_fingerprint(*series)) {
    throw FormatError("dataset: fingerprint does not match the snapshot");
  }
  index.tree_ = spatial::RTree::deserialize(in);
  if (index.tree_.dims() != index.plan_.dimensions() ||
      index.tree_.interval_width() != index.pivots_.size() * index.channels_) {
    throw FormatError("tree: dimensions do not match the plan");
  }

  index.series_ = std::move(series);
  index.index_series_positions();
  for (const auto& s : *index.series_) {
    if (s.length() < index.qlen_) ++index.skipped_series_;
    index.total_subsequences_ += s.subsequence_count(index.qlen_);
  }
  if (index.tree_.member_count() != index.total_subsequences_) {
    throw FormatError("tree: entries do not cover the dataset's subsequences");
  }
  for (const auto& e : index.tree_.entries()) {
    const std::size_t pos = index.position_of(e.series_id);
    if (e.end_offset + index.qlen_ > (*index.series_)[pos].length()) {
      throw FormatError("tree: entry offsets exceed series " + std::to_string(e.series_id));
    }
  }
  if (index.mode_ == Mode::znorm) {
    index.stats_.resize(index.series_->size());
    for (std::size_t p = 0; p < index.series_->size(); ++p) {
      if ((*index.series_)[p].length() >= index.qlen_) {
        index.stats_[p] = mass::compute_series_stats((*index.series_)[p], index.qlen_);
      }
    }
  }
  return index;
}

}  // namespace mtsq
