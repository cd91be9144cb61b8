#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "mtsq/core.hpp"

namespace mtsq::spatial {

struct Mbr {
  std::vector<double> lo;
  std::vector<double> hi;

  static Mbr empty(std::size_t dims);
  static Mbr of_point(std::span<const double> point);

  std::size_t dims() const { return lo.size(); }
  void expand(std::span<const double> point);
  void expand(const Mbr& other);
  bool contains(std::span<const double> point) const;
  bool contains(const Mbr& other) const;
  double center(std::size_t d) const { return 0.5 * (lo[d] + hi[d]); }

  friend bool operator==(const Mbr&, const Mbr&) = default;
};

// A run of time-neighbouring subsequences of one series that ended up in the
// same leaf. Offsets are inclusive.
struct IndexEntry {
  Mbr mbr;
  std::uint64_t series_id = 0;
  std::uint64_t start_offset = 0;
  std::uint64_t end_offset = 0;
  // [lo, hi] of the members' remainder-to-pivot distances, layout
  // [pivot][channel][lo, hi]. Empty without pivots.
  std::vector<double> pivot_intervals;

  std::size_t member_count() const { return static_cast<std::size_t>(end_offset - start_offset + 1); }

  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

// Feature points handed to the bulk loader.
struct PointSet {
  std::size_t dims = 0;
  std::vector<double> coords;  // size() x dims
  std::vector<std::uint64_t> series_ids;
  std::vector<std::uint64_t> offsets;
  // Per-point pivot distances, layout [pivot][channel]; interval_width = pivots x channels.
  std::size_t interval_width = 0;
  std::vector<double> pivot_distances;

  std::size_t size() const { return series_ids.size(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dims, dims}; }
  void add(std::span<const double> point, std::uint64_t series_id, std::uint64_t offset,
           std::span<const double> pivot_dists = {});
};

// Softmax over variances divided by their maximum (uniform when all are zero).
std::vector<double> partition_weights(std::span<const double> variances);
// p_i = ceil((n / leaf_size)^{weights_i}), at least 1.
std::vector<std::size_t> split_counts(std::span<const double> weights, std::size_t n, std::size_t leaf_size);
// split_counts(partition_weights(variances), n, leaf_size).
std::vector<std::size_t> weighted_split_counts(std::span<const double> variances, std::size_t n,
                                               std::size_t leaf_size);
// Dimensions sorted by descending weight (ties by index).
std::vector<std::size_t> dimension_order(std::span<const double> weights);

// Sort-tile-recursive partition of `items`: along dim_order, sort by
// coord(item, d) and cut into counts[d] equal-count slabs, stopping once a
// group holds at most `capacity` items.
using CoordFn = std::function<double(std::size_t item, std::size_t dim)>;
std::vector<std::vector<std::size_t>> str_partition(std::vector<std::size_t> items, const CoordFn& coord,
                                                    std::span<const std::size_t> counts,
                                                    std::span<const std::size_t> dim_order,
                                                    std::size_t capacity);

// Collapses runs of consecutive offsets of the same series into entries.
std::vector<IndexEntry> group_leaf_entries(const PointSet& points, std::span<const std::size_t> members);

struct RTreeNode {
  Mbr mbr;
  std::vector<double> pivot_intervals;  // union of children's intervals
  bool leaf = false;
  std::vector<std::uint32_t> children;  // node ids, or entry ids for leaves

  friend bool operator==(const RTreeNode&, const RTreeNode&) = default;
};

struct BulkLoadConfig {
  std::size_t leaf_size = 1;
  std::size_t node_capacity = 0;  // 0: max(2, leaf_size)
  std::vector<double> weights;    // per-dimension partition weights; empty = uniform
};

class RTree {
 public:
  RTree() = default;

  // STR bulk load followed by leaf grouping. Throws InvalidInput on an empty set.
  static RTree bulk_load(const PointSet& points, const BulkLoadConfig& config);

  std::size_t dims() const { return dims_; }
  std::size_t interval_width() const { return interval_width_; }
  std::uint32_t root() const { return root_; }
  const RTreeNode& node(std::uint32_t id) const { return nodes_[id]; }
  const IndexEntry& entry(std::uint32_t id) const { return entries_[id]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t entry_count() const { return entries_.size(); }
  std::size_t leaf_count() const;
  std::size_t height() const;
  std::size_t member_count() const;
  const std::vector<IndexEntry>& entries() const { return entries_; }

  // Pre-order node records, little-endian.
  void serialize(std::ostream& out) const;
  static RTree deserialize(std::istream& in);

  friend bool operator==(const RTree&, const RTree&) = default;

 private:
  void canonicalize();

  std::size_t dims_ = 0;
  std::size_t interval_width_ = 0;
  std::uint32_t root_ = 0;
  std::vector<RTreeNode> nodes_;
  std::vector<IndexEntry> entries_;
};

double mindist_sq(const Mbr& mbr, std::span<const double> q, std::span<const std::size_t> dims);
double mindist(const Mbr& mbr, std::span<const double> q, std::span<const std::size_t> dims);

// Squared time-domain lower bound for a node or entry, given its MBR and
// pivot intervals. Must not decrease from a node to its descendants.
using BoundFn = std::function<double(const Mbr& mbr, std::span<const double> pivot_intervals)>;

struct Emission {
  std::uint32_t entry = 0;
  double bound = 0.0;

  friend bool operator==(const Emission&, const Emission&) = default;
};

// Best-first incremental traversal (distance browsing). Entries come out in
// non-decreasing `order` bound; the traversal can be paused and resumed, or
// resumed as a range query through drain_within.
class NearestBrowser {
 public:
  NearestBrowser(const RTree& tree, BoundFn order);

  std::optional<Emission> next();

  // Emits, in order, every not-yet-emitted entry whose `filter` bound is
  // <= tau_sq. `filter` must dominate the ordering bound on every node and
  // entry. Subtrees whose filter bound exceeds tau_sq are not expanded; they
  // are kept so later next() calls still see a complete browse.
  std::vector<Emission> drain_within(double tau_sq, const BoundFn& filter);

  std::size_t nodes_visited() const { return nodes_visited_; }

 private:
  struct Item {
    double key;
    bool is_entry;
    std::uint32_t id;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      if (a.key != b.key) return a.key > b.key;
      if (a.is_entry != b.is_entry) return !a.is_entry;
      return a.id > b.id;
    }
  };
  void expand(std::uint32_t node);

  const RTree* tree_;
  BoundFn order_;
  std::priority_queue<Item, std::vector<Item>, Later> queue_;
  std::size_t nodes_visited_ = 0;
};

// Entries whose bound <= tau_sq, pruning subtrees by their node bound.
// Returned in ascending entry id.
std::vector<std::uint32_t> range_query(const RTree& tree, const BoundFn& bound, double tau_sq,
                                       std::size_t* nodes_visited = nullptr);

}  // namespace mtsq::spatial
