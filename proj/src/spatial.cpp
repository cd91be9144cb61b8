#include "mtsq/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "mtsq/binary_io.hpp"

namespace mtsq::spatial {

Mbr Mbr::empty(std::size_t dims) {
  Mbr m;
  m.lo.assign(dims, kInfinity);
  m.hi.assign(dims, -kInfinity);
  return m;
}

Mbr Mbr::of_point(std::span<const double> point) {
  Mbr m;
  m.lo.assign(point.begin(), point.end());
  m.hi.assign(point.begin(), point.end());
  return m;
}

void Mbr::expand(std::span<const double> point) {
  for (std::size_t d = 0; d < lo.size(); ++d) {
    lo[d] = std::min(lo[d], point[d]);
    hi[d] = std::max(hi[d], point[d]);
  }
}

void Mbr::expand(const Mbr& other) {
  for (std::size_t d = 0; d < lo.size(); ++d) {
    lo[d] = std::min(lo[d], other.lo[d]);
    hi[d] = std::max(hi[d], other.hi[d]);
  }
}

bool Mbr::contains(std::span<const double> point) const {
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (point[d] < lo[d] || point[d] > hi[d]) return false;
  }
  return true;
}

bool Mbr::contains(const Mbr& other) const {
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (other.lo[d] < lo[d] || other.hi[d] > hi[d]) return false;
  }
  return true;
}

void PointSet::add(std::span<const double> point, std::uint64_t series_id, std::uint64_t offset,
                   std::span<const double> pivot_dists) {
  if (point.size() != dims) throw InvalidInput("PointSet::add: dimensionality mismatch");
  if (pivot_dists.size() != interval_width) throw InvalidInput("PointSet::add: pivot distance count mismatch");
  coords.insert(coords.end(), point.begin(), point.end());
  series_ids.push_back(series_id);
  offsets.push_back(offset);
  pivot_distances.insert(pivot_distances.end(), pivot_dists.begin(), pivot_dists.end());
}

std::vector<double> partition_weights(std::span<const double> variances) {
  const std::size_t dims = variances.size();
  std::vector<double> w(dims, dims ? 1.0 / static_cast<double>(dims) : 0.0);
  if (dims == 0) return w;
  const double vmax = *std::max_element(variances.begin(), variances.end());
  if (!(vmax > 0.0)) return w;
  double total = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    w[d] = std::exp(variances[d] / vmax);
    total += w[d];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<std::size_t> split_counts(std::span<const double> weights, std::size_t n, std::size_t leaf_size) {
  if (n == 0 || leaf_size == 0) throw InvalidInput("split_counts: n and leaf size must be positive");
  const double ratio = static_cast<double>(n) / static_cast<double>(leaf_size);
  std::vector<std::size_t> p(weights.size());
  for (std::size_t d = 0; d < weights.size(); ++d) {
    // Guard against pow() landing a hair above an exact integer.
    const double raw = std::pow(ratio, weights[d]);
    const double rounded = std::round(raw);
    const double v = std::abs(raw - rounded) < 1e-9 * std::max(1.0, raw) ? rounded : std::ceil(raw);
    p[d] = std::max<std::size_t>(1, static_cast<std::size_t>(v));
  }
  return p;
}

std::vector<std::size_t> weighted_split_counts(std::span<const double> variances, std::size_t n,
                                               std::size_t leaf_size) {
  return split_counts(partition_weights(variances), n, leaf_size);
}

std::vector<std::size_t> dimension_order(std::span<const double> weights) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return order;
}

namespace {

void tile(std::vector<std::size_t>& items, std::size_t begin, std::size_t end, std::size_t level,
          const CoordFn& coord, std::span<const std::size_t> counts, std::span<const std::size_t> order,
          std::size_t capacity, std::vector<std::vector<std::size_t>>& out) {
  const std::size_t n = end - begin;
  if (n <= capacity) {
    out.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(begin),
                     items.begin() + static_cast<std::ptrdiff_t>(end));
    return;
  }
  if (level == order.size()) {
    for (std::size_t s = begin; s < end; s += capacity) {
      const std::size_t e = std::min(end, s + capacity);
      out.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(s),
                       items.begin() + static_cast<std::ptrdiff_t>(e));
    }
    return;
  }
  const std::size_t dim = order[level];
  const std::size_t slabs = counts[dim];
  if (slabs <= 1) {
    tile(items, begin, end, level + 1, coord, counts, order, capacity, out);
    return;
  }
  std::sort(items.begin() + static_cast<std::ptrdiff_t>(begin), items.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::size_t a, std::size_t b) {
              const double ca = coord(a, dim);
              const double cb = coord(b, dim);
              if (ca != cb) return ca < cb;
              return a < b;
            });
  const std::size_t slab = (n + slabs - 1) / slabs;
  for (std::size_t s = begin; s < end; s += slab) {
    tile(items, s, std::min(end, s + slab), level + 1, coord, counts, order, capacity, out);
  }
}

void union_intervals(std::vector<double>& into, std::span<const double> from) {
  if (into.empty()) {
    into.assign(from.begin(), from.end());
    return;
  }
  for (std::size_t i = 0; i + 1 < into.size(); i += 2) {
    into[i] = std::min(into[i], from[i]);
    into[i + 1] = std::max(into[i + 1], from[i + 1]);
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> str_partition(std::vector<std::size_t> items, const CoordFn& coord,
                                                    std::span<const std::size_t> counts,
                                                    std::span<const std::size_t> dim_order,
                                                    std::size_t capacity) {
  if (capacity == 0) throw InvalidInput("str_partition: capacity must be positive");
  std::vector<std::vector<std::size_t>> out;
  if (items.empty()) return out;
  tile(items, 0, items.size(), 0, coord, counts, dim_order, capacity, out);
  return out;
}

std::vector<IndexEntry> group_leaf_entries(const PointSet& points, std::span<const std::size_t> members) {
  std::vector<std::size_t> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
    if (points.series_ids[a] != points.series_ids[b]) return points.series_ids[a] < points.series_ids[b];
    return points.offsets[a] < points.offsets[b];
  });
  const std::size_t width = points.interval_width;
  std::vector<IndexEntry> entries;
  for (std::size_t idx : sorted) {
    const auto point = points.point(idx);
    const std::span<const double> dists(points.pivot_distances.data() + idx * width, width);
    const bool extends = !entries.empty() && entries.back().series_id == points.series_ids[idx] &&
                         entries.back().end_offset + 1 == points.offsets[idx];
    if (extends) {
      IndexEntry& e = entries.back();
      e.end_offset = points.offsets[idx];
      e.mbr.expand(point);
      for (std::size_t k = 0; k < width; ++k) {
        e.pivot_intervals[2 * k] = std::min(e.pivot_intervals[2 * k], dists[k]);
        e.pivot_intervals[2 * k + 1] = std::max(e.pivot_intervals[2 * k + 1], dists[k]);
      }
      continue;
    }
    IndexEntry e;
    e.mbr = Mbr::of_point(point);
    e.series_id = points.series_ids[idx];
    e.start_offset = e.end_offset = points.offsets[idx];
    e.pivot_intervals.resize(2 * width);
    for (std::size_t k = 0; k < width; ++k) {
      e.pivot_intervals[2 * k] = e.pivot_intervals[2 * k + 1] = dists[k];
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

RTree RTree::bulk_load(const PointSet& points, const BulkLoadConfig& config) {
  if (points.size() == 0) throw InvalidInput("bulk_load: no points");
  if (config.leaf_size == 0) throw InvalidInput("bulk_load: leaf size must be positive");
  const std::size_t dims = points.dims;
  std::vector<double> weights = config.weights;
  if (weights.empty()) weights.assign(dims, dims ? 1.0 / static_cast<double>(dims) : 0.0);
  if (weights.size() != dims) throw InvalidInput("bulk_load: one weight per dimension required");
  const auto order = dimension_order(weights);
  const std::size_t capacity = config.node_capacity ? std::max<std::size_t>(2, config.node_capacity)
                                                    : std::max<std::size_t>(2, config.leaf_size);

  RTree tree;
  tree.dims_ = dims;
  tree.interval_width_ = points.interval_width;

  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), 0);
  const auto leaf_counts = split_counts(weights, points.size(), config.leaf_size);
  const auto leaves = str_partition(
      std::move(all), [&](std::size_t i, std::size_t d) { return points.coords[i * dims + d]; }, leaf_counts,
      order, config.leaf_size);

  std::vector<std::uint32_t> level;
  for (const auto& members : leaves) {
    RTreeNode node;
    node.leaf = true;
    node.mbr = Mbr::empty(dims);
    for (auto& e : group_leaf_entries(points, members)) {
      node.mbr.expand(e.mbr);
      union_intervals(node.pivot_intervals, e.pivot_intervals);
      node.children.push_back(static_cast<std::uint32_t>(tree.entries_.size()));
      tree.entries_.push_back(std::move(e));
    }
    level.push_back(static_cast<std::uint32_t>(tree.nodes_.size()));
    tree.nodes_.push_back(std::move(node));
  }

  // Upper levels pack runs of `capacity` consecutive nodes. The tiling above
  // emits leaves slab by slab, so runs stay spatially coherent and inherit the
  // weighted cut order.
  while (level.size() > 1) {
    std::vector<std::uint32_t> next;
    for (std::size_t begin = 0; begin < level.size(); begin += capacity) {
      const std::size_t end = std::min(level.size(), begin + capacity);
      RTreeNode node;
      node.mbr = Mbr::empty(dims);
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t child = level[i];
        node.mbr.expand(tree.nodes_[child].mbr);
        union_intervals(node.pivot_intervals, tree.nodes_[child].pivot_intervals);
        node.children.push_back(child);
      }
      next.push_back(static_cast<std::uint32_t>(tree.nodes_.size()));
      tree.nodes_.push_back(std::move(node));
    }
    level = std::move(next);
  }
  tree.root_ = level.front();
  tree.canonicalize();
  return tree;
}

void RTree::canonicalize() {
  std::vector<RTreeNode> nodes;
  std::vector<IndexEntry> entries;
  nodes.reserve(nodes_.size());
  entries.reserve(entries_.size());
  std::function<std::uint32_t(std::uint32_t)> visit = [&](std::uint32_t id) -> std::uint32_t {
    const std::uint32_t mine = static_cast<std::uint32_t>(nodes.size());
    nodes.push_back(RTreeNode{nodes_[id].mbr, nodes_[id].pivot_intervals, nodes_[id].leaf, {}});
    std::vector<std::uint32_t> kids;
    for (std::uint32_t c : nodes_[id].children) {
      if (nodes_[id].leaf) {
        kids.push_back(static_cast<std::uint32_t>(entries.size()));
        entries.push_back(entries_[c]);
      } else {
        kids.push_back(visit(c));
      }
    }
    nodes[mine].children = std::move(kids);
    return mine;
  };
  root_ = visit(root_);
  nodes_ = std::move(nodes);
  entries_ = std::move(entries);
}

std::size_t RTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const RTreeNode& n) { return n.leaf; }));
}

std::size_t RTree::height() const {
  if (nodes_.empty()) return 0;
  std::size_t h = 1;
  std::uint32_t id = root_;
  while (!nodes_[id].leaf) {
    id = nodes_[id].children.front();
    ++h;
  }
  return h;
}

std::size_t RTree::member_count() const {
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.member_count();
  return total;
}

namespace {

constexpr char kTreeMagic[5] = "RTRE";
constexpr std::uint32_t kTreeVersion = 1;

void write_mbr(std::ostream& out, const Mbr& m) {
  for (std::size_t d = 0; d < m.dims(); ++d) {
    io::write_f64(out, m.lo[d]);
    io::write_f64(out, m.hi[d]);
  }
}

Mbr read_mbr(std::istream& in, std::size_t dims) {
  Mbr m = Mbr::empty(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    m.lo[d] = io::read_f64(in, "mbr");
    m.hi[d] = io::read_f64(in, "mbr");
    if (!(m.lo[d] <= m.hi[d])) throw FormatError("corrupt snapshot: mbr with min > max");
  }
  return m;
}

void write_doubles(std::ostream& out, std::span<const double> v) {
  for (double x : v) io::write_f64(out, x);
}

std::vector<double> read_doubles(std::istream& in, std::size_t n, const char* field) {
  std::vector<double> v(n);
  for (auto& x : v) x = io::read_f64(in, field);
  return v;
}

constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 40;

}  // namespace

void RTree::serialize(std::ostream& out) const {
  io::write_magic(out, kTreeMagic);
  io::write_u32(out, kTreeVersion);
  io::write_u64(out, dims_);
  io::write_u64(out, interval_width_);
  io::write_u64(out, nodes_.size());
  io::write_u64(out, entries_.size());
  if (nodes_.empty()) return;
  std::function<void(std::uint32_t)> visit = [&](std::uint32_t id) {
    const RTreeNode& n = nodes_[id];
    io::write_u8(out, n.leaf ? 1 : 0);
    write_mbr(out, n.mbr);
    write_doubles(out, n.pivot_intervals);
    io::write_u64(out, n.children.size());
    for (std::uint32_t c : n.children) {
      if (n.leaf) {
        const IndexEntry& e = entries_[c];
        io::write_u64(out, e.series_id);
        io::write_u64(out, e.start_offset);
        io::write_u64(out, e.end_offset);
        write_mbr(out, e.mbr);
        write_doubles(out, e.pivot_intervals);
      } else {
        visit(c);
      }
    }
  };
  visit(root_);
}

RTree RTree::deserialize(std::istream& in) {
  io::expect_magic(in, kTreeMagic, "r-tree snapshot");
  const std::uint32_t version = io::read_u32(in, "tree version");
  if (version != kTreeVersion) {
    throw FormatError("r-tree snapshot: unsupported version " + std::to_string(version));
  }
  RTree tree;
  tree.dims_ = io::read_count(in, "tree dims", 1 << 20);
  tree.interval_width_ = io::read_count(in, "interval width", 1 << 20);
  const std::uint64_t node_count = io::read_count(in, "node count", kMaxCount);
  const std::uint64_t entry_count = io::read_count(in, "entry count", kMaxCount);
  if (node_count == 0) return tree;
  const std::size_t iw = 2 * tree.interval_width_;
  std::function<std::uint32_t(std::size_t)> visit = [&](std::size_t depth) -> std::uint32_t {
    if (depth > 64 || tree.nodes_.size() >= node_count) throw FormatError("corrupt snapshot: node structure");
    const std::uint32_t mine = static_cast<std::uint32_t>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    RTreeNode node;
    const std::uint8_t flag = io::read_u8(in, "node flag");
    if (flag > 1) throw FormatError("corrupt snapshot: node flag");
    node.leaf = flag == 1;
    node.mbr = read_mbr(in, tree.dims_);
    node.pivot_intervals = read_doubles(in, iw, "node intervals");
    const std::uint64_t kids = io::read_count(in, "child count", kMaxCount);
    for (std::uint64_t k = 0; k < kids; ++k) {
      if (node.leaf) {
        if (tree.entries_.size() >= entry_count) throw FormatError("corrupt snapshot: entry count");
        IndexEntry e;
        e.series_id = io::read_u64(in, "entry series");
        e.start_offset = io::read_u64(in, "entry start");
        e.end_offset = io::read_u64(in, "entry end");
        if (e.end_offset < e.start_offset) throw FormatError("corrupt snapshot: entry offsets");
        e.mbr = read_mbr(in, tree.dims_);
        e.pivot_intervals = read_doubles(in, iw, "entry intervals");
        node.children.push_back(static_cast<std::uint32_t>(tree.entries_.size()));
        tree.entries_.push_back(std::move(e));
      } else {
        node.children.push_back(visit(depth + 1));
      }
    }
    tree.nodes_[mine] = std::move(node);
    return mine;
  };
  tree.root_ = visit(0);
  if (tree.nodes_.size() != node_count || tree.entries_.size() != entry_count) {
    throw FormatError("corrupt snapshot: record counts do not match header");
  }
  return tree;
}

double mindist_sq(const Mbr& mbr, std::span<const double> q, std::span<const std::size_t> dims) {
  double sum = 0.0;
  for (std::size_t d : dims) {
    double gap = 0.0;
    if (q[d] < mbr.lo[d]) {
      gap = mbr.lo[d] - q[d];
    } else if (q[d] > mbr.hi[d]) {
      gap = q[d] - mbr.hi[d];
    }
    sum += gap * gap;
  }
  return sum;
}

double mindist(const Mbr& mbr, std::span<const double> q, std::span<const std::size_t> dims) {
  return std::sqrt(mindist_sq(mbr, q, dims));
}

NearestBrowser::NearestBrowser(const RTree& tree, BoundFn order) : tree_(&tree), order_(std::move(order)) {
  if (tree.node_count() > 0) {
    const auto& root = tree.node(tree.root());
    queue_.push(Item{order_(root.mbr, root.pivot_intervals), false, tree.root()});
  }
}

void NearestBrowser::expand(std::uint32_t id) {
  ++nodes_visited_;
  const RTreeNode& n = tree_->node(id);
  for (std::uint32_t c : n.children) {
    if (n.leaf) {
      const IndexEntry& e = tree_->entry(c);
      queue_.push(Item{order_(e.mbr, e.pivot_intervals), true, c});
    } else {
      const RTreeNode& child = tree_->node(c);
      queue_.push(Item{order_(child.mbr, child.pivot_intervals), false, c});
    }
  }
}

std::optional<Emission> NearestBrowser::next() {
  while (!queue_.empty()) {
    const Item top = queue_.top();
    queue_.pop();
    if (top.is_entry) return Emission{top.id, top.key};
    expand(top.id);
  }
  return std::nullopt;
}

std::vector<Emission> NearestBrowser::drain_within(double tau_sq, const BoundFn& filter) {
  std::vector<Emission> out;
  std::vector<Item> deferred;
  while (!queue_.empty() && queue_.top().key <= tau_sq) {
    const Item top = queue_.top();
    queue_.pop();
    if (top.is_entry) {
      const IndexEntry& e = tree_->entry(top.id);
      if (filter(e.mbr, e.pivot_intervals) <= tau_sq) {
        out.push_back(Emission{top.id, top.key});
      } else {
        deferred.push_back(top);
      }
      continue;
    }
    const RTreeNode& n = tree_->node(top.id);
    if (filter(n.mbr, n.pivot_intervals) > tau_sq) {
      deferred.push_back(top);
      continue;
    }
    expand(top.id);
  }
  for (const Item& item : deferred) queue_.push(item);
  return out;
}

std::vector<std::uint32_t> range_query(const RTree& tree, const BoundFn& bound, double tau_sq,
                                       std::size_t* nodes_visited) {
  std::vector<std::uint32_t> out;
  if (tree.node_count() == 0) return out;
  std::size_t visited = 0;
  std::vector<std::uint32_t> stack{tree.root()};
  while (!stack.empty()) {
    const std::uint32_t id = stack.back();
    stack.pop_back();
    const RTreeNode& n = tree.node(id);
    if (bound(n.mbr, n.pivot_intervals) > tau_sq) continue;
    ++visited;
    for (std::uint32_t c : n.children) {
      if (n.leaf) {
        const IndexEntry& e = tree.entry(c);
        if (bound(e.mbr, e.pivot_intervals) <= tau_sq) out.push_back(c);
      } else {
        stack.push_back(c);
      }
    }
  }
  std::sort(out.begin(), out.end());
  if (nodes_visited != nullptr) *nodes_visited = visited;
  return out;
}

}  // namespace mtsq::spatial
