#include "mtsq/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "mtsq/baselines.hpp"
#include "mtsq/binary_io.hpp"

namespace mtsq::bench {

std::size_t Dataset::subsequence_count(std::size_t qlen) const {
  std::size_t total = 0;
  if (series) {
    for (const auto& s : *series) total += s.subsequence_count(qlen);
  }
  return total;
}

Dataset make_dataset(std::string name, SeriesCollection series) {
  Dataset d;
  d.name = std::move(name);
  if (series.empty()) throw InvalidInput("dataset: no series");
  d.channels = series.front().channel_count();
  std::vector<std::uint64_t> ids;
  for (const auto& s : series) {
    if (s.channel_count() != d.channels) {
      throw InvalidInput("dataset: series " + std::to_string(s.id()) + " has " +
                         std::to_string(s.channel_count()) + " channels, expected " + std::to_string(d.channels));
    }
    ids.push_back(s.id());
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw InvalidInput("dataset: duplicate series ids");
  d.series = std::make_shared<const SeriesCollection>(std::move(series));
  return d;
}

Dataset without_series(const Dataset& dataset, const std::vector<std::uint64_t>& ids) {
  SeriesCollection kept;
  for (const auto& s : dataset.items()) {
    if (std::find(ids.begin(), ids.end(), s.id()) == ids.end()) kept.push_back(s);
  }
  Dataset d = make_dataset(dataset.name, std::move(kept));
  d.provenance = dataset.provenance;
  d.provenance.emplace_back("held_out", std::to_string(ids.size()));
  return d;
}

Dataset generate_synthetic(std::size_t n, std::size_t c, std::size_t m, std::uint64_t seed,
                           const SyntheticOptions& options) {
  if (n == 0 || c == 0 || m == 0) throw InvalidInput("generate_synthetic: n, c and m must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.0, 100.0);
  std::uniform_real_distribution<double> spread(0.0, 10.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  SeriesCollection series;
  series.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> values(c * m);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double sigma = options.step_sigma ? *options.step_sigma : spread(rng);
      const double scale = ch < options.channel_scale.size() ? options.channel_scale[ch] : 1.0;
      double x = start(rng);
      for (std::size_t t = 0; t < m; ++t) {
        if (t > 0) x += sigma * unit(rng);
        values[ch * m + t] = scale * x;
      }
    }
    series.emplace_back(i, c, m, std::move(values));
  }
  Dataset d = make_dataset("synthetic", std::move(series));
  d.provenance = {{"generator", "random-walk"},
                  {"n", std::to_string(n)},
                  {"c", std::to_string(c)},
                  {"m", std::to_string(m)},
                  {"seed", std::to_string(seed)}};
  return d;
}

Workload generate_workload(const Dataset& dataset, const WorkloadSpec& spec) {
  if (spec.qlen == 0) throw WorkloadError("qlen: must be positive");
  if (spec.k == 0) throw WorkloadError("k: must be positive");
  if (spec.noise_factor < 0.0) throw WorkloadError("noise_factor: must be non-negative");
  const auto& items = dataset.items();
  const std::size_t c = dataset.channels;
  std::mt19937_64 rng(spec.seed);

  Workload w;
  w.spec = spec;
  std::vector<std::size_t> pool(items.size());
  std::iota(pool.begin(), pool.end(), 0);
  if (spec.out_of_dataset) {
    if (items.size() < 2) throw WorkloadError("out_of_dataset: needs at least two series");
    const std::size_t h = spec.holdout_series ? spec.holdout_series : std::max<std::size_t>(1, items.size() / 10);
    if (h >= items.size()) throw WorkloadError("holdout_series: must leave at least one indexed series");
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(h);
    std::sort(pool.begin(), pool.end());
    for (std::size_t p : pool) w.held_out_ids.push_back(items[p].id());
  }
  std::vector<std::size_t> prefix{0};
  std::vector<std::size_t> owner;
  for (std::size_t p : pool) {
    const std::size_t count = items[p].subsequence_count(spec.qlen);
    if (count == 0) continue;
    prefix.push_back(prefix.back() + count);
    owner.push_back(p);
  }
  if (prefix.back() == 0) {
    throw WorkloadError("qlen: " + std::to_string(spec.qlen) + " exceeds every candidate series length");
  }
  if (spec.channels_per_query > c) throw WorkloadError("channels_per_query: exceeds the channel count");

  std::uniform_int_distribution<std::size_t> pick(0, prefix.back() - 1);
  std::uniform_int_distribution<std::size_t> width(1, c);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t g = pick(rng);
    const std::size_t slot = static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), g) -
                                                      prefix.begin()) - 1;
    const auto& s = items[owner[slot]];
    const std::size_t offset = g - prefix[slot];

    std::size_t size = spec.channels_per_query ? spec.channels_per_query : c;
    if (spec.random_channel_count) size = width(rng);
    std::vector<std::size_t> ids(c);
    std::iota(ids.begin(), ids.end(), 0);
    if (size < c) {
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(size);
      std::sort(ids.begin(), ids.end());
    }

    Query q;
    q.values = extract_window(s, offset, spec.qlen, ids);
    q.channel_ids = ids;
    q.k = spec.k;
    q.mode = spec.mode;
    if (spec.noise_factor > 0.0) {
      for (std::size_t r = 0; r < q.values.channels; ++r) {
        auto row = q.values.channel(r);
        const double sd = spec.noise_factor * moments(row).stddev;
        for (double& v : row) v += sd * unit(rng);
      }
    }
    w.queries.push_back(std::move(q));
    w.sources.push_back(SubsequenceRef{s.id(), offset, spec.qlen});
  }
  return w;
}

double relative_contrast(std::span<const MultivariateTimeSeries> series, const Query& query) {
  Query all = query;
  std::size_t total = 0;
  for (const auto& s : series) total += s.subsequence_count(query.qlen());
  if (total < 2) throw InvalidInput("relative_contrast: needs at least two subsequences");
  all.k = total;
  const auto matches = brute_force_knn(series, all);
  const double closest = matches.front().distance;
  const double farthest = matches.back().distance;
  if (farthest == closest) return 1.0;
  if (closest == 0.0) return kInfinity;
  return farthest / closest;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

template <typename F>
double collect_median(const std::vector<QueryRecord>& records, F field) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(static_cast<double>(field(r)));
  return median(std::move(v));
}

}  // namespace

double MethodReport::median_query_seconds() const {
  return collect_median(queries, [](const QueryRecord& r) { return median(r.seconds); });
}
double MethodReport::median_pruning_effectiveness() const {
  return collect_median(queries, [](const QueryRecord& r) { return r.pruning_effectiveness; });
}
double MethodReport::median_nodes_visited() const {
  return collect_median(queries, [](const QueryRecord& r) { return r.nodes_visited; });
}
double MethodReport::median_entries_returned_probe2() const {
  return collect_median(queries, [](const QueryRecord& r) { return r.entries_returned_probe2; });
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool same_results(const std::vector<Match>& got, const std::vector<Match>& want, std::string& why) {
  if (got.size() != want.size()) {
    why = "returned " + std::to_string(got.size()) + " matches, expected " + std::to_string(want.size());
    return false;
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!(got[i].ref == want[i].ref)) {
      why = "rank " + std::to_string(i + 1) + " is series " + std::to_string(got[i].ref.series_id) + " offset " +
            std::to_string(got[i].ref.offset) + ", expected series " + std::to_string(want[i].ref.series_id) +
            " offset " + std::to_string(want[i].ref.offset);
      return false;
    }
    if (std::abs(got[i].distance - want[i].distance) > 1e-5 * std::max(1.0, want[i].distance)) {
      why = "rank " + std::to_string(i + 1) + " distance " + std::to_string(got[i].distance) + ", expected " +
            std::to_string(want[i].distance);
      return false;
    }
  }
  return true;
}

std::vector<std::vector<Match>> oracle_answers(const Dataset& dataset, const Workload& workload, bool parallel) {
  const std::size_t n = workload.queries.size();
  std::vector<std::vector<Match>> truth(n);
  if (!parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) truth[i] = brute_force_knn(dataset.items(), workload.queries[i]);
    return truth;
  }
  const std::size_t workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
  std::vector<std::future<void>> tasks;
  for (std::size_t w = 0; w < workers; ++w) {
    tasks.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < n; i += workers) truth[i] = brute_force_knn(dataset.items(), workload.queries[i]);
    }));
  }
  for (auto& t : tasks) t.get();
  return truth;
}

std::size_t snapshot_bytes(const MsIndex& index) {
  std::ostringstream out;
  index.save(out);
  return out.str().size();
}

}  // namespace

BenchReport run_benchmark(const Dataset& dataset, const Workload& workload, const BenchConfig& config) {
  if (config.methods.empty()) throw InvalidInput("methods: at least one method is required");
  if (config.repetitions == 0) throw InvalidInput("repetitions: must be positive");
  const std::size_t qlen = workload.spec.qlen;
  const Mode mode = workload.spec.mode;

  BenchReport report;
  report.dataset_name = dataset.name;
  report.dataset_fingerprint = dataset_fingerprint(dataset.items());
  report.series = dataset.size();
  report.channels = dataset.channels;
  report.subsequences = dataset.subsequence_count(qlen);
  report.workload = workload.spec;
  report.config = config;

  const auto truth = oracle_answers(dataset, workload, config.parallel_verify);

  for (const auto& name : config.methods) {
    MethodReport method;
    method.name = name;
    std::function<std::vector<Match>(const Query&, QueryRecord&)> run;
    std::optional<MsIndex> msindex;
    std::vector<std::unique_ptr<ChannelIndex>> channel_indices;

    const auto build_start = Clock::now();
    if (name == "brute" || name == "mass") {
      const bool brute = name == "brute";
      run = [&, brute](const Query& q, QueryRecord& rec) {
        rec.subsequences_verified = report.subsequences;
        rec.subsequences_total = report.subsequences;
        return brute ? brute_force_knn(dataset.items(), q) : mass_scan_knn(dataset.items(), q);
      };
    } else if (name == "msindex") {
      msindex.emplace(MsIndex::build(dataset.series, qlen, mode, config.build));
      method.init_seconds = seconds_since(build_start);
      method.index_bytes = snapshot_bytes(*msindex);
      QueryOptions options;
      options.pivot_correction = config.pivot_correction;
      run = [&, options](const Query& q, QueryRecord& rec) {
        auto result = msindex->knn_query(q, options);
        rec.subsequences_verified = result.stats.subsequences_verified;
        rec.subsequences_total = result.stats.subsequences_total;
        rec.entries_returned_probe2 = result.stats.entries_returned_probe2;
        rec.nodes_visited = result.stats.nodes_visited;
        return std::move(result.matches);
      };
    } else if (name == "utsbase") {
      channel_indices = build_channel_indices(dataset.items(), qlen, mode, config.build);
      method.init_seconds = seconds_since(build_start);
      for (const auto& ci : channel_indices) {
        method.index_bytes += snapshot_bytes(dynamic_cast<const DftChannelIndex&>(*ci).index());
      }
      run = [&](const Query& q, QueryRecord& rec) {
        UtsStats stats;
        auto matches = uts_baseline_knn(channel_indices, dataset.items(), q, &stats);
        rec.subsequences_verified = stats.subsequences_verified;
        rec.subsequences_total = stats.subsequences_total;
        rec.nodes_visited = stats.nodes_visited;
        return matches;
      };
    } else {
      throw InvalidInput("methods: unknown method '" + name + "' (expected brute, mass, msindex or utsbase)");
    }

    for (std::size_t i = 0; i < workload.queries.size(); ++i) {
      QueryRecord rec;
      std::vector<Match> answer;
      for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        const auto start = Clock::now();
        auto got = run(workload.queries[i], rec);
        rec.seconds.push_back(seconds_since(start));
        if (rep == 0) answer = std::move(got);
      }
      std::string why;
      if (!same_results(answer, truth[i], why)) {
        throw ExactnessError("exactness gate: method " + name + " disagrees with brute force on query " +
                             std::to_string(i) + ": " + why);
      }
      rec.pruning_effectiveness =
          rec.subsequences_total == 0
              ? 0.0
              : 1.0 - static_cast<double>(rec.subsequences_verified) / static_cast<double>(rec.subsequences_total);
      method.queries.push_back(std::move(rec));
    }
    report.methods.push_back(std::move(method));
  }
  return report;
}

nlohmann::json BenchReport::to_json(bool with_timings) const {
  using nlohmann::json;
  char fp[19];
  std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(dataset_fingerprint));
  json j;
  j["schema_version"] = kSchemaVersion;
  j["dataset"] = {{"name", dataset_name},
                  {"series", series},
                  {"channels", channels},
                  {"subsequences", subsequences},
                  {"fingerprint", fp}};
  j["workload"] = {{"qlen", workload.qlen},
                   {"count", workload.count},
                   {"noise_factor", workload.noise_factor},
                   {"out_of_dataset", workload.out_of_dataset},
                   {"seed", workload.seed},
                   {"mode", std::string(to_string(workload.mode))},
                   {"k", workload.k},
                   {"channels_per_query", workload.channels_per_query},
                   {"random_channel_count", workload.random_channel_count}};
  j["config"] = {{"methods", config.methods},
                 {"d_target", config.build.d_target},
                 {"leaf_fraction", config.build.leaf_fraction},
                 {"pivot_count", config.build.pivot_count},
                 {"sample_size", config.build.sample_size},
                 {"seed", config.build.seed},
                 {"weighted_partitioning", config.build.weighted_partitioning},
                 {"repetitions", config.repetitions},
                 {"pivot_correction", config.pivot_correction}};
  j["notes"] = {"partition weights are a softmax over per-dimension variances divided by their maximum",
                "the mass scan transforms every series per query; nothing is cached across queries",
                "index_bytes is the serialized snapshot size",
                "every method was checked against brute force before timings were recorded"};
  json methods_json = json::array();
  for (const auto& m : methods) {
    json mj;
    mj["name"] = m.name;
    mj["index_bytes"] = m.index_bytes;
    mj["median_pruning_effectiveness"] = m.median_pruning_effectiveness();
    mj["median_nodes_visited"] = m.median_nodes_visited();
    mj["median_entries_returned_probe2"] = m.median_entries_returned_probe2();
    if (with_timings) {
      mj["init_seconds"] = m.init_seconds;
      mj["median_query_seconds"] = m.median_query_seconds();
    }
    json qs = json::array();
    for (const auto& q : m.queries) {
      json qj = {{"subsequences_verified", q.subsequences_verified},
                 {"subsequences_total", q.subsequences_total},
                 {"pruning_effectiveness", q.pruning_effectiveness},
                 {"entries_returned_probe2", q.entries_returned_probe2},
                 {"nodes_visited", q.nodes_visited}};
      if (with_timings) qj["seconds"] = q.seconds;
      qs.push_back(std::move(qj));
    }
    mj["queries"] = std::move(qs);
    methods_json.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods_json);
  return j;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "method,query,median_seconds,subsequences_verified,subsequences_total,pruning_effectiveness,"
         "entries_returned_probe2,nodes_visited\n";
  for (const auto& m : methods) {
    for (std::size_t i = 0; i < m.queries.size(); ++i) {
      const auto& q = m.queries[i];
      out << m.name << ',' << i << ',' << median(q.seconds) << ',' << q.subsequences_verified << ','
          << q.subsequences_total << ',' << q.pruning_effectiveness << ',' << q.entries_returned_probe2 << ','
          << q.nodes_visited << '\n';
    }
  }
  return out.str();
}

namespace {

constexpr char kDatasetMagic[5] = "MTSQ";
constexpr std::uint16_t kDatasetVersion = 1;

}  // namespace

void save_binary(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("output: cannot open " + path.string());
  io::write_magic(out, kDatasetMagic);
  io::write_u16(out, kDatasetVersion);
  io::write_u64(out, dataset.size());
  io::write_u64(out, dataset.channels);
  for (const auto& s : dataset.items()) io::write_u64(out, s.length());
  for (const auto& s : dataset.items()) {
    for (double v : s.values()) io::write_f64(out, v);
  }
  if (!out) throw Error("failed writing " + path.string());
}

Dataset load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("dataset: cannot open " + path.string());
  io::expect_magic(in, kDatasetMagic, "dataset");
  const std::uint16_t version = io::read_u16(in, "dataset version");
  if (version != kDatasetVersion) {
    throw FormatError("dataset: unsupported version " + std::to_string(version));
  }
  const std::uint64_t n = io::read_count(in, "series count", std::uint64_t{1} << 32);
  const std::uint64_t c = io::read_count(in, "channel count", std::uint64_t{1} << 20);
  if (n == 0 || c == 0) throw FormatError("dataset: series and channel counts must be positive");
  std::vector<std::uint64_t> lengths(n);
  for (auto& m : lengths) {
    m = io::read_count(in, "series length", std::uint64_t{1} << 36);
    if (m == 0) throw FormatError("dataset: zero-length series");
  }
  SeriesCollection series;
  series.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<double> values(c * lengths[i]);
    for (double& v : values) v = io::read_f64(in, "series values");
    try {
      series.emplace_back(i, c, lengths[i], std::move(values));
    } catch (const InvalidInput& e) {
      throw FormatError(std::string("dataset: ") + e.what());
    }
  }
  Dataset d = make_dataset(path.stem().string(), std::move(series));
  d.provenance = {{"source", path.string()}, {"format", "binary"}};
  return d;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw FormatError(where + ": cannot parse '" + text + "' as a finite number");
  }
  return v;
}

MultivariateTimeSeries read_series_csv(std::uint64_t id, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("dataset: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv(trim(line));
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] != "channel_" + std::to_string(c)) {
      throw FormatError(path.string() + ":1: expected header column channel_" + std::to_string(c) + ", got '" +
                        header[c] + "'");
    }
  }
  const std::size_t c = header.size();
  std::vector<std::vector<double>> channels(c);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != c) {
      throw FormatError(where + ": expected " + std::to_string(c) + " values, got " + std::to_string(fields.size()));
    }
    for (std::size_t ch = 0; ch < c; ++ch) channels[ch].push_back(parse_double(fields[ch], where));
  }
  if (c == 0 || channels.front().empty()) throw FormatError(path.string() + ": no observations");
  return MultivariateTimeSeries(id, channels);
}

}  // namespace

void save_csv(const Dataset& dataset, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  std::ofstream manifest(directory / "manifest.csv");
  if (!manifest) throw InvalidInput("output: cannot write manifest in " + directory.string());
  manifest << "id,file\n";
  for (const auto& s : dataset.items()) {
    const std::string file = "series_" + std::to_string(s.id()) + ".csv";
    manifest << s.id() << ',' << file << '\n';
    std::ofstream out(directory / file);
    for (std::size_t c = 0; c < s.channel_count(); ++c) out << (c ? "," : "") << "channel_" << c;
    out << '\n';
    char buf[32];
    for (std::size_t t = 0; t < s.length(); ++t) {
      for (std::size_t c = 0; c < s.channel_count(); ++c) {
        const auto res = std::to_chars(buf, buf + sizeof buf, s.channel(c)[t]);
        out << (c ? "," : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
      }
      out << '\n';
    }
    if (!out) throw Error("failed writing " + (directory / file).string());
  }
}

Dataset load_csv(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw InvalidInput("dataset: cannot open " + manifest_path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != "id,file") {
    throw FormatError(manifest_path.string() + ":1: manifest header must be 'id,file'");
  }
  const auto base = manifest_path.parent_path();
  SeriesCollection series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2 || fields[1].empty()) throw FormatError(where + ": expected 'id,file'");
    std::uint64_t id = 0;
    const auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
    if (res.ec != std::errc() || res.ptr != fields[0].data() + fields[0].size()) {
      throw FormatError(where + ": id '" + fields[0] + "' is not a non-negative integer");
    }
    series.push_back(read_series_csv(id, base / fields[1]));
  }
  try {
    Dataset d = make_dataset(manifest_path.parent_path().filename().string(), std::move(series));
    d.provenance = {{"source", manifest_path.string()}, {"format", "csv"}};
    return d;
  } catch (const InvalidInput& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return load_csv(path);
  return load_binary(path);
}

}  // namespace mtsq::bench
