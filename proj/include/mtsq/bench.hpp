#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mtsq/core.hpp"
#include "mtsq/msindex.hpp"

namespace mtsq::bench {

class WorkloadError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Raised by run_benchmark when a method disagrees with brute force.
class ExactnessError : public Error {
 public:
  using Error::Error;
};

struct Dataset {
  std::string name;
  std::size_t channels = 0;
  SeriesHandle series;
  std::vector<std::pair<std::string, std::string>> provenance;

  const SeriesCollection& items() const { return *series; }
  std::size_t size() const { return series ? series->size() : 0; }
  std::size_t subsequence_count(std::size_t qlen) const;
};

// Checks uniform channel counts and unique ids.
Dataset make_dataset(std::string name, SeriesCollection series);
// Copy without the listed series ids.
Dataset without_series(const Dataset& dataset, const std::vector<std::uint64_t>& ids);

struct SyntheticOptions {
  std::optional<double> step_sigma;   // pins the per-channel step deviation
  std::vector<double> channel_scale;  // per-channel multiplier (missing entries are 1)
};

// Random walks: start ~ U[0, 100], steps ~ N(0, sigma), sigma ~ U[0, 10] per
// series and channel.
Dataset generate_synthetic(std::size_t n, std::size_t c, std::size_t m, std::uint64_t seed,
                           const SyntheticOptions& options = {});

struct WorkloadSpec {
  std::size_t qlen = 0;
  std::size_t count = 1;
  double noise_factor = 0.1;
  bool out_of_dataset = false;
  std::size_t holdout_series = 0;  // out-of-dataset only; 0: max(1, n / 10)
  std::uint64_t seed = 0;
  Mode mode = Mode::raw;
  std::size_t k = 1;
  std::size_t channels_per_query = 0;  // 0: all channels
  bool random_channel_count = false;   // draw |c_Q| uniformly from 1..c
};

struct Workload {
  std::vector<Query> queries;
  std::vector<SubsequenceRef> sources;
  std::vector<std::uint64_t> held_out_ids;  // out-of-dataset source series
  WorkloadSpec spec;
};

// Queries are dataset subsequences plus per-channel Gaussian noise with
// std = noise_factor * the subsequence channel's std. With out_of_dataset the
// sources come from held-out series, which callers drop via without_series.
Workload generate_workload(const Dataset& dataset, const WorkloadSpec& spec);

// Farthest over closest true distance (infinity when the closest is 0).
double relative_contrast(std::span<const MultivariateTimeSeries> series, const Query& query);

struct BenchConfig {
  std::vector<std::string> methods{"brute", "mass", "msindex", "utsbase"};
  BuildConfig build;
  std::size_t repetitions = 3;
  bool pivot_correction = true;
  bool parallel_verify = false;  // exactness gate only
};

struct QueryRecord {
  std::vector<double> seconds;  // one per repetition
  std::size_t subsequences_verified = 0;
  std::size_t subsequences_total = 0;
  std::size_t entries_returned_probe2 = 0;
  std::size_t nodes_visited = 0;
  double pruning_effectiveness = 0.0;
};

struct MethodReport {
  std::string name;
  double init_seconds = 0.0;
  std::size_t index_bytes = 0;
  std::vector<QueryRecord> queries;

  double median_query_seconds() const;
  double median_pruning_effectiveness() const;
  double median_nodes_visited() const;
  double median_entries_returned_probe2() const;
};

struct BenchReport {
  static constexpr int kSchemaVersion = 1;
  std::string dataset_name;
  std::uint64_t dataset_fingerprint = 0;
  std::size_t series = 0;
  std::size_t channels = 0;
  std::size_t subsequences = 0;
  WorkloadSpec workload;
  BenchConfig config;
  std::vector<MethodReport> methods;

  nlohmann::json to_json(bool with_timings = true) const;
  std::string to_csv() const;
};

// Builds each method once, runs the workload `repetitions` times and checks
// every answer against brute force before reporting. Throws ExactnessError
// naming the first offending query.
BenchReport run_benchmark(const Dataset& dataset, const Workload& workload, const BenchConfig& config);

double median(std::vector<double> values);

// Binary dataset: "MTSQ", u16 version, u64 n, u64 c, n x u64 lengths, then
// channel-major f64 values per series. Ids are positional.
void save_binary(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_binary(const std::filesystem::path& path);

// CSV dataset: a manifest with header "id,file" (paths relative to the
// manifest) and one file per series with header channel_0,...,channel_{c-1}
// and one row per time step.
void save_csv(const Dataset& dataset, const std::filesystem::path& directory);
Dataset load_csv(const std::filesystem::path& manifest);

// Dispatches on extension: .csv manifests, anything else binary.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace mtsq::bench
