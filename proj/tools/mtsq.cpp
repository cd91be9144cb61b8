// Command-line front end: gen, build, query, bench, inspect.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "mtsq/baselines.hpp"
#include "mtsq/bench.hpp"
#include "mtsq/msindex.hpp"

namespace {

using nlohmann::json;
using namespace mtsq;

struct Options {
  // shared
  std::string data;
  std::string index;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  // gen
  std::size_t n = 16, c = 8, m = 512;
  std::string format = "binary";
  // build
  std::size_t qlen = 128;
  std::string mode = "raw";
  double d_target = 0.60;
  double leaf_fraction = 0.0005;
  std::size_t pivots = 1;
  bool uniform = false;
  // query
  std::size_t k = 1;
  std::string channels;
  std::string query_csv;
  std::uint64_t series = 0;
  std::size_t offset = 0;
  bool from_series = false;
  double noise = 0.1;
  std::size_t workload = 0;
  bool parallel = false;
  bool pretty = false;
  bool no_pivot_correction = false;
  // bench
  std::string methods = "brute,mass,msindex,utsbase";
  std::size_t queries = 10;
  std::size_t reps = 3;
  std::size_t channel_count = 0;  // 0: all
  bool random_channels = false;
  std::string csv;
  bool out_of_dataset = false;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed_given) return o.seed;
  if (const char* env = std::getenv("MTSQ_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidInput("MTSQ_SEED: '" + std::string(env) + "' is not a non-negative integer");
  }
  return 0;
}

std::vector<std::size_t> parse_channels(const std::string& text, std::size_t c) {
  std::vector<std::size_t> ids;
  if (text.empty()) {
    for (std::size_t i = 0; i < c; ++i) ids.push_back(i);
    return ids;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      ids.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InvalidQuery("channels: '" + item + "' is not a channel index");
    }
  }
  validate_channels(ids, c);
  return ids;
}

BuildConfig build_config(const Options& o) {
  BuildConfig cfg;
  cfg.d_target = o.d_target;
  cfg.leaf_fraction = o.leaf_fraction;
  cfg.pivot_count = o.pivots;
  cfg.seed = resolve_seed(o);
  cfg.weighted_partitioning = !o.uniform;
  return cfg;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw InvalidInput("output: cannot open " + path);
  return out;
}

int cmd_gen(const Options& o) {
  if (o.out.empty()) throw InvalidInput("out: an output path is required");
  const auto dataset = bench::generate_synthetic(o.n, o.c, o.m, resolve_seed(o));
  if (o.format == "csv") {
    bench::save_csv(dataset, o.out);
  } else if (o.format == "binary") {
    bench::save_binary(dataset, o.out);
  } else {
    throw InvalidInput("format: expected 'binary' or 'csv'");
  }
  return 0;
}

int cmd_build(const Options& o) {
  if (o.out.empty()) throw InvalidInput("out: an index output path is required");
  const auto dataset = bench::load_dataset(o.data);
  const auto index = MsIndex::build(dataset.series, o.qlen, parse_mode(o.mode), build_config(o));
  auto out = open_out(o.out, true);
  index.save(out);
  const auto s = index.summary();
  std::cout << json{{"index", o.out},
                    {"subsequences", s.subsequences},
                    {"entries", s.entries},
                    {"nodes", s.nodes},
                    {"dimensions", s.dimensions}}
                   .dump()
            << '\n';
  return 0;
}

MsIndex load_index(const Options& o, const bench::Dataset& dataset) {
  std::ifstream in(o.index, std::ios::binary);
  if (!in) throw InvalidInput("index: cannot open " + o.index);
  return MsIndex::load(in, dataset.series);
}

Query read_query_csv(const std::string& path, const MsIndex& index, std::size_t k) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("query: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("query: empty file " + path);
  std::vector<std::size_t> ids;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      while (!col.empty() && (col.back() == '\r' || col.back() == ' ')) col.pop_back();
      if (col.rfind("channel_", 0) != 0) throw FormatError("query: header column '" + col + "' is not channel_<id>");
      try {
        ids.push_back(static_cast<std::size_t>(std::stoull(col.substr(8))));
      } catch (const std::exception&) {
        throw FormatError("query: header column '" + col + "' is not channel_<id>");
      }
    }
  }
  validate_channels(ids, index.channel_count());
  std::vector<std::vector<double>> rows(ids.size());
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t r = 0;
    while (std::getline(ss, cell, ',')) {
      if (r >= ids.size()) throw FormatError("query: too many columns in " + path);
      try {
        rows[r++].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError("query: cannot parse '" + cell + "'");
      }
    }
    if (r != ids.size()) throw FormatError("query: too few columns in " + path);
  }
  Query q;
  q.values = Window(ids.size(), rows.front().size());
  for (std::size_t r = 0; r < ids.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), q.values.channel(r).begin());
  q.channel_ids = ids;
  q.k = k;
  q.mode = index.mode();
  return q;
}

std::vector<Query> make_queries(const Options& o, const bench::Dataset& dataset, const MsIndex& index) {
  if (!o.query_csv.empty()) return {read_query_csv(o.query_csv, index, o.k)};
  const auto ids = parse_channels(o.channels, index.channel_count());
  if (o.from_series) {
    const MultivariateTimeSeries* source = nullptr;
    for (const auto& s : dataset.items()) {
      if (s.id() == o.series) source = &s;
    }
    if (source == nullptr) throw InvalidQuery("series: unknown series id " + std::to_string(o.series));
    if (o.offset + index.qlen() > source->length()) throw InvalidQuery("offset: window exceeds the series");
    Query q;
    q.values = extract_window(*source, o.offset, index.qlen(), ids);
    q.channel_ids = ids;
    q.k = o.k;
    q.mode = index.mode();
    if (o.noise > 0.0) {
      std::mt19937_64 rng(resolve_seed(o));
      std::normal_distribution<double> unit(0.0, 1.0);
      for (std::size_t r = 0; r < q.values.channels; ++r) {
        auto row = q.values.channel(r);
        const double sd = o.noise * moments(row).stddev;
        for (double& v : row) v += sd * unit(rng);
      }
    }
    return {q};
  }
  if (o.workload == 0) throw InvalidQuery("query: give --query-csv, --series/--offset or --workload");
  bench::WorkloadSpec spec;
  spec.qlen = index.qlen();
  spec.count = o.workload;
  spec.noise_factor = o.noise;
  spec.seed = resolve_seed(o);
  spec.mode = index.mode();
  spec.k = o.k;
  auto queries = bench::generate_workload(dataset, spec).queries;
  if (o.channels.empty()) return queries;
  // A fixed channel list: keep only those rows of each full-width query.
  for (auto& q : queries) {
    Window cut(ids.size(), q.qlen());
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto src = q.values.channel(ids[r]);
      std::copy(src.begin(), src.end(), cut.channel(r).begin());
    }
    q.values = std::move(cut);
    q.channel_ids = ids;
  }
  return queries;
}

json stats_json(const QueryStats& s) {
  return {{"entries_emitted_probe1", s.entries_emitted_probe1},
          {"entries_returned_probe2", s.entries_returned_probe2},
          {"subsequences_verified", s.subsequences_verified},
          {"subsequences_total", s.subsequences_total},
          {"nodes_visited", s.nodes_visited},
          {"pruning_effectiveness", s.pruning_effectiveness()},
          {"tau_k", std::isfinite(s.tau_k) ? json(s.tau_k) : json(nullptr)}};
}

int cmd_query(const Options& o) {
  const auto dataset = bench::load_dataset(o.data);
  const auto index = load_index(o, dataset);
  const auto queries = make_queries(o, dataset, index);
  QueryOptions options;
  options.pivot_correction = !o.no_pivot_correction;

  std::vector<QueryResult> results(queries.size());
  if (o.parallel && queries.size() > 1) {
    const std::size_t workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 16u));
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w) {
      tasks.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < queries.size(); i += workers) results[i] = index.knn_query(queries[i], options);
      }));
    }
    for (auto& t : tasks) t.get();
  } else {
    for (std::size_t i = 0; i < queries.size(); ++i) results[i] = index.knn_query(queries[i], options);
  }

  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (o.pretty) {
      std::cout << "query " << i << '\n' << std::setw(6) << "rank" << std::setw(12) << "series" << std::setw(10)
                << "offset" << std::setw(16) << "distance" << '\n';
      for (std::size_t rank = 0; rank < r.matches.size(); ++rank) {
        const auto& mt = r.matches[rank];
        std::cout << std::setw(6) << rank + 1 << std::setw(12) << mt.ref.series_id << std::setw(10) << mt.ref.offset
                  << std::setw(16) << std::setprecision(8) << mt.distance << '\n';
      }
      std::cout << "verified " << r.stats.subsequences_verified << " of " << r.stats.subsequences_total
                << " subsequences, probe-2 entries " << r.stats.entries_returned_probe2 << '\n';
      continue;
    }
    for (std::size_t rank = 0; rank < r.matches.size(); ++rank) {
      const auto& mt = r.matches[rank];
      std::cout << json{{"query", i},
                        {"rank", rank + 1},
                        {"series_id", mt.ref.series_id},
                        {"offset", mt.ref.offset},
                        {"distance", mt.distance}}
                       .dump()
                << '\n';
    }
    std::cout << json{{"query", i}, {"stats", stats_json(r.stats)}}.dump() << '\n';
  }
  return 0;
}

int cmd_bench(const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  bench::Dataset dataset =
      o.data.empty() ? bench::generate_synthetic(o.n, o.c, o.m, seed) : bench::load_dataset(o.data);
  bench::WorkloadSpec spec;
  spec.qlen = o.qlen;
  spec.count = o.queries;
  spec.noise_factor = o.noise;
  spec.out_of_dataset = o.out_of_dataset;
  spec.seed = seed;
  spec.mode = parse_mode(o.mode);
  spec.k = o.k;
  spec.channels_per_query = o.channel_count;
  spec.random_channel_count = o.random_channels;
  const auto workload = bench::generate_workload(dataset, spec);
  if (o.out_of_dataset) dataset = bench::without_series(dataset, workload.held_out_ids);

  bench::BenchConfig cfg;
  cfg.methods.clear();
  std::stringstream ss(o.methods);
  std::string m;
  while (std::getline(ss, m, ',')) cfg.methods.push_back(m);
  cfg.build = build_config(o);
  cfg.repetitions = o.reps;
  cfg.pivot_correction = !o.no_pivot_correction;
  cfg.parallel_verify = o.parallel;
  const auto report = bench::run_benchmark(dataset, workload, cfg);

  const std::string text = report.to_json().dump(o.pretty ? 2 : -1);
  if (o.out.empty()) {
    std::cout << text << '\n';
  } else {
    auto out = open_out(o.out, false);
    out << text << '\n';
  }
  if (!o.csv.empty()) {
    auto out = open_out(o.csv, false);
    out << report.to_csv();
  }
  return 0;
}

int cmd_inspect(const Options& o) {
  const auto dataset = bench::load_dataset(o.data);
  const auto index = load_index(o, dataset);
  const auto s = index.summary();
  const auto& plan = index.plan();
  json channels = json::array();
  for (std::size_t c = 0; c < plan.channels(); ++c) {
    double coverage = 0.0;
    for (auto j : plan.selected(c)) coverage += plan.ardc().at(c, j);
    channels.push_back({{"channel", c}, {"coefficients", plan.selected(c)}, {"ardc_coverage", coverage}});
  }
  std::size_t max_members = 0;
  for (const auto& e : index.tree().entries()) max_members = std::max(max_members, e.member_count());
  const json doc = {{"qlen", index.qlen()},
                    {"mode", std::string(to_string(index.mode()))},
                    {"d_target", plan.d_target()},
                    {"ardc_uniform_fallback", plan.ardc().uniform_fallback},
                    {"dimensions", s.dimensions},
                    {"plan", channels},
                    {"pivot_count", index.pivots().size()},
                    {"series", s.series},
                    {"skipped_series", s.skipped_series},
                    {"subsequences", s.subsequences},
                    {"entries", s.entries},
                    {"compression", s.compression()},
                    {"max_members_per_entry", max_members},
                    {"nodes", s.nodes},
                    {"leaves", s.leaves},
                    {"height", s.height},
                    {"leaf_size", s.leaf_size},
                    {"seed", index.config().seed},
                    {"weighted_partitioning", index.config().weighted_partitioning}};
  std::cout << doc.dump(o.pretty ? 2 : -1) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact kNN subsequence search over multivariate time series"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) {
          o.seed = v;
          o.seed_given = true;
        },
        "Random seed (falls back to MTSQ_SEED, then 0)");
  };
  auto add_build_flags = [&](CLI::App* sub) {
    sub->add_option("--qlen", o.qlen, "Query length")->check(CLI::PositiveNumber);
    sub->add_option("--mode", o.mode, "raw or znorm")->check(CLI::IsMember({"raw", "znorm"}));
    sub->add_option("--d-target", o.d_target, "ARDC coverage target in (0, 1]");
    sub->add_option("--leaf-fraction", o.leaf_fraction, "Leaf size as a fraction of all subsequences");
    sub->add_option("--pivots", o.pivots, "Pivot count (0 disables the correction)");
    sub->add_flag("--uniform", o.uniform, "Uniform instead of variance-weighted partitioning");
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic random-walk dataset");
  gen->add_option("--n", o.n, "Series count")->check(CLI::PositiveNumber);
  gen->add_option("--c", o.c, "Channels")->check(CLI::PositiveNumber);
  gen->add_option("--m", o.m, "Observations per series")->check(CLI::PositiveNumber);
  gen->add_option("--format", o.format, "binary or csv")->check(CLI::IsMember({"binary", "csv"}));
  gen->add_option("--out", o.out, "Output file (binary) or directory (csv)")->required();
  add_seed(gen);

  auto* build = app.add_subcommand("build", "Build and save an index");
  build->add_option("--data", o.data, "Dataset (.mtsq binary or CSV manifest)")->required();
  build->add_option("--out", o.out, "Index snapshot path")->required();
  add_build_flags(build);
  add_seed(build);

  auto* query = app.add_subcommand("query", "Run kNN queries against a saved index");
  query->add_option("--data", o.data, "Dataset the index was built on")->required();
  query->add_option("--index", o.index, "Index snapshot")->required();
  query->add_option("--k", o.k, "Neighbours per query")->check(CLI::PositiveNumber);
  query->add_option("--channels", o.channels, "Comma-separated query channels (default: all)");
  query->add_option("--query-csv", o.query_csv, "Query file with header channel_<id>,...");
  query->add_option_function<std::uint64_t>(
      "--series",
      [&](const std::uint64_t& v) {
        o.series = v;
        o.from_series = true;
      },
      "Copy the query from this series");
  query->add_option("--offset", o.offset, "Offset of the copied query");
  query->add_option("--noise", o.noise, "Noise factor relative to each channel's std");
  query->add_option("--workload", o.workload, "Generate this many in-dataset queries");
  query->add_flag("--parallel", o.parallel, "Run workload queries concurrently (output order preserved)");
  query->add_flag("--pretty", o.pretty, "Human-readable table instead of JSON lines");
  query->add_flag("--no-pivot-correction", o.no_pivot_correction, "Disable the pivot correction");
  add_seed(query);

  auto* benchcmd = app.add_subcommand("bench", "Benchmark methods behind an exactness gate");
  benchcmd->add_option("--data", o.data, "Dataset (synthetic when omitted)");
  benchcmd->add_option("--n", o.n, "Synthetic series count")->check(CLI::PositiveNumber);
  benchcmd->add_option("--c", o.c, "Synthetic channels")->check(CLI::PositiveNumber);
  benchcmd->add_option("--m", o.m, "Synthetic length")->check(CLI::PositiveNumber);
  benchcmd->add_option("--methods", o.methods, "Comma-separated: brute,mass,msindex,utsbase");
  benchcmd->add_option("--queries", o.queries, "Workload size")->check(CLI::PositiveNumber);
  benchcmd->add_option("--reps", o.reps, "Repetitions per query")->check(CLI::PositiveNumber);
  benchcmd->add_option("--k", o.k, "Neighbours per query")->check(CLI::PositiveNumber);
  benchcmd->add_option("--channels", o.channel_count, "Channels per query, drawn at random (0: all)");
  benchcmd->add_flag("--random-channels", o.random_channels, "Draw the channel count per query from 1..c");
  benchcmd->add_option("--noise", o.noise, "Noise factor");
  benchcmd->add_flag("--out-of-dataset", o.out_of_dataset, "Draw queries from held-out series");
  benchcmd->add_option("--out", o.out, "Report JSON path (stdout when omitted)");
  benchcmd->add_option("--csv", o.csv, "Optional CSV flattening");
  benchcmd->add_flag("--parallel", o.parallel, "Parallel brute-force oracle for the exactness gate");
  benchcmd->add_flag("--pretty", o.pretty, "Indented JSON");
  benchcmd->add_flag("--no-pivot-correction", o.no_pivot_correction, "Disable the pivot correction");
  add_build_flags(benchcmd);
  add_seed(benchcmd);

  auto* inspect = app.add_subcommand("inspect", "Describe a saved index");
  inspect->add_option("--data", o.data, "Dataset the index was built on")->required();
  inspect->add_option("--index", o.index, "Index snapshot")->required();
  inspect->add_flag("--pretty", o.pretty, "Indented JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*build) return cmd_build(o);
    if (*query) return cmd_query(o);
    if (*benchcmd) return cmd_bench(o);
    if (*inspect) return cmd_inspect(o);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidQuery& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const BuildError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
