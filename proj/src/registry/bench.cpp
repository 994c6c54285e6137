#include "carelens/registry/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace carelens::registry {

embed::Embedding random_unit_embedding(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  embed::Embedding::Values v;
  for (double& x : v) x = g(rng);
  return embed::Embedding::normalized(v);
}

Registry random_registry(std::size_t n, std::mt19937_64& rng) {
  std::vector<FaceRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    records[i].id = static_cast<std::uint32_t>(i + 1);
    records[i].quant = quantize(random_unit_embedding(rng));
  }
  return Registry::from_sorted(std::move(records));
}

std::vector<BenchRow> bench_identify(std::span<const std::size_t> sizes, std::size_t probes,
                                     std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(seed);
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    const Registry reg = random_registry(n, rng);
    std::vector<embed::Embedding> queries;
    for (std::size_t i = 0; i < probes; ++i) queries.push_back(random_unit_embedding(rng));

    std::vector<double> us;
    us.reserve(probes);
    for (const auto& q : queries) {
      const auto t0 = clock::now();
      [[maybe_unused]] const auto m = reg.identify(q, 4.0);
      const auto t1 = clock::now();
      us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    BenchRow row;
    row.registry_size = n;
    row.probes = probes;
    if (!us.empty()) {
      double total = 0.0;
      for (double v : us) total += v;
      row.mean_us = total / static_cast<double>(us.size());
      std::sort(us.begin(), us.end());
      const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(us.size()))) - 1;
      row.p99_us = us[std::min(idx, us.size() - 1)];
      row.records_per_second =
          row.mean_us > 0.0 ? static_cast<double>(n) / (row.mean_us * 1e-6) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_bench_table(std::span<const BenchRow> rows) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%10s %8s %14s %14s %18s\n", "records", "probes", "mean_ms",
                "p99_ms", "records_per_s");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%10zu %8zu %14.4f %14.4f %18.3e\n", r.registry_size,
                  r.probes, r.mean_us / 1000.0, r.p99_us / 1000.0, r.records_per_second);
    os << line;
  }
  return os.str();
}

}  // namespace carelens::registry
