#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "carelens/embed/embedding.hpp"
#include "carelens/registry/registry.hpp"

namespace carelens::registry {

struct BenchRow {
  std::size_t registry_size = 0;
  std::size_t probes = 0;
  double mean_us = 0.0;  // per probe
  double p99_us = 0.0;
  double records_per_second = 0.0;
};

embed::Embedding random_unit_embedding(std::mt19937_64& rng);
/// N records with ids 1..N and random unit embeddings.
Registry random_registry(std::size_t n, std::mt19937_64& rng);

/// Times single-threaded `identify` over random registries of each size.
std::vector<BenchRow> bench_identify(std::span<const std::size_t> sizes, std::size_t probes,
                                     std::uint64_t seed = 1);

std::string format_bench_table(std::span<const BenchRow> rows);

}  // namespace carelens::registry
