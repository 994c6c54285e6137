#include <algorithm>
#include <cmath>
#include <random>

#include "carelens/registry/bench.hpp"
#include "carelens/registry/quant.hpp"
#include "carelens/registry/registry.hpp"
#include "doctest.h"
#include "registry_oracles.hpp"

using namespace carelens::registry;
using carelens::embed::Embedding;
namespace oracle = carelens::oracle;

namespace {

Embedding axis(std::size_t i) {
  Embedding::Values v{};
  v[i] = 1.0;
  return Embedding::from_unit(v);
}

std::array<double, kQuantDim> filled(double x) {
  std::array<double, kQuantDim> v;
  v.fill(x);
  return v;
}

RegistryErrorKind kind_of(std::span<const std::uint8_t> bytes) {
  try {
    read_registry(bytes);
  } catch (const RegistryError& e) {
    return e.kind();
  }
  FAIL("expected RegistryError");
  return RegistryErrorKind::kBadMagic;
}

}  // namespace

TEST_CASE("quantize: endpoints and rounding") {
  CHECK(quantize(filled(0.0))[0] == 0);
  CHECK(quantize(filled(1.0))[0] == 127);
  CHECK(quantize(filled(-1.0))[0] == -127);
  CHECK(quantize(filled(0.5))[0] == 64);   // 63.5 rounds away from zero
  CHECK(quantize(filled(-0.5))[0] == -64);
  CHECK(quantize(filled(1.5))[0] == 127);  // clamped
  CHECK(quantize(filled(-3.0))[0] == -127);
  auto bad = filled(0.0);
  bad[17] = NAN;
  CHECK_THROWS_AS(quantize(bad), std::invalid_argument);
  bad[17] = INFINITY;
  CHECK_THROWS_AS(quantize(bad), std::invalid_argument);
}

TEST_CASE("dequantize") {
  QuantEmbedding q{};
  q[0] = 127;
  q[1] = -127;
  auto x = dequantize(q);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == -1.0);
  CHECK(x[2] == 0.0);
}

TEST_CASE("integer-domain distance equals float-domain distance") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    auto a = quantize(random_unit_embedding(rng));
    auto b = quantize(random_unit_embedding(rng));
    auto xa = dequantize(a), xb = dequantize(b);
    double d = 0.0;
    for (std::size_t k = 0; k < kQuantDim; ++k) d += (xa[k] - xb[k]) * (xa[k] - xb[k]);
    CHECK(std::abs(quantized_distance_sq(a, b) - d) <= 1e-6);
  }
  QuantEmbedding hi, lo;
  hi.fill(127);
  lo.fill(-127);
  CHECK(quantized_distance_raw(hi, lo) == 254 * 254 * 128);
}

TEST_CASE("record and file sizes") {
  CHECK(kRecordBytes == 132);
  CHECK(write_registry(Registry{}).size() == 12);
  std::vector<FaceRecord> recs(3);
  for (std::uint32_t i = 0; i < 3; ++i) recs[i].id = i + 10;
  CHECK(write_registry(Registry::from_records(recs)).size() == 408);
}

TEST_CASE("registry bytes are laid out little-endian") {
  FaceRecord r;
  r.id = 0x01020304;
  r.quant[0] = -1;
  r.quant[127] = 127;
  auto bytes = write_registry(Registry::from_records({r}));
  const std::vector<std::uint8_t> head{'S', 'H', 'F', 'R', 1, 0, 0, 0, 1, 0, 0, 0, 4, 3, 2, 1};
  CHECK(std::equal(head.begin(), head.end(), bytes.begin()));
  CHECK(bytes[16] == 0xFF);
  CHECK(bytes[16 + 127] == 127);
}

TEST_CASE("read_registry reports distinct errors") {
  std::mt19937_64 rng(5);
  auto good = write_registry(random_registry(4, rng));
  for (std::size_t i = 0; i < 4; ++i) {
    auto b = good;
    b[i] ^= 0x20;
    CHECK(kind_of(b) == RegistryErrorKind::kBadMagic);
  }
  auto v = good;
  v[4] = 2;
  CHECK(kind_of(v) == RegistryErrorKind::kVersionMismatch);
  auto t = good;
  t.pop_back();
  CHECK(kind_of(t) == RegistryErrorKind::kTruncated);
  CHECK(kind_of(std::span(good).first(7)) == RegistryErrorKind::kTruncated);
  auto extra = good;
  extra.push_back(0);
  CHECK(kind_of(extra) == RegistryErrorKind::kTrailingBytes);
  auto unsorted = good;
  std::swap_ranges(unsorted.begin() + 12, unsorted.begin() + 16, unsorted.begin() + 12 + 132);
  CHECK(kind_of(unsorted) == RegistryErrorKind::kUnsorted);
  auto dup = good;
  std::copy(dup.begin() + 12, dup.begin() + 16, dup.begin() + 12 + 132);
  CHECK(kind_of(dup) == RegistryErrorKind::kDuplicateId);
  auto code = good;
  code[20] = 0x80;
  CHECK(kind_of(code) == RegistryErrorKind::kInvalidCode);
}

TEST_CASE("from_records sorts and rejects duplicate ids") {
  std::vector<FaceRecord> recs(3);
  recs[0].id = 9;
  recs[1].id = 2;
  recs[2].id = 5;
  auto reg = Registry::from_records(recs);
  CHECK(reg.records()[0].id == 2);
  CHECK(reg.records()[2].id == 9);
  recs[2].id = 9;
  CHECK_THROWS_AS(Registry::from_records(recs), RegistryError);
  CHECK_THROWS_AS(Registry::from_sorted({recs[0], recs[1]}), RegistryError);
}

TEST_CASE("write and read are inverse on random registries") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> size(0, 300);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FaceRecord> recs;
    std::uint32_t id = 0;
    const std::size_t n = size(rng);
    for (std::size_t i = 0; i < n; ++i) {
      id += 1 + static_cast<std::uint32_t>(rng() % 1000);
      recs.push_back({id, quantize(random_unit_embedding(rng))});
    }
    auto reg = Registry::from_sorted(recs);
    auto bytes = write_registry(reg);
    CHECK(bytes.size() == 12 + 132 * n);
    auto back = read_registry(bytes);
    CHECK(std::equal(back.records().begin(), back.records().end(), recs.begin(), recs.end()));
    CHECK(write_registry(back) == bytes);
  }
}

TEST_CASE("lookup_by_id") {
  std::vector<FaceRecord> recs(3);
  recs[0].id = 3;
  recs[1].id = 8;
  recs[2].id = 40;
  recs[1].quant[0] = 55;
  auto reg = Registry::from_records(recs);
  REQUIRE(reg.lookup_by_id(8) != nullptr);
  CHECK(reg.lookup_by_id(8)->quant[0] == 55);
  CHECK(reg.lookup_by_id(9) == nullptr);
  CHECK(reg.lookup_by_id(0) == nullptr);
  CHECK(reg.lookup_by_id(41) == nullptr);
  CHECK(Registry{}.lookup_by_id(1) == nullptr);
}

TEST_CASE("lookup_by_id equals a linear scan") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng() % 2000;
    std::vector<FaceRecord> recs;
    std::uint32_t id = static_cast<std::uint32_t>(rng() % 5);
    for (std::size_t i = 0; i < n; ++i) {
      recs.push_back({id, {}});
      id += 1 + static_cast<std::uint32_t>(rng() % 3);
    }
    auto reg = Registry::from_sorted(recs);
    for (int probe = 0; probe < 50; ++probe) {
      const auto q = static_cast<std::uint32_t>(rng() % (id + 3));
      CHECK(reg.lookup_by_id(q) == oracle::linear_lookup(reg, q));
    }
  }
}

TEST_CASE("identify examples") {
  std::mt19937_64 rng(8);
  auto e = random_unit_embedding(rng);
  auto reg = Registry::from_records({{42, quantize(e)}, {7, quantize(random_unit_embedding(rng))}});
  auto m = reg.identify(e, 0.1);
  REQUIRE(m);
  CHECK(m->id == 42);
  CHECK(m->distance_sq <= 0.002);

  auto single = Registry::from_records({{1, quantize(axis(0))}});
  CHECK_FALSE(single.identify(axis(1), 1.0));
  auto far = single.identify(axis(1), 2.5);
  REQUIRE(far);
  CHECK(far->distance_sq == doctest::Approx(2.0));

  auto q = quantize(e);
  auto tie = Registry::from_records({{7, q}, {3, q}});
  CHECK(tie.identify(e, 1.0)->id == 3);
  CHECK(tie.identify_quantized(q, 1.0)->id == 3);

  CHECK_FALSE(Registry{}.identify(e, 4.0));
  CHECK_THROWS_AS(reg.identify(e, -0.1), std::invalid_argument);
}

TEST_CASE("identify equals the exhaustive dequantized scan") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> thr(0.0, 2.5);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = trial == 0 ? 0 : 1 + rng() % 1000;
    auto reg = random_registry(n, rng);
    for (int p = 0; p < 10; ++p) {
      // Half the probes sit near an enrolled record.
      Embedding probe = random_unit_embedding(rng);
      if (n > 0 && p % 2 == 0) {
        auto base = dequantize(reg.records()[rng() % n].quant);
        std::normal_distribution<double> g(0.0, 0.05);
        for (double& x : base) x += g(rng);
        probe = Embedding::normalized(base);
      }
      const double t = thr(rng);
      auto got = reg.identify(probe, t);
      auto want = oracle::exhaustive_identify(reg, probe, t);
      REQUIRE(got.has_value() == want.has_value());
      if (got) {
        CHECK(got->id == want->id);
        CHECK(got->distance_sq == want->distance_sq);
        CHECK(got->distance_sq <= 4.2);
      }
    }
  }
}

TEST_CASE("upsert and without keep the registry sorted") {
  Registry reg;
  reg = reg.upsert({5, {}}).upsert({2, {}}).upsert({9, {}});
  QuantEmbedding q{};
  q[0] = 3;
  reg = reg.upsert({5, q});
  CHECK(reg.size() == 3);
  CHECK(reg.records()[1].quant[0] == 3);
  reg = reg.without(2);
  CHECK(reg.size() == 2);
  CHECK(reg.records()[0].id == 5);
  CHECK(write_registry(read_registry(write_registry(reg))) == write_registry(reg));
}

TEST_CASE("bench_identify: empty registry and linear scaling") {
  const std::size_t empty[] = {0};
  auto rows = bench_identify(empty, 1000);
  CHECK(rows[0].mean_us < 1.0);

  const std::size_t sizes[] = {5000, 10000};
  auto scaled = bench_identify(sizes, 200, 3);
  INFO(format_bench_table(scaled));
  CHECK(scaled[1].mean_us / scaled[0].mean_us <= 2.5);
  CHECK(scaled[1].mean_us <= 100000.0);
}
