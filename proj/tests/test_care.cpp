#include <atomic>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "care_fixture.hpp"
#include "carelens/care/server.hpp"
#include "doctest.h"
#include "httplib.h"

using namespace carelens;
using namespace std::chrono;
using carelens::testing::CareFixture;

namespace {

const system_clock::time_point kNow = system_clock::time_point(seconds(1714521600));  // 2024-05-01 00:00 UTC

care::ResidentRecord full_record() {
  care::ResidentRecord r;
  r.id = 7;
  r.name = "小原 花子";
  r.name_reading = "オバラ ハナコ";
  r.care_level = 3;
  r.home_name = "さくら苑";
  r.room = "101";
  r.blood_pressure = care::BloodPressure{128, 76};
  r.body_temp = 36.5;
  r.meal_status = "full";
  r.mobility = "walker";
  r.eaten = true;
  r.excretion = false;
  return r;
}

// Greedy longest match by scanning every entry at every position.
std::string brute_apply(const std::map<std::string, std::string>& dict, const std::string& text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t best = 0;
    const std::string* reading = nullptr;
    for (const auto& [s, k] : dict) {
      if (s.size() > best && text.compare(i, s.size(), s) == 0) {
        best = s.size();
        reading = &k;
      }
    }
    if (reading) {
      out += *reading;
      i += best;
    } else {
      out += text[i++];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("store parses the resident schema") {
  const auto m = care::parse_residents(carelens::testing::kResidentsJson);
  REQUIRE(m.size() == 3);
  CHECK(m.at(1).name_reading == "オバラ ハナコ");
  CHECK(m.at(2).blood_pressure == care::BloodPressure{141, 88});
  CHECK_FALSE(m.at(3).blood_pressure);
  CHECK(care::parse_residents(care::dump_residents(m)) == m);
}

TEST_CASE("store syntax errors carry line and column") {
  try {
    care::parse_residents("[\n  {\"id\": 1,\n   \"name\": }\n]");
    FAIL("expected StoreError");
  } catch (const care::StoreError& e) {
    CHECK(std::string(e.what()).find("at 3:") != std::string::npos);
  }
}

TEST_CASE("store rejects broken invariants with the record index") {
  auto bad = [](const std::string& rec) {
    try {
      care::parse_residents("[{\"id\": 1, \"name\": \"a\"}, " + rec + "]");
    } catch (const care::StoreError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(bad(R"({"id": 2, "name": "b", "blood_pressure": {"systolic": 80, "diastolic": 80}})").find("#1") != std::string::npos);
  CHECK(bad(R"({"id": 2, "name": "b", "blood_pressure": {"systolic": 80, "diastolic": 0}})") != "");
  CHECK(bad(R"({"id": 2, "name": "b", "body_temp": 29.9})") != "");
  CHECK(bad(R"({"id": 2, "name": "b", "body_temp": 45.1})") != "");
  CHECK(bad(R"({"id": 1, "name": "b"})").find("duplicate id") != std::string::npos);
  CHECK(bad(R"({"id": -2, "name": "b"})") != "");
  CHECK(bad(R"({"id": 2})") != "");
  CHECK(bad(R"({"id": 2, "name": "b", "meal_status": "feast"})") != "");
  CHECK(bad(R"({"id": 2, "name": "b", "eaten": "yes"})") != "");
  CHECK(bad(R"({"id": 2, "name": "b", "body_temp": 30.0, "care_level": 5})") == "");
}

TEST_CASE("display has ten fields in fixed order") {
  const auto p = care::render_display(full_record(), kNow);
  REQUIRE(p.size() == care::kDisplayFields);
  const char* labels[] = {"氏名", "要介護度", "施設・部屋", "血圧", "体温", "食事状況", "移動", "食事", "排泄", "現在時刻"};
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i].label == labels[i]);
  CHECK(p[0].value == "小原 花子");
  CHECK(p[1].value == "要介護3");
  CHECK(p[2].value == "さくら苑 101号室");
  CHECK(p[3].value == "128/76 mmHg");
  CHECK(p[4].value == "36.5℃");
  CHECK(p[7].value == "済み");
  CHECK(p[8].value == "まだ");
  CHECK(p[9].value == "2024-05-01 09:00");
}

TEST_CASE("display placeholders and english labels") {
  auto r = full_record();
  r.blood_pressure.reset();
  r.eaten.reset();
  auto p = care::render_display(r, kNow);
  REQUIRE(p.size() == 10);
  CHECK(p[3].value == "不明");
  CHECK(p[7].value == "不明");
  care::ResidentRecord bare;
  bare.id = 1;
  bare.name = "x";
  const auto en = care::render_display(bare, kNow, {care::Language::kEnglish, 0});
  REQUIRE(en.size() == 10);
  CHECK(en[0].label == "name");
  CHECK(en[9].label == "local time");
  CHECK(en[9].value == "2024-05-01 00:00");
  for (std::size_t i = 1; i < 9; ++i) CHECK(en[i].value == "unknown");
  CHECK(care::render_display(r, kNow) == care::render_display(r, kNow));
}

TEST_CASE("local time applies the offset") {
  CHECK(care::format_local_time(kNow, -90) == "2024-04-30 22:30");
}

TEST_CASE("dictionary substitution and longest match") {
  care::ReadingDictionary d;
  CHECK(d.apply("KDDI") == "KDDI");
  d.add("KDDI", "ケーディーディーアイ");
  CHECK(d.apply("KDDIの電話") == "ケーディーディーアイの電話");
  d.add("小原", "A");
  d.add("小原田", "B");
  std::vector<std::pair<std::string, std::string>> hits;
  CHECK(d.apply("小原田", &hits) == "B");
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].first == "小原田");
  CHECK(d.apply("小原さん") == "Aさん");
  CHECK_THROWS_AS(d.add("小原", "C"), care::DictionaryError);
  CHECK_THROWS_AS(d.add("", "C"), care::DictionaryError);
}

TEST_CASE("dictionary TSV parsing") {
  const auto d = care::ReadingDictionary::parse_tsv("# comment\n\nKDDI\tケーディーディーアイ\r\n小原\tオハラ\n");
  CHECK(d.size() == 2);
  CHECK(d.apply("小原") == "オハラ");
  CHECK_THROWS_WITH_AS(care::ReadingDictionary::parse_tsv("a\tb\na\tc\n"), doctest::Contains("line 2"),
                       care::DictionaryError);
  CHECK_THROWS_AS(care::ReadingDictionary::parse_tsv("no tab here\n"), care::DictionaryError);
  CHECK_THROWS_AS(care::ReadingDictionary::parse_tsv("a\tb\tc\n"), care::DictionaryError);
}

TEST_CASE("longest match agrees with a brute-force scan") {
  std::mt19937_64 rng(21);
  const std::vector<std::string> alphabet{"a", "b", "c", "小", "原", "田"};
  auto random_word = [&](std::size_t max_len) {
    std::string s;
    const std::size_t n = 1 + rng() % max_len;
    for (std::size_t i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::map<std::string, std::string> entries;
    care::ReadingDictionary d;
    for (int i = 0; i < 6; ++i) {
      const auto s = random_word(3);
      if (entries.count(s)) continue;
      const std::string k = "<" + std::to_string(i) + ">";
      entries[s] = k;
      d.add(s, k);
    }
    const auto text = random_word(12);
    CHECK(d.apply(text) == brute_apply(entries, text));
  }
}

TEST_CASE("name reading overrides the dictionary") {
  const auto dict = care::ReadingDictionary::parse_tsv(carelens::testing::kDictionaryTsv);
  const auto r = full_record();
  const auto s = care::render_speech(care::render_display(r, kNow), dict, r.name_reading);
  CHECK(s.text.find("オバラ") != std::string::npos);
  CHECK(s.text.find("コハラ") == std::string::npos);
  CHECK(s.text.find("ミリメートルエイチジー") != std::string::npos);
  REQUIRE_FALSE(s.readings_applied.empty());
  CHECK(s.readings_applied[0] == std::pair<std::string, std::string>{"小原 花子", "オバラ ハナコ"});

  const auto plain = care::render_speech(care::render_display(r, kNow), dict, std::nullopt);
  CHECK(plain.text.find("コハラ") != std::string::npos);
}

TEST_CASE("speech covers every payload value") {
  std::mt19937_64 rng(22);
  const auto dict = care::ReadingDictionary::parse_tsv(carelens::testing::kDictionaryTsv);
  for (int trial = 0; trial < 200; ++trial) {
    care::ResidentRecord r;
    r.id = 1;
    r.name = (rng() & 1) ? "佐藤 一郎" : "小原 花子";
    if (rng() & 1) r.name_reading = "ヨミ";
    if (rng() & 1) r.care_level = 1 + static_cast<int>(rng() % 5);
    if (rng() & 1) r.room = std::to_string(rng() % 500);
    if (rng() & 1) r.blood_pressure = care::BloodPressure{100 + static_cast<int>(rng() % 60), 60};
    if (rng() & 1) r.body_temp = 35.0 + static_cast<double>(rng() % 30) / 10.0;
    if (rng() & 1) r.meal_status = std::string(care::kMealStatuses[rng() % 5]);
    if (rng() & 1) r.eaten = (rng() & 1) != 0;
    const auto lang = (rng() & 1) ? care::Language::kJapanese : care::Language::kEnglish;
    const auto payload = care::render_display(r, kNow, {lang, 540});
    const auto s = care::render_speech(payload, dict, r.name_reading, lang);
    CHECK_FALSE(s.text.empty());
    for (std::size_t i = 0; i < payload.size(); ++i) {
      const std::string expected =
          (i == 0 && r.name_reading) ? *r.name_reading : dict.apply(payload[i].value);
      CHECK(s.text.find(expected) != std::string::npos);
    }
  }
  CHECK(care::render_speech({}, dict, std::nullopt).text.empty());
}

TEST_CASE("sync versions and fault handling") {
  CareFixture fx("carelens_care_sync");
  auto& store = *fx.store;
  CHECK(store.current()->version == 1);
  const auto before = store.current();
  const auto again = store.sync(fx.path("store.json"));
  CHECK(again->version == 2);
  CHECK(again->residents == before->residents);

  fx.write("truncated.json", std::string(carelens::testing::kResidentsJson).substr(0, 200));
  CHECK_THROWS_AS(store.sync(fx.path("truncated.json")), care::StoreError);
  CHECK(store.current() == again);
  REQUIRE(store.last_error());
  CHECK(store.last_error()->find("parse error at") != std::string::npos);
  CHECK_THROWS_AS(store.sync(fx.path("missing.json")), care::StoreError);
  CHECK(store.current()->version == 2);

  fx.write("fewer.json", R"([{"id": 1, "name": "小原 花子"}])");
  const auto persisted = fx.path("local.json");
  store.sync(fx.path("fewer.json"), persisted);
  CHECK(store.current()->version == 3);
  CHECK_FALSE(store.last_error());
  CHECK(care::parse_residents(std::string((std::istreambuf_iterator<char>(*std::make_unique<std::ifstream>(persisted))),
                                          std::istreambuf_iterator<char>())).size() == 1);
}

TEST_CASE("identify and fetch") {
  CareFixture fx("carelens_care_identify");
  const auto& svc = *fx.service;
  const auto hit = svc.identify(fx.enrolled[0], kNow);
  REQUIRE(hit.status == care::IdentifyStatus::kMatch);
  CHECK(hit.match->id == 1);
  CHECK(hit.display.size() == 10);
  CHECK(hit.speech->text.find("オバラ") != std::string::npos);
  CHECK(hit.speech->text.find("コハラ") == std::string::npos);

  const auto img = svc.identify_image(fx.faces.images[1], std::nullopt, kNow);
  REQUIRE(img.status == care::IdentifyStatus::kMatch);
  CHECK(img.match->id == 2);

  const auto miss = svc.identify(fx.stranger, kNow);
  CHECK(miss.status == care::IdentifyStatus::kNoMatch);
  CHECK(care::to_json(miss)["match"].is_null());

  fx.write("fewer.json", R"([{"id": 1, "name": "小原 花子"}])");
  fx.store->sync(fx.path("fewer.json"));
  const auto gone = svc.identify(fx.enrolled[2], kNow);
  CHECK(gone.status == care::IdentifyStatus::kRecordMissing);
  CHECK(gone.match->id == 3);
  CHECK(care::to_json(gone)["record_missing"] == true);

  CHECK(care::to_json(svc.identify(fx.enrolled[0], kNow)).dump() ==
        care::to_json(svc.identify(fx.enrolled[0], kNow)).dump());
}

TEST_CASE("probes beyond the threshold never match") {
  CareFixture fx("carelens_care_openset");
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    embed::Embedding::Values v;
    for (double& x : v) x = g(rng);
    const auto probe = embed::Embedding::normalized(v);
    double best = 4.0;
    for (const auto& rec : fx.service->registry().records()) {
      const auto deq = registry::dequantize(rec.quant);
      double d = 0.0;
      for (std::size_t k = 0; k < deq.size(); ++k) d += (probe[k] - deq[k]) * (probe[k] - deq[k]);
      best = std::min(best, d);
    }
    if (best <= fx.threshold_sq) continue;
    ++checked;
    CHECK(fx.service->identify(probe, kNow).status == care::IdentifyStatus::kNoMatch);
  }
  CHECK(checked > 1000);
}

TEST_CASE("unaligned probes must match the input size") {
  CareFixture fx("carelens_care_shape");
  CHECK_THROWS_AS(fx.service->identify_image(embed::Tensor({1, 20, 20}), std::nullopt, kNow),
                  care::RequestError);
  CHECK_THROWS_AS(fx.service->identify_image(embed::Tensor({3, 32, 32}), std::nullopt, kNow),
                  care::RequestError);
}

TEST_CASE("concurrent identify sees exactly one snapshot") {
  CareFixture fx("carelens_care_stress");
  std::string a = carelens::testing::kResidentsJson, b = a;
  b.replace(b.find("\"101\""), 5, "\"901\"");
  b.replace(b.find("36.5"), 4, "37.5");
  fx.write("a.json", a);
  fx.write("b.json", b);

  std::mutex mu;
  std::map<std::uint64_t, std::string> room_of_version{{1, "101"}};
  std::atomic<bool> done{false};
  std::atomic<int> started{0};
  std::thread writer([&] {
    while (started < 4) std::this_thread::yield();
    for (int i = 0; i < 200; ++i) {
      std::this_thread::sleep_for(microseconds(200));
      const bool use_b = i % 2 == 0;
      const auto snap = fx.store->sync(fx.path(use_b ? "b.json" : "a.json"));
      std::lock_guard lock(mu);
      room_of_version[snap->version] = use_b ? "901" : "101";
    }
    done = true;
  });
  std::vector<std::pair<std::uint64_t, care::IdentifyResponse>> seen;
  std::vector<std::thread> readers;
  std::mutex seen_mu;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      ++started;
      int n = 0;
      while (!done || n < 50) {
        auto r = fx.service->identify(fx.enrolled[0], kNow);
        std::lock_guard lock(seen_mu);
        seen.emplace_back(r.snapshot_version, std::move(r));
        ++n;
      }
    });
  }
  writer.join();
  for (auto& r : readers) r.join();
  std::set<std::uint64_t> versions;
  for (const auto& [v, r] : seen) {
    REQUIRE(r.status == care::IdentifyStatus::kMatch);
    const auto& room = room_of_version.at(v);
    CHECK(*r.record->room == room);
    CHECK(r.display[2].value == "さくら苑 " + room + "号室");
    CHECK(r.display[4].value == (room == "901" ? "37.5℃" : "36.5℃"));
    versions.insert(v);
  }
  CHECK(versions.size() > 1);
}

TEST_CASE("http endpoint") {
  CareFixture fx("carelens_care_http");
  fx.write("upstream.json", carelens::testing::kResidentsJson);
  care::ServerConfig cfg;
  cfg.sync_interval = milliseconds(20);
  cfg.upstream = fx.path("upstream.json");
  care::CareServer server(fx.service, cfg);
  const int port = server.start();
  httplib::Client cli("127.0.0.1", port);

  nlohmann::json req;
  req["embedding"] = fx.enrolled[1].values();
  req["now"] = 1714521600;
  auto res = cli.Post("/identify", req.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  auto body = nlohmann::json::parse(res->body);
  CHECK(body["match"]["id"] == 2);
  CHECK(body["display"].size() == 10);
  CHECK(body["display"][9]["value"] == "2024-05-01 09:00");

  req["embedding"] = fx.stranger.values();
  res = cli.Post("/identify", req.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["match"].is_null());

  fx.write("probe.pgm", "");
  for (const std::string bad : {"not json", "{}", R"({"embedding": [1, 2]})",
                                R"({"embedding": [], "image": "x"})", R"({"image": "/nonexistent.pgm"})"}) {
    res = cli.Post("/identify", bad, "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(nlohmann::json::parse(res->body).contains("error"));
  }

  std::this_thread::sleep_for(milliseconds(150));
  res = cli.Get("/healthz");
  REQUIRE(res);
  auto health = nlohmann::json::parse(res->body);
  CHECK(health["snapshot_version"].get<int>() >= 2);
  CHECK(health["residents"] == 3);
  CHECK(health["registry_size"] == 3);
  server.stop();
}
