#include "carelens/care/store.hpp"

#include <chrono>
#include <ctime>
#include <iostream>

#include "carelens/util/le_bytes.hpp"

namespace carelens::care {

const ResidentRecord* StoreSnapshot::find(std::uint32_t id) const {
  auto it = residents.find(id);
  return it == residents.end() ? nullptr : &it->second;
}

std::string utc_stamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ResidentStore::ResidentStore() : snapshot_(std::make_shared<StoreSnapshot>()) {}

std::shared_ptr<const StoreSnapshot> ResidentStore::current() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::shared_ptr<const StoreSnapshot> ResidentStore::publish(ResidentMap residents) {
  std::lock_guard writer(sync_mu_);
  auto next = std::make_shared<StoreSnapshot>();
  next->residents = std::move(residents);
  next->source_stamp = utc_stamp_now();
  std::lock_guard lock(mu_);
  next->version = snapshot_->version + 1;
  snapshot_ = next;
  last_error_.reset();
  return next;
}

std::shared_ptr<const StoreSnapshot> ResidentStore::sync(const std::string& upstream_path,
                                                         const std::optional<std::string>& persist_to) {
  ResidentMap residents;
  std::vector<std::uint8_t> bytes;
  try {
    bytes = util::read_file_bytes(upstream_path);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    residents = parse_residents(text);
    if (persist_to && *persist_to != upstream_path) util::write_file_atomic(*persist_to, bytes);
  } catch (const std::exception& e) {
    const std::string msg = "sync from " + upstream_path + " rejected: " + e.what();
    std::cerr << msg << "\n";
    {
      std::lock_guard lock(mu_);
      last_error_ = msg;
    }
    throw StoreError(msg);
  }
  return publish(std::move(residents));
}

std::optional<std::string> ResidentStore::last_error() const {
  std::lock_guard lock(mu_);
  return last_error_;
}

}  // namespace carelens::care
