#include "carelens/care/server.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <iostream>
#include <mutex>
#include <thread>

#include "carelens/align/image_io.hpp"
#include "httplib.h"

namespace carelens::care {
namespace {

using ojson = nlohmann::ordered_json;

ojson error_body(const std::string& reason) { return {{"error", reason}}; }

embed::Embedding parse_embedding(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != embed::kEmbeddingDim) {
    throw RequestError("embedding must be an array of " + std::to_string(embed::kEmbeddingDim) +
                       " numbers");
  }
  embed::Embedding::Values v;
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!arr[i].is_number()) throw RequestError("embedding entries must be numbers");
    v[i] = arr[i].get<double>();
    if (!std::isfinite(v[i])) throw RequestError("embedding entries must be finite");
    sq += v[i] * v[i];
  }
  if (!(sq > 0.0)) throw RequestError("embedding must be non-zero");
  return embed::Embedding::normalized(v);
}

align::Landmarks5 parse_landmarks(const nlohmann::json& j) {
  if (j.is_string()) return align::Landmarks5::parse(j.get<std::string>());
  if (!j.is_array() || j.size() != 5) throw RequestError("landmarks must be five [x, y] pairs");
  align::Landmarks5 lm;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& p = j[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw RequestError("landmarks must be five [x, y] pairs");
    }
    lm.points[i] = {p[0].get<double>(), p[1].get<double>()};
  }
  return lm;
}

}  // namespace

ojson handle_identify(const CareService& service, const std::string& body) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw RequestError(std::string("request body is not JSON: ") + e.what());
  }
  if (!req.is_object()) throw RequestError("request body must be a JSON object");

  auto now = std::chrono::system_clock::now();
  if (auto it = req.find("now"); it != req.end()) {
    if (!it->is_number_integer()) throw RequestError("now must be integer unix seconds");
    now = std::chrono::system_clock::time_point(std::chrono::seconds(it->get<std::int64_t>()));
  }

  const bool has_emb = req.contains("embedding");
  const bool has_img = req.contains("image");
  if (has_emb == has_img) throw RequestError("give exactly one of embedding or image");
  if (has_emb) return to_json(service.identify(parse_embedding(req["embedding"]), now));

  if (!req["image"].is_string()) throw RequestError("image must be a file path");
  std::optional<align::Landmarks5> lm;
  try {
    if (auto it = req.find("landmarks"); it != req.end() && !it->is_null()) lm = parse_landmarks(*it);
  } catch (const align::AlignError& e) {
    throw RequestError(e.what());
  }
  embed::Tensor image;
  try {
    image = align::read_pgm(req["image"].get<std::string>());
  } catch (const std::exception& e) {
    throw RequestError(e.what());
  }
  return to_json(service.identify_image(image, lm, now));
}

ojson health_json(const CareService& service) {
  const auto snap = service.store().current();
  ojson j;
  j["status"] = "ok";
  j["snapshot_version"] = snap->version;
  j["residents"] = snap->residents.size();
  j["registry_size"] = service.registry().size();
  j["source_stamp"] = snap->source_stamp;
  if (auto err = service.store().last_error()) {
    j["last_sync_error"] = *err;
  } else {
    j["last_sync_error"] = nullptr;
  }
  return j;
}

struct CareServer::Impl {
  std::shared_ptr<CareService> service;
  ServerConfig config;
  httplib::Server http;
  std::thread listener;
  std::thread syncer;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  bool stopped = false;
};

CareServer::CareServer(std::shared_ptr<CareService> service, ServerConfig config)
    : impl_(std::make_unique<Impl>()) {
  if (!service) throw std::invalid_argument("server needs a service");
  impl_->service = std::move(service);
  impl_->config = std::move(config);

  auto& svc = *impl_->service;
  impl_->http.Post("/identify", [&svc](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(handle_identify(svc, req.body).dump(), "application/json");
    } catch (const RequestError& e) {
      res.status = 400;
      res.set_content(error_body(e.what()).dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_body(e.what()).dump(), "application/json");
    }
  });
  impl_->http.Get("/healthz", [&svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(health_json(svc).dump(), "application/json");
  });
}

CareServer::~CareServer() { stop(); }

bool CareServer::sync_once() {
  if (!impl_->config.upstream) return false;
  try {
    impl_->service->store().sync(*impl_->config.upstream, impl_->config.persist_to);
    return true;
  } catch (const StoreError&) {
    return false;  // already logged by the store
  }
}

int CareServer::start() {
  const int port = impl_->config.port == 0
                       ? impl_->http.bind_to_any_port(impl_->config.host)
                       : (impl_->http.bind_to_port(impl_->config.host, impl_->config.port)
                              ? impl_->config.port
                              : -1);
  if (port < 0) {
    throw std::runtime_error("cannot bind " + impl_->config.host + ":" +
                             std::to_string(impl_->config.port));
  }
  impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  if (impl_->config.upstream) {
    impl_->syncer = std::thread([this] {
      std::unique_lock lock(impl_->mu);
      while (!impl_->stopping) {
        if (impl_->cv.wait_for(lock, impl_->config.sync_interval, [this] { return impl_->stopping; })) break;
        lock.unlock();
        sync_once();
        lock.lock();
      }
    });
  }
  return port;
}

void CareServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return impl_->stopping; });
}

void CareServer::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopping = true;
    impl_->stopped = true;
  }
  impl_->cv.notify_all();
  impl_->http.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  if (impl_->syncer.joinable()) impl_->syncer.join();
}

}  // namespace carelens::care
