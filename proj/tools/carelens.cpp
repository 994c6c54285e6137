// carelens: command-line front end for training, enrollment, identification,
// evaluation and the local care-record service.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <thread>

#include "CLI11.hpp"
#include "carelens/align/image_io.hpp"
#include "carelens/care/server.hpp"
#include "carelens/embed/synthetic.hpp"
#include "carelens/embed/train.hpp"
#include "carelens/embed/weights_io.hpp"
#include "carelens/eval/pair_file.hpp"
#include "carelens/eval/report.hpp"
#include "carelens/registry/bench.hpp"
#include "carelens/registry/quant.hpp"

using namespace carelens;

namespace {

embed::Tensor load_probe(const std::string& image, const std::string& landmarks,
                         const embed::EmbeddingNet& net) {
  auto img = align::read_pgm(image);
  if (!landmarks.empty()) return align::align_face(img, align::read_landmarks_file(landmarks), net.input_size);
  return img;
}

registry::Registry load_or_empty(const std::string& path) {
  if (!std::filesystem::exists(path)) return {};
  return registry::load_registry(path);
}

std::vector<std::size_t> parse_sizes(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

std::atomic<bool> g_interrupted{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carelens face identification and care-record service"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train an embedding net on synthetic faces");
  std::string weights_out;
  embed::TrainConfig tcfg;
  tcfg.epochs = 300;
  double margin = 0.2;
  std::uint64_t init_seed = 5;
  embed::SyntheticFaceConfig train_synth;
  train_cmd->add_option("--out", weights_out, "weights file to write")->required();
  train_cmd->add_option("--epochs", tcfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tcfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--batch", tcfg.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tcfg.seed, "shuffle and mining seed")->capture_default_str();
  train_cmd->add_option("--init-seed", init_seed, "weight initialization seed")->capture_default_str();
  train_cmd->add_option("--margin", margin)->capture_default_str();
  train_cmd->add_option("--identities", train_synth.identities)->capture_default_str();
  train_cmd->add_option("--samples", train_synth.samples_per_identity)->capture_default_str();
  train_cmd->add_option("--noise", train_synth.noise)->capture_default_str();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write synthetic face crops as PGM files");
  std::string synth_dir;
  embed::SyntheticFaceConfig synth;
  synth.identities = 3;
  synth.samples_per_identity = 2;
  synth_cmd->add_option("--out", synth_dir, "output directory")->required();
  synth_cmd->add_option("--identities", synth.identities)->capture_default_str();
  synth_cmd->add_option("--samples", synth.samples_per_identity)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise)->capture_default_str();
  synth_cmd->add_option("--sample-seed", synth.sample_seed)->capture_default_str();

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "write the embedding of one image");
  std::string weights, image, landmarks, emb_out;
  embed_cmd->add_option("--weights", weights)->required();
  embed_cmd->add_option("--image", image, "PGM face image")->required();
  embed_cmd->add_option("--landmarks", landmarks, "file with x1 y1 ... x5 y5");
  embed_cmd->add_option("--out", emb_out, "512-byte embedding file")->required();

  // enroll
  auto* enroll_cmd = app.add_subcommand("enroll", "add or replace one resident in a registry");
  std::string registry_path;
  std::uint32_t enroll_id = 0;
  enroll_cmd->add_option("--registry", registry_path)->required();
  enroll_cmd->add_option("--id", enroll_id)->required();
  enroll_cmd->add_option("--image", image)->required();
  enroll_cmd->add_option("--landmarks", landmarks);
  enroll_cmd->add_option("--weights", weights)->required();

  // identify
  auto* identify_cmd = app.add_subcommand("identify", "match one probe against a registry");
  double threshold = 1.0;
  identify_cmd->add_option("--registry", registry_path)->required();
  identify_cmd->add_option("--image", image)->required();
  identify_cmd->add_option("--landmarks", landmarks);
  identify_cmd->add_option("--weights", weights)->required();
  identify_cmd->add_option("--threshold", threshold, "squared-distance threshold")->capture_default_str();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "identify latency over random registries");
  std::string sizes = "100,1000,10000";
  std::size_t probes = 200;
  std::uint64_t bench_seed = 1;
  bench_cmd->add_option("--sizes", sizes)->capture_default_str();
  bench_cmd->add_option("--probes", probes)->capture_default_str();
  bench_cmd->add_option("--seed", bench_seed)->capture_default_str();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "VAL/FAR and accuracy over labeled pairs");
  std::string pairs_path, bucket;
  std::size_t folds = 10;
  std::size_t max_diff = 0;
  bool as_json = false;
  embed::SyntheticFaceConfig eval_synth;
  eval_synth.sample_seed = 1011;
  eval_cmd->add_option("--pairs", pairs_path, "pair file; omit to embed held-out synthetic faces");
  eval_cmd->add_option("--bucket", bucket, "only pairs tagged with this bucket");
  eval_cmd->add_option("--weights", weights, "needed without --pairs");
  eval_cmd->add_option("--folds", folds, "cross-validation folds, 0 to skip")->capture_default_str();
  eval_cmd->add_option("--max-diff", max_diff, "different-identity pairs (default: as many as same)");
  eval_cmd->add_option("--identities", eval_synth.identities)->capture_default_str();
  eval_cmd->add_option("--samples", eval_synth.samples_per_identity)->capture_default_str();
  eval_cmd->add_option("--noise", eval_synth.noise)->capture_default_str();
  eval_cmd->add_option("--sample-seed", eval_synth.sample_seed)->capture_default_str();
  eval_cmd->add_flag("--json", as_json);

  // sync
  auto* sync_cmd = app.add_subcommand("sync", "validate an upstream snapshot and replace the local store");
  std::string store_path, upstream;
  sync_cmd->add_option("--store", store_path)->required();
  sync_cmd->add_option("--from", upstream)->required();

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the loopback care-record service");
  std::string dict_path, lang = "ja", host = "127.0.0.1";
  int port = 8080;
  double sync_interval = 60.0;
  int utc_offset = 540;
  serve_cmd->add_option("--registry", registry_path)->required();
  serve_cmd->add_option("--store", store_path)->required();
  serve_cmd->add_option("--weights", weights)->required();
  serve_cmd->add_option("--dict", dict_path, "surface<TAB>kana reading dictionary");
  serve_cmd->add_option("--threshold", threshold)->capture_default_str();
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--sync-interval", sync_interval, "seconds")->capture_default_str();
  serve_cmd->add_option("--upstream", upstream, "snapshot to re-read on every sync (default: the store)");
  serve_cmd->add_option("--lang", lang)->check(CLI::IsMember({"ja", "en"}))->capture_default_str();
  serve_cmd->add_option("--utc-offset", utc_offset, "minutes east of UTC for the local time field")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const auto data = embed::make_synthetic_faces(train_synth);
      embed::NetConfig ncfg;
      ncfg.margin = margin;
      embed::TrainStats stats;
      const auto net = embed::train(embed::EmbeddingNet::build(ncfg, init_seed), data, tcfg, &stats);
      embed::save_weights(net, weights_out);
      const auto counts = embed::param_counts(net);
      std::printf("trained %zu epochs, %zu steps, final loss %.5f\n", tcfg.epochs, stats.steps,
                  stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back());
      std::printf("triplets: %zu semi-hard, %zu random fallback\n", stats.semi_hard_triplets,
                  stats.random_triplets);
      std::printf("parameters: %zu total, light blocks %zu vs %zu as full convolutions (%.1f%% fewer)\n",
                  counts.total, counts.actual, counts.standard_equivalent, 100.0 * counts.reduction_ratio);
    } else if (*synth_cmd) {
      std::filesystem::create_directories(synth_dir);
      const auto data = embed::make_synthetic_faces(synth);
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto name = "id" + std::to_string(data.labels[i]) + "_" +
                          std::to_string(i % synth.samples_per_identity) + ".pgm";
        align::write_pgm((std::filesystem::path(synth_dir) / name).string(), data.images[i]);
      }
      std::printf("wrote %zu images to %s\n", data.size(), synth_dir.c_str());
    } else if (*embed_cmd) {
      const auto net = embed::load_weights(weights);
      eval::write_embedding_file(emb_out, embed::embed(net, load_probe(image, landmarks, net)));
    } else if (*enroll_cmd) {
      const auto net = embed::load_weights(weights);
      const auto e = embed::embed(net, load_probe(image, landmarks, net));
      const auto reg = load_or_empty(registry_path).upsert({enroll_id, registry::quantize(e)});
      registry::save_registry(reg, registry_path);
      std::printf("enrolled id %u; registry holds %zu records\n", enroll_id, reg.size());
    } else if (*identify_cmd) {
      const auto net = embed::load_weights(weights);
      const auto e = embed::embed(net, load_probe(image, landmarks, net));
      const auto m = registry::load_registry(registry_path).identify(e, threshold);
      if (m) {
        std::printf("match id %u distance_sq %.6f\n", m->id, m->distance_sq);
      } else {
        std::printf("no match\n");
        return 2;
      }
    } else if (*bench_cmd) {
      const auto rows = registry::bench_identify(parse_sizes(sizes), probes, bench_seed);
      std::cout << registry::format_bench_table(rows);
    } else if (*eval_cmd) {
      eval::EvalReport report;
      if (!pairs_path.empty()) {
        const auto pairs = eval::read_pair_file(
            pairs_path, bucket.empty() ? std::nullopt : std::optional<std::string>(bucket));
        report = eval::evaluate_pairs(eval::score_pairs(pairs), folds);
      } else {
        if (weights.empty()) throw std::invalid_argument("eval needs --pairs or --weights");
        const auto net = embed::load_weights(weights);
        const auto data = embed::make_synthetic_faces(eval_synth);
        const std::size_t per = eval_synth.samples_per_identity;
        const std::size_t same = eval_synth.identities * per * (per - 1) / 2;
        report = eval::eval_report(net, data, max_diff ? max_diff : same, 17, folds);
      }
      if (as_json) {
        std::cout << eval::to_json(report).dump(2) << "\n";
      } else {
        std::cout << eval::to_text(report);
      }
    } else if (*sync_cmd) {
      care::ResidentStore store;
      const auto snap = store.sync(upstream, store_path);
      std::printf("store %s now holds %zu residents\n", store_path.c_str(), snap->residents.size());
    } else if (*serve_cmd) {
      auto store = std::make_shared<care::ResidentStore>();
      store->sync(store_path);
      care::ServiceConfig scfg;
      scfg.threshold_sq = threshold;
      scfg.display.language = care::parse_language(lang);
      scfg.display.utc_offset_minutes = utc_offset;
      auto service = std::make_shared<care::CareService>(
          embed::load_weights(weights), registry::load_registry(registry_path), store,
          dict_path.empty() ? care::ReadingDictionary() : care::ReadingDictionary::load(dict_path), scfg);
      care::ServerConfig cfg;
      cfg.host = host;
      cfg.port = port;
      cfg.sync_interval = std::chrono::milliseconds(static_cast<long long>(sync_interval * 1000.0));
      cfg.upstream = upstream.empty() ? store_path : upstream;
      if (!upstream.empty()) cfg.persist_to = store_path;
      care::CareServer server(service, cfg);

      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      const int bound = server.start();
      std::printf("serving on http://%s:%d (snapshot version %llu, %zu residents, %zu enrolled)\n",
                  host.c_str(), bound, static_cast<unsigned long long>(store->current()->version),
                  store->current()->residents.size(), service->registry().size());
      std::fflush(stdout);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
