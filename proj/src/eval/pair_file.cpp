#include "carelens/eval/pair_file.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "carelens/util/le_bytes.hpp"

namespace carelens::eval {

embed::Embedding read_embedding_file(const std::string& path) {
  const auto bytes = util::read_file_bytes(path);
  if (bytes.size() != embed::kEmbeddingDim * 4) {
    throw EvalError(path + ": embedding file must hold exactly 512 bytes, got " +
                    std::to_string(bytes.size()));
  }
  util::ByteReader r(bytes);
  embed::Embedding::Values v;
  double sq = 0.0;
  for (double& x : v) {
    x = r.get_f32();
    if (!std::isfinite(x)) throw EvalError(path + ": non-finite embedding component");
    sq += x * x;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) throw EvalError(path + ": embedding is not unit norm");
  return embed::Embedding::normalized(v);
}

void write_embedding_file(const std::string& path, const embed::Embedding& e) {
  util::ByteWriter w;
  for (double x : e.values()) w.put_f32(static_cast<float>(x));
  util::write_file_atomic(path, w.bytes());
}

std::vector<LabeledPair> read_pair_file(const std::string& path,
                                        const std::optional<std::string>& bucket) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open pair file " + path);
  const auto base = std::filesystem::path(path).parent_path();
  std::map<std::string, embed::Embedding> cache;
  auto load = [&](const std::string& p) -> const embed::Embedding& {
    auto full = std::filesystem::path(p);
    if (full.is_relative()) full = base / full;
    const std::string key = full.string();
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, read_embedding_file(key)).first;
    return it->second;
  };

  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string a, b, label, tag;
    if (!(ls >> a) || a[0] == '#') continue;
    if (!(ls >> b >> label) || (label != "0" && label != "1")) {
      throw EvalError(path + ":" + std::to_string(line_no) +
                      ": expected `<emb_a> <emb_b> <0|1> [bucket]`");
    }
    ls >> tag;
    std::string extra;
    if (ls >> extra) throw EvalError(path + ":" + std::to_string(line_no) + ": too many fields");
    if (bucket && tag != *bucket) continue;
    pairs.push_back({load(a), load(b), label == "1", tag});
  }
  return pairs;
}

}  // namespace carelens::eval
