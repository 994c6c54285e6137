#pragma once

#include <optional>
#include <string>
#include <vector>

#include "carelens/embed/embedding.hpp"
#include "carelens/eval/metrics.hpp"

namespace carelens::eval {

/// 128 little-endian float32 values. Vectors within 1e-4 of unit norm are renormalized;
/// anything further off is rejected.
embed::Embedding read_embedding_file(const std::string& path);
void write_embedding_file(const std::string& path, const embed::Embedding& e);

/// Text file, one pair per line: `<emb_a_path> <emb_b_path> <0|1> [bucket]`.
/// Relative paths resolve against the pair file's directory; blank lines and lines
/// starting with '#' are skipped. When `bucket` is set only matching pairs are kept.
std::vector<LabeledPair> read_pair_file(const std::string& path,
                                        const std::optional<std::string>& bucket = std::nullopt);

}  // namespace carelens::eval
