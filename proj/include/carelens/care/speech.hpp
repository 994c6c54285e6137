#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "carelens/care/display.hpp"

namespace carelens::care {

class DictionaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Surface form -> kana reading, matched longest-first over UTF-8 bytes.
class ReadingDictionary {
 public:
  ReadingDictionary();
  ~ReadingDictionary();
  ReadingDictionary(ReadingDictionary&&) noexcept;
  ReadingDictionary& operator=(ReadingDictionary&&) noexcept;
  ReadingDictionary(const ReadingDictionary&);
  ReadingDictionary& operator=(const ReadingDictionary&);

  /// `surface<TAB>kana` per line; '#' comments and blank lines skipped.
  static ReadingDictionary parse_tsv(std::string_view text);
  static ReadingDictionary load(const std::string& path);

  /// Throws DictionaryError on an empty or duplicate surface.
  void add(std::string surface, std::string kana);

  std::size_t size() const noexcept { return entries_.size(); }

  /// Length in bytes and reading of the longest entry that prefixes `text`.
  std::optional<std::pair<std::size_t, const std::string*>> longest_prefix(std::string_view text) const;

  /// Left to right, replaces the longest match at each position. Unmatched text is
  /// copied one code point at a time. Hits are appended to `applied`.
  std::string apply(std::string_view text,
                    std::vector<std::pair<std::string, std::string>>* applied = nullptr) const;

 private:
  struct Node;
  std::unique_ptr<Node> root_;
  std::map<std::string, std::string> entries_;
};

struct SpeechScript {
  std::string text;
  std::vector<std::pair<std::string, std::string>> readings_applied;  // (surface, kana)
};

/// One sentence per payload entry, in payload order. The first entry is the name:
/// `name_reading` replaces it outright, otherwise the dictionary applies as for
/// every other value.
SpeechScript render_speech(const DisplayPayload& payload, const ReadingDictionary& dict,
                           const std::optional<std::string>& name_reading,
                           Language lang = Language::kJapanese);

}  // namespace carelens::care
