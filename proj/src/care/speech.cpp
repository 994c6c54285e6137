#include "carelens/care/speech.hpp"

#include <fstream>
#include <sstream>

namespace carelens::care {

struct ReadingDictionary::Node {
  std::map<unsigned char, std::unique_ptr<Node>> next;
  const std::string* reading = nullptr;  // points into entries_
};

ReadingDictionary::ReadingDictionary() : root_(std::make_unique<Node>()) {}
ReadingDictionary::~ReadingDictionary() = default;
ReadingDictionary::ReadingDictionary(ReadingDictionary&&) noexcept = default;
ReadingDictionary& ReadingDictionary::operator=(ReadingDictionary&&) noexcept = default;

ReadingDictionary::ReadingDictionary(const ReadingDictionary& other) : ReadingDictionary() {
  for (const auto& [s, k] : other.entries_) add(s, k);
}

ReadingDictionary& ReadingDictionary::operator=(const ReadingDictionary& other) {
  if (this != &other) {
    ReadingDictionary copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void ReadingDictionary::add(std::string surface, std::string kana) {
  if (surface.empty()) throw DictionaryError("empty surface form");
  if (kana.empty()) throw DictionaryError("empty reading for '" + surface + "'");
  auto [it, inserted] = entries_.emplace(std::move(surface), std::move(kana));
  if (!inserted) throw DictionaryError("duplicate surface '" + it->first + "'");
  Node* n = root_.get();
  for (unsigned char c : it->first) {
    auto& child = n->next[c];
    if (!child) child = std::make_unique<Node>();
    n = child.get();
  }
  n->reading = &it->second;
}

ReadingDictionary ReadingDictionary::parse_tsv(std::string_view text) {
  ReadingDictionary dict;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw DictionaryError("line " + std::to_string(line_no) + ": expected surface<TAB>kana");
    }
    try {
      dict.add(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
    } catch (const DictionaryError& e) {
      throw DictionaryError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dict;
}

ReadingDictionary ReadingDictionary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DictionaryError("cannot open dictionary " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_tsv(ss.str());
}

std::optional<std::pair<std::size_t, const std::string*>> ReadingDictionary::longest_prefix(
    std::string_view text) const {
  std::optional<std::pair<std::size_t, const std::string*>> best;
  const Node* n = root_.get();
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto it = n->next.find(static_cast<unsigned char>(text[i]));
    if (it == n->next.end()) break;
    n = it->second.get();
    if (n->reading) best = {i + 1, n->reading};
  }
  return best;
}

namespace {

std::size_t code_point_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

std::string ReadingDictionary::apply(std::string_view text,
                                     std::vector<std::pair<std::string, std::string>>* applied) const {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (auto hit = longest_prefix(text.substr(i))) {
      out += *hit->second;
      if (applied) applied->emplace_back(std::string(text.substr(i, hit->first)), *hit->second);
      i += hit->first;
    } else {
      const std::size_t n = std::min(code_point_length(static_cast<unsigned char>(text[i])), text.size() - i);
      out.append(text.substr(i, n));
      i += n;
    }
  }
  return out;
}

SpeechScript render_speech(const DisplayPayload& payload, const ReadingDictionary& dict,
                           const std::optional<std::string>& name_reading, Language lang) {
  SpeechScript s;
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const auto& e = payload[i];
    std::string value;
    if (i == 0 && name_reading) {
      value = *name_reading;
      s.readings_applied.emplace_back(e.value, *name_reading);
    } else {
      value = dict.apply(e.value, &s.readings_applied);
    }
    if (lang == Language::kJapanese) {
      s.text += e.label + "は" + value + "。";
    } else {
      if (!s.text.empty()) s.text += " ";
      s.text += e.label + ": " + value + ".";
    }
  }
  return s;
}

}  // namespace carelens::care
