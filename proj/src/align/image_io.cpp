#include "carelens/align/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace carelens::align {
namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

embed::Tensor read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path);
  const std::string magic = header_token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error(path + ": not a PGM image");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(header_token(in));
    h = std::stoul(header_token(in));
    maxval = std::stoul(header_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path + ": malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw std::runtime_error(path + ": unsupported PGM dimensions");
  }
  embed::Tensor img({1, h, w});
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < w * h; ++i) {
    unsigned v = 0;
    if (magic == "P2") {
      if (!(in >> v)) throw std::runtime_error(path + ": truncated PGM data");
    } else if (maxval < 256) {
      char b;
      if (!in.get(b)) throw std::runtime_error(path + ": truncated PGM data");
      v = static_cast<unsigned char>(b);
    } else {
      char b[2];
      if (!in.read(b, 2)) throw std::runtime_error(path + ": truncated PGM data");
      v = (static_cast<unsigned char>(b[0]) << 8) | static_cast<unsigned char>(b[1]);
    }
    img[i] = std::min(1.0, v * scale);
  }
  return img;
}

void write_pgm(const std::string& path, const embed::Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1) {
    throw std::invalid_argument("write_pgm expects a [1, H, W] image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << image.dim(2) << ' ' << image.dim(1) << "\n255\n";
  for (double v : image.data()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
}

Landmarks5 read_landmarks_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open landmarks " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    return Landmarks5::parse(line);
  }
  throw AlignError(path + ": no landmark line");
}

}  // namespace carelens::align
