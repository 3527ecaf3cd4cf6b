#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mat/core.hpp"

namespace mat {

// Row-major 8-bit grayscale raster.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height), pixels_(checked_size(width, height), fill) {}
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != checked_size(width, height)) {
      throw InvalidArgument("GrayImage: sample count does not match dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width <= 0 || height <= 0) throw InvalidArgument("GrayImage: dimensions must be positive");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

namespace detail {

inline void skip_pgm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_pgm_int(std::istream& in, const std::string& path) {
  skip_pgm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw InvalidArgument("read_pgm: malformed header in " + path);
  return v;
}

}  // namespace detail

// Binary portable graymap ("P5"), maxval <= 255.
inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("read_pgm: cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') {
    throw InvalidArgument("read_pgm: " + path.string() + " is not a binary P5 graymap");
  }
  const int w = detail::read_pgm_int(in, path.string());
  const int h = detail::read_pgm_int(in, path.string());
  const int maxval = detail::read_pgm_int(in, path.string());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw InvalidArgument("read_pgm: unsupported dimensions or maxval in " + path.string());
  }
  in.get();  // single whitespace before the raster
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw InvalidArgument("read_pgm: truncated raster in " + path.string());
  }
  return GrayImage(w, h, std::move(px));
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("write_pgm: cannot open " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()),
            static_cast<std::streamsize>(img.pixels().size()));
}

// Lists `*.pgm` files in `dir` keyed by the frame number embedded in the stem
// (e.g. 000042.pgm -> 42).
inline std::map<FrameIndex, std::filesystem::path> list_frame_images(const std::filesystem::path& dir) {
  std::map<FrameIndex, std::filesystem::path> frames;
  if (!std::filesystem::is_directory(dir)) {
    throw InvalidArgument("image directory not found: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
    const std::string stem = entry.path().stem().string();
    std::string digits;
    for (char c : stem) {
      if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
    }
    if (digits.empty()) continue;
    frames[std::stoll(digits)] = entry.path();
  }
  return frames;
}

}  // namespace mat
