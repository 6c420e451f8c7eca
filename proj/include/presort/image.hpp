#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace presort {

/// 8-bit grayscale raster, written as binary PGM (P5).
class GrayImage {
 public:
  GrayImage(std::size_t width, std::size_t height) : width_(width), height_(height), pixels_(width * height) {}

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }

  void write_pgm(const std::filesystem::path& path) const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

}  // namespace presort
