#include "presort/image.hpp"

#include <fstream>

#include "presort/error.hpp"

namespace presort {

void GrayImage::write_pgm(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << width_ << ' ' << height_ << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels_.data()), static_cast<std::streamsize>(pixels_.size()));
}

}  // namespace presort
