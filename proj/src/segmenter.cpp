#include "presort/segmenter.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "presort/csv.hpp"
#include "presort/error.hpp"

namespace presort {

static_assert(std::endian::native == std::endian::little, "segment store assumes little-endian hosts");

namespace {

constexpr char kStoreMagic[4] = {'P', 'S', 'E', 'G'};
constexpr std::uint32_t kStoreVersion = 1;

std::filesystem::path with_suffix(std::filesystem::path stem, const char* suffix) {
  stem += suffix;
  return stem;
}

}  // namespace

int frames_per_segment(double segment_length_s, int sample_rate, int hop) {
  if (!(segment_length_s > 0.0)) throw Error("segment length must be > 0");
  if (sample_rate <= 0 || hop <= 0) throw Error("sample rate and hop must be positive");
  // Guard against 0.7 * 16000 landing a hair above an integer.
  const double exact = segment_length_s * sample_rate / hop;
  return std::max(1, static_cast<int>(std::ceil(exact - 1e-9)));
}

std::vector<MelSegment> segment(const MelSpectrogram& spec, const std::string& label,
                                double segment_length_s, bool pad_last) {
  const std::size_t total = spec.n_frames();
  if (total == 0) throw Error("segment: spectrogram of " + spec.clip_id + " has zero frames");
  const auto width = static_cast<std::size_t>(frames_per_segment(segment_length_s, spec.sample_rate, spec.hop));
  const std::size_t rows = spec.values.rows();

  std::vector<MelSegment> out;
  for (std::size_t begin = 0, index = 0; begin < total; begin += width, ++index) {
    const std::size_t take = std::min(width, total - begin);
    if (take < width && !pad_last) break;
    MelSegment seg;
    seg.values = Matrix<float>(rows, width, kDbFloor);
    for (std::size_t r = 0; r < rows; ++r) {
      auto src = spec.values.row(r).subspan(begin, take);
      std::copy(src.begin(), src.end(), seg.values.row(r).begin());
    }
    seg.label = label;
    seg.clip_id = spec.clip_id;
    seg.segment_index = static_cast<int>(index);
    seg.start_s = static_cast<double>(begin) * spec.hop / spec.sample_rate;
    seg.padded_frames = static_cast<int>(width - take);
    out.push_back(std::move(seg));
  }
  return out;
}

void write_segment_store(const std::vector<MelSegment>& segments, const std::filesystem::path& stem) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  const std::uint32_t rows = segments.empty() ? 0 : static_cast<std::uint32_t>(segments.front().n_mels());
  const std::uint32_t cols = segments.empty() ? 0 : static_cast<std::uint32_t>(segments.front().n_frames());
  for (const auto& s : segments) {
    if (s.n_mels() != rows || s.n_frames() != cols) {
      throw Error("segment store: all segments must share one shape");
    }
  }

  const auto bin_path = with_suffix(stem, ".bin");
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot write " + bin_path.string());
  const std::uint32_t header[4] = {kStoreVersion, static_cast<std::uint32_t>(segments.size()), rows, cols};
  bin.write(kStoreMagic, 4);
  bin.write(reinterpret_cast<const char*>(header), sizeof header);
  for (const auto& s : segments) {
    bin.write(reinterpret_cast<const char*>(s.values.data().data()),
              static_cast<std::streamsize>(s.values.size() * sizeof(float)));
  }
  if (!bin) throw Error("write failed for " + bin_path.string());

  const auto csv_path = with_suffix(stem, ".csv");
  std::ofstream index(csv_path);
  if (!index) throw Error("cannot write " + csv_path.string());
  index << "clip_id,segment_index,label,start_s,padded_frames\n";
  char buf[32];
  for (const auto& s : segments) {
    std::snprintf(buf, sizeof buf, "%.6f", s.start_s);
    index << csv::escape(s.clip_id) << ',' << s.segment_index << ',' << s.label << ',' << buf << ','
          << s.padded_frames << '\n';
  }
}

std::vector<MelSegment> read_segment_store(const std::filesystem::path& stem) {
  const auto bin_path = with_suffix(stem, ".bin");
  const auto csv_path = with_suffix(stem, ".csv");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot open " + bin_path.string());
  char magic[4];
  std::uint32_t header[4];
  bin.read(magic, 4);
  bin.read(reinterpret_cast<char*>(header), sizeof header);
  if (!bin || std::memcmp(magic, kStoreMagic, 4) != 0) throw Error(bin_path.string() + ": not a segment store");
  if (header[0] != kStoreVersion) throw Error(bin_path.string() + ": unsupported store version");
  const std::uint32_t count = header[1], rows = header[2], cols = header[3];

  std::ifstream index(csv_path);
  if (!index) throw Error("cannot open " + csv_path.string());
  std::string line;
  std::getline(index, line);
  std::vector<MelSegment> out;
  out.reserve(count);
  std::size_t line_no = 1;
  while (std::getline(index, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = csv::split_line(line);
    if (f.size() != 5) throw Error(csv_path.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    MelSegment s;
    s.clip_id = f[0];
    s.segment_index = std::stoi(f[1]);
    s.label = f[2];
    s.start_s = std::stod(f[3]);
    s.padded_frames = std::stoi(f[4]);
    s.values = Matrix<float>(rows, cols);
    bin.read(reinterpret_cast<char*>(s.values.data().data()),
             static_cast<std::streamsize>(s.values.size() * sizeof(float)));
    if (!bin) throw Error(bin_path.string() + ": truncated store");
    out.push_back(std::move(s));
  }
  if (out.size() != count) throw Error(csv_path.string() + ": index does not match store count");
  return out;
}

}  // namespace presort
