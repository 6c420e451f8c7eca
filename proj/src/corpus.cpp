#include "presort/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "presort/csv.hpp"
#include "presort/error.hpp"
#include "presort/rng.hpp"

namespace presort {

namespace csv {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  for (auto& f : fields) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace csv

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val" || text == "valid" || text == "devel") return Split::val;
  if (text == "test") return Split::test;
  throw Error("unknown split '" + std::string(text) + "'");
}

fs::path Manifest::resolve(const ClipRecord& record) const {
  if (record.path.is_absolute() || base_dir.empty()) return record.path;
  return base_dir / record.path;
}

const ClipRecord& Manifest::record(std::string_view clip_id) const {
  for (const auto& r : records) {
    if (r.clip_id == clip_id) return r;
  }
  throw Error("clip '" + std::string(clip_id) + "' not in manifest");
}

std::vector<ClipRecord> Manifest::records_in(Split split) const {
  std::vector<ClipRecord> out;
  for (const auto& r : records) {
    auto it = split_assignment.find(r.clip_id);
    if (it != split_assignment.end() && it->second == split) out.push_back(r);
  }
  return out;
}

Manifest load_manifest(const fs::path& path, const LabelSpace* expected) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error("empty manifest " + path.string());
  const auto header = csv::split_line(line);
  const std::vector<std::string> required{"clip_id", "path", "label", "duration_s"};
  if (header.size() < 4 || !std::equal(required.begin(), required.end(), header.begin())) {
    throw Error(path.string() + ":1: expected header clip_id,path,label,duration_s[,split]");
  }
  const bool has_split = header.size() >= 5 && header[4] == "split";

  Manifest manifest;
  manifest.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    auto fields = csv::split_line(line);
    if (fields.size() < 4 || fields.size() > header.size()) {
      throw Error(where + "expected " + std::to_string(header.size()) + " fields, got " +
                  std::to_string(fields.size()));
    }
    ClipRecord rec;
    rec.clip_id = fields[0];
    rec.path = fields[1];
    rec.label = canonical_label(fields[2]);
    if (rec.clip_id.empty()) throw Error(where + "empty clip_id");
    if (!seen.insert(rec.clip_id).second) throw Error(where + "duplicate clip_id " + rec.clip_id);
    try {
      std::size_t used = 0;
      rec.duration_s = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(where + "malformed duration_s '" + fields[3] + "'");
    }
    if (!(rec.duration_s > 0.0)) throw Error(where + "duration_s must be > 0");
    if (expected != nullptr && !expected->contains(rec.label)) {
      throw Error(where + "unknown label '" + rec.label + "'");
    }
    if (rec.label.empty()) throw Error(where + "empty label");
    if (has_split && fields.size() >= 5 && !fields[4].empty()) {
      try {
        manifest.split_assignment[rec.clip_id] = parse_split(fields[4]);
      } catch (const Error& e) {
        throw Error(where + e.what());
      }
    }
    manifest.records.push_back(std::move(rec));
  }
  if (manifest.records.empty()) throw Error("empty manifest " + path.string());
  if (!manifest.split_assignment.empty() &&
      manifest.split_assignment.size() != manifest.records.size()) {
    throw Error(path.string() + ": split column must be filled for every row or none");
  }

  if (expected != nullptr) {
    manifest.label_space = *expected;
  } else {
    std::vector<std::string> labels;
    for (const auto& r : manifest.records) labels.push_back(r.label);
    try {
      manifest.label_space = LabelSpace::from_labels(labels);
    } catch (const Error& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << "clip_id,path,label,duration_s,split\n";
  for (const auto& r : manifest.records) {
    out << csv::escape(r.clip_id) << ',' << csv::escape(r.path.generic_string()) << ','
        << r.label << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r.duration_s);
    out << buf << ',';
    auto it = manifest.split_assignment.find(r.clip_id);
    if (it != manifest.split_assignment.end()) out << to_string(it->second);
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// WAV

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

WavData read_wav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) { return Error(path.string() + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("corrupt header (not RIFF/WAVE)");
  }

  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) throw fail("corrupt fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 40) {
        // WAVE_FORMAT_EXTENSIBLE: the subformat GUID starts with the real tag.
        format = read_u16(bytes.data() + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (format == 0) throw fail("corrupt header (missing fmt chunk)");
  if (data == nullptr) throw fail("corrupt header (missing data chunk)");
  if (channels <= 0 || rate == 0) throw fail("corrupt header (channels/rate)");

  WavData wav;
  wav.channels = channels;
  wav.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    const std::size_t n = data_size / 2;
    wav.interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
      wav.interleaved[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t n = data_size / 4;
    wav.interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t u = read_u32(data + 4 * i);
      float f;
      std::memcpy(&f, &u, sizeof f);
      wav.interleaved[i] = std::isfinite(f) ? std::clamp(f, -1.0f, 1.0f) : 0.0f;
    }
  } else {
    throw fail("unsupported encoding (format " + std::to_string(format) + ", " +
               std::to_string(bits) + " bit); expected PCM16 or float32");
  }
  wav.interleaved.resize(wav.frames() * channels);
  if (wav.frames() == 0) throw fail("zero-length audio");
  return wav;
}

void write_wav_pcm16(const fs::path& path, std::span<const float> samples, int sample_rate) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (float s : samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const auto q = static_cast<std::int16_t>(std::lrint(std::min(c * 32768.0f, 32767.0f)));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed for " + path.string());
}

std::vector<float> resample_linear(std::span<const float> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw Error("sample rates must be positive");
  if (from_rate == to_rate || input.empty()) return {input.begin(), input.end()};
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(input.size()) * to_rate / from_rate));
  std::vector<float> out(std::max<std::size_t>(out_len, 1));
  const double step = static_cast<double>(from_rate) / to_rate;
  const std::size_t last = input.size() - 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double src = static_cast<double>(i) * step;
    const auto i0 = std::min(static_cast<std::size_t>(src), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = src - static_cast<double>(i0);
    out[i] = static_cast<float>((1.0 - frac) * input[i0] + frac * input[i1]);
  }
  return out;
}

AudioClip decode_wav(const fs::path& path, int target_rate) {
  const WavData wav = read_wav(path);
  std::vector<float> mono(wav.frames());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    double acc = 0.0;
    for (int c = 0; c < wav.channels; ++c) acc += wav.interleaved[i * wav.channels + c];
    mono[i] = static_cast<float>(acc / wav.channels);
  }
  AudioClip clip;
  clip.samples = resample_linear(mono, wav.sample_rate, target_rate);
  clip.sample_rate = target_rate;
  clip.clip_id = path.stem().string();
  return clip;
}

// ---------------------------------------------------------------------------
// Split

Manifest split(const Manifest& manifest, SplitRatio ratio, std::uint64_t seed) {
  if (!(ratio.train > 0 && ratio.val > 0 && ratio.test > 0)) {
    throw Error("split ratio components must be positive");
  }
  const double weights[3] = {ratio.train, ratio.val, ratio.test};
  const double total = weights[0] + weights[1] + weights[2];

  Manifest out = manifest;
  out.split_assignment.clear();
  Rng rng(derive_seed(seed, {0x5b17}));
  for (const auto& label : manifest.label_space.names()) {
    std::vector<std::string> ids;
    for (const auto& r : manifest.records) {
      if (r.label == label) ids.push_back(r.clip_id);
    }
    if (ids.empty()) continue;
    if (ids.size() < 3) {
      throw Error("class '" + label + "' has " + std::to_string(ids.size()) +
                  " clips, fewer than the 3 splits");
    }
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);

    // Largest-remainder apportionment, then make sure no split is empty.
    const std::size_t n = ids.size();
    std::size_t counts[3];
    double remainders[3];
    std::size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double exact = static_cast<double>(n) * weights[s] / total;
      counts[s] = static_cast<std::size_t>(std::floor(exact));
      remainders[s] = exact - static_cast<double>(counts[s]);
      assigned += counts[s];
    }
    while (assigned < n) {
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (remainders[s] > remainders[best]) best = s;
      }
      ++counts[best];
      remainders[best] = -1.0;
      ++assigned;
    }
    for (int s = 0; s < 3; ++s) {
      if (counts[s] == 0) {
        int donor = static_cast<int>(std::max_element(counts, counts + 3) - counts);
        --counts[donor];
        ++counts[s];
      }
    }

    std::size_t i = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < counts[s]; ++k) out.split_assignment[ids[i++]] = kAllSplits[s];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Events sidecar

double EventInterval::overlap(double begin, double end) const {
  if (empty()) return 0.0;
  return std::max(0.0, std::min(end, *end_s) - std::max(begin, *start_s));
}

EventTable load_events(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open events file " + path.string());
  std::string line;
  std::getline(in, line);
  if (csv::split_line(line) != std::vector<std::string>{"clip_id", "event_start_s", "event_end_s"}) {
    throw Error(path.string() + ":1: expected header clip_id,event_start_s,event_end_s");
  }
  EventTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = csv::split_line(line);
    if (fields.size() != 3) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    EventInterval ev;
    ev.clip_id = fields[0];
    if (!fields[1].empty() || !fields[2].empty()) {
      try {
        ev.start_s = std::stod(fields[1]);
        ev.end_s = std::stod(fields[2]);
      } catch (const std::exception&) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed interval");
      }
    }
    table[ev.clip_id] = std::move(ev);
  }
  return table;
}

void save_events(const EventTable& events, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "clip_id,event_start_s,event_end_s\n";
  for (const auto& [id, ev] : events) {
    out << csv::escape(id) << ',';
    if (!ev.empty()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f,%.6f", *ev.start_s, *ev.end_s);
      out << buf;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace presort
