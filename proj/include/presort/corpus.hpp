#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "presort/label_space.hpp"

namespace presort {

namespace fs = std::filesystem;

enum class Split { train, val, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);
inline constexpr Split kAllSplits[] = {Split::train, Split::val, Split::test};

struct ClipRecord {
  std::string clip_id;
  fs::path path;  // as written in the manifest; see Manifest::resolve
  std::string label;
  double duration_s = 0.0;
};

/// Decoded mono waveform at the configured rate, amplitudes in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  std::string clip_id;
  std::string label;
};

struct Manifest {
  std::vector<ClipRecord> records;
  LabelSpace label_space;
  std::map<std::string, Split> split_assignment;
  fs::path base_dir;  // relative record paths resolve against this

  fs::path resolve(const ClipRecord& record) const;
  const ClipRecord& record(std::string_view clip_id) const;
  std::vector<ClipRecord> records_in(Split split) const;
  bool has_splits() const { return !split_assignment.empty(); }
};

/// CSV with header `clip_id,path,label,duration_s[,split]`. When `expected` is
/// given, labels outside it are rejected; otherwise the space is built from the
/// labels present.
Manifest load_manifest(const fs::path& path, const LabelSpace* expected = nullptr);
void save_manifest(const Manifest& manifest, const fs::path& path);

/// Raw decoded PCM before mixing / resampling.
struct WavData {
  std::vector<float> interleaved;
  int sample_rate = 0;
  int channels = 0;
  std::size_t frames() const { return channels ? interleaved.size() / channels : 0; }
};

/// Accepts PCM16 and IEEE float32, any channel count.
WavData read_wav(const fs::path& path);
/// Mono PCM16; samples are clipped to [-1, 1].
void write_wav_pcm16(const fs::path& path, std::span<const float> samples, int sample_rate);

std::vector<float> resample_linear(std::span<const float> input, int from_rate, int to_rate);

/// read_wav, average channels, resample to `target_rate`.
AudioClip decode_wav(const fs::path& path, int target_rate);

struct SplitRatio {
  double train = 3.0;
  double val = 1.0;
  double test = 1.0;
};

/// Stratified per class at clip level; deterministic given `seed`.
Manifest split(const Manifest& manifest, SplitRatio ratio, std::uint64_t seed);

/// Ground-truth event interval of a synthetic clip. Background clips have none.
struct EventInterval {
  std::string clip_id;
  std::optional<double> start_s;
  std::optional<double> end_s;

  bool empty() const { return !start_s.has_value(); }
  /// Overlap in seconds with [begin, end).
  double overlap(double begin, double end) const;
};

using EventTable = std::map<std::string, EventInterval>;

/// Sidecar CSV `clip_id,event_start_s,event_end_s`; empty fields for background.
EventTable load_events(const fs::path& path);
void save_events(const EventTable& events, const fs::path& path);

}  // namespace presort
