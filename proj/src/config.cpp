#include "presort/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <sstream>

#include "presort/error.hpp"
#include "presort/segmenter.hpp"

namespace presort {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::baseline: return "baseline";
    case Regime::presort: return "presort";
    case Regime::presort_threshold: return "presort+threshold";
  }
  return "?";
}

Regime parse_regime(std::string_view text) {
  if (text == "baseline") return Regime::baseline;
  if (text == "presort") return Regime::presort;
  if (text == "presort+threshold" || text == "presort_threshold") return Regime::presort_threshold;
  throw ConfigError("unknown regime '" + std::string(text) + "' (baseline | presort | presort+threshold)");
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double parse_double(std::string_view key, std::string_view text) {
  try {
    std::size_t used = 0;
    const std::string s(text);
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
  }
}

long long parse_int(std::string_view key, std::string_view text) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(text) + "'");
}

std::vector<std::string> parse_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

struct Entry {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define PRESORT_DOUBLE(sec, name, member)                                                   \
  Entry{sec, name, [](const RunConfig& c) { return fmt_double(c.member); },               \
        [](RunConfig& c, std::string_view v) { c.member = parse_double(sec "." name, v); }}
#define PRESORT_INT(sec, name, member)                                                      \
  Entry{sec, name, [](const RunConfig& c) { return std::to_string(c.member); },           \
        [](RunConfig& c, std::string_view v) {                                              \
          c.member = static_cast<decltype(c.member)>(parse_int(sec "." name, v));           \
        }}
#define PRESORT_BOOL(sec, name, member)                                                     \
  Entry{sec, name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](RunConfig& c, std::string_view v) { c.member = parse_bool(sec "." name, v); }}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      PRESORT_INT("run", "seed", seed),
      Entry{"run", "regime", [](const RunConfig& c) { return std::string(to_string(c.regime)); },
            [](RunConfig& c, std::string_view v) { c.regime = parse_regime(v); }},
      PRESORT_INT("run", "epochs_binary", epochs_binary),
      PRESORT_INT("run", "epochs_multiclass", epochs_multiclass),
      PRESORT_INT("run", "batch_size", batch_size),
      PRESORT_INT("run", "samples_per_epoch", samples_per_epoch),
      PRESORT_DOUBLE("run", "relabel_threshold", relabel_threshold),
      PRESORT_BOOL("run", "thresholding", thresholding_enabled),
      PRESORT_BOOL("run", "warm_start", warm_start),
      PRESORT_INT("run", "presort_votes", presort_votes),
      PRESORT_INT("run", "workers", workers),
      PRESORT_DOUBLE("split", "train", split_ratio.train),
      PRESORT_DOUBLE("split", "val", split_ratio.val),
      PRESORT_DOUBLE("split", "test", split_ratio.test),
      PRESORT_INT("spectro", "sample_rate", spectro.sample_rate),
      PRESORT_INT("spectro", "n_fft", spectro.n_fft),
      PRESORT_INT("spectro", "hop", spectro.hop),
      PRESORT_INT("spectro", "n_mels", spectro.n_mels),
      PRESORT_DOUBLE("spectro", "top_db", spectro.top_db),
      PRESORT_DOUBLE("segment", "length_s", segment.length_s),
      PRESORT_BOOL("segment", "pad_last", segment.pad_last),
      PRESORT_DOUBLE("threshold", "window_s", threshold.window_s),
      PRESORT_DOUBLE("threshold", "threshold", threshold.threshold),
      PRESORT_BOOL("augment", "enabled", augment.enabled),
      PRESORT_BOOL("augment", "binary_stage", augment_binary),
      PRESORT_DOUBLE("augment", "probability", augment.probability),
      PRESORT_DOUBLE("augment", "loudness", augment.loudness),
      PRESORT_DOUBLE("augment", "shift", augment.shift),
      PRESORT_DOUBLE("augment", "noise", augment.noise),
      PRESORT_INT("augment", "mask", augment.mask),
      PRESORT_INT("augment", "pitch_bins", augment.pitch_bins),
      Entry{"net", "channels", [](const RunConfig& c) { return join(c.net.channels); },
            [](RunConfig& c, std::string_view v) {
              c.net.channels.clear();
              for (const auto& s : parse_list(v)) c.net.channels.push_back(static_cast<int>(parse_int("net.channels", s)));
            }},
      PRESORT_INT("net", "kernel", net.kernel),
      PRESORT_INT("net", "pad", net.pad),
      PRESORT_INT("net", "pool", net.pool),
      PRESORT_DOUBLE("net", "dropout", net.dropout),
      PRESORT_DOUBLE("optim", "learning_rate", optim.learning_rate),
      PRESORT_INT("optim", "lr_step_epochs", optim.lr_step_epochs),
      PRESORT_DOUBLE("optim", "lr_decay", optim.lr_decay),
      PRESORT_DOUBLE("optim", "beta1", optim.beta1),
      PRESORT_DOUBLE("optim", "beta2", optim.beta2),
      PRESORT_DOUBLE("optim", "epsilon", optim.epsilon),
      PRESORT_DOUBLE("optim", "focal_gamma", optim.focal_gamma),
      Entry{"synth", "classes", [](const RunConfig& c) { return join(c.synth.classes); },
            [](RunConfig& c, std::string_view v) { c.synth.classes = parse_list(v); }},
      Entry{"synth", "counts", [](const RunConfig& c) { return join(c.synth.counts); },
            [](RunConfig& c, std::string_view v) {
              c.synth.counts.clear();
              for (const auto& s : parse_list(v)) c.synth.counts.push_back(static_cast<int>(parse_int("synth.counts", s)));
            }},
      PRESORT_DOUBLE("synth", "min_duration_s", synth.min_duration_s),
      PRESORT_DOUBLE("synth", "max_duration_s", synth.max_duration_s),
      PRESORT_DOUBLE("synth", "event_min_s", synth.event_min_s),
      PRESORT_DOUBLE("synth", "event_max_s", synth.event_max_s),
      PRESORT_DOUBLE("synth", "snr_min_db", synth.snr_min_db),
      PRESORT_DOUBLE("synth", "snr_max_db", synth.snr_max_db),
      PRESORT_DOUBLE("synth", "distractor_rate_hz", synth.distractor_rate_hz),
  };
  return table;
}

#undef PRESORT_DOUBLE
#undef PRESORT_INT
#undef PRESORT_BOOL

const Entry& find_entry(std::string_view section, std::string_view key) {
  for (const auto& e : entries()) {
    if (e.section == section && e.key == key) return e;
  }
  throw ConfigError("unknown configuration key '" + std::string(section) + "." + std::string(key) + "'");
}

}  // namespace

NetConfig RunConfig::network_geometry() const {
  NetConfig g = net;
  g.input_height = spectro.n_mels;
  g.input_width = frames_per_segment(segment.length_s, spectro.sample_rate, spectro.hop);
  return g;
}

void RunConfig::validate() const {
  spectro.validate();
  augment.validate();
  if (!(segment.length_s > 0.0)) throw ConfigError("segment.length_s must be > 0");
  if (!(threshold.window_s > 0.0)) throw ConfigError("threshold.window_s must be > 0");
  if (!(threshold.threshold >= 0.0 && threshold.threshold <= 1.0)) throw ConfigError("threshold.threshold must lie in [0, 1]");
  if (epochs_binary < 0 || epochs_multiclass < 1) throw ConfigError("epoch counts must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (samples_per_epoch < 0) throw ConfigError("samples_per_epoch must be >= 0");
  if (!(relabel_threshold >= 0.0)) throw ConfigError("relabel_threshold must be >= 0");
  if (presort_votes < 1) throw ConfigError("presort_votes must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(split_ratio.train > 0 && split_ratio.val > 0 && split_ratio.test > 0)) {
    throw ConfigError("split ratios must be positive");
  }
  if (!(optim.learning_rate > 0.0)) throw ConfigError("optim.learning_rate must be > 0");
  if (optim.lr_step_epochs < 1) throw ConfigError("optim.lr_step_epochs must be >= 1");
  if (!(optim.lr_decay > 0.0)) throw ConfigError("optim.lr_decay must be > 0");
  if (!(optim.focal_gamma >= 0.0)) throw ConfigError("optim.focal_gamma must be >= 0");
  auto geometry = network_geometry();
  geometry.head = HeadKind::sigmoid;
  geometry.validate();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(path.string() + ": key '" + section + "' outside of a [section]");
    for (const auto& [key, value] : body) {
      find_entry(section, key).set(cfg, value.get_value<std::string>());
    }
  }
  cfg.validate();
  return cfg;
}

void apply_override(RunConfig& cfg, std::string_view dotted, std::string_view value) {
  const auto dot = dotted.find('.');
  if (dot == std::string_view::npos) throw ConfigError("override '" + std::string(dotted) + "' must be section.key");
  find_entry(dotted.substr(0, dot), dotted.substr(dot + 1)).set(cfg, value);
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& e : entries()) {
    if (e.section != section) {
      if (!section.empty()) os << '\n';
      section = e.section;
      os << '[' << section << "]\n";
    }
    os << e.key << " = " << e.get(cfg) << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : entries()) j[e.section][e.key] = e.get(cfg);
  return j;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : entries()) keys.push_back(e.section + "." + e.key);
  return keys;
}

}  // namespace presort
