#include "presort/label_space.hpp"

#include <algorithm>
#include <cctype>

#include "presort/error.hpp"

namespace presort {

std::string canonical_label(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
  }
  if (out == "bkgd" || out == "noise") return std::string(kBackground);
  return out;
}

namespace {

void validate_name(const std::string& name) {
  if (name.empty()) throw Error("empty label name");
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
      throw Error("invalid label name '" + name + "'");
    }
  }
}

}  // namespace

LabelSpace::LabelSpace(std::vector<std::string> names) {
  names_.reserve(names.size());
  for (auto& raw : names) {
    auto name = canonical_label(raw);
    validate_name(name);
    if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
      throw Error("duplicate label '" + name + "' in label space");
    }
    names_.push_back(std::move(name));
  }
}

LabelSpace LabelSpace::binary() {
  return LabelSpace({std::string(kBackground), std::string(kPrimate)});
}

LabelSpace LabelSpace::from_labels(const std::vector<std::string>& labels) {
  std::vector<std::string> unique;
  for (const auto& raw : labels) {
    auto name = canonical_label(raw);
    if (std::find(unique.begin(), unique.end(), name) == unique.end()) unique.push_back(name);
  }
  std::sort(unique.begin(), unique.end(), [](const std::string& a, const std::string& b) {
    if (a == kBackground) return b != kBackground;
    if (b == kBackground) return false;
    return a < b;
  });
  return LabelSpace(std::move(unique));
}

std::optional<std::size_t> LabelSpace::find(std::string_view name) const {
  const auto canon = canonical_label(name);
  auto it = std::find(names_.begin(), names_.end(), canon);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t LabelSpace::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  throw Error("unknown label '" + std::string(name) + "'");
}

}  // namespace presort
