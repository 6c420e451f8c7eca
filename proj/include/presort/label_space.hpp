#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace presort {

inline constexpr std::string_view kBackground = "background";
inline constexpr std::string_view kPrimate = "primate";

/// Lower-cases, trims and maps known aliases ("bkgd", "noise") to the canonical class name.
std::string canonical_label(std::string_view raw);

/// Ordered set of class names. Index 0 is `background` whenever the space contains it.
class LabelSpace {
 public:
  LabelSpace() = default;
  /// Names are canonicalized; duplicates are rejected.
  explicit LabelSpace(std::vector<std::string> names);

  /// {background, primate}
  static LabelSpace binary();
  /// background first, remaining names sorted.
  static LabelSpace from_labels(const std::vector<std::string>& labels);

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws Error naming the label when it is not part of the space.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }
  bool has_background() const { return contains(kBackground); }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace presort
