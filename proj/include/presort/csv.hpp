#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace presort::csv {

/// Splits one CSV line. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_line(std::string_view line);

/// Quotes the field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

}  // namespace presort::csv
