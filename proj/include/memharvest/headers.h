#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace memharvest {

// Response headers in wire order, duplicates preserved, names as received.
using HeaderList = std::vector<std::pair<std::string, std::string>>;

// First header whose name matches case-insensitively.
std::optional<std::string> find_header(const HeaderList& headers, std::string_view name);

bool iequals(std::string_view a, std::string_view b);

}  // namespace memharvest
