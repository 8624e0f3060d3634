#pragma once

#include <optional>
#include <string_view>

namespace memharvest::html {

std::optional<char32_t> lookup_entity(std::string_view name);

}  // namespace memharvest::html
