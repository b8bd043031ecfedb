#pragma once

#include <string>
#include <string_view>

namespace usejudge {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First `length` hex digits of the SHA-256 of `data`.
std::string short_hash(std::string_view data, std::size_t length = 16);

}  // namespace usejudge
