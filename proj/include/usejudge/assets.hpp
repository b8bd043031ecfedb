#pragma once

#include <string_view>

namespace usejudge {

/// Text of a file shipped under assets/, e.g. "templates/dna.tmpl".
/// Throws Error for unknown names.
std::string_view asset(std::string_view name);

}  // namespace usejudge
